"""
Closed-form resolvent of the rotating-wave model
================================================

The resolvent only needs sector-wise solves of the propagator G(z).
"""
import numpy as np

from gsbkit import field_model as fm
from gsbkit.fock_space import build_basis
from gsbkit.model_builder import excitation_sector
from gsbkit.resolvent_engine import (RWAParts, bound_state, propagator, rwa_matrix,
                                     rwa_resolve, self_energy)

model = fm.FieldModel.uniform(4.0, 8)
basis = build_basis(8, 3)
f = fm.wqed(model, x0=0.2)
d = basis.dim
print("composite dimension", 2 * d)

rng = np.random.default_rng(1)
x = rng.standard_normal(2 * d) + 1j * rng.standard_normal(2 * d)
for lam in (0.1, 0.5, 2.0):
    z = 1 + 1j
    top, bottom = rwa_resolve(RWAParts(f, 1.5, lam, basis), z, x[:d], x[d:])
    dense = np.linalg.solve(rwa_matrix(f, 1.5, lam, basis).toarray() - z * np.eye(2 * d), x)
    err = np.linalg.norm(np.concatenate([top, bottom]) - dense) / np.linalg.norm(dense)
    print(f"lambda={lam}: relative error vs dense solve {err:.1e}")

# ||G^-1(z)|| |Im z| stays below one
for z in (0.5 + 0.1j, 2.0 + 0.5j, -1.0 - 0.2j):
    G = propagator(f, z, 1.5, 0.8, "plain", basis)
    print(f"z={z}: ||G^-1|| |Im z| = {G.inverse_norm() * abs(z.imag):.4f}")

# single-excitation bound state vs the lowest eigenvalue of that sector
print("Sigma(1+i) =", self_energy(fm.wqed(fm.FieldModel.uniform(40.0, 400)), 1 + 1j).value)
one = build_basis(8, 1)
for omega_e, lam in ((0.5, 0.3), (1.2, 0.8)):
    E = bound_state(f, omega_e, lam).energy
    eig = np.linalg.eigvalsh(excitation_sector(rwa_matrix(f, omega_e, lam, one), 1).matrix)[0]
    print(f"omega_e={omega_e}, lambda={lam}: root {E:.12f}  eigenvalue {eig:.12f}")
