"""Spin-boson Hamiltonians on the composite space ``C^d (x) F``.

Composite index layout: ``spin_index * dim(F) + fock_index``.  For two-level
systems spin index 0 is the excited state ``e`` and 1 the ground state ``g``,
so ``sigma_z = diag(1, -1)`` and ``sigma_+ = |e><g|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .field_model import FieldModel, FormFactor, weighted_norm
from .fock_space import FockBasis, energies
from .ladder_ops import annihilator_matrix
from .numerics import power_norm

__all__ = [
    "SIGMA_X", "SIGMA_Y", "SIGMA_Z", "SIGMA_PLUS", "SIGMA_MINUS",
    "FormFactorTooSingular",
    "NotExcitationPreserving",
    "SpinSystem",
    "two_level",
    "CompositeOperator",
    "SectorBlock",
    "build_h0",
    "build_gsb",
    "build_spin_boson",
    "build_rwa",
    "build_dephasing",
    "excitation_number",
    "excitation_sector",
    "excitation_sectors",
    "klmn_threshold",
]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)


class FormFactorTooSingular(ValueError):
    pass


class NotExcitationPreserving(ValueError):
    pass


@dataclass
class SpinSystem:
    """Finite quantum system with free Hamiltonian ``A`` and couplings ``(B_j, f_j)``."""

    free_h: np.ndarray
    couplings: list = field(default_factory=list)
    require_nonnegative: bool = True

    def __post_init__(self):
        A = np.array(self.free_h, dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("free Hamiltonian must be square")
        if not np.array_equal(A, A.conj().T):
            raise ValueError("free Hamiltonian must be hermitian")
        if self.require_nonnegative and np.linalg.eigvalsh(A).min() < -1e-14:
            raise ValueError("free Hamiltonian must be nonnegative")
        self.free_h = A
        checked = []
        for B, f in self.couplings:
            B = np.array(B, dtype=complex)
            if B.shape != A.shape:
                raise ValueError("coupling matrix has the wrong dimension")
            checked.append((B, f))
        self.couplings = checked

    @property
    def dim(self) -> int:
        return self.free_h.shape[0]


def two_level(omega_e: float, f: Optional[FormFactor] = None,
              coupling: np.ndarray = SIGMA_X, omega_g: float = 0.0,
              require_nonnegative: bool = True) -> SpinSystem:
    """Two-level system ``diag(omega_e, omega_g)`` with one coupling.

    Renormalization schedules may push a bare ``omega_e`` below zero; pass
    ``require_nonnegative=False`` to build those members.
    """
    couplings = [] if f is None else [(coupling, f)]
    return SpinSystem(np.diag([omega_e, omega_g]).astype(complex), couplings,
                      require_nonnegative)


class CompositeOperator:
    """Sparse operator on ``C^spin_dim (x) F`` with the documented layout."""

    def __init__(self, entries, spin_dim: int, fock_basis: FockBasis,
                 hermitian_flag: bool = False, label: str = ""):
        self.entries = sp.csr_matrix(entries, dtype=complex)
        self.spin_dim = int(spin_dim)
        self.fock_basis = fock_basis
        self.hermitian_flag = bool(hermitian_flag)
        self.label = label
        n = self.spin_dim * fock_basis.dim
        if self.entries.shape != (n, n):
            raise ValueError("composite operator has the wrong shape")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def index(self, spin: int, fock: int) -> int:
        return spin * self.fock_basis.dim + fock

    def block(self, i: int, j: int) -> sp.csr_matrix:
        d = self.fock_basis.dim
        return self.entries[i * d:(i + 1) * d, j * d:(j + 1) * d]

    def toarray(self) -> np.ndarray:
        return self.entries.toarray()

    def hermiticity_defect(self) -> float:
        d = (self.entries - self.entries.conj().T).tocoo()
        return float(np.max(np.abs(d.data))) if d.nnz else 0.0

    def to_coo_text(self) -> str:
        """Coordinate text: a shape header then ``row col re im`` per entry."""
        coo = self.entries.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines = [f"# shape {coo.shape[0]} {coo.shape[1]} nnz {coo.nnz}"]
        for k in order:
            v = coo.data[k]
            lines.append(f"{coo.row[k]} {coo.col[k]} {float(v.real)!r} {float(v.imag)!r}")
        return "\n".join(lines) + "\n"


def _kron(A, B):
    return sp.kron(sp.csr_matrix(A), B, format="csr")


def build_h0(sys: SpinSystem, model: FieldModel, basis: FockBasis) -> CompositeOperator:
    """``A (x) I + I (x) dGamma(omega)``."""
    D = sp.diags(energies(model, basis).astype(complex))
    I_f = sp.identity(basis.dim, dtype=complex, format="csr")
    I_s = sp.identity(sys.dim, dtype=complex, format="csr")
    H0 = _kron(sys.free_h, I_f) + _kron(I_s, D)
    return CompositeOperator(H0, sys.dim, basis, True, "H0")


def _interaction(pairs, basis: FockBasis) -> sp.csr_matrix:
    """``sum_j B_j (x) a^dagger(f_j)``; adding its adjoint gives the coupling."""
    V = None
    for B, f in pairs:
        term = _kron(B, annihilator_matrix(f, basis).conj().T)
        V = term if V is None else V + term
    return V


def build_gsb(sys: SpinSystem, lam: float, basis: FockBasis, model: FieldModel,
              check_singularity: bool = True) -> CompositeOperator:
    """``H0 + lam sum_j (B_j (x) a^dagger(f_j) + B_j^* (x) a(f_j))``.

    Every ``f_j`` must have a finite continuum ``||f_j||_-1``; more singular
    factors need the renormalized rotating-wave construction instead.
    """
    if check_singularity:
        for _, f in sys.couplings:
            if math.isinf(weighted_norm(f, 1.0, include_tail=True)):
                raise FormFactorTooSingular(
                    f"||f||_-1 diverges for {f.label!r}; the generic model needs f in H_-1")
    H0 = build_h0(sys, model, basis)
    if not sys.couplings or lam == 0:
        return CompositeOperator(H0.entries, sys.dim, basis, True, "gsb")
    V = _interaction(sys.couplings, basis)
    H = H0.entries + lam * (V + V.conj().T)
    return CompositeOperator(H, sys.dim, basis, True, "gsb")


def build_spin_boson(sys: SpinSystem, lam: float, basis: FockBasis,
                     model: FieldModel, **kw) -> CompositeOperator:
    """Spin-boson model: coupling ``sigma_x (x) (a(f) + a^dagger(f))``."""
    f = _single_form_factor(sys)
    out = build_gsb(SpinSystem(sys.free_h, [(SIGMA_X, f)], sys.require_nonnegative),
                    lam, basis, model, **kw)
    out.label = "spin_boson"
    return out


def build_dephasing(sys: SpinSystem, lam: float, basis: FockBasis,
                    model: FieldModel, **kw) -> CompositeOperator:
    """Pure-dephasing model: coupling ``sigma_z (x) (a(f) + a^dagger(f))``."""
    f = _single_form_factor(sys)
    out = build_gsb(SpinSystem(sys.free_h, [(SIGMA_Z, f)], sys.require_nonnegative),
                    lam, basis, model, **kw)
    out.label = "dephasing"
    return out


def build_rwa(sys: SpinSystem, lam: float, basis: FockBasis,
              model: FieldModel) -> CompositeOperator:
    """Rotating-wave model ``[[omega_e + dGamma, lam a], [lam a^dagger, dGamma]]``.

    Requires a two-level system with ground energy 0.  The truncated matrix
    is assembled for any amplitudes; singular form factors are handled at the
    resolvent level.
    """
    if sys.dim != 2 or sys.free_h[1, 1] != 0 or sys.free_h[0, 1] != 0:
        raise ValueError("rotating-wave model needs A = diag(omega_e, 0)")
    f = _single_form_factor(sys)
    out = build_gsb(SpinSystem(sys.free_h, [(SIGMA_MINUS, f)], sys.require_nonnegative),
                    lam, basis, model, check_singularity=False)
    out.label = "rwa"
    return out


def _single_form_factor(sys: SpinSystem) -> FormFactor:
    if len(sys.couplings) != 1:
        raise ValueError("this model takes exactly one form factor")
    return sys.couplings[0][1]


def excitation_number(basis: FockBasis) -> sp.csr_matrix:
    """``N_exc = diag(N + 1, N)`` on the two-level composite space."""
    N = basis.particle_numbers.astype(float)
    return sp.diags(np.concatenate([N + 1.0, N]).astype(complex), format="csr")


@dataclass
class SectorBlock:
    """Restriction of an excitation-preserving operator to one sector.

    ``indices`` are composite indices (excited part first, then ground part).
    ``complete`` is ``False`` for sector ``n_max + 1``, which only holds
    excited states with ``n_max`` bosons because its ground partners lie
    outside the truncation.
    """

    n: int
    indices: np.ndarray
    matrix: np.ndarray
    complete: bool
    excited_count: int


def _sector_indices(basis: FockBasis, n: int):
    d = basis.dim
    ex = np.arange(0)
    gr = np.arange(0)
    if 1 <= n <= basis.n_max + 1:
        ex = np.arange(*basis.sector_slice(n - 1).indices(d))
    if 0 <= n <= basis.n_max:
        gr = d + np.arange(*basis.sector_slice(n).indices(d))
    return ex, gr


def excitation_sector(H: CompositeOperator, n: int, check: bool = True) -> SectorBlock:
    """Block of ``H`` on excitation sector ``n`` (``0 <= n <= n_max + 1``)."""
    basis = H.fock_basis
    if H.spin_dim != 2:
        raise ValueError("excitation sectors are defined for two-level systems")
    if not 0 <= n <= basis.n_max + 1:
        raise IndexError("sector outside the truncated space")
    ex, gr = _sector_indices(basis, n)
    idx = np.concatenate([ex, gr])
    if check:
        rest = np.setdiff1d(np.arange(H.dim), idx)
        leak = H.entries[idx][:, rest]
        if leak.nnz and np.any(leak.data != 0):
            raise NotExcitationPreserving(
                f"operator couples excitation sector {n} to other sectors")
    M = H.entries[idx][:, idx].toarray()
    return SectorBlock(n, idx, M, n <= basis.n_max, ex.size)


def excitation_sectors(H: CompositeOperator):
    return [excitation_sector(H, n) for n in range(H.fock_basis.n_max + 2)]


def klmn_threshold(H0: CompositeOperator, V: CompositeOperator,
                   seed: int = 0) -> float:
    """Coupling bound ``1 / ||(H0 + 1)^(-1/2) V (H0 + 1)^(-1/2)||``.

    The norm is a power-iteration estimate on the truncated space, so the
    returned value is a truncated estimate rather than a certified bound.
    ``inf`` when ``V`` vanishes.
    """
    if V.hermiticity_defect() != 0.0:
        raise ValueError("V must be hermitian")
    h0 = H0.entries
    offdiag = h0 - sp.diags(h0.diagonal())
    if offdiag.nnz and np.any(offdiag.data != 0):
        evals, U = np.linalg.eigh(H0.toarray())
        W = (U * (evals + 1.0) ** -0.5) @ U.conj().T
        M = W @ V.toarray() @ W
        mv = lambda x: M @ x
        rmv = lambda x: M.conj().T @ x
    else:
        w = (h0.diagonal().real + 1.0) ** -0.5
        Vm = V.entries
        mv = lambda x: w * (Vm @ (w * x))
        rmv = lambda x: w * (Vm.conj().T @ (w * x))
    nrm = power_norm(mv, rmv, H0.dim, seed=seed)
    return math.inf if nrm == 0.0 else 1.0 / nrm
