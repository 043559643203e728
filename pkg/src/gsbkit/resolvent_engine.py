"""Resolvent algebra of the rotating-wave model on the truncated Fock space.

Notation: ``A = a(f)`` is the truncated annihilator, ``D = dGamma(omega)``
and ``c_j = f(k_j) sqrt(mu_j)`` are the mode amplitudes.

* plain dressing ``S(z) = A (D - z)^-1 A^*``
* renormalized dressing ``S~(z) = R(z) + T(z)``: the exchange part ``R`` is
  written out in :func:`_exchange_entries` and the diagonal part is
  ``T(z)|n> = sum_l |c_l|^2 (1/(E_n + omega_l - z) - 1/omega_l) |n>``.

Both kinds involve intermediate states with one more particle.  For the top
Fock sector those states are outside the truncation; there ``S`` vanishes
(the truncated ``A^*`` kills it) and ``S~`` keeps only the counterterm
``-sum_l |c_l|^2/omega_l``.  With this convention ``S~ - S`` equals
``-||f||_-1^2`` (grid value) on every sector, exactly as in the untruncated
theory.

Propagators ``G(z) = e - z + D - lam^2 S(z)`` (or ``S~``) conserve particle
number and are factorized by dense LU sector by sector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy import optimize

from .field_model import (FieldModel, FormFactor, growth_certificate,
                          integrate_kernel, weighted_norm)
from .fock_space import FockBasis, energies, random_vector
from .ladder_ops import _lowering_table, annihilator_matrix
from .model_builder import (SIGMA_MINUS, CompositeOperator, build_rwa,
                            two_level)
from .numerics import power_norm
from .reports import CheckReport

__all__ = [
    "RequiresRenormalization",
    "SpectralPoint",
    "DressingOperator",
    "PropagatorHandle",
    "SelfEnergyScalar",
    "BoundState",
    "RWAParts",
    "dressing",
    "first_resolvent_difference_check",
    "propagator",
    "rwa_resolve",
    "rwa_matrix",
    "renormalized_rwa_matrix",
    "self_energy",
    "bound_state",
    "relative_bound_check",
]

PLAIN = "plain"
RENORMALIZED = "renormalized"
KINDS = (PLAIN, RENORMALIZED)
PIVOT_RTOL = 1e-14


class RequiresRenormalization(ValueError):
    pass


class SpectralPoint(ValueError):
    """Raised when ``z`` hits the spectrum of a sector; ``sector`` names it."""

    def __init__(self, message: str, sector: Optional[int] = None):
        super().__init__(message)
        self.sector = sector


def _check_kind(kind: str) -> str:
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    return kind


def _plain_is_divergent(f: FormFactor) -> bool:
    try:
        return math.isinf(weighted_norm(f, 1.0, include_tail=True))
    except ValueError:
        return False


# --------------------------------------------------------------------------- #
#                                  dressing                                   #
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class DressingOperator:
    """``S_f(z)`` or ``S~_f(z)`` as a sparse matrix on the Fock basis.

    ``split`` holds ``(R, T)`` for the renormalized kind.  ``flags`` carries
    ``"requires-renormalization"`` when a plain dressing was requested for a
    form factor whose continuum ``||f||_-1`` diverges: the truncated matrix
    exists but grows without bound under grid refinement.
    """

    kind: str
    z: complex
    matrix: sp.csr_matrix
    basis: FockBasis
    split: Optional[tuple] = None
    flags: tuple = ()

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def _intermediate_denominators(f: FormFactor, basis: FockBasis, z: complex):
    """``E_n + omega_l - z`` for every basis state ``n`` and mode ``l``."""
    E = energies(f.model, basis)
    den = E[:, None] + f.model.omega[None, :] - z
    safe = basis.particle_numbers < basis.n_max
    if np.any(den[safe] == 0):
        raise SpectralPoint(f"z = {z} coincides with an intermediate energy")
    return E, den, safe


def _resolvent_diagonal(E: np.ndarray, basis: FockBasis, z: complex) -> np.ndarray:
    """``(E_n - z)^-1`` on sectors ``n >= 1``; sector 0 never follows ``A^*``."""
    w = np.zeros(E.shape, dtype=complex)
    occupied = basis.particle_numbers >= 1
    d = E[occupied] - z
    if np.any(d == 0):
        bad = int(basis.particle_numbers[occupied][np.argmin(np.abs(d))])
        raise SpectralPoint(f"z = {z} is an eigenvalue of dGamma", sector=bad)
    w[occupied] = 1.0 / d
    return w


def _plain_dressing(f: FormFactor, basis: FockBasis, z: complex) -> sp.csr_matrix:
    A = annihilator_matrix(f, basis)
    w = _resolvent_diagonal(energies(f.model, basis), basis, z)
    return (A @ sp.diags(w) @ A.conj().T).tocsr()


def _exchange_entries(f: FormFactor, basis: FockBasis, z: complex,
                      den: np.ndarray, safe: np.ndarray) -> sp.csr_matrix:
    """Exchange term of the renormalized dressing in occupation numbers.

    ``R|n> = sum_{j,l} conj(c_j) c_l sqrt(n_j) sqrt((n-e_j)_l + 1)
    / (E_n + omega_l - z) |n - e_j + e_l>``, restricted to states below the
    top sector.  Pairs of lowering-table entries sharing the middle state
    ``n - e_j`` enumerate the terms.
    """
    rows, cols, modes, vals = _lowering_table(basis)
    keep = safe[cols]
    rows, cols, modes, vals = rows[keep], cols[keep], modes[keep], vals[keep]
    if rows.size == 0:
        return sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    order = np.argsort(rows, kind="stable")
    rows, cols, modes, vals = rows[order], cols[order], modes[order], vals[order]
    groups, start, size = np.unique(rows, return_index=True, return_counts=True)
    sq = size.astype(np.int64) ** 2
    grp = np.repeat(np.arange(groups.size), sq)
    local = np.arange(sq.sum()) - np.repeat(np.cumsum(sq) - sq, sq)
    a = start[grp] + local // size[grp]   # source leg: n --b_j--> middle
    b = start[grp] + local % size[grp]    # target leg: middle --b_l^*--> t
    c = f.mode_amplitudes
    data = (np.conj(c[modes[a]]) * vals[a] * c[modes[b]] * vals[b]
            / den[cols[a], modes[b]])
    return sp.csr_matrix((data, (cols[b], cols[a])), shape=(basis.dim, basis.dim))


def _diagonal_term(f: FormFactor, E: np.ndarray, den: np.ndarray,
                   safe: np.ndarray, z: complex) -> np.ndarray:
    """``sum_l |c_l|^2 (1/(E + omega_l - z) - 1/omega_l)``, counterterm alone on top."""
    c2 = np.abs(f.mode_amplitudes) ** 2
    om = f.model.omega
    t = np.full(E.shape, -np.sum(c2 / om), dtype=complex)
    t[safe] = ((z - E[safe])[:, None] * (c2 / om)[None, :] / den[safe]).sum(axis=1)
    return t


def dressing(f: FormFactor, z: complex, kind: str, basis: FockBasis,
             model: Optional[FieldModel] = None) -> DressingOperator:
    """Plain or renormalized dressing operator at ``z``.

    ``z`` must avoid ``[m, inf)``; real ``z`` below the mass gap is fine
    because every resolvent factor acts on states with at least one boson.
    """
    _check_kind(kind)
    if model is not None and model is not f.model:
        raise ValueError("form factor is sampled on a different field model")
    z = complex(z)
    if z.imag == 0 and z.real >= f.model.mass_gap:
        raise SpectralPoint(f"z = {z} lies on the continuum [m, inf)")
    if kind == PLAIN:
        flags = ("requires-renormalization",) if _plain_is_divergent(f) else ()
        return DressingOperator(PLAIN, z, _plain_dressing(f, basis, z), basis,
                                flags=flags)
    E, den, safe = _intermediate_denominators(f, basis, z)
    R = _exchange_entries(f, basis, z, den, safe)
    T = sp.diags(_diagonal_term(f, E, den, safe, z), format="csr")
    return DressingOperator(RENORMALIZED, z, (R + T).tocsr(), basis, split=(R, T))


def first_resolvent_difference_check(f: FormFactor, z: complex, z0: complex,
                                     basis: FockBasis, model=None,
                                     tol: float = 1e-12) -> CheckReport:
    """``S(z) - S(z0) = (z - z0) A (D-z)^-1 (D-z0)^-1 A^*`` for both kinds."""
    z, z0 = complex(z), complex(z0)
    A = annihilator_matrix(f, basis)
    E = energies(f.model, basis)
    w = _resolvent_diagonal(E, basis, z) * _resolvent_diagonal(E, basis, z0)
    rhs = ((z - z0) * (A @ sp.diags(w) @ A.conj().T)).toarray()
    scale = max(1.0, float(np.abs(rhs).max(initial=0.0)))
    devs = {}
    for kind in KINDS:
        lhs = (dressing(f, z, kind, basis).matrix
               - dressing(f, z0, kind, basis).matrix).toarray()
        devs[kind] = float(np.abs(lhs - rhs).max(initial=0.0))
    worst = max(devs.values())
    return CheckReport("first_resolvent_difference",
                       {"f": f.label, "z": z, "z0": z0},
                       max_deviation=worst, bound=tol * scale,
                       passed=worst <= tol * scale,
                       details={"deviation_by_kind": devs, "scale": scale})


# --------------------------------------------------------------------------- #
#                                 propagator                                  #
# --------------------------------------------------------------------------- #

@dataclass
class PropagatorHandle:
    """Factorized ``G(z) = energy - z + D - lam^2 S(z)`` (or the tilde variant)."""

    kind: str
    z: complex
    energy: float
    lam: float
    basis: FockBasis
    matrix: sp.csr_matrix
    factors: list = field(repr=False, default_factory=list)

    def apply_inverse(self, v: np.ndarray) -> np.ndarray:
        return self._solve(v, 0)

    def apply_inverse_adjoint(self, v: np.ndarray) -> np.ndarray:
        return self._solve(v, 2)

    def _solve(self, v, trans):
        v = np.asarray(v, dtype=complex)
        out = np.zeros_like(v)
        for n, fac in enumerate(self.factors):
            sl = self.basis.sector_slice(n)
            out[sl] = la.lu_solve(fac, v[sl], trans=trans)
        return out

    def inverse_dense(self) -> np.ndarray:
        return self.apply_inverse(np.eye(self.basis.dim, dtype=complex))

    def inverse_norm(self, seed: int = 0) -> float:
        """Power-iteration estimate of ``||G^-1(z)||``."""
        return power_norm(self.apply_inverse, self.apply_inverse_adjoint,
                          self.basis.dim, seed=seed)


def _factor_sectors(M: sp.csr_matrix, basis: FockBasis, z: complex):
    factors = []
    for n in range(basis.n_max + 1):
        sl = basis.sector_slice(n)
        block = M[sl, sl].toarray()
        lu, piv = la.lu_factor(block, check_finite=True)
        u = np.abs(np.diag(lu))
        if u.min() <= PIVOT_RTOL * max(u.max(), 1.0):
            raise SpectralPoint(f"propagator is singular at z = {z} in sector {n}",
                                sector=n)
        factors.append((lu, piv))
    return factors


def propagator_matrix(f: FormFactor, z: complex, energy: float, lam: float,
                      kind: str, basis: FockBasis) -> sp.csr_matrix:
    S = dressing(f, z, kind, basis).matrix
    D = energies(f.model, basis)
    return (sp.diags(energy - complex(z) + D) - lam ** 2 * S).tocsr()


def propagator(f: FormFactor, z: complex, energy: float, lam: float, kind: str,
               basis: FockBasis, model: Optional[FieldModel] = None) -> PropagatorHandle:
    """Factorize the propagator sector by sector for repeated solves.

    ``energy`` is the bare ``omega_e`` for the plain kind and the
    renormalized ``omega~_e`` for the renormalized kind.
    """
    _check_kind(kind)
    if model is not None and model is not f.model:
        raise ValueError("form factor is sampled on a different field model")
    z = complex(z)
    M = propagator_matrix(f, z, energy, lam, kind, basis)
    return PropagatorHandle(kind, z, float(energy), float(lam), basis, M,
                            _factor_sectors(M, basis, z))


# --------------------------------------------------------------------------- #
#                              Schur resolvent                                #
# --------------------------------------------------------------------------- #

@dataclass
class RWAParts:
    """Ingredients of a rotating-wave model for the closed-form resolvent."""

    f: FormFactor
    energy: float
    lam: float
    basis: FockBasis
    kind: str = PLAIN
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        _check_kind(self.kind)

    def propagator(self, z: complex) -> PropagatorHandle:
        z = complex(z)
        if z not in self._cache:
            self._cache[z] = propagator(self.f, z, self.energy, self.lam,
                                        self.kind, self.basis)
        return self._cache[z]


def rwa_resolve(parts: RWAParts, z: complex, psi_e, psi_g):
    """Both components of ``(H - z)^-1 (psi_e, psi_g)``.

    ``top = G^-1 (psi_e - lam A (D - z)^-1 psi_g)`` and
    ``bottom = (D - z)^-1 psi_g - lam (D - z)^-1 A^* top``.
    Extra columns in ``psi_e``/``psi_g`` are solved together.
    """
    z = complex(z)
    basis = parts.basis
    A = annihilator_matrix(parts.f, basis)
    E = energies(parts.f.model, basis)
    psi_e = np.asarray(psi_e, dtype=complex)
    psi_g = np.asarray(psi_g, dtype=complex)
    dz = E - z
    if np.any(dz == 0):
        hit = dz == 0
        support = np.abs(psi_g if psi_g.ndim == 1 else psi_g.sum(axis=1))[hit]
        if np.any(support != 0):
            raise SpectralPoint(f"z = {z} is an eigenvalue of dGamma",
                                sector=int(basis.particle_numbers[hit][0]))
    inv = np.where(dz == 0, 0.0, 1.0 / np.where(dz == 0, 1.0, dz))
    if psi_g.ndim == 2:
        inv = inv[:, None]
    G = parts.propagator(z)
    rhs = psi_e - parts.lam * (A @ (inv * psi_g))
    top = G.apply_inverse(rhs)
    bottom = inv * psi_g - parts.lam * inv * (A.conj().T @ top)
    return top, bottom


def rwa_matrix(f: FormFactor, omega_e: float, lam: float,
               basis: FockBasis) -> CompositeOperator:
    """Truncated rotating-wave matrix with bare excitation energy ``omega_e``."""
    sys = two_level(omega_e, f, SIGMA_MINUS, require_nonnegative=False)
    return build_rwa(sys, lam, basis, f.model)


def renormalized_rwa_matrix(f: FormFactor, omega_e_tilde: float, lam: float,
                            basis: FockBasis) -> CompositeOperator:
    """Renormalized rotating-wave model as a matrix on the composite space.

    The operator acts on vectors ``(Phi_e, Phi_g - lam (D+1)^-1 A^* Phi_e)``
    as ``K (Phi_e, Phi_g)`` with ``K = [[omega~ + D - lam^2 S~(-1), lam A],
    [lam (D+1)^-1 A^*, D]]``.  Undoing the domain twist gives the matrix
    ``K M^-1`` where ``M^-1 = [[I, 0], [lam (D+1)^-1 A^*, I]]``.
    """
    A = annihilator_matrix(f, basis)
    Ad = A.conj().T.tocsr()
    E = energies(f.model, basis)
    D = sp.diags(E.astype(complex))
    I = sp.identity(basis.dim, dtype=complex, format="csr")
    St = dressing(f, -1.0, RENORMALIZED, basis).matrix
    twist = sp.diags(1.0 / (E + 1.0)) @ Ad
    K = sp.bmat([[omega_e_tilde * I + D - lam ** 2 * St, lam * A],
                 [lam * twist, D]], format="csr")
    Minv = sp.bmat([[I, None], [lam * twist, I]], format="csr")
    return CompositeOperator((K @ Minv).tocsr(), 2, basis, False, "rwa-renormalized")


# --------------------------------------------------------------------------- #
#                         self-energy and bound state                         #
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class SelfEnergyScalar:
    z: complex
    value: complex
    kind: str
    include_tail: bool


def self_energy(f: FormFactor, z: complex, kind: str = PLAIN,
                model: Optional[FieldModel] = None,
                include_tail: bool = True) -> SelfEnergyScalar:
    """``Sigma(z) = int |f|^2/(omega - z)`` or ``Sigma~(z) = int |f|^2 z/(omega (omega - z))``.

    ``include_tail=False`` gives the value for the discretized measure, which
    is the vacuum entry of the truncated dressing operator.
    """
    _check_kind(kind)
    if model is not None and model is not f.model:
        raise ValueError("form factor is sampled on a different field model")
    z = complex(z)
    edge = f.model.mass_gap if include_tail else float(f.model.omega.min())
    if z.imag == 0 and z.real >= edge:
        raise SpectralPoint(f"z = {z} lies on the continuous spectrum")
    zz = z.real if z.imag == 0 else z
    if kind == PLAIN:
        val = integrate_kernel(f, lambda w: 1.0 / (w - zz), 1.0, include_tail)
    else:
        val = integrate_kernel(f, lambda w: zz / (w * (w - zz)), 2.0, include_tail)
    if isinstance(val, float) and math.isinf(val):
        raise RequiresRenormalization(
            f"self-energy of {f.label!r} diverges; use the renormalized kind")
    return SelfEnergyScalar(z, complex(val), kind, include_tail)


@dataclass
class BoundState:
    """Root of ``energy - E - lam^2 Sigma(E)`` below the continuum threshold."""

    energy: Optional[float]
    residual: Optional[float]
    iterations: int
    bracket: Optional[tuple]
    threshold: float
    kind: str
    include_tail: bool

    def as_dict(self) -> dict:
        return {"E": self.energy, "residual": self.residual,
                "iterations": self.iterations, "bracket": self.bracket,
                "threshold": self.threshold, "kind": self.kind,
                "include_tail": self.include_tail}


def bound_state(f: FormFactor, omega_e: float, lam: float,
                model: Optional[FieldModel] = None, kind: str = PLAIN,
                include_tail: bool = False, xtol: float = 1e-14) -> BoundState:
    """Single-excitation bound state from the secular equation.

    ``include_tail=False`` solves the equation of the discretized measure,
    whose root is exactly the lowest eigenvalue of the truncated ``n = 1``
    sector; its threshold is the smallest grid frequency.  With the tail the
    continuum equation is solved below ``m``.  ``energy`` is ``None`` when no
    root exists below the threshold.
    """
    if lam == 0:
        raise ValueError("coupling must be nonzero")
    _check_kind(kind)
    m = f.model.mass_gap
    threshold = float(f.model.omega.min()) if not include_tail else m

    def secular(E):
        sig = self_energy(f, E, kind, include_tail=include_tail).value.real
        return omega_e - E - lam ** 2 * sig

    hi = None
    delta = 1e-3 * (1.0 + abs(threshold))
    while delta > 1e-15 * (1.0 + abs(threshold)):
        cand = threshold - delta
        if secular(cand) < 0:
            hi = cand
            break
        delta /= 10.0
    if hi is None:
        return BoundState(None, None, 0, None, threshold, kind, include_tail)
    step = 1.0 + abs(omega_e)
    lo = min(omega_e, hi) - step
    while secular(lo) <= 0:
        step *= 2.0
        lo -= step
    root, info = optimize.brentq(secular, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps,
                                 maxiter=500, full_output=True)
    return BoundState(float(root), float(abs(secular(root))), int(info.iterations),
                      (float(lo), float(hi)), threshold, kind, include_tail)


# --------------------------------------------------------------------------- #
#                         relative-bound verification                          #
# --------------------------------------------------------------------------- #

def relative_bound_check(f: FormFactor, s: float, r: float, basis: FockBasis,
                         model: Optional[FieldModel] = None, trials: int = 500,
                         seed: int = 0, slack: float = 1e-10) -> CheckReport:
    """Relative bounds of the two parts of ``S~(0)`` on random vectors.

    With discrete-measure norms, every trial vector must satisfy

    * ``||T psi|| <= ||f||_-s^2 ||D^(s-1) psi||``
    * ``||R psi|| <= C_f m^(s-1-r) ||D^r psi||`` with ``C_f = max_n n^(s-r) I_n``

    Vectors live below the top sector, where the split is not truncated.
    The vacuum and the single-boson basis vectors are always included; the
    vacuum must be annihilated by both parts.
    """
    if not 1.0 <= s <= 2.0 or not s - 1.0 - 1e-12 <= r <= 1.0 + 1e-12:
        raise ValueError("need s in [1, 2] and r in [s - 1, 1]")
    if basis.n_max < 1:
        raise ValueError("need n_max >= 1")
    m = f.model.mass_gap
    d = dressing(f, 0.0, RENORMALIZED, basis)
    R, T = d.split
    fs2 = weighted_norm(f, s, include_tail=False)
    cert = growth_certificate(f, s, max(basis.n_max, 1), include_tail=False)
    n = cert.n
    C_f = float(np.max(cert.integrals * n ** (s - r))) if n.size else 0.0
    E = energies(f.model, basis)
    rng = np.random.default_rng(seed)
    safe = list(range(basis.n_max))
    worst_t = worst_r = 0.0
    violations = 0
    unsquared_violations = 0
    fs1 = math.sqrt(fs2)
    vectors = [np.eye(basis.dim, 1, dtype=complex).ravel()]
    if basis.n_max >= 2:
        # single-boson basis vectors probe the T-bound where it is tightest
        sl = basis.sector_slice(1)
        vectors += list(np.eye(basis.dim, dtype=complex)[:, sl].T)
    vectors += [random_vector(basis, rng, safe).coefficients for _ in range(trials)]
    for c in vectors:
        nt = np.linalg.norm(T @ c)
        nr = np.linalg.norm(R @ c)
        bt = fs2 * np.linalg.norm(E ** (s - 1.0) * c)
        br = C_f * m ** (s - 1.0 - r) * np.linalg.norm(E ** r * c)
        gt, gr = nt - bt, nr - br
        worst_t, worst_r = max(worst_t, gt), max(worst_r, gr)
        violations += (gt > slack * max(1.0, bt)) or (gr > slack * max(1.0, br))
        unsquared_violations += nt > fs1 * np.linalg.norm(E ** (s - 1.0) * c) * (1 + slack)
    vac = np.zeros(basis.dim, dtype=complex)
    vac[0] = 1.0
    vac_image = float(np.linalg.norm(T @ vac) + np.linalg.norm(R @ vac))
    return CheckReport(
        "relative_bounds", {"f": f.label, "s": s, "r": r, "trials": trials, "seed": seed},
        max_deviation=float(max(worst_t, worst_r)), bound=slack,
        passed=bool(violations == 0 and vac_image == 0.0),
        details={"violations": int(violations), "C_f": C_f, "norm_sq_grid": fs2,
                 "max_gap_T": float(worst_t), "max_gap_R": float(worst_r),
                 "vacuum_image": vac_image,
                 "violations_with_unsquared_norm": int(unsquared_violations)})
