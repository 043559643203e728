"""Creation and annihilation operators on the truncated Fock space.

In mode form ``a(f) = sum_j conj(f(k_j)) sqrt(mu_j) b_j`` with ``b_j`` the
elementary lowering operator of mode ``j``.  The creation operator is stored
as the exact conjugate transpose, which drops every amplitude that would
leave the top sector.  Identities that the truncation breaks (the canonical
commutator) are checked on the sectors below the top one, and the top-sector
defect is reported separately.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .field_model import FieldModel, FormFactor, inner_product, hnorm
from .fock_space import (BlockOperator, FockBasis, energies, random_vector,
                         scale_norm)
from .numerics import power_norm
from .reports import CheckReport

__all__ = [
    "LadderPair",
    "build_ladder",
    "segal_field",
    "adjoint_pair_check",
    "commutator_check",
    "nelson_bound_check",
    "weighted_annihilator_norm",
    "ladder_approximation_check",
]

_LOWERING_CACHE: dict = {}


def _lowering_table(basis: FockBasis):
    """(rows, cols, mode, sqrt(n_j)) for all nonzero entries of all ``b_j``."""
    key = id(basis)
    hit = _LOWERING_CACHE.get(key)
    if hit is not None and hit[0] is basis:
        return hit[1]
    rows, cols, modes, vals = [], [], [], []
    for j in range(basis.mode_count):
        src = np.nonzero(basis.states[:, j] > 0)[0]
        if src.size == 0:
            continue
        target = np.array(basis.states[src])
        target[:, j] -= 1
        rows.append(basis.rank(target))
        cols.append(src)
        modes.append(np.full(src.size, j))
        vals.append(np.sqrt(basis.states[src, j].astype(float)))
    if rows:
        table = tuple(np.concatenate(x) for x in (rows, cols, modes, vals))
    else:
        table = tuple(np.zeros(0, dtype=t) for t in (int, int, int, float))
    _LOWERING_CACHE[key] = (basis, table)
    return table


@dataclass(frozen=True)
class LadderPair:
    """``a(f)`` and ``a^dagger(f)`` on one basis; ``create`` is ``annihilate^*``."""

    annihilate: BlockOperator
    create: BlockOperator
    form_factor: FormFactor

    @property
    def basis(self) -> FockBasis:
        return self.annihilate.domain_basis


def annihilator_matrix(f: FormFactor, basis: FockBasis) -> sp.csr_matrix:
    if f.model.size != basis.mode_count:
        raise ValueError("form factor grid and basis disagree on the number of modes")
    rows, cols, modes, vals = _lowering_table(basis)
    c = np.conj(f.mode_amplitudes)
    data = vals * c[modes]
    keep = data != 0
    return sp.csr_matrix((data[keep], (rows[keep], cols[keep])),
                         shape=(basis.dim, basis.dim))


def build_ladder(f: FormFactor, basis: FockBasis,
                 model: Optional[FieldModel] = None) -> LadderPair:
    """Assemble ``a(f)`` from mode amplitudes and ``a^dagger(f)`` as its adjoint."""
    if model is not None and model is not f.model:
        raise ValueError("form factor is sampled on a different field model")
    a = annihilator_matrix(f, basis)
    ann = BlockOperator(a, basis)
    cre = BlockOperator(a.conj().T.tocsr(), basis)
    return LadderPair(ann, cre, f)


def segal_field(pair: LadderPair) -> BlockOperator:
    """``phi(f) = (a(f) + a^dagger(f)) / sqrt 2``, exactly hermitian."""
    half = pair.annihilate.entries / math.sqrt(2.0)
    return BlockOperator(half + half.conj().T, pair.basis, hermitian_flag=True)


def adjoint_pair_check(pair: LadderPair, trials: int = 100, seed: int = 0,
                       tol: float = 1e-12) -> CheckReport:
    """``<phi, a psi> = <a^dagger phi, psi>`` on seeded random vectors."""
    rng = np.random.default_rng(seed)
    a = pair.annihilate.entries
    ad = pair.create.entries
    worst = 0.0
    for _ in range(trials):
        psi = random_vector(pair.basis, rng).coefficients
        phi = random_vector(pair.basis, rng).coefficients
        worst = max(worst, abs(np.vdot(phi, a @ psi) - np.vdot(ad @ phi, psi)))
    scale = max(1.0, float(np.linalg.norm(pair.form_factor.mode_amplitudes))
                * math.sqrt(max(pair.basis.n_max, 1)))
    return CheckReport("adjoint_pairing", {"f": pair.form_factor.label,
                                           "trials": trials, "seed": seed},
                       max_deviation=float(worst), bound=tol * scale,
                       passed=worst <= tol * scale)


def commutator_check(f: FormFactor, g: FormFactor, basis: FockBasis,
                     tol: float = 1e-12) -> CheckReport:
    """``[a(f), a^dagger(g)] = <f, g> I`` below the top sector.

    The top sector is excluded from the verdict because the truncated
    creation operator cannot leave it; its deviation is reported as the
    expected truncation artifact.
    """
    af = annihilator_matrix(f, basis)
    ag_dag = annihilator_matrix(g, basis).conj().T
    comm = (af @ ag_dag - ag_dag @ af).toarray()
    ip = inner_product(f, g)
    dev = np.abs(comm - ip * np.eye(basis.dim))
    safe = basis.particle_numbers < basis.n_max
    safe_dev = float(dev[np.ix_(safe, safe)].max()) if safe.any() else 0.0
    top = ~safe
    top_dev = float(dev[np.ix_(top, top)].max()) if top.any() else 0.0
    cross = float(max(dev[np.ix_(safe, top)].max(initial=0.0),
                      dev[np.ix_(top, safe)].max(initial=0.0)))
    scale = max(1.0, abs(ip), np.linalg.norm(f.mode_amplitudes)
                * np.linalg.norm(g.mode_amplitudes))
    return CheckReport(
        "canonical_commutator",
        {"f": f.label, "g": g.label, "modes": basis.mode_count, "n_max": basis.n_max},
        max_deviation=safe_dev, bound=tol * scale,
        passed=safe_dev <= tol * scale and cross <= tol * scale,
        details={"inner_product": ip, "top_sector_deviation": top_dev,
                 "cross_sector_deviation": cross,
                 "top_sector_note": "expected truncation artifact"})


def weighted_annihilator_norm(pair: LadderPair, s: float, model: FieldModel,
                              seed: int = 0) -> float:
    """Power-iteration estimate of ``||a(f) (dGamma + 1)^(-s/2)||``."""
    w = (energies(model, pair.basis) + 1.0) ** (-s / 2.0)
    a = pair.annihilate.entries
    ah = pair.create.entries
    return power_norm(lambda v: a @ (w * v), lambda u: w * (ah @ u),
                      pair.basis.dim, seed=seed)


def nelson_bound_check(pair: LadderPair, s: float, trials: int = 1000,
                       seed: int = 0, slack: float = 1e-12,
                       norm_slack: float = 1e-8) -> CheckReport:
    """Vector-wise and operator-norm versions of the ``H_-s`` ladder bounds.

    With ``||f||_-s`` the norm of the discretized measure (what the truncated
    operators see), every trial vector must satisfy

    * ``||a(f) psi|| <= ||f||_-s ||dGamma^(s/2) psi|| <= ||f||_-s ||psi||_{F_+s}``
    * ``||(dGamma + 1)^(-s/2) a^dagger(f) psi|| <= ||f||_-s ||psi||``

    and the power-iteration norm of ``a(f)(dGamma + 1)^(-s/2)`` must not
    exceed ``||f||_-s + norm_slack``.
    """
    if s < 1:
        raise ValueError("the ladder bounds are stated for s >= 1")
    f = pair.form_factor
    model = f.model
    basis = pair.basis
    fn = hnorm(f, s, include_tail=False)
    try:
        fn_cont = hnorm(f, s, include_tail=True)
    except ValueError:
        fn_cont = None
    E = energies(model, basis)
    inv_w = (E + 1.0) ** (-s / 2.0)
    a = pair.annihilate.entries
    ah = pair.create.entries
    rng = np.random.default_rng(seed)
    violations = 0
    worst = 0.0
    for _ in range(trials):
        psi = random_vector(basis, rng)
        c = psi.coefficients
        lhs = np.linalg.norm(a @ c)
        mid = fn * np.linalg.norm(E ** (s / 2.0) * c)
        rhs = fn * scale_norm(psi, s, model)
        dual = np.linalg.norm(inv_w * (ah @ c))
        gaps = (lhs - mid, mid - rhs, dual - fn * np.linalg.norm(c))
        tol = slack * max(1.0, rhs)
        worst = max(worst, *gaps)
        violations += any(g > tol for g in gaps)
    op = weighted_annihilator_norm(pair, s, model, seed=seed)
    passed = violations == 0 and op <= fn + norm_slack
    return CheckReport(
        "ladder_bounds", {"f": f.label, "s": s, "trials": trials, "seed": seed},
        max_deviation=float(max(worst, op - fn)), bound=fn,
        passed=bool(passed),
        details={"violations": violations, "weighted_operator_norm": op,
                 "norm_grid": fn, "norm_continuum": fn_cont})


def ladder_approximation_check(seq, s: float, basis: FockBasis,
                               seed: int = 0, slack: float = 1e-8) -> CheckReport:
    """``||a(f) - a(f^i)||`` as maps ``F_+s -> F`` along a cutoff sequence.

    By linearity ``a(f) - a(f^i) = a(f - f^i)``; each weighted norm must stay
    below ``||f - f^i||_-s`` of the discretized measure and the sequence must
    not increase.
    """
    f = seq.base
    rows = []
    ok = True
    for lam, fi in zip(seq.cutoffs, seq.generated):
        diff = FormFactor(f.amplitudes - fi.amplitudes, f.model, label="difference")
        pair = build_ladder(diff, basis)
        dist = weighted_annihilator_norm(pair, s, f.model, seed=seed)
        bound = hnorm(diff, s, include_tail=False)
        ok &= dist <= bound + slack
        rows.append({"cutoff": lam, "distance": dist, "bound": bound,
                     "ratio": dist / bound if bound else 0.0})
    dists = [r["distance"] for r in rows]
    monotone = all(b <= a + slack for a, b in zip(dists, dists[1:]))
    worst = max((r["distance"] - r["bound"] for r in rows), default=0.0)
    return CheckReport("ladder_approximation", {"f": f.label, "s": s},
                       max_deviation=float(worst), bound=slack,
                       passed=bool(ok and monotone),
                       details={"steps": rows, "non_increasing": monotone})
