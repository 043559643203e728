"""Resolvent convergence along cutoff sequences.

A sequence of regular models ``H_i`` built from ``f^i = f 1[|k| <= Lambda_i]``
is compared with a limit model through ``(H_i - z)^-1 - (H - z)^-1``.  Two
metrics are reported: an operator-norm estimate (power iteration on the
difference of sparse LU solves) and a strong-mode maximum over a fixed probe
set.  The limit model lives on the same truncated space, so all distances
refer to the discretized measure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .field_model import RegularizationSequence, weighted_norm
from .fock_space import FockBasis
from .model_builder import (SIGMA_X, CompositeOperator, build_spin_boson,
                            two_level)
from .numerics import power_norm
from .reports import CheckReport
from .resolvent_engine import (renormalized_rwa_matrix, rwa_matrix,
                               self_energy)

__all__ = [
    "ScheduleRequired",
    "MODEL_KINDS",
    "Resolvent",
    "probe_set",
    "resolvent_distance",
    "excitation_labels",
    "sector_strong_distances",
    "ConvergenceReport",
    "run_convergence",
    "negative_control",
]

MODEL_KINDS = ("gsb", "rwa-plain", "rwa-renormalized")
WOBBLE = 0.05
RANDOM_PROBES = 64


class ScheduleRequired(ValueError):
    pass


class Resolvent:
    """Sparse LU of ``H - z`` with solves for the resolvent and its adjoint."""

    def __init__(self, H, z: complex):
        M = H.entries if isinstance(H, CompositeOperator) else sp.csr_matrix(H)
        self.dim = M.shape[0]
        self.z = complex(z)
        shifted = (M - self.z * sp.identity(self.dim, format="csr")).tocsc()
        self._lu = spla.splu(shifted)

    def solve(self, v):
        return self._lu.solve(np.asarray(v, dtype=complex))

    def solve_adjoint(self, v):
        return self._lu.solve(np.asarray(v, dtype=complex), trans="H")


def probe_set(basis: FockBasis, seed: int = 0,
              random_count: int = RANDOM_PROBES) -> np.ndarray:
    """Columns: seeded random vectors, 1- and 2-particle basis vectors, spin vacua.

    Basis vectors are taken in both spin components; the spin-vacuum pairs
    ``(Omega, 0)`` and ``(0, Omega)`` come last.
    """
    d = basis.dim
    rng = np.random.default_rng(seed)
    cols = []
    R = rng.standard_normal((2 * d, random_count)) + 1j * rng.standard_normal((2 * d, random_count))
    cols.append(R / np.linalg.norm(R, axis=0))
    few = np.nonzero((basis.particle_numbers >= 1) & (basis.particle_numbers <= 2))[0]
    idx = np.concatenate([few, d + few, [0, d]])
    E = np.zeros((2 * d, idx.size), dtype=complex)
    E[idx, np.arange(idx.size)] = 1.0
    cols.append(E)
    return np.hstack(cols)


def excitation_labels(basis: FockBasis) -> np.ndarray:
    """Excitation number of every composite index (excited part first)."""
    n = basis.particle_numbers
    return np.concatenate([n + 1, n])


def sector_strong_distances(Ra, Rb, probes: np.ndarray, basis: FockBasis) -> list:
    """Strong-mode distance split by excitation sector of the output.

    Sector ``n_max + 1`` (excited state with ``n_max`` bosons) is incomplete:
    its ground-state partners are outside the truncation.
    """
    diff = Ra.solve(probes) - Rb.solve(probes)
    pn = np.linalg.norm(probes, axis=0)
    lab = excitation_labels(basis)
    return [float(np.max(np.linalg.norm(diff[lab == n], axis=0) / pn))
            for n in range(basis.n_max + 2)]


def _as_resolvent(H, z):
    return H if isinstance(H, Resolvent) else Resolvent(H, z)


def resolvent_distance(Ha, Hb, z: complex, mode: str = "norm", seed: int = 0,
                       probes: Optional[np.ndarray] = None) -> float:
    """``||(Ha - z)^-1 - (Hb - z)^-1||`` (``mode="norm"``) or its probe maximum.

    ``mode="strong"`` returns ``max_v ||(R_a - R_b) v|| / ||v||`` over
    ``probes`` (columns); without ``probes`` the default set of
    :func:`probe_set` needs a :class:`CompositeOperator` to find the basis.
    """
    z = complex(z)
    if z.imag == 0:
        raise ValueError("z must be nonreal")
    Ra, Rb = _as_resolvent(Ha, z), _as_resolvent(Hb, z)
    if mode == "norm":
        return power_norm(lambda v: Ra.solve(v) - Rb.solve(v),
                          lambda v: Ra.solve_adjoint(v) - Rb.solve_adjoint(v),
                          Ra.dim, seed=seed, rtol=1e-12)
    if mode != "strong":
        raise ValueError("mode must be 'norm' or 'strong'")
    if probes is None:
        src = Ha if isinstance(Ha, CompositeOperator) else Hb
        if not isinstance(src, CompositeOperator):
            raise ValueError("strong mode needs probes or a CompositeOperator")
        probes = probe_set(src.fock_basis, seed)
    diff = Ra.solve(probes) - Rb.solve(probes)
    return float(np.max(np.linalg.norm(diff, axis=0) / np.linalg.norm(probes, axis=0)))


@dataclass
class ConvergenceReport:
    """Per-step resolvent distances of a regularized sequence and their verdict."""

    model_kind: str
    z: complex
    lam: float
    s: float
    cutoffs: list
    form_distances: list
    distance_norm: list
    distance_strong: list
    bound_ratios: list
    energies: list
    vacuum_self_energy: list
    target: float
    metric: str
    fitted_C: Optional[float]
    monotone: bool
    final_ok: bool
    rate_ok: bool
    passed: bool
    notes: list = field(default_factory=list)
    sector_strong: list = field(default_factory=list)

    @property
    def distances(self) -> list:
        return self.distance_norm if self.metric == "norm" else self.distance_strong

    def as_dict(self) -> dict:
        steps = []
        for i, lam_i in enumerate(self.cutoffs):
            steps.append({
                "cutoff": lam_i,
                "form_distance": self.form_distances[i],
                "distance_norm": self.distance_norm[i],
                "distance_strong": self.distance_strong[i],
                "bound_ratio": self.bound_ratios[i],
                "omega_e": self.energies[i],
                "vacuum_self_energy": self.vacuum_self_energy[i],
                "strong_by_sector": (self.sector_strong[i]
                                     if i < len(self.sector_strong) else None),
            })
        return {"model_kind": self.model_kind, "z": self.z, "lambda": self.lam,
                "s": self.s, "metric": self.metric, "target": self.target,
                "fitted_C": self.fitted_C, "monotone": self.monotone,
                "final_ok": self.final_ok, "rate_ok": self.rate_ok,
                "pass": self.passed, "steps": steps, "notes": self.notes}

    def csv_rows(self):
        header = ["cutoff", "form_distance", "distance_norm", "distance_strong",
                  "bound_ratio"]
        rows = [[c, d, n, s, r] for c, d, n, s, r in
                zip(self.cutoffs, self.form_distances, self.distance_norm,
                    self.distance_strong, self.bound_ratios)]
        return header, rows


def _non_increasing(values, wobble=WOBBLE) -> bool:
    return all(b <= (1.0 + wobble) * a for a, b in zip(values, values[1:]))


def _build_pair(kind, seq, basis, lam, energy, schedule):
    f = seq.base
    if kind == "gsb":
        limit = build_spin_boson(two_level(energy, f, SIGMA_X), lam, basis, f.model)
        models = [build_spin_boson(two_level(energy, fi, SIGMA_X), lam, basis, f.model,
                                   check_singularity=False)
                  for fi in seq.generated]
        return limit, models, [energy] * len(models)
    if kind == "rwa-plain":
        limit = rwa_matrix(f, energy, lam, basis)
        models = [rwa_matrix(fi, energy, lam, basis) for fi in seq.generated]
        return limit, models, [energy] * len(models)
    if schedule is None:
        raise ScheduleRequired("the renormalized sequence needs bare energies omega_e^i")
    if len(schedule) != len(seq.generated):
        raise ValueError("schedule length differs from the number of cutoffs")
    limit = renormalized_rwa_matrix(f, energy, lam, basis)
    models = [rwa_matrix(fi, e_i, lam, basis) for fi, e_i in zip(seq.generated, schedule)]
    return limit, models, list(schedule)


def run_convergence(seq: RegularizationSequence, model_kind: str, z: complex,
                    lam: float, energy: float, basis: FockBasis,
                    schedule: Optional[Sequence[float]] = None,
                    target: float = 1e-3, metric: Optional[str] = None,
                    seed: int = 0, probes: Optional[np.ndarray] = None,
                    norm_mode: bool = True) -> ConvergenceReport:
    """Tabulate resolvent distances from each ``H_{f^i}`` to the limit model.

    ``energy`` is the bare ``omega_e`` for ``gsb``/``rwa-plain`` and the
    renormalized ``omega~_e`` for ``rwa-renormalized``, whose bare energies
    come from ``schedule``.  The verdict uses ``metric`` (``"norm"`` by
    default, ``"strong"`` for the renormalized kind): distances must be
    non-increasing up to a 5% wobble and end below ``target``.  For the
    ``H_-1`` kinds every step must also satisfy ``distance <= C ||f^i - f||``
    with one constant ``C``, taken as the largest observed ratio, and the
    ratio may not grow along the sequence (the distance is at least
    linear in the form-factor distance).
    """
    if model_kind not in MODEL_KINDS:
        raise ValueError(f"model_kind must be one of {MODEL_KINDS}")
    z = complex(z)
    if metric is None:
        metric = "strong" if model_kind == "rwa-renormalized" else "norm"
    limit, models, energies = _build_pair(model_kind, seq, basis, lam, energy, schedule)
    R_lim = Resolvent(limit, z)
    if probes is None:
        probes = probe_set(basis, seed)
    d_norm, d_strong, ratios, sig, by_sector = [], [], [], [], []
    for fi, H in zip(seq.generated, models):
        Ri = Resolvent(H, z)
        by_sector.append(sector_strong_distances(Ri, R_lim, probes, basis))
        d_strong.append(resolvent_distance(Ri, R_lim, z, "strong", probes=probes))
        d_norm.append(resolvent_distance(Ri, R_lim, z, "norm", seed=seed)
                      if (norm_mode or metric == "norm") else math.nan)
        sig.append(self_energy(fi, z, include_tail=False).value)
    dists = d_norm if metric == "norm" else d_strong
    fd = list(seq.grid_distances)
    for d, g in zip(dists, fd):
        scale = lam ** 2 * g / abs(z.imag)
        ratios.append(d / scale if scale > 0 else (0.0 if d == 0 else math.inf))
    monotone = _non_increasing(dists)
    final_ok = dists[-1] <= target
    fitted_C = None
    rate_ok = True
    notes = []
    if model_kind != "rwa-renormalized":
        lin = [d / g for d, g in zip(dists, fd) if g > 0]
        if lin:
            fitted_C = float(max(lin))
            rate_ok = all(d <= fitted_C * g * (1 + 1e-12) for d, g in zip(dists, fd))
            rate_ok &= _non_increasing(lin)
        notes.append("fitted C is the largest distance / ||f^i - f||_-s ratio")
    else:
        notes.append("strong convergence is proven for this case; norm distances "
                     "are reported without a claim")
        notes.append(f"sector {basis.n_max + 1} is incomplete: only the counterterm "
                     "survives there, so it converges like the tail of ||f||_-1^2")
    passed = bool(monotone and final_ok and rate_ok)
    return ConvergenceReport(model_kind, z, float(lam), seq.s, list(seq.cutoffs), fd,
                             d_norm, d_strong, ratios, energies, sig, float(target),
                             metric, fitted_C, monotone, final_ok, rate_ok, passed, notes,
                             by_sector)


def negative_control(seq: RegularizationSequence, z: complex, lam: float,
                     omega_e: float, basis: FockBasis, growth: float = 10.0,
                     seed: int = 0, target: float = 1e-2) -> CheckReport:
    """Unrenormalized sequence for a form factor outside ``H_-1``.

    Records the vacuum entry ``<Omega, S_{f^i}(z) Omega> = Sigma_{f^i}(z)``
    along the sequence, and compares the models ``H_{f^i}`` at the fixed bare
    energy ``omega_e`` with the renormalized limit at ``omega~_e = omega_e``.
    The control succeeds (``passed``) when the vacuum entry grows by at least
    ``growth`` times and the fixed-energy sequence does not pass the
    convergence verdict, i.e. the plain sequence visibly fails to converge.
    """
    z = complex(z)
    sig = [self_energy(fi, z, include_tail=False).value for fi in seq.generated]
    ratio = abs(sig[-1]) / abs(sig[0]) if abs(sig[0]) > 0 else math.inf
    fixed = run_convergence(seq, "rwa-renormalized", z, lam, omega_e, basis,
                            schedule=[omega_e] * len(seq.generated), target=target,
                            seed=seed, norm_mode=False)
    passed = ratio >= growth and not fixed.passed
    return CheckReport(
        "unrenormalized_negative_control",
        {"z": z, "lambda": lam, "omega_e": omega_e, "cutoffs": list(seq.cutoffs)},
        max_deviation=float(ratio), bound=growth, passed=bool(passed),
        details={"vacuum_self_energy": sig, "growth_ratio": ratio,
                 "fixed_energy_strong_distances": fixed.distance_strong,
                 "fixed_energy_sequence_passed": fixed.passed,
                 "plain_norm_sq": [weighted_norm(fi, 1.0, include_tail=False)
                                   for fi in seq.generated]})
