"""One-particle layer: momentum grid, dispersion, form factors and weighted norms.

The discretized field lives on a finite set of momenta ``k_j`` with positive
quadrature weights ``mu_j``.  Everything the boson operators see is a grid
sum, so the discrete measure ``sum_j mu_j delta(k - k_j)`` is itself a
legitimate measure space and all operator identities hold for it exactly.

Continuum integrals over the real line are obtained from the same grid sum
plus an analytic tail beyond the grid edge ``K``.  The tail uses a power law
``|f(k)|^2 ~ A |k|^-p`` supplied per form factor and the exact dispersion
law, integrated adaptively on ``[K, inf)``.  When the power law says the
integral diverges the result is ``math.inf``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

__all__ = [
    "InconclusiveConvergence",
    "MisdeclaredFormFactor",
    "Dispersion",
    "klein_gordon",
    "FieldModel",
    "TailDescriptor",
    "FormFactor",
    "flat",
    "wqed",
    "gaussian",
    "zero",
    "tabulated",
    "load_tabulated_csv",
    "inner_product",
    "integrate_kernel",
    "weighted_norm",
    "hnorm",
    "GrowthCertificate",
    "growth_certificate",
    "RegularizationSequence",
    "make_cutoff_sequence",
    "renormalization_schedule",
]

# relative size below which an integrand at the grid edge counts as decayed
EDGE_DECAY_TOL = 1e-14
QUAD_EPSREL = 1e-12


class InconclusiveConvergence(ValueError):
    """Raised when an improper integral cannot be classified.

    The integrand does not vanish at the grid edge and no tail descriptor
    says how it continues, so any finite answer would be a silent truncation.
    """


class MisdeclaredFormFactor(ValueError):
    """The declared scale index of a form factor gives a divergent norm."""


# --------------------------------------------------------------------------- #
#                                 dispersion                                  #
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class Dispersion:
    """Dispersion law ``omega(k)`` with its large-``|k|`` growth exponent.

    ``growth`` is the exponent ``d`` in ``omega(k) ~ |k|^d`` and enters the
    convergence classification of tail integrals.
    """

    name: str
    mass: float
    growth: float
    law: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)

    def __call__(self, k):
        return self.law(np.asarray(k, dtype=float))


def klein_gordon(mass: float = 1.0) -> Dispersion:
    """Relativistic dispersion ``sqrt(k^2 + m^2)``."""
    if mass <= 0:
        raise ValueError("mass gap must be positive")
    m2 = float(mass) ** 2
    return Dispersion("klein_gordon", float(mass), 1.0,
                      lambda k: np.sqrt(k * k + m2))


# --------------------------------------------------------------------------- #
#                                 field model                                 #
# --------------------------------------------------------------------------- #

class FieldModel:
    """Discretized one-particle space ``(X, mu)`` with dispersion ``omega``.

    Parameters
    ----------
    points : array_like
        Strictly increasing momenta ``k_j``.
    weights : array_like
        Positive quadrature weights ``mu_j``.
    dispersion : Dispersion
        Law used for ``omega_j`` and for tail integrals beyond the grid.
    edge : float, optional
        Half-width ``K`` of the interval covered by the grid.  The grid sum
        stands for the integral over ``[-K, K]`` and tails start at ``K``.
        Defaults to the largest ``|k_j|``.
    layout : str
        Free-form tag recording how the grid was generated.
    """

    def __init__(self, points, weights, dispersion: Dispersion,
                 edge: Optional[float] = None, layout: str = "custom",
                 generator: Optional[tuple] = None):
        k = np.array(points, dtype=float)
        mu = np.array(weights, dtype=float)
        if k.ndim != 1 or k.shape != mu.shape or k.size == 0:
            raise ValueError("points and weights must be equal-length 1-D arrays")
        if np.any(np.diff(k) <= 0):
            raise ValueError("points must be strictly increasing")
        if np.any(mu <= 0):
            raise ValueError("weights must be strictly positive")
        omega = np.asarray(dispersion(k), dtype=float)
        if np.any(omega < dispersion.mass * (1 - 1e-15)):
            raise ValueError("dispersion must satisfy omega >= m on the grid")
        for arr in (k, mu, omega):
            arr.setflags(write=False)
        self.points = k
        self.weights = mu
        self.omega = omega
        self.dispersion = dispersion
        self.mass_gap = dispersion.mass
        self.edge = float(np.max(np.abs(k)) if edge is None else edge)
        self.layout = layout
        self.generator = generator

    # constructors ---------------------------------------------------------
    @classmethod
    def uniform(cls, K: float, count: int, dispersion: Optional[Dispersion] = None):
        """Midpoint grid with ``count`` cells on ``[-K, K]``."""
        dispersion = dispersion or klein_gordon()
        h = 2.0 * K / count
        k = -K + h * (np.arange(count) + 0.5)
        return cls(k, np.full(count, h), dispersion, edge=K,
                   layout=f"uniform(K={K!r}, count={count})",
                   generator=("uniform", K, count))

    @classmethod
    def sinh(cls, K: float, count: int, dispersion: Optional[Dispersion] = None,
             scale: float = 1.0):
        """Midpoint grid in ``u`` with ``k = scale * sinh(u)``, covering ``[-K, K]``.

        Cells are fine near ``k = 0`` and grow geometrically, so a handful of
        modes resolves cutoffs spread over several decades.
        """
        dispersion = dispersion or klein_gordon()
        U = math.asinh(K / scale)
        du = 2.0 * U / count
        u = -U + du * (np.arange(count) + 0.5)
        return cls(scale * np.sinh(u), scale * np.cosh(u) * du, dispersion,
                   edge=K, layout=f"sinh(K={K!r}, count={count}, scale={scale!r})",
                   generator=("sinh", K, count, scale))

    def refined(self, factor: int = 2) -> "FieldModel":
        """Same layout with ``factor`` times as many cells."""
        if self.generator is None:
            raise ValueError("only generated layouts can be refined")
        kind, K, count, *rest = self.generator
        if kind == "uniform":
            return FieldModel.uniform(K, factor * count, self.dispersion)
        return FieldModel.sinh(K, factor * count, self.dispersion, *rest)

    # basic accessors ------------------------------------------------------
    @property
    def size(self) -> int:
        return self.points.size

    mode_count = size

    def grid_sum(self, values) -> complex:
        """``sum_j values_j mu_j``."""
        return np.sum(np.asarray(values) * self.weights)

    def describe(self) -> dict:
        return {"layout": self.layout, "modes": self.size, "edge": self.edge,
                "dispersion": self.dispersion.name, "mass": self.mass_gap}

    def __repr__(self):
        return f"FieldModel({self.layout}, {self.dispersion.name}, m={self.mass_gap})"


# --------------------------------------------------------------------------- #
#                                form factors                                 #
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class TailDescriptor:
    """Power-law continuation ``|f(k)|^2 ~ amplitude * |k|^-exponent``.

    The continuation applies for ``|k|`` beyond the grid edge (the matching
    point).  ``amplitude=None`` matches it to the form factor at the edge.
    ``exponent=inf`` marks a super-polynomial decay with negligible tail.
    """

    exponent: float
    amplitude: Optional[float] = None


@dataclass(frozen=True, eq=False)
class FormFactor:
    """Coupling function sampled on a field grid.

    Attributes
    ----------
    amplitudes : ndarray
        Complex values ``f(k_j)``.
    model : FieldModel
        Grid the amplitudes live on.
    declared_s : float
        Smallest scale index the user asserts ``f`` belongs to.  It is
        cross-checked the first time a norm is requested.
    tail : TailDescriptor or None
        Continuation beyond the grid; ``None`` means ``f`` is only known on
        the grid and must vanish at its edge for continuum integrals.
    profile : callable or None
        Closed form of ``f`` when available (used for refinement and for
        matching the tail).
    profile_covers_tail : bool
        Whether ``profile`` is valid beyond the grid edge.  Tabulated
        profiles are not; their tails use the matched power law.
    """

    amplitudes: np.ndarray
    model: FieldModel
    declared_s: float = 0.0
    tail: Optional[TailDescriptor] = None
    profile: Optional[Callable] = field(default=None, repr=False)
    label: str = "custom"
    profile_covers_tail: bool = True
    norm_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=complex)
        if amp.shape != (self.model.size,):
            raise ValueError("amplitudes must match the grid size")
        if not np.all(np.isfinite(amp)):
            raise ValueError("amplitudes must be finite on the grid")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)
        if self.declared_s < 0:
            raise ValueError("declared_s must be nonnegative")

    @property
    def mode_amplitudes(self) -> np.ndarray:
        """``f(k_j) sqrt(mu_j)``, the amplitude carried by mode ``j``."""
        return self.amplitudes * np.sqrt(self.model.weights)

    def is_zero(self) -> bool:
        return not np.any(self.amplitudes)

    def on(self, model: FieldModel) -> "FormFactor":
        """Resample the closed-form profile on another grid."""
        if self.profile is None:
            raise ValueError("form factor has no closed form to resample")
        return FormFactor(self.profile(model.points), model, self.declared_s,
                          self.tail, self.profile, self.label, self.profile_covers_tail)

    def restricted(self, cutoff: float, keep_above: bool = False) -> "FormFactor":
        """``f 1[|k| <= cutoff]`` (or the complement when ``keep_above``)."""
        inside = np.abs(self.model.points) <= cutoff
        mask = ~inside if keep_above else inside
        amp = np.where(mask, self.amplitudes, 0.0)
        prof = None
        if self.profile is not None:
            base = self.profile
            if keep_above:
                prof = lambda k: np.where(np.abs(k) > cutoff, base(k), 0.0)
            else:
                prof = lambda k: np.where(np.abs(k) <= cutoff, base(k), 0.0)
        if keep_above:
            return FormFactor(amp, self.model, self.declared_s, self.tail, prof,
                              f"{self.label}>|{cutoff:g}|", self.profile_covers_tail)
        return FormFactor(amp, self.model, 0.0, None, prof,
                          f"{self.label}<=|{cutoff:g}|")

    def tail_amplitude(self) -> float:
        """Amplitude ``A`` of the power-law tail, summed over both sides / 2."""
        if self.tail is None:
            return 0.0
        if self.tail.amplitude is not None:
            return float(self.tail.amplitude)
        p = self.tail.exponent
        if math.isinf(p):
            return 0.0
        K = self.model.edge
        if self.profile is not None and self.profile_covers_tail:
            vals = np.abs(self.profile(np.array([-K, K]))) ** 2
            return float(np.mean(vals) * K ** p)
        k = self.model.points[[0, -1]]
        vals = np.abs(self.amplitudes[[0, -1]]) ** 2
        return float(np.mean(vals * np.abs(k) ** p))


def _make(model, profile, declared_s, tail, label, covers_tail=True):
    return FormFactor(profile(model.points), model, declared_s, tail, profile, label,
                      covers_tail)


def flat(model: FieldModel, value: complex = 1.0) -> FormFactor:
    """Constant coupling; lies in ``H_-s`` exactly for ``s > 1``."""
    value = complex(value)
    return _make(model, lambda k: np.full(np.shape(k), value, dtype=complex),
                 2.0, TailDescriptor(0.0), "flat")


def wqed(model: FieldModel, x0: float = 0.0, mass: Optional[float] = None,
         strength: float = 1.0) -> FormFactor:
    """Waveguide coupling ``e^{-i k x0} (k^2 + m^2)^{-1/4}``; in ``H_-s`` for ``s > 0``."""
    m = model.mass_gap if mass is None else float(mass)
    return _make(model,
                 lambda k: strength * np.exp(-1j * np.asarray(k) * x0)
                 / (np.asarray(k) ** 2 + m * m) ** 0.25,
                 1.0, TailDescriptor(1.0), "wqed")


def gaussian(model: FieldModel, width: float = 1.0, strength: float = 1.0,
             center: float = 0.0) -> FormFactor:
    """Normalizable Gaussian bump ``strength exp(-(k-center)^2 / (2 width^2))``."""
    return _make(model,
                 lambda k: strength * np.exp(-(np.asarray(k) - center) ** 2
                                             / (2.0 * width ** 2)) + 0j,
                 0.0, TailDescriptor(math.inf), "gaussian")


def zero(model: FieldModel) -> FormFactor:
    return _make(model, lambda k: np.zeros(np.shape(k), dtype=complex), 0.0,
                 TailDescriptor(math.inf), "zero")


def tabulated(model: FieldModel, k, values, declared_s: float = 0.0,
              tail: Optional[TailDescriptor] = None) -> FormFactor:
    """Form factor interpolated linearly from sample pairs onto the grid.

    Outside the sampled range the amplitude is zero.
    """
    k = np.asarray(k, dtype=float)
    values = np.asarray(values, dtype=complex)
    order = np.argsort(k)
    k, values = k[order], values[order]

    def profile(q):
        q = np.asarray(q, dtype=float)
        re = np.interp(q, k, values.real, left=0.0, right=0.0)
        im = np.interp(q, k, values.imag, left=0.0, right=0.0)
        return re + 1j * im

    return _make(model, profile, declared_s, tail, "tabulated", covers_tail=False)


def load_tabulated_csv(path, model: FieldModel, declared_s: float = 0.0,
                       tail: Optional[TailDescriptor] = None) -> FormFactor:
    """Read columns ``k, Re f, Im f`` (header optional) and tabulate."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append([float(x) for x in row[:3]])
            except ValueError:
                if rows:
                    raise
                continue  # header line
    data = np.array(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] != 3:
        raise ValueError(f"{path}: expected three columns k, Re f, Im f")
    return tabulated(model, data[:, 0], data[:, 1] + 1j * data[:, 2],
                     declared_s, tail)


# --------------------------------------------------------------------------- #
#                                 quadrature                                  #
# --------------------------------------------------------------------------- #

def inner_product(f: FormFactor, g: FormFactor) -> complex:
    """``<f, g> = sum_j conj(f_j) g_j mu_j`` (antilinear in the first slot)."""
    if f.model is not g.model:
        raise ValueError("form factors live on different grids")
    return complex(np.sum(np.conj(f.amplitudes) * g.amplitudes * f.model.weights))


def _tail_integral(f: FormFactor, kernel: Callable, kernel_decay: float) -> complex:
    """Both tails ``|k| > K`` of ``|f|^2 kernel(omega)``.

    The descriptor exponent decides convergence.  The integrand uses the
    closed-form profile when there is one and the matched power law
    ``A |k|^-p`` otherwise.
    """
    model = f.model
    p = f.tail.exponent
    A = f.tail_amplitude()
    if A == 0.0 or math.isinf(p):
        return 0.0
    if p + model.dispersion.growth * kernel_decay <= 1.0:
        return math.inf
    K = model.edge
    if f.profile is not None and f.profile_covers_tail and f.tail.amplitude is None:
        prof = f.profile

        def integrand(k):
            dens = 0.5 * (np.abs(prof(k)) ** 2 + np.abs(prof(-k)) ** 2)
            return 2.0 * dens * kernel(model.dispersion(k))
    else:
        def integrand(k):
            return 2.0 * A * k ** (-p) * kernel(model.dispersion(k))

    probe = complex(np.asarray(integrand(K)))
    re, _ = integrate.quad(lambda k: np.real(integrand(k)), K, np.inf,
                           epsabs=0.0, epsrel=QUAD_EPSREL, limit=400)
    im = 0.0
    if probe.imag != 0.0:
        im, _ = integrate.quad(lambda k: np.imag(integrand(k)), K, np.inf,
                               epsabs=0.0, epsrel=QUAD_EPSREL, limit=400)
    return complex(re, im)


def integrate_kernel(f: FormFactor, kernel: Callable, kernel_decay: float,
                     include_tail: bool = True) -> complex:
    """Integral of ``|f(k)|^2 kernel(omega(k))`` over the field momenta.

    Parameters
    ----------
    kernel : callable
        Function of ``omega`` (vectorized).
    kernel_decay : float
        Exponent ``q`` with ``kernel(omega) ~ omega^-q`` for large ``omega``.
    include_tail : bool
        ``False`` returns the grid sum alone, the exact value for the
        discretized measure.  ``True`` adds the continuation beyond the
        grid edge and may return ``inf``.
    """
    model = f.model
    dens = np.abs(f.amplitudes) ** 2
    grid = np.sum(dens * kernel(model.omega) * model.weights)
    if not include_tail:
        return grid
    if f.tail is None:
        peak = dens.max() if dens.size else 0.0
        edge_val = max(dens[0], dens[-1])
        if peak > 0 and edge_val > EDGE_DECAY_TOL * peak:
            raise InconclusiveConvergence(
                f"form factor {f.label!r} does not vanish at the grid edge and "
                "has no tail descriptor")
        return grid
    tail = _tail_integral(f, kernel, kernel_decay)
    if isinstance(tail, float) and math.isinf(tail):
        return math.inf
    return grid + tail


def weighted_norm(f: FormFactor, s: float, include_tail: bool = True) -> float:
    """``int |f|^2 / omega^s dmu``, the squared ``H_-s`` norm; ``inf`` when divergent.

    Computed values are cached on the form factor.  Evaluating the continuum
    value at an index other than ``declared_s`` also verifies the declaration.
    """
    if s < 0:
        raise ValueError("scale index must be nonnegative")
    key = (float(s), bool(include_tail))
    if key in f.norm_cache:
        return f.norm_cache[key]
    val = integrate_kernel(f, lambda w: w ** (-s), s, include_tail)
    if isinstance(val, float) and math.isinf(val):
        out = math.inf
    else:
        out = max(float(np.real(val)), 0.0)
    f.norm_cache[key] = out
    if include_tail and s != f.declared_s:
        _check_declaration(f)
    elif include_tail and math.isinf(out):
        raise MisdeclaredFormFactor(
            f"{f.label!r} declared in H_-{f.declared_s:g} but its norm diverges there")
    return out


def hnorm(f: FormFactor, s: float, include_tail: bool = True) -> float:
    """``||f||_-s``, the square root of :func:`weighted_norm`."""
    return math.sqrt(weighted_norm(f, s, include_tail))


def _check_declaration(f: FormFactor) -> None:
    if weighted_norm(f, f.declared_s, include_tail=True) == math.inf:
        raise MisdeclaredFormFactor(
            f"{f.label!r} declared in H_-{f.declared_s:g} but its norm diverges there")


# --------------------------------------------------------------------------- #
#                             growth certificate                              #
# --------------------------------------------------------------------------- #

@dataclass
class GrowthCertificate:
    """Witness for ``I_n <= C_f / n^(s-r)`` over ``n = 1..n_max``.

    ``feasible`` is ``False`` when no ``r`` in ``[s-1, 1]`` works; that is a
    result, not an error.  ``tail_slope`` is the log-log slope of
    ``I_n n^(s-r)`` over the upper half of the range at the reported ``r``;
    a nonpositive value says the bound is not still growing at the end.
    """

    s: float
    n: np.ndarray
    integrals: np.ndarray
    feasible: bool
    r: Optional[float]
    C_f: Optional[float]
    asymptotic_decay: Optional[float]
    tail_slope: Optional[float]
    max_residual: Optional[float]
    note: str = ""

    def as_dict(self) -> dict:
        return {"s": self.s, "n_max": int(self.n[-1]), "feasible": self.feasible,
                "r": self.r, "C_f": self.C_f,
                "asymptotic_decay": self.asymptotic_decay,
                "tail_slope": self.tail_slope, "max_residual": self.max_residual,
                "note": self.note}


def _asymptotic_decay(f: FormFactor, s: float, include_tail: bool):
    """Exponent ``alpha`` with ``I_n ~ n^-alpha`` and whether a log factor appears."""
    if not include_tail or f.tail is None or math.isinf(f.tail.exponent):
        return float(s), False
    p = f.tail.exponent
    if f.tail_amplitude() == 0.0:
        return float(s), False
    d = f.model.dispersion.growth
    # scaling k ~ n: the tail region contributes n^{(1-p)/d - s}
    alpha_tail = s - (1.0 - p) / d
    if abs(alpha_tail - s) < 1e-12:
        return float(s), True
    return float(min(s, alpha_tail)), False


def _log_slope(n, g):
    upper = n >= max(2, n[-1] // 2)
    if upper.sum() < 2 or np.any(g[upper] <= 0):
        return 0.0
    return float(np.polyfit(np.log(n[upper]), np.log(g[upper]), 1)[0])


def growth_certificate(f: FormFactor, s: float, n_max: int,
                       include_tail: bool = True, r_step: float = 0.01,
                       slope_tol: float = 1e-3) -> GrowthCertificate:
    """Check the growth hypothesis ``int |f|^2/[omega+(n-1)m]^s <= C_f n^(r-s)``.

    The least admissible ``r`` starts from the asymptotic decay implied by the
    tail descriptor (``r >= s - alpha``) and is raised in steps of ``r_step``
    until the scaled sequence ``I_n n^(s-r)`` stops growing over the computed
    range.  ``C_f`` is the maximum of that sequence, so the bound holds at
    every computed ``n`` with zero residual.
    """
    if not 1.0 <= s <= 2.0:
        raise ValueError("growth hypothesis is stated for s in [1, 2]")
    m = f.model.mass_gap
    n = np.arange(1, int(n_max) + 1)
    vals = []
    for j in n:
        v = integrate_kernel(f, lambda w, j=j: (w + (j - 1) * m) ** (-s), s,
                             include_tail)
        vals.append(math.inf if isinstance(v, float) and math.isinf(v)
                    else float(np.real(v)))
    I = np.array(vals)
    if np.all(I == 0):
        return GrowthCertificate(s, n, I, True, s - 1.0, 0.0, math.inf, 0.0, 0.0,
                                 "zero form factor")
    if not np.all(np.isfinite(I)):
        return GrowthCertificate(s, n, I, False, None, None, None, None, None,
                                 "I_1 diverges: f is not in H_-s")
    alpha, log_factor = _asymptotic_decay(f, s, include_tail)
    r_lo = max(s - 1.0, s - alpha)
    if r_lo > 1.0 + 1e-12:
        return GrowthCertificate(s, n, I, False, None, None, alpha, None, None,
                                 f"asymptotic decay n^-{alpha:g} is slower than n^-(s-1)")
    r = min(r_lo, 1.0)
    while True:
        g = I * n ** (s - r)
        slope = _log_slope(n, g)
        if slope <= slope_tol:
            break
        if r >= 1.0:
            return GrowthCertificate(s, n, I, False, None, None, alpha, slope, None,
                                     "scaled integrals still grow at r = 1")
        r = min(1.0, round(r + r_step, 12))
    C = float(g.max())
    resid = float(np.max(I - C * n ** (r - s)))
    note = "logarithmic correction at the asymptotic exponent" if log_factor else ""
    return GrowthCertificate(s, n, I, True, float(r), C, alpha, slope,
                             max(resid, 0.0), note)


# --------------------------------------------------------------------------- #
#                          regularization sequences                           #
# --------------------------------------------------------------------------- #

@dataclass
class RegularizationSequence:
    """Cutoff family ``f^i = f 1[|k| <= Lambda_i]`` with distances to ``f``.

    ``distances`` holds the continuum values ``||f^i - f||_-s`` (grid plus
    tail) and ``grid_distances`` the same norms for the discrete measure.
    """

    base: FormFactor
    cutoffs: list
    generated: list
    s: float
    distances: list
    grid_distances: list
    energies: Optional[list] = None


def make_cutoff_sequence(f: FormFactor, cutoffs: Sequence[float],
                         s: Optional[float] = None) -> RegularizationSequence:
    """Build ``f^i`` for increasing cutoffs; a cutoff past the grid edge gives ``f``."""
    cutoffs = [float(c) for c in cutoffs]
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ValueError("cutoffs must be strictly increasing")
    s = f.declared_s if s is None else float(s)
    gen, dist, gdist = [], [], []
    for lam in cutoffs:
        if lam >= f.model.edge:
            gen.append(f)
            dist.append(0.0)
            gdist.append(0.0)
            continue
        gen.append(f.restricted(lam))
        rest = f.restricted(lam, keep_above=True)
        dist.append(hnorm(rest, s, include_tail=True))
        gdist.append(hnorm(rest, s, include_tail=False))
    return RegularizationSequence(f, cutoffs, gen, s, dist, gdist)


def renormalization_schedule(seq: RegularizationSequence, omega_e_tilde: float,
                             coupling: float = 1.0,
                             include_tail: bool = False) -> list:
    """Bare excitation energies ``omega_e^i = omega~_e + lambda^2 ||f^i||_-1^2``.

    The renormalized dressing subtracts ``||f||_-1^2`` inside its integrand,
    so ``G~`` at ``omega~_e`` coincides with ``G`` at the bare energy above.
    For ``f`` outside ``H_-1`` the bare energies grow without bound along the
    sequence.  ``include_tail=False`` uses the discrete-measure norms, which
    is what the truncated Hamiltonians see.
    """
    energies = []
    for fi in seq.generated:
        n1 = weighted_norm(fi, 1.0, include_tail=include_tail)
        energies.append(omega_e_tilde + coupling ** 2 * n1)
    seq.energies = energies
    return energies
