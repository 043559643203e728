"""Truncated symmetric Fock space over the discretized field modes.

Basis vectors are occupation vectors ``(n_1, ..., n_G)`` with total particle
number at most ``n_max``.  They are ordered sector by sector (total number
``n = 0, 1, ...``) and, inside a sector, in decreasing lexicographic order,
so the one-particle state of mode ``j`` sits at index ``1 + j`` and the
vacuum at index 0.  Ranking uses the combinatorial number system and needs
no lookup table.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .field_model import FieldModel
from .reports import CheckReport

__all__ = [
    "BasisTooLarge",
    "FockBasis",
    "FockVector",
    "BlockOperator",
    "build_basis",
    "sector_dimension",
    "dgamma",
    "number_operator",
    "energies",
    "scale_norm",
    "numb_inequality_check",
    "random_vector",
]

DEFAULT_MAX_DIM = 2_000_000


class BasisTooLarge(ValueError):
    pass


def sector_dimension(G: int, n: int) -> int:
    """Number of ways to put ``n`` bosons in ``G`` modes."""
    return comb(G + n - 1, n)


def _sector_states(G: int, n: int) -> np.ndarray:
    """All occupation vectors with total ``n``, decreasing lexicographic order."""
    out = np.zeros((sector_dimension(G, n), G), dtype=np.int64)
    row = 0

    def fill(pos, remaining, prefix):
        nonlocal row
        if pos == G - 1:
            out[row, :pos] = prefix
            out[row, pos] = remaining
            row += 1
            return
        for a in range(remaining, -1, -1):
            prefix.append(a)
            fill(pos + 1, remaining - a, prefix)
            prefix.pop()

    fill(0, n, [])
    return out


class FockBasis:
    """Occupation-number basis of the truncated Fock space.

    Attributes
    ----------
    mode_count : int
        Number of field modes ``G``.
    n_max : int
        Largest total particle number kept.
    states : ndarray, shape (dim, G)
        Occupation vectors in canonical order.
    sector_offsets : ndarray, shape (n_max + 2,)
        Sector ``n`` occupies ``states[sector_offsets[n]:sector_offsets[n+1]]``.
    """

    def __init__(self, G: int, n_max: int, max_dim: int = DEFAULT_MAX_DIM):
        if G < 1 or n_max < 0:
            raise ValueError("need G >= 1 and n_max >= 0")
        sizes = [sector_dimension(G, n) for n in range(n_max + 1)]
        dim = sum(sizes)
        if dim > max_dim:
            raise BasisTooLarge(f"dimension {dim} exceeds limit {max_dim}")
        self.mode_count = int(G)
        self.n_max = int(n_max)
        self.sector_offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self.states = np.vstack([_sector_states(G, n) for n in range(n_max + 1)])
        self.states.setflags(write=False)
        self.particle_numbers = self.states.sum(axis=1)
        self.particle_numbers.setflags(write=False)
        # binom[a, b] = C(a, b) for the ranking formula; it only ever asks
        # for a - b < n_max, so the rest stays zero and nothing overflows
        top = G + n_max + 1
        self._binom = np.array([[comb(a, b) if 0 <= a - b <= n_max else 0
                                 for b in range(G + 1)]
                                for a in range(top)], dtype=np.int64)

    @property
    def dim(self) -> int:
        return int(self.sector_offsets[-1])

    def __len__(self):
        return self.dim

    def sector_slice(self, n: int) -> slice:
        if not 0 <= n <= self.n_max:
            raise IndexError(f"sector {n} outside 0..{self.n_max}")
        return slice(int(self.sector_offsets[n]), int(self.sector_offsets[n + 1]))

    def sector_mask(self, sectors) -> np.ndarray:
        return np.isin(self.particle_numbers, list(sectors))

    def rank(self, occupations) -> np.ndarray:
        """Indices of occupation vectors (rows); inverse of :meth:`unrank`."""
        occ = np.atleast_2d(np.asarray(occupations, dtype=np.int64))
        if occ.shape[1] != self.mode_count:
            raise ValueError("occupation vectors have the wrong length")
        if np.any(occ < 0):
            raise ValueError("negative occupation")
        total = occ.sum(axis=1)
        if np.any(total > self.n_max):
            raise ValueError("occupation vector outside the truncation")
        G = self.mode_count
        idx = self.sector_offsets[total].copy()
        remaining = total.copy()
        for i in range(G - 1):
            # states earlier in the sector put more bosons in mode i
            idx += self._binom[remaining - occ[:, i] + G - i - 2, G - i - 1]
            remaining -= occ[:, i]
        return idx

    def unrank(self, index) -> np.ndarray:
        return self.states[index]

    def index_of(self, occupation) -> int:
        return int(self.rank([occupation])[0])

    def table(self) -> dict:
        """Dimension and sector layout, for JSON dumps."""
        return {
            "modes": self.mode_count,
            "n_max": self.n_max,
            "dimension": self.dim,
            "order": "sector-major, decreasing lexicographic within a sector",
            "sectors": [{"n": n, "offset": int(self.sector_offsets[n]),
                         "size": int(self.sector_offsets[n + 1] - self.sector_offsets[n])}
                        for n in range(self.n_max + 1)],
        }

    def lowering(self, j: int) -> sp.csr_matrix:
        """Mode lowering operator ``b_j`` (sqrt(n_j) |n - e_j>)."""
        rows_from = np.nonzero(self.states[:, j] > 0)[0]
        target = np.array(self.states[rows_from])
        target[:, j] -= 1
        cols = rows_from
        rows = self.rank(target) if rows_from.size else rows_from
        vals = np.sqrt(self.states[rows_from, j].astype(float))
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim))

    def __repr__(self):
        return f"FockBasis(G={self.mode_count}, n_max={self.n_max}, dim={self.dim})"


def build_basis(G: int, n_max: int, max_dim: int = DEFAULT_MAX_DIM) -> FockBasis:
    return FockBasis(G, n_max, max_dim)


@dataclass
class FockVector:
    """Coefficient vector over a :class:`FockBasis`."""

    basis: FockBasis
    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=complex)
        if self.coefficients.shape != (self.basis.dim,):
            raise ValueError("coefficient vector does not match the basis")

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def sector(self, n: int) -> np.ndarray:
        return self.coefficients[self.basis.sector_slice(n)]

    @classmethod
    def vacuum(cls, basis: FockBasis) -> "FockVector":
        c = np.zeros(basis.dim, dtype=complex)
        c[0] = 1.0
        return cls(basis, c)


class BlockOperator:
    """Sparse operator between two Fock bases."""

    def __init__(self, entries, domain_basis: FockBasis,
                 codomain_basis: Optional[FockBasis] = None,
                 hermitian_flag: bool = False):
        self.entries = sp.csr_matrix(entries, dtype=complex)
        self.domain_basis = domain_basis
        self.codomain_basis = codomain_basis or domain_basis
        self.hermitian_flag = bool(hermitian_flag)
        if self.entries.shape != (self.codomain_basis.dim, self.domain_basis.dim):
            raise ValueError("operator shape does not match the bases")

    @property
    def shape(self):
        return self.entries.shape

    def __matmul__(self, other):
        if isinstance(other, FockVector):
            return FockVector(self.codomain_basis, self.entries @ other.coefficients)
        if isinstance(other, BlockOperator):
            return BlockOperator(self.entries @ other.entries, other.domain_basis,
                                 self.codomain_basis)
        return self.entries @ other

    def adjoint(self) -> "BlockOperator":
        return BlockOperator(self.entries.conj().T.tocsr(), self.codomain_basis,
                             self.domain_basis, self.hermitian_flag)

    def toarray(self) -> np.ndarray:
        return self.entries.toarray()

    def hermiticity_defect(self) -> float:
        d = (self.entries - self.entries.conj().T).tocoo()
        return float(np.max(np.abs(d.data))) if d.nnz else 0.0


def energies(model: FieldModel, basis: FockBasis) -> np.ndarray:
    """Diagonal of ``dGamma(omega)``: ``sum_j n_j omega_j`` per basis state."""
    if model.size != basis.mode_count:
        raise ValueError("field grid and basis disagree on the number of modes")
    return basis.states @ model.omega


def dgamma(model: FieldModel, basis: FockBasis) -> BlockOperator:
    """Second quantization of the dispersion, diagonal in occupation numbers."""
    return BlockOperator(sp.diags(energies(model, basis).astype(complex)), basis,
                         hermitian_flag=True)


def number_operator(basis: FockBasis) -> BlockOperator:
    return BlockOperator(sp.diags(basis.particle_numbers.astype(complex)), basis,
                         hermitian_flag=True)


def scale_norm(psi: FockVector, s: float, model: FieldModel) -> float:
    """``||(dGamma + 1)^(s/2) psi||`` evaluated eigenvalue by eigenvalue."""
    w = (energies(model, psi.basis) + 1.0) ** (s / 2.0)
    return float(np.linalg.norm(w * psi.coefficients))


def numb_inequality_check(psi: FockVector, s: float, model: FieldModel,
                          slack: float = 1e-12) -> CheckReport:
    """Compare ``||dGamma^(s/2) psi||`` with ``m^(s/2) ||N^(s/2) psi||``."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    E = energies(model, psi.basis)
    N = psi.basis.particle_numbers.astype(float)
    lhs = float(np.linalg.norm(E ** (s / 2.0) * psi.coefficients))
    rhs = float(model.mass_gap ** (s / 2.0)
                * np.linalg.norm(N ** (s / 2.0) * psi.coefficients))
    margin = lhs - rhs
    return CheckReport("number_operator_inequality", {"s": s},
                       max_deviation=max(0.0, -margin), bound=slack * max(1.0, rhs),
                       passed=margin >= -slack * max(1.0, rhs),
                       details={"lhs": lhs, "rhs": rhs, "margin": margin})


def random_vector(basis: FockBasis, rng: np.random.Generator,
                  sectors=None) -> FockVector:
    """Complex Gaussian vector, optionally supported on selected sectors."""
    c = rng.standard_normal(basis.dim) + 1j * rng.standard_normal(basis.dim)
    if sectors is not None:
        c[~basis.sector_mask(sectors)] = 0.0
    nrm = np.linalg.norm(c)
    return FockVector(basis, c / nrm if nrm else c)
