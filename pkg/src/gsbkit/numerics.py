"""Small linear-algebra helpers shared by the checks."""
from __future__ import annotations

from typing import Callable

import numpy as np

__all__ = ["power_norm", "dense_norm", "relative_error"]


def power_norm(matvec: Callable, rmatvec: Callable, dim: int,
               seed: int = 0, rtol: float = 1e-13, maxiter: int = 20000) -> float:
    """Largest singular value of a linear map by power iteration on ``M^* M``.

    ``matvec`` applies ``M`` and ``rmatvec`` applies ``M^*``.  The iteration
    starts from a seeded complex Gaussian vector and stops when the Rayleigh
    estimate changes by less than ``rtol`` relative.  The estimate is always
    a lower bound of the true norm.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(maxiter):
        w = matvec(v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        u = rmatvec(w)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return float(nw)
        new = np.sqrt(nu)  # ||M^* M v|| -> sigma_max^2 at convergence
        v = u / nu
        if abs(new - est) <= rtol * new:
            est = new
            break
        est = new
    return float(max(est, np.linalg.norm(matvec(v))))


def dense_norm(M) -> float:
    """Spectral norm by dense SVD (oracle for small matrices)."""
    M = M.toarray() if hasattr(M, "toarray") else np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def relative_error(x, ref) -> float:
    x = np.asarray(x)
    ref = np.asarray(ref)
    scale = np.linalg.norm(ref)
    diff = np.linalg.norm(x - ref)
    return float(diff / scale) if scale else float(diff)
