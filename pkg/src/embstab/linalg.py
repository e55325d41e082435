"""Dense kernels: randomized truncated SVD, orthogonal Procrustes, row scaling."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LinearOperator:
    """Square operator given by its action on blocks of column vectors.

    ``apply`` and ``apply_transpose`` must accept an (n, k) array and
    return an (n, k) array.
    """
    dimension: int
    apply: Callable[[np.ndarray], np.ndarray]
    apply_transpose: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def from_matrix(cls, a) -> LinearOperator:
        n, m = a.shape
        if n != m:
            raise ValueError(f"operator must be square, got {a.shape}")
        return cls(n, lambda x: a @ x, lambda x: a.T @ x)

    def check_linearity(self, seed: int = 0, tol: float = 1e-8) -> bool:
        rng = np.random.default_rng(seed)
        x, y = rng.standard_normal((2, self.dimension, 1))
        lhs = self.apply(2.0 * x + y)
        rhs = 2.0 * self.apply(x) + self.apply(y)
        scale = max(np.linalg.norm(rhs), 1.0)
        return bool(np.linalg.norm(lhs - rhs) <= tol * scale)


@dataclass(frozen=True)
class SvdFactors:
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.T


def _orthonormalize(y: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(y)
    return q


def randomized_svd(op: LinearOperator, rank: int, oversample: int = 10,
                   power_iters: int = 16, seed: int | np.random.Generator = 0) -> SvdFactors:
    """Truncated SVD by a Gaussian range finder with power iterations.

    The sketch width ``rank + oversample`` is clamped to the operator
    dimension.  Every power step re-orthonormalizes both the forward and
    the transposed products.
    """
    n = op.dimension
    if not 1 <= rank <= n:
        raise ValueError(f"rank must lie in [1, {n}], got {rank}")
    width = rank + oversample
    if width > n:
        log.warning("sketch width %d exceeds dimension %d; clamped", width, n)
        width = n
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    omega = rng.standard_normal((n, width))
    q = _orthonormalize(op.apply(omega))
    for _ in range(power_iters):
        z = _orthonormalize(op.apply_transpose(q))
        q = _orthonormalize(op.apply(z))
    # B = Q^T A, formed as (A^T Q)^T
    b = op.apply_transpose(q).T
    ub, s, vt = np.linalg.svd(b, full_matrices=False)
    u = q @ ub[:, :rank]
    return SvdFactors(U=u, sigma=s[:rank].copy(), V=vt[:rank].T.copy())


def row_normalize(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scale rows to unit length.  Returns the matrix and a zero-row mask."""
    z = np.asarray(z, dtype=np.float64)
    norms = np.linalg.norm(z, axis=1)
    zero = norms == 0
    out = z / np.where(zero, 1.0, norms)[:, None]
    return out, zero


@dataclass(frozen=True)
class ProcrustesResult:
    Q: np.ndarray
    degenerate: bool


def procrustes_align(z_l: np.ndarray, z_m: np.ndarray, rtol: float = 1e-10) -> ProcrustesResult:
    """Orthogonal Q minimizing ||z_l Q - z_m||_F.

    ``degenerate`` is set when the d x d cross-product is rank deficient,
    in which case Q is one of several minimizers.
    """
    z_l = np.asarray(z_l, dtype=np.float64)
    z_m = np.asarray(z_m, dtype=np.float64)
    if z_l.shape != z_m.shape or z_l.ndim != 2:
        raise ValueError(f"shape mismatch: {z_l.shape} vs {z_m.shape}")
    u, s, vt = np.linalg.svd(z_l.T @ z_m)
    degenerate = bool(s[-1] <= rtol * max(s[0], 1e-300)) if len(s) else True
    return ProcrustesResult(u @ vt, degenerate)
