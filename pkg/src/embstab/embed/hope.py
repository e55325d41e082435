"""HOPE: factorization of the Katz proximity matrix."""

from __future__ import annotations

import numpy as np

from ..errors import ConvergenceError
from ..graph import Graph
from ..linalg import LinearOperator, randomized_svd
from .types import Embedding, HopeConfig, config_digest


def spectral_radius(g: Graph, tol: float = 1e-6, max_iter: int = 5000) -> float:
    """Upper Collatz-Wielandt bound on the Perron root of the adjacency.

    Iterates the shifted matrix A + I from the all-ones vector; the shift
    keeps every entry positive, so the ratio bounds are always defined.
    """
    a = g.to_scipy()
    n = g.node_count
    if len(g.weights) == 0:
        return 0.0
    x = np.ones(n)
    upper = np.inf
    for _ in range(max_iter):
        y = a @ x + x
        ratio = y / x
        lo, upper = ratio.min(), ratio.max()
        if upper - lo <= tol * upper:
            break
        x = y / np.linalg.norm(y)
    if not np.isfinite(upper):
        raise ConvergenceError("spectral radius estimate failed")
    return float(upper - 1.0)


def katz_operator(g: Graph, beta: float, tol: float = 1e-9, max_terms: int = 500) -> LinearOperator:
    """S = sum_{t>=1} beta^t A^t applied through a truncated Neumann series."""
    a = g.to_scipy()
    at = a.T.tocsr()

    def series(mat, x):
        term = beta * (mat @ x)
        acc = term.copy()
        for _ in range(max_terms - 1):
            tn = np.linalg.norm(term)
            if tn == 0.0 or tn < tol * np.linalg.norm(acc):
                return acc
            term = beta * (mat @ term)
            acc += term
        if np.linalg.norm(term) >= tol * np.linalg.norm(acc):
            raise ConvergenceError(
                f"Katz series did not converge within {max_terms} terms (beta={beta:.6g})")
        return acc

    return LinearOperator(g.node_count, lambda x: series(a, x), lambda x: series(at, x))


def hope_embed(g: Graph, d: int, cfg: HopeConfig | None = None, seed: int = 0,
               return_factors: bool = False):
    cfg = cfg or HopeConfig()
    if d % 2:
        raise ValueError(f"HOPE needs an even dimension, got {d}")
    n = g.node_count
    if n == 0:
        raise ValueError("empty graph")
    rank = d // 2
    if rank > n:
        raise ValueError(f"rank d/2={rank} exceeds node count {n}")
    lam = spectral_radius(g)
    beta = cfg.beta_factor / lam if lam > 0 else 0.0
    op = katz_operator(g, beta, cfg.neumann_tol, cfg.neumann_max_terms)
    f = randomized_svd(op, rank, cfg.oversample, cfg.power_iters, seed=seed)
    root = np.sqrt(f.sigma)
    matrix = np.hstack([f.U * root, f.V * root])
    emb = Embedding(matrix, "hope", seed, config_digest("hope", d, cfg),
                    meta={"beta": beta, "spectral_radius": lam})
    return (emb, f) if return_factors else emb
