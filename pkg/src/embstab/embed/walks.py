"""Second-order biased random walks (node2vec)."""

from __future__ import annotations

import numba
import numpy as np

from ..graph import Graph
from .alias import _build, alias_draw
from .types import Node2vecConfig


@numba.njit(cache=True)
def _node_tables(indptr, weights):
    prob = np.ones(len(weights))
    alias = np.zeros(len(weights), dtype=np.int64)
    for u in range(len(indptr) - 1):
        a, b = indptr[u], indptr[u + 1]
        if b > a:
            w = weights[a:b]
            _build(w / w.sum(), prob[a:b], alias[a:b])
    return prob, alias


@numba.njit(cache=True)
def _biased_step(indptr, indices, weights, prev, cur, inv_p, inv_q, u, buf):
    """Exact draw from the node2vec transition out of ``cur`` given ``prev``.

    Neighbor lists are sorted, so adjacency to ``prev`` is found by a merge.
    """
    a, b = indptr[cur], indptr[cur + 1]
    pa, pb = indptr[prev], indptr[prev + 1]
    total = 0.0
    j = pa
    for i in range(a, b):
        x = indices[i]
        w = weights[i]
        if x == prev:
            w *= inv_p
        else:
            while j < pb and indices[j] < x:
                j += 1
            if not (j < pb and indices[j] == x):
                w *= inv_q
        total += w
        buf[i - a] = total
    target = u * total
    lo = 0
    hi = b - a - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if buf[mid] > target:
            hi = mid
        else:
            lo = mid + 1
    return indices[a + lo]


@numba.njit(cache=True)
def _walks(indptr, indices, weights, prob, alias, starts, uniforms, inv_p, inv_q, unbiased):
    n_walks, length = uniforms.shape
    out = np.full((n_walks, length), -1, dtype=np.int32)
    max_deg = 0
    for v in range(len(indptr) - 1):
        max_deg = max(max_deg, indptr[v + 1] - indptr[v])
    buf = np.empty(max(max_deg, 1))
    for w in range(n_walks):
        cur = starts[w]
        out[w, 0] = cur
        prev = -1
        for step in range(1, length):
            a = indptr[cur]
            deg = indptr[cur + 1] - a
            if deg == 0:
                break
            u = uniforms[w, step]
            if prev < 0 or unbiased:
                nxt = indices[a + alias_draw(prob, alias, a, deg, u)]
            else:
                nxt = _biased_step(indptr, indices, weights, prev, cur, inv_p, inv_q, u, buf)
            out[w, step] = nxt
            prev = cur
            cur = nxt
    return out


def transition_probabilities(g: Graph, prev: int, cur: int, p: float, q: float) -> np.ndarray:
    """Normalized node2vec transition weights over ``g.neighbors(cur)``."""
    nbrs = g.neighbors(cur)
    w = g.neighbor_weights(cur).copy()
    prev_nbrs = set(g.neighbors(prev).tolist())
    for i, x in enumerate(nbrs.tolist()):
        if x == prev:
            w[i] /= p
        elif x not in prev_nbrs:
            w[i] /= q
    return w / w.sum()


def random_walks(g: Graph, cfg: Node2vecConfig, seed: int | np.random.Generator) -> np.ndarray:
    """``walks_per_node`` passes, each over a freshly shuffled node order.

    Returns an int32 array of shape (walks_per_node * N, walk_length); walks
    that hit a node without out-edges are padded with -1.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = g.node_count
    prob, alias = _node_tables(g.indptr, g.weights)
    unbiased = cfg.p == 1.0 and cfg.q == 1.0
    passes = []
    for _ in range(cfg.walks_per_node):
        starts = rng.permutation(n).astype(np.int64)
        uniforms = rng.random((n, cfg.walk_length))
        passes.append(_walks(g.indptr, g.indices, g.weights, prob, alias, starts, uniforms,
                             1.0 / cfg.p, 1.0 / cfg.q, unbiased))
    return np.concatenate(passes) if passes else np.empty((0, cfg.walk_length), np.int32)
