"""Walker/Vose alias tables for O(1) draws from discrete distributions."""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def _build(probs, prob_out, alias_out):
    n = len(probs)
    scaled = probs * n
    small = np.empty(n, dtype=np.int64)
    large = np.empty(n, dtype=np.int64)
    ns = 0
    nl = 0
    for i in range(n):
        if scaled[i] < 1.0:
            small[ns] = i
            ns += 1
        else:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        s = small[ns]
        nl -= 1
        g = large[nl]
        prob_out[s] = scaled[s]
        alias_out[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        if scaled[g] < 1.0:
            small[ns] = g
            ns += 1
        else:
            large[nl] = g
            nl += 1
    # leftovers are 1 up to rounding
    for i in range(nl):
        prob_out[large[i]] = 1.0
        alias_out[large[i]] = large[i]
    for i in range(ns):
        prob_out[small[i]] = 1.0
        alias_out[small[i]] = small[i]


def build_alias(weights) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or len(w) == 0:
        raise ValueError("weights must be a non-empty vector")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    total = w.sum()
    if total <= 0:
        raise ValueError("weights must not all be zero")
    prob = np.empty(len(w))
    alias = np.empty(len(w), dtype=np.int64)
    _build(w / total, prob, alias)
    return prob, alias


@numba.njit(cache=True, inline="always")
def alias_draw(prob, alias, offset, size, u):
    """Draw using a single uniform ``u`` in [0, 1) from a table slice."""
    x = u * size
    i = int(x)
    if i >= size:
        i = size - 1
    if x - i < prob[offset + i]:
        return i
    return alias[offset + i]


class AliasTable:
    def __init__(self, weights):
        self.prob, self.alias = build_alias(weights)

    def __len__(self) -> int:
        return len(self.prob)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        idx = rng.integers(0, len(self.prob), size=size)
        coin = rng.random(size=size)
        return np.where(coin < self.prob[idx], idx, self.alias[idx])

    def probabilities(self) -> np.ndarray:
        """Distribution encoded by the table (for checks)."""
        n = len(self.prob)
        out = self.prob / n
        np.add.at(out, self.alias, (1.0 - self.prob) / n)
        return out
