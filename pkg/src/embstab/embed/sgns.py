"""Skip-gram with negative sampling over (center, context) node pairs.

The numba kernels are pure arithmetic: every random quantity (initial
vectors, negative draws) is drawn beforehand from numpy generators so a run
is fully determined by its seed.  Updates are applied by a single writer in
pair order.
"""

from __future__ import annotations

import math
from typing import Iterable

import numba
import numpy as np

from .alias import AliasTable

LOSS_BUCKETS = 100


@numba.njit(cache=True, inline="always")
def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@numba.njit(cache=True, inline="always")
def _log_sigmoid(x):
    if x >= 0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


@numba.njit(cache=True, nogil=True, fastmath=True)
def pair_update(w_in, w_out, shared, center, targets, labels, lr, grad, h):
    """One SGD step for a center against positive/negative targets.

    Negatives equal to the positive target are skipped, as are targets equal
    to ``center`` when both tables are the same array (``shared``).  Returns
    the pair loss before the step.
    """
    d = w_in.shape[1]
    for j in range(d):
        grad[j] = 0.0
        h[j] = w_in[center, j]
    loss = 0.0
    for k in range(len(targets)):
        t = targets[k]
        if k > 0 and (t == targets[0] or (shared and t == center)):
            continue
        row = w_out[t]
        dot = 0.0
        for j in range(d):
            dot += h[j] * row[j]
        if labels[k] > 0:
            loss -= _log_sigmoid(dot)
        else:
            loss -= _log_sigmoid(-dot)
        g = (labels[k] - _sigmoid(dot)) * lr
        for j in range(d):
            grad[j] += g * row[j]
        for j in range(d):
            row[j] += g * h[j]
    for j in range(d):
        w_in[center, j] += grad[j]
    return loss


@numba.njit(cache=True, nogil=True)
def _train_chunk(w_in, w_out, shared, centers, contexts, negs, start, total, lr0, loss_sum, loss_cnt):
    d = w_in.shape[1]
    n_neg = negs.shape[1]
    grad = np.empty(d)
    h = np.empty(d)
    targets = np.empty(n_neg + 1, dtype=np.int64)
    labels = np.zeros(n_neg + 1)
    labels[0] = 1.0
    min_lr = lr0 * 1e-4
    n_buckets = len(loss_sum)
    for i in range(len(centers)):
        pos = start + i
        lr = lr0 * (1.0 - pos / total)
        if lr < min_lr:
            lr = min_lr
        targets[0] = contexts[i]
        for k in range(n_neg):
            targets[k + 1] = negs[i, k]
        loss = pair_update(w_in, w_out, shared, centers[i], targets, labels, lr, grad, h)
        b = pos * n_buckets // total
        if b >= n_buckets:
            b = n_buckets - 1
        loss_sum[b] += loss
        loss_cnt[b] += 1


def pair_loss(h: np.ndarray, targets: np.ndarray, labels: np.ndarray) -> float:
    """Negative-sampling loss of one center vector against target rows."""
    signs = np.where(labels > 0, 1.0, -1.0)
    return float(np.sum(np.logaddexp(0.0, -signs * (targets @ h))))


def init_vectors(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    return (rng.random((n, d)) - 0.5) / d


class SgnsTrainer:
    """Holds the two tables and the negative sampler for one training run.

    ``shared=True`` ties the context table to the input table (LINE
    first-order proximity).
    """

    def __init__(self, n: int, d: int, negatives: int, noise_weights, noise_exponent: float,
                 initial_lr: float, total_pairs: int, init_rng: np.random.Generator,
                 neg_rng: np.random.Generator, shared: bool = False):
        noise = np.asarray(noise_weights, dtype=np.float64)
        if len(noise) != n:
            raise ValueError("noise weights must have one entry per node")
        self.w_in = init_vectors(n, d, init_rng)
        self.shared = shared
        self.w_out = self.w_in if shared else np.zeros((n, d))
        self.negatives = negatives
        self.noise = AliasTable(noise ** noise_exponent)
        self.initial_lr = initial_lr
        self.total = max(int(total_pairs), 1)
        self.neg_rng = neg_rng
        self.done = 0
        self.loss_sum = np.zeros(LOSS_BUCKETS)
        self.loss_cnt = np.zeros(LOSS_BUCKETS, dtype=np.int64)

    def train(self, centers: np.ndarray, contexts: np.ndarray) -> None:
        centers = np.ascontiguousarray(centers, dtype=np.int64)
        contexts = np.ascontiguousarray(contexts, dtype=np.int64)
        if len(centers) == 0:
            return
        negs = self.noise.sample(self.neg_rng, (len(centers), self.negatives))
        _train_chunk(self.w_in, self.w_out, self.shared, centers, contexts, negs.astype(np.int64),
                     self.done, self.total, self.initial_lr, self.loss_sum, self.loss_cnt)
        self.done += len(centers)

    def loss_trace(self) -> np.ndarray:
        """Mean pair loss per 1% slice of the schedule (NaN where empty)."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.loss_sum / self.loss_cnt


def sgns_train(pairs: Iterable[tuple[np.ndarray, np.ndarray]] | np.ndarray, n: int, d: int,
               negatives: int, noise_weights, seed: int, initial_lr: float = 0.025,
               noise_exponent: float = 0.75, total_pairs: int | None = None,
               shared: bool = False) -> tuple[np.ndarray, np.ndarray, SgnsTrainer]:
    """Train input/context tables on a pair stream.

    ``pairs`` is either an (M, 2) array or an iterable of (centers,
    contexts) chunks; with chunks, ``total_pairs`` fixes the learning-rate
    schedule.
    """
    init_ss, neg_ss = np.random.SeedSequence(seed).spawn(2)
    if isinstance(pairs, np.ndarray):
        arr = pairs.reshape(-1, 2)
        chunks = [(arr[:, 0], arr[:, 1])]
        total_pairs = len(arr) if total_pairs is None else total_pairs
    else:
        chunks = pairs
        if total_pairs is None:
            raise ValueError("total_pairs is required for chunked pair streams")
    trainer = SgnsTrainer(n, d, negatives, noise_weights, noise_exponent, initial_lr,
                          total_pairs, np.random.default_rng(init_ss),
                          np.random.default_rng(neg_ss), shared=shared)
    for centers, contexts in chunks:
        trainer.train(centers, contexts)
    return trainer.w_in, trainer.w_out, trainer
