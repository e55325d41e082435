from __future__ import annotations

import numpy as np

from ..graph import Graph
from .sgns import SgnsTrainer
from .types import Embedding, Node2vecConfig, config_digest
from .walks import random_walks

CHUNK_WALKS = 512


def window_pairs(walks: np.ndarray, spans: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    """(center, context) pairs in center-major order, contexts left to right.

    ``spans`` holds the per-token window size drawn from [1, window].
    """
    n_walks, length = walks.shape
    offsets = np.concatenate([np.arange(-window, 0), np.arange(1, window + 1)])
    pos = np.arange(length)[:, None] + offsets[None, :]            # (L, 2w)
    inside = (pos >= 0) & (pos < length)
    pos_c = np.clip(pos, 0, length - 1)
    ctx = walks[:, pos_c]                                           # (W, L, 2w)
    valid = (inside[None] & (ctx >= 0) & (walks[:, :, None] >= 0)
             & (np.abs(offsets)[None, None, :] <= spans[:, :, None]))
    centers = np.broadcast_to(walks[:, :, None], ctx.shape)
    return centers[valid].astype(np.int64), ctx[valid].astype(np.int64)


def count_window_pairs(walks: np.ndarray, spans: np.ndarray) -> int:
    lengths = (walks >= 0).sum(axis=1)
    i = np.arange(walks.shape[1])[None, :]
    left = np.minimum(spans, i)
    right = np.minimum(spans, np.maximum(lengths[:, None] - 1 - i, 0))
    return int(((left + right) * (i < lengths[:, None])).sum())


def node2vec_embed(g: Graph, d: int, cfg: Node2vecConfig | None = None, seed: int = 0,
                   return_trainer: bool = False):
    cfg = cfg or Node2vecConfig()
    walk_ss, window_ss, init_ss, neg_ss = np.random.SeedSequence(seed).spawn(4)
    walks = random_walks(g, cfg, np.random.default_rng(walk_ss))
    counts = np.bincount(walks[walks >= 0], minlength=g.node_count).astype(np.float64)
    if counts.sum() == 0:
        counts[:] = 1.0
    window_rng = np.random.default_rng(window_ss)
    spans = [window_rng.integers(1, cfg.window + 1, size=walks.shape, dtype=np.int16)
             for _ in range(cfg.epochs)]
    total = sum(count_window_pairs(walks, s) for s in spans)
    trainer = SgnsTrainer(g.node_count, d, cfg.negatives, counts, cfg.noise_exponent,
                          cfg.initial_lr, total, np.random.default_rng(init_ss),
                          np.random.default_rng(neg_ss))
    for epoch_spans in spans:
        for start in range(0, len(walks), CHUNK_WALKS):
            sl = slice(start, start + CHUNK_WALKS)
            centers, contexts = window_pairs(walks[sl], epoch_spans[sl], cfg.window)
            trainer.train(centers, contexts)
    emb = Embedding(trainer.w_in.copy(), "node2vec", seed, config_digest("node2vec", d, cfg))
    return (emb, trainer) if return_trainer else emb
