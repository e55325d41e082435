"""LINE: first- and second-order proximity embeddings from sampled edges."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError
from ..graph import Graph
from ..linalg import row_normalize
from .alias import AliasTable
from .sgns import SgnsTrainer
from .types import Embedding, LineConfig, config_digest

CHUNK = 1 << 18


def _train_order(g: Graph, dim: int, cfg: LineConfig, shared: bool, ss: np.random.SeedSequence):
    edge_ss, init_ss, neg_ss = ss.spawn(3)
    n = g.node_count
    src = np.repeat(np.arange(n), g.degrees())
    dst = g.indices
    total = cfg.samples_per_edge * g.edge_count
    out_w = np.bincount(src, weights=g.weights, minlength=n)
    trainer = SgnsTrainer(n, dim, cfg.negatives, out_w if out_w.sum() > 0 else np.ones(n),
                          cfg.noise_exponent, cfg.initial_lr, total,
                          np.random.default_rng(init_ss), np.random.default_rng(neg_ss),
                          shared=shared)
    if total == 0:
        return trainer
    arcs = AliasTable(g.weights)
    edge_rng = np.random.default_rng(edge_ss)
    for start in range(0, total, CHUNK):
        k = arcs.sample(edge_rng, min(CHUNK, total - start))
        trainer.train(src[k], dst[k])
    return trainer


def line_embed(g: Graph, d: int, cfg: LineConfig | None = None, seed: int = 0,
               return_trainers: bool = False):
    cfg = cfg or LineConfig()
    if cfg.order == "both" and d % 2:
        raise ConfigurationError(f"LINE with order=both needs an even dimension, got {d}")
    first_ss, second_ss = np.random.SeedSequence(seed).spawn(2)
    orders = {"first": [True], "second": [False], "both": [True, False]}[cfg.order]
    dim = d // len(orders)
    halves, trainers = [], []
    for shared in orders:
        tr = _train_order(g, dim, cfg, shared, first_ss if shared else second_ss)
        halves.append(row_normalize(tr.w_in)[0])
        trainers.append(tr)
    emb = Embedding(np.hstack(halves), "line", seed, config_digest("line", d, cfg))
    return (emb, trainers) if return_trainers else emb
