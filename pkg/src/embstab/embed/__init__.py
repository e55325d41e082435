from __future__ import annotations

from ..graph import Graph
from .hope import hope_embed
from .io import (load_embedding, load_embedding_binary, read_embedding_file, save_embedding,
                 save_embedding_binary, write_embedding_file)
from .line import line_embed
from .node2vec import node2vec_embed
from .sgns import sgns_train
from .types import (ALGORITHMS, Embedding, EmbeddingSet, HopeConfig, LineConfig,
                    Node2vecConfig, config_digest, make_config)
from .walks import random_walks

_EMBEDDERS = {"hope": hope_embed, "node2vec": node2vec_embed, "line": line_embed}


def embed(algorithm: str, g: Graph, d: int, cfg=None, seed: int = 0) -> Embedding:
    if cfg is None or isinstance(cfg, dict):
        cfg = make_config(algorithm, cfg)
    return _EMBEDDERS[algorithm](g, d, cfg, seed)


__all__ = [
    "ALGORITHMS", "Embedding", "EmbeddingSet", "HopeConfig", "LineConfig", "Node2vecConfig",
    "config_digest", "embed", "hope_embed", "line_embed", "load_embedding",
    "load_embedding_binary", "make_config", "node2vec_embed", "random_walks",
    "read_embedding_file", "save_embedding", "save_embedding_binary", "sgns_train",
    "write_embedding_file",
]
