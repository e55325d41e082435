from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ConfigurationError

ALGORITHMS = ("hope", "node2vec", "line")


@dataclass(frozen=True)
class HopeConfig:
    beta_factor: float = 0.5
    neumann_tol: float = 1e-9
    neumann_max_terms: int = 500
    oversample: int = 10
    power_iters: int = 40

    def __post_init__(self):
        if not 0.0 < self.beta_factor < 1.0:
            raise ConfigurationError(f"beta_factor must lie in (0, 1), got {self.beta_factor}")


@dataclass(frozen=True)
class Node2vecConfig:
    p: float = 1.0
    q: float = 1.0
    walks_per_node: int = 10
    walk_length: int = 80
    window: int = 10
    negatives: int = 5
    epochs: int = 1
    initial_lr: float = 0.025
    noise_exponent: float = 0.75

    def __post_init__(self):
        for name in ("p", "q", "walks_per_node", "walk_length", "window", "negatives",
                     "epochs", "initial_lr"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"node2vec {name} must be positive")
        if self.window > self.walk_length:
            raise ConfigurationError("window must not exceed walk_length")


@dataclass(frozen=True)
class LineConfig:
    order: str = "both"
    samples_per_edge: int = 100
    negatives: int = 5
    initial_lr: float = 0.025
    noise_exponent: float = 0.75
    densify: bool = False

    def __post_init__(self):
        if self.order not in ("first", "second", "both"):
            raise ConfigurationError(f"unknown LINE order {self.order!r}")
        if self.densify:
            raise ConfigurationError(
                "LINE graph densification is not implemented; its parameters are unspecified")


CONFIG_TYPES = {"hope": HopeConfig, "node2vec": Node2vecConfig, "line": LineConfig}


def make_config(algorithm: str, params: dict | None = None):
    if algorithm not in CONFIG_TYPES:
        raise ConfigurationError(
            f"unknown algorithm {algorithm!r}; native algorithms are {', '.join(ALGORITHMS)}. "
            "Externally computed embeddings (e.g. SDNE, GraphSAGE) are compared with "
            "`embstab compare --external-dir`.")
    try:
        return CONFIG_TYPES[algorithm](**(params or {}))
    except TypeError as exc:
        raise ConfigurationError(f"{algorithm}: {exc}") from None


def config_digest(algorithm: str, dim: int, cfg) -> str:
    payload = {"algorithm": algorithm, "dim": dim, "config": asdict(cfg) if cfg else None}
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class Embedding:
    matrix: np.ndarray
    algorithm: str = "external"
    seed: int | None = None
    config_digest: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[1] == 0:
            raise ValueError(f"embedding matrix must be N x d with d > 0, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("embedding contains non-finite values")

    @property
    def node_count(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class EmbeddingSet:
    runs: tuple[Embedding, ...]
    graph_digest: str = ""

    def __post_init__(self):
        if not self.runs:
            raise ValueError("empty embedding set")
        first = self.runs[0]
        for e in self.runs[1:]:
            if e.matrix.shape != first.matrix.shape:
                raise ValueError(f"run shapes differ: {first.matrix.shape} vs {e.matrix.shape}")
            if (e.algorithm, e.config_digest) != (first.algorithm, first.config_digest):
                raise ValueError("runs mix algorithms or configurations")
        seeds = [e.seed for e in self.runs if e.seed is not None]
        if len(set(seeds)) != len(seeds):
            raise ValueError("run seeds must be pairwise distinct")

    def __len__(self) -> int:
        return len(self.runs)

    @property
    def matrices(self) -> list[np.ndarray]:
        return [e.matrix for e in self.runs]
