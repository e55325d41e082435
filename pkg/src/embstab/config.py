"""Experiment configuration (YAML, versioned) and the run manifest."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from . import __version__
from .embed.types import ALGORITHMS, make_config
from .errors import ConfigurationError
from .geometry import MEASURES

SCHEMA_VERSION = 1
SIZE_SWEEP = tuple(1000 * 2 ** k for k in range(7))
DENSITY_SWEEP = (0.00025, 0.0005, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1)
MODELS = ("watts_strogatz", "barabasi_albert")


@dataclass
class GeneratorSpec:
    model: str = "watts_strogatz"
    sweep: str = "none"                 # none | size | density
    n: int = 1000
    density: float = 0.01
    sizes: list[int] = field(default_factory=lambda: list(SIZE_SWEEP))
    densities: list[float] = field(default_factory=lambda: list(DENSITY_SWEEP))
    sweep_n: int = 8000
    sweep_density: float = 0.01
    rewire_p: float = 0.1
    seed: int = 0

    def points(self) -> list[tuple[int, float]]:
        if self.sweep == "size":
            return [(n, self.sweep_density) for n in self.sizes]
        if self.sweep == "density":
            return [(self.sweep_n, d) for d in self.densities]
        return [(self.n, self.density)]


@dataclass
class GraphSpec:
    edge_list: str | None = None
    directed: bool = False
    weighted: bool = False
    generator: GeneratorSpec | None = None


@dataclass
class DownstreamSpec:
    labels: str | None = None
    multi_label: bool = False
    split_fraction: float = 0.75
    sample_count: int = 5
    reps: int = 10
    folds: int = 10
    cv_reps: int = 10
    classifier: dict = field(default_factory=dict)
    dump_predictions: bool = False


@dataclass
class ExperimentConfig:
    graph: GraphSpec
    algorithms: list[str] = field(default_factory=lambda: ["node2vec"])
    hyperparameters: dict = field(default_factory=dict)
    dim: int = 128
    runs: int = 30
    base_seed: int = 0
    measures: list[str] = field(default_factory=lambda: list(MEASURES))
    k: int = 20
    center: bool = False
    angle_pairs: int = 1000
    downstream: DownstreamSpec = field(default_factory=DownstreamSpec)
    output: str = "out"
    workers: int = 1
    timeout: float | None = None
    schema_version: int = SCHEMA_VERSION

    def validate(self, check_paths: bool = True) -> None:
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigurationError(f"unsupported schema_version {self.schema_version}")
        if self.runs < 2:
            raise ConfigurationError("runs must be >= 2")
        if self.dim <= 0:
            raise ConfigurationError("dim must be positive")
        if self.k < 1:
            raise ConfigurationError("k must be >= 1")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        for m in self.measures:
            if m not in MEASURES:
                raise ConfigurationError(f"unknown measure {m!r}")
        for a in self.algorithms:
            make_config(a, self.hyperparameters.get(a))
        g = self.graph
        if (g.edge_list is None) == (g.generator is None):
            raise ConfigurationError("graph needs exactly one of 'edge_list' or 'generator'")
        if g.generator is not None:
            if g.generator.model not in MODELS:
                raise ConfigurationError(f"unknown generator model {g.generator.model!r}")
            if g.generator.sweep not in ("none", "size", "density"):
                raise ConfigurationError(f"unknown sweep {g.generator.sweep!r}")
        if check_paths:
            if g.edge_list is not None and not Path(g.edge_list).is_file():
                raise ConfigurationError(f"edge list not found: {g.edge_list}")
            lab = self.downstream.labels
            if lab is not None and not Path(lab).is_file():
                raise ConfigurationError(f"labels file not found: {lab}")

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path | None = None) -> ExperimentConfig:
        raw = dict(raw or {})
        unknown = set(raw) - set(cls.__dataclass_fields__) - {"algorithm"}
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        if "algorithm" in raw:
            raw.setdefault("algorithms", [raw.pop("algorithm")])
        if isinstance(raw.get("algorithms"), str):
            raw["algorithms"] = [raw["algorithms"]]
        graph_raw = dict(raw.pop("graph", None) or {})
        gen = graph_raw.pop("generator", None)
        try:
            graph = GraphSpec(**graph_raw,
                              generator=GeneratorSpec(**gen) if gen is not None else None)
            down = DownstreamSpec(**(raw.pop("downstream", None) or {}))
            cfg = cls(graph=graph, downstream=down, **raw)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None
        if base_dir is not None:
            def resolve(p):
                return p if p is None or os.path.isabs(p) else str(base_dir / p)
            cfg.graph.edge_list = resolve(cfg.graph.edge_list)
            cfg.downstream.labels = resolve(cfg.downstream.labels)
        return cfg

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        path = Path(path)
        try:
            raw = yaml.safe_load(path.read_text(encoding="utf-8"))
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(raw, base_dir=path.parent)


@dataclass
class RunManifest:
    config: dict
    config_digest: str
    version: str = __version__
    graphs: dict = field(default_factory=dict)
    runs: dict = field(default_factory=dict)
    stages: dict = field(default_factory=dict)

    @classmethod
    def open(cls, out_dir: Path, cfg: ExperimentConfig) -> RunManifest:
        path = Path(out_dir) / "manifest.json"
        if path.is_file():
            data = json.loads(path.read_text())
            if data.get("config_digest") == cfg.digest():
                return cls(**data)
        return cls(config=cfg.to_dict(), config_digest=cfg.digest())

    def save(self, out_dir: Path) -> None:
        write_json_atomic(Path(out_dir) / "manifest.json", asdict(self))


def write_json_atomic(path: Path, payload) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)


__all__ = ["ALGORITHMS", "DENSITY_SWEEP", "DownstreamSpec", "ExperimentConfig", "GeneratorSpec",
           "GraphSpec", "RunManifest", "SIZE_SWEEP", "write_json_atomic"]
