"""Command line: generate -> embed -> compare -> downstream -> report.

Every stage reads and writes files under the output directory, so external
embeddings can enter at ``compare`` and long sweeps can be resumed.

Output layout::

    <out>/manifest.json
    <out>/graphs/<graph_id>.edges, <graph_id>.json
    <out>/runs/<graph_id>/<algorithm>/<algorithm>_<seed>.emb
    <out>/runs/<graph_id>/<algorithm>/nodes.csv, summary.json
    <out>/runs/<graph_id>/<algorithm>/downstream.json, f1.csv
    <out>/report.csv, report_nodes.csv
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor, TimeoutError as FutureTimeout
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, RunManifest, write_json_atomic
from .downstream import (ClassifierParams, cross_validate, make_split, micro_f1,
                         stability_experiment)
from .embed import embed, make_config, read_embedding_file, write_embedding_file
from .embed.types import Embedding, config_digest
from .errors import ConfigurationError, EmbstabError
from .geometry import MEASURES, aggregate, angle_deviation, compare_runs
from .graph import (Graph, coreness, degree_centrality, generate_barabasi_albert,
                    generate_watts_strogatz, load_edge_list, load_labels, pagerank,
                    sample_node_pairs, write_edge_list)

log = logging.getLogger("embstab")

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2
SUMMARY_SCHEMA = "embstab.summary/1"
NODE_COLUMNS = ["node_id", "pagerank", "degree", "coreness", "mean_aligned_cos",
                "mean_knn_jaccard", "mean_second_order_cos"]
EMB_NAME = re.compile(r"^(?P<algo>[a-z0-9]+)_(?P<seed>-?\d+)\.emb$")


class PartialFailure(EmbstabError):
    pass


# --------------------------------------------------------------- graphs

def graph_id(model: str, n: int, density: float) -> str:
    return f"{model}_n{n}_d{density:g}"


def _write_text_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _store_graph(out: Path, gid: str, g: Graph) -> dict:
    buf = io.StringIO()
    write_edge_list(g, buf, weighted=True)
    _write_text_atomic(out / "graphs" / f"{gid}.edges", buf.getvalue())
    meta = {
        "graph_id": gid,
        "node_count": g.node_count,
        "edge_count": g.edge_count,
        "directed": g.directed,
        "density": g.density,
        "digest": g.digest(),
        "params": {k: v for k, v in g.meta.items()},
    }
    if g.node_names is not None:
        meta["node_names"] = list(g.node_names)
    write_json_atomic(out / "graphs" / f"{gid}.json", meta)
    return {k: v for k, v in meta.items() if k != "node_names"}


def read_graph(out: Path, gid: str) -> Graph:
    meta = json.loads((out / "graphs" / f"{gid}.json").read_text())
    rows = np.loadtxt(out / "graphs" / f"{gid}.edges", comments="#", ndmin=2)
    edges = rows[:, :2].astype(np.int64) if len(rows) else np.empty((0, 2), np.int64)
    weights = rows[:, 2] if len(rows) else None
    g = Graph.from_edges(meta["node_count"], edges, weights, directed=meta["directed"],
                         node_names=meta.get("node_names"), meta=meta["params"])
    if g.digest() != meta["digest"]:
        raise EmbstabError(f"graph file {gid} does not match its recorded digest")
    return g


def graph_ids(cfg: ExperimentConfig) -> list[str]:
    gen = cfg.graph.generator
    if gen is None:
        return [Path(cfg.graph.edge_list).stem]
    return [graph_id(gen.model, n, d) for n, d in gen.points()]


def cmd_generate(cfg: ExperimentConfig, out: Path, manifest: RunManifest) -> int:
    failures = 0
    gen = cfg.graph.generator
    if gen is None:
        with open(cfg.graph.edge_list, encoding="utf-8") as fh:
            g = load_edge_list(fh, cfg.graph.directed, cfg.graph.weighted)
        gid = graph_ids(cfg)[0]
        manifest.graphs[gid] = _store_graph(out, gid, g)
        log.info("stored %s: N=%d |E|=%d", gid, g.node_count, g.edge_count)
        return EXIT_OK
    for n, density in gen.points():
        gid = graph_id(gen.model, n, density)
        try:
            if gen.model == "watts_strogatz":
                g = generate_watts_strogatz(n, density, gen.rewire_p, gen.seed)
            else:
                g = generate_barabasi_albert(n, density, gen.seed)
        except ConfigurationError as exc:
            log.error("%s: %s", gid, exc)
            manifest.graphs[gid] = {"graph_id": gid, "error": str(exc)}
            failures += 1
            continue
        manifest.graphs[gid] = _store_graph(out, gid, g)
        log.info("generated %s: |E|=%d realized density %.6g", gid, g.edge_count, g.density)
    return EXIT_PARTIAL if failures else EXIT_OK


def _available_graphs(cfg, out, manifest) -> list[str]:
    ids = graph_ids(cfg)
    if any(not (out / "graphs" / f"{gid}.json").is_file() for gid in ids):
        cmd_generate(cfg, out, manifest)
    return [gid for gid in ids if (out / "graphs" / f"{gid}.json").is_file()]


# ------------------------------------------------------------ embeddings

def run_seeds(cfg: ExperimentConfig) -> list[int]:
    return [cfg.base_seed + i for i in range(cfg.runs)]


def cmd_embed(cfg: ExperimentConfig, out: Path, manifest: RunManifest) -> int:
    failures = 0
    for gid in _available_graphs(cfg, out, manifest):
        g = read_graph(out, gid)
        for algo in cfg.algorithms:
            params = make_config(algo, cfg.hyperparameters.get(algo))
            run_dir = out / "runs" / gid / algo
            run_dir.mkdir(parents=True, exist_ok=True)
            seeds = run_seeds(cfg)

            def job(seed, algo=algo, params=params, run_dir=run_dir):
                e = embed(algo, g, cfg.dim, params, seed)
                write_embedding_file(e, run_dir / f"{algo}_{seed}.emb")
                return e

            status = {}
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                futures = {s: pool.submit(job, s) for s in seeds}
                for s, fut in futures.items():
                    try:
                        fut.result(timeout=cfg.timeout)
                        status[str(s)] = "ok"
                    except FutureTimeout:
                        status[str(s)] = "timeout"
                        failures += 1
                    except Exception as exc:  # recorded, remaining runs proceed
                        log.error("%s/%s seed %d failed: %s", gid, algo, s, exc)
                        status[str(s)] = f"error: {exc}"
                        failures += 1
            manifest.runs[f"{gid}/{algo}"] = {
                "algorithm": algo,
                "config_digest": config_digest(algo, cfg.dim, params),
                "graph_digest": g.digest(),
                "seeds": seeds,
                "status": status,
            }
            log.info("%s/%s: %d runs", gid, algo, len(seeds) - sum(v != "ok" for v in status.values()))
    return EXIT_PARTIAL if failures else EXIT_OK


def load_run_dir(run_dir: Path, expected_n: int | None = None) -> list[Embedding]:
    files = sorted(p for p in run_dir.iterdir() if p.is_file() and p.suffix in (".emb", ".bin"))
    embs = []
    for p in files:
        m = EMB_NAME.match(p.name)
        algo, seed = (m["algo"], int(m["seed"])) if m else ("external", None)
        embs.append(read_embedding_file(p, expected_n, algo, seed))
    if m_sort := [e for e in embs if e.seed is not None]:
        if len(m_sort) == len(embs):
            embs.sort(key=lambda e: e.seed)
    shapes = {e.matrix.shape for e in embs}
    if len(shapes) > 1:
        offenders = [f"{p.name}: {e.matrix.shape}" for p, e in zip(files, embs)]
        raise ConfigurationError("embedding shapes differ: " + "; ".join(offenders))
    return embs


# --------------------------------------------------------------- compare

def compare_directory(run_dir: Path, g: Graph | None, cfg: ExperimentConfig, dest: Path,
                      label: str) -> dict:
    embs = load_run_dir(run_dir, g.node_count if g is not None else None)
    if len(embs) < 2:
        raise ConfigurationError(f"{run_dir}: need at least 2 embedding files, found {len(embs)}")
    mats = [e.matrix for e in embs]
    n = mats[0].shape[0]
    scores = compare_runs(mats, k=min(cfg.k, n - 1), measures=cfg.measures, center=cfg.center,
                          workers=cfg.workers)
    pr = pagerank(g) if g is not None else None
    reports = {m: aggregate(v, pr) for m, v in scores.items()}
    summary = {
        "schema": SUMMARY_SCHEMA,
        "label": label,
        "algorithm": embs[0].algorithm,
        "run_count": len(embs),
        "pair_count": len(next(iter(scores.values()))),
        "seeds": [e.seed for e in embs],
        "node_count": n,
        "dim": mats[0].shape[1],
        "k": cfg.k,
        "center": cfg.center,
        "graph_digest": g.digest() if g is not None else None,
        "measures": {m: r.summary() for m, r in reports.items()},
        "metadata": {
            "knn": "exact cosine, ties to lower node id",
            "second_order_union_order": "ascending node id",
            "moving_average_window": "max(20, ceil(0.01 N))",
            "pair_sampling": "uniform rejection over unordered pairs, BFS depth cap 3",
        },
    }
    columns = {"node_id": np.arange(n)}
    if g is not None:
        columns["pagerank"] = pr.values
        columns["degree"] = degree_centrality(g).values
        columns["coreness"] = coreness(g).values
        pairs = sample_node_pairs(g, cfg.angle_pairs, cfg.base_seed)
        dev = angle_deviation(mats, pairs)
        summary["angle_deviation"] = {
            s.category: {"mean_mad_degrees": dev.category_mean[s.category],
                         "pairs": len(s.pairs), "skipped": dev.skipped[s.category],
                         "complete": s.complete}
            for s in pairs
        }
    for m in MEASURES:
        if m in reports:
            columns[f"mean_{m}"] = reports[m].node_mean
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(NODE_COLUMNS)
    for i in range(n):
        row = [i]
        for col in NODE_COLUMNS[1:]:
            v = columns.get(col)
            row.append("" if v is None or np.isnan(v[i]) else repr(float(v[i])))
        writer.writerow(row)
    _write_text_atomic(dest / "nodes.csv", buf.getvalue())
    write_json_atomic(dest / "summary.json", summary)
    return summary


def cmd_compare(cfg: ExperimentConfig, out: Path, manifest: RunManifest,
                external_dir: Path | None = None) -> int:
    failures = 0
    if external_dir is not None:
        gids = graph_ids(cfg) if cfg.graph.generator or cfg.graph.edge_list else []
        gid = gids[0] if gids else "external"
        g = read_graph(out, gid) if gids and (out / "graphs" / f"{gid}.json").is_file() else None
        dest = out / "runs" / gid / Path(external_dir).name
        summary = compare_directory(Path(external_dir), g, cfg, dest, str(external_dir))
        log.info("compared %d external runs (%d pairs)", summary["run_count"], summary["pair_count"])
        return EXIT_OK
    for gid in graph_ids(cfg):
        for algo in cfg.algorithms:
            run_dir = out / "runs" / gid / algo
            if not run_dir.is_dir():
                log.error("missing embeddings for %s/%s; run `embed` first", gid, algo)
                failures += 1
                continue
            g = read_graph(out, gid)
            summary = compare_directory(run_dir, g, cfg, run_dir, f"{gid}/{algo}")
            log.info("%s/%s: %s", gid, algo, {m: round(v["grand_mean"], 4)
                                             for m, v in summary["measures"].items()})
    return EXIT_PARTIAL if failures else EXIT_OK


# ------------------------------------------------------------ downstream

def cmd_downstream(cfg: ExperimentConfig, out: Path, manifest: RunManifest) -> int:
    spec = cfg.downstream
    if spec.labels is None:
        raise ConfigurationError("downstream.labels is required for the downstream stage")
    params = ClassifierParams(**spec.classifier)
    failures = 0
    for gid in graph_ids(cfg):
        g = read_graph(out, gid)
        with open(spec.labels, encoding="utf-8") as fh:
            labels = load_labels(fh, spec.multi_label, graph=g)
        split = make_split(labels, spec.split_fraction, cfg.base_seed)
        for algo in cfg.algorithms:
            run_dir = out / "runs" / gid / algo
            if not run_dir.is_dir():
                log.error("missing embeddings for %s/%s", gid, algo)
                failures += 1
                continue
            embs = load_run_dir(run_dir, g.node_count)
            report = stability_experiment(embs, labels, split, min(spec.sample_count, len(embs)),
                                          spec.reps, cfg.base_seed, params)
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["run_id", "seed", "repetition", "fold", "micro_f1"])
            cv_means = []
            for run_id, e in enumerate(embs):
                scores = cross_validate(e, labels, spec.folds, spec.cv_reps, cfg.base_seed, params)
                cv_means.append(float(np.mean(scores)))
                for j, s in enumerate(scores):
                    w.writerow([run_id, e.seed, j // spec.folds, j % spec.folds, repr(s)])
            _write_text_atomic(run_dir / "f1.csv", buf.getvalue())
            payload = report.to_dict()
            payload.update({
                "schema": "embstab.downstream/1",
                "split": {"seed": split.seed, "fraction": split.fraction,
                          "stratified": split.stratified, "train": len(split.train_idx),
                          "test": len(split.test_idx)},
                "cross_validation": {"folds": spec.folds, "repetitions": spec.cv_reps,
                                     "per_embedding_mean": cv_means,
                                     "mean": float(np.mean(cv_means)),
                                     "stdev_across_embeddings": float(np.std(cv_means))},
                "classifier": {"family": "logistic_regression", **vars(params)},
            })
            write_json_atomic(run_dir / "downstream.json", payload)
            if spec.dump_predictions:
                _dump_predictions(run_dir, embs, labels, split, payload, params)
            log.info("%s/%s: stable core (i) %.3f, (ii) %.3f", gid, algo,
                     report.mode_i_mean, report.mode_ii)
    return EXIT_PARTIAL if failures else EXIT_OK


def _dump_predictions(run_dir, embs, labels, split, payload, params) -> None:
    from .downstream import predict, train_classifier
    seed = payload["mode_ii"]["classifier_seed"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node_id", "run_id", "prediction"])
    for run_id, e in enumerate(embs):
        run = predict(train_classifier(e, labels, split, seed, params), e, split.test_idx)
        for node, p in zip(run.test_idx.tolist(), run.predictions):
            value = " ".join(map(str, np.flatnonzero(p))) if np.ndim(p) else str(int(p))
            w.writerow([node, run_id, value])
    _write_text_atomic(run_dir / "predictions.csv", buf.getvalue())


# ----------------------------------------------------------------- report

def cmd_report(out: Path) -> int:
    summaries = sorted((out / "runs").glob("*/*/summary.json")) if (out / "runs").is_dir() else []
    if not summaries:
        raise ConfigurationError(f"no compare outputs under {out / 'runs'}; nothing to report")
    rows, node_rows = [], []
    for path in summaries:
        gid, algo = path.parent.parent.name, path.parent.name
        gmeta_path = out / "graphs" / f"{gid}.json"
        params = json.loads(gmeta_path.read_text()).get("params", {}) if gmeta_path.is_file() else {}
        base = {"graph_id": gid, "model": params.get("model", ""), "n": params.get("n", ""),
                "target_density": params.get("target_density", ""), "algorithm": algo}
        s = json.loads(path.read_text())
        for m, v in s["measures"].items():
            rows.append({**base, "measure": m, "value": v["grand_mean"],
                         "pair_count": s["pair_count"]})
        for cat, v in s.get("angle_deviation", {}).items():
            rows.append({**base, "measure": f"angle_mad_{cat}", "value": v["mean_mad_degrees"],
                         "pair_count": s["pair_count"]})
        down = path.parent / "downstream.json"
        if down.is_file():
            d = json.loads(down.read_text())
            rows.append({**base, "measure": "stable_core_mode_i", "value": d["mode_i"]["mean"],
                         "pair_count": ""})
            rows.append({**base, "measure": "stable_core_mode_ii",
                         "value": d["mode_ii"]["stable_core"], "pair_count": ""})
            rows.append({**base, "measure": "micro_f1_cv_mean",
                         "value": d["cross_validation"]["mean"], "pair_count": ""})
        with open(path.parent / "nodes.csv", encoding="utf-8") as fh:
            for rec in csv.DictReader(fh):
                for m in MEASURES:
                    val = rec.get(f"mean_{m}", "")
                    if val != "":
                        node_rows.append({**base, "node_id": rec["node_id"],
                                          "pagerank": rec["pagerank"], "measure": m,
                                          "value": val})
    _write_csv(out / "report.csv", rows,
               ["graph_id", "model", "n", "target_density", "algorithm", "measure", "value",
                "pair_count"])
    _write_csv(out / "report_nodes.csv", node_rows,
               ["graph_id", "model", "n", "target_density", "algorithm", "node_id", "pagerank",
                "measure", "value"])
    log.info("wrote %d summary rows, %d node rows", len(rows), len(node_rows))
    return EXIT_OK


def _write_csv(path: Path, rows: list[dict], columns: list[str]) -> None:
    buf = io.StringIO()
    w = csv.DictWriter(buf, columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    _write_text_atomic(path, buf.getvalue())


# ------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embstab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", type=Path, help="experiment config (YAML)")
    parser.add_argument("--seed", type=int, help="override base_seed")
    parser.add_argument("--workers", type=int, help="override worker count")
    parser.add_argument("--out", type=Path, help="override output directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", help="write graph files (one per sweep point)")
    sub.add_parser("embed", help="compute R seeded embeddings per graph and algorithm")
    cmp = sub.add_parser("compare", help="geometric stability over all run pairs")
    cmp.add_argument("--external-dir", type=Path,
                     help="compare embedding files from this directory instead")
    sub.add_parser("downstream", help="stable core and cross-validated micro-F1")
    sub.add_parser("report", help="consolidate outputs into long-format CSV")
    return parser


def _load_config(args) -> ExperimentConfig:
    if args.config is None:
        raise ConfigurationError("--config is required for this command")
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.base_seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.out is not None:
        cfg.output = str(args.out)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            out = args.out
            if out is None:
                out = Path(_load_config(args).output)
            return cmd_report(Path(out))
        cfg = _load_config(args)
        out = Path(cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        manifest = RunManifest.open(out, cfg)
        started = time.perf_counter()
        if args.command == "generate":
            code = cmd_generate(cfg, out, manifest)
        elif args.command == "embed":
            code = cmd_embed(cfg, out, manifest)
        elif args.command == "compare":
            code = cmd_compare(cfg, out, manifest, args.external_dir)
        else:
            code = cmd_downstream(cfg, out, manifest)
        manifest.stages[args.command] = {
            "wall_clock_seconds": round(time.perf_counter() - started, 3),
            "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
            "exit_code": code,
        }
        manifest.save(out)
        return code
    except ConfigurationError as exc:
        log.error("%s", exc)
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmbstabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
