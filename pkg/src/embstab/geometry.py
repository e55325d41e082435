"""Geometric stability measures between pairs of embeddings.

All three node-wise measures are angle based: aligned cosine similarity
(after orthogonal Procrustes alignment), k-NN Jaccard overlap and the
second-order cosine similarity over the union of both k-NN sets.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .graph import CentralityScores, NodePairSample
from .linalg import procrustes_align, row_normalize

MEASURES = ("aligned_cos", "knn_jaccard", "second_order_cos")
BLOCK_ROWS = 1024


def _matrix(e) -> np.ndarray:
    return np.asarray(getattr(e, "matrix", e), dtype=np.float64)


@dataclass(frozen=True)
class KnnTable:
    k: int
    neighbors: np.ndarray          # (N, min(k, N-1)) int64
    zero_rows: np.ndarray          # bool mask of excluded nodes


@dataclass(frozen=True)
class PairwiseNodeScores:
    measure: str
    run_pair: tuple[int, int]
    values: np.ndarray
    valid: np.ndarray              # False where the score is undefined/flagged

    @property
    def flagged(self) -> int:
        return int((~self.valid).sum())


@numba.njit(cache=True, nogil=True)
def _topk_block(sims, row_offset, k, out):
    """Top-k column ids per row; ties go to the lower id.

    Columns are scanned in ascending id order, so an equal value never
    displaces an entry already held.
    """
    n_rows, n_cols = sims.shape
    vals = np.empty(k)
    ids = np.empty(k, dtype=np.int64)
    for r in range(n_rows):
        self_id = row_offset + r
        filled = 0
        for c in range(n_cols):
            if c == self_id:
                continue
            v = sims[r, c]
            if filled == k and not v > vals[k - 1]:
                continue
            pos = filled if filled < k else k - 1
            while pos > 0 and v > vals[pos - 1]:
                if pos < k:
                    vals[pos] = vals[pos - 1]
                    ids[pos] = ids[pos - 1]
                pos -= 1
            vals[pos] = v
            ids[pos] = c
            if filled < k:
                filled += 1
        for j in range(k):
            out[r, j] = ids[j]


def knn(e, k: int, block_rows: int = BLOCK_ROWS) -> KnnTable:
    """Exact cosine k-NN of every node, self excluded.

    Zero rows are never returned as neighbors (their similarity is set to
    -inf) and are flagged in ``zero_rows``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    z, zero = row_normalize(_matrix(e))
    n = len(z)
    if zero.all():
        raise ValueError("all-zero embedding has no cosine neighbors")
    kk = min(k, n - 1)
    out = np.empty((n, kk), dtype=np.int64)
    zt = np.ascontiguousarray(z.T)
    for start in range(0, n, block_rows):
        stop = min(start + block_rows, n)
        sims = z[start:stop] @ zt
        if zero.any():
            sims[:, zero] = -np.inf
        _topk_block(sims, start, kk, out[start:stop])
    return KnnTable(k, out, zero)


def brute_force_knn(e, k: int) -> np.ndarray:
    """Reference full scan: sort every candidate by (-cosine, id)."""
    z = _matrix(e)
    n = len(z)
    out = []
    for i in range(n):
        cand = []
        for j in range(n):
            if j == i:
                continue
            denom = math.sqrt(float(z[i] @ z[i])) * math.sqrt(float(z[j] @ z[j]))
            s = float(z[i] @ z[j]) / denom if denom > 0 else -math.inf
            cand.append((-s, j))
        cand.sort()
        out.append([j for _, j in cand[:min(k, n - 1)]])
    return np.array(out, dtype=np.int64)


def _check_pair(zl: np.ndarray, zm: np.ndarray) -> None:
    if zl.shape != zm.shape:
        raise ValueError(f"shape mismatch: {zl.shape} vs {zm.shape}")


def aligned_cosine_similarity(z_l, z_m, center: bool = False,
                              run_pair: tuple[int, int] = (0, 1)) -> PairwiseNodeScores:
    zl, zm = _matrix(z_l), _matrix(z_m)
    _check_pair(zl, zm)
    if center:
        zl = zl - zl.mean(axis=0)
        zm = zm - zm.mean(axis=0)
    nl, zero_l = row_normalize(zl)
    nm, zero_m = row_normalize(zm)
    q = procrustes_align(nl, nm).Q
    scores = np.einsum("ij,ij->i", nl @ q, nm)
    valid = ~(zero_l | zero_m)
    scores = np.where(valid, np.clip(scores, -1.0, 1.0), 0.0)
    return PairwiseNodeScores("aligned_cos", run_pair, scores, valid)


def _tables(z_l, z_m, k, tables):
    if tables is not None:
        return tables
    return knn(z_l, k), knn(z_m, k)


def knn_jaccard(z_l, z_m, k: int = 20, tables: tuple[KnnTable, KnnTable] | None = None,
                run_pair: tuple[int, int] = (0, 1)) -> PairwiseNodeScores:
    zl, zm = _matrix(z_l), _matrix(z_m)
    _check_pair(zl, zm)
    if k >= len(zl):
        raise ValueError(f"k={k} must be smaller than N={len(zl)}")
    tl, tm = _tables(zl, zm, k, tables)
    both = np.sort(np.hstack([tl.neighbors, tm.neighbors]), axis=1)
    inter = (both[:, 1:] == both[:, :-1]).sum(axis=1)
    union = both.shape[1] - inter
    valid = ~(tl.zero_rows | tm.zero_rows)
    return PairwiseNodeScores("knn_jaccard", run_pair, inter / union, valid)


def union_neighborhoods(tl: KnnTable, tm: KnnTable) -> tuple[np.ndarray, np.ndarray]:
    """Sorted union of both neighbor lists per node, padded; returns (ids, mask)."""
    both = np.sort(np.hstack([tl.neighbors, tm.neighbors]), axis=1)
    mask = np.ones(both.shape, dtype=bool)
    mask[:, 1:] = both[:, 1:] != both[:, :-1]
    return both, mask


def second_order_cosine(z_l, z_m, k: int = 20,
                        tables: tuple[KnnTable, KnnTable] | None = None,
                        run_pair: tuple[int, int] = (0, 1),
                        block_rows: int = BLOCK_ROWS) -> PairwiseNodeScores:
    zl, zm = _matrix(z_l), _matrix(z_m)
    _check_pair(zl, zm)
    if k >= len(zl):
        raise ValueError(f"k={k} must be smaller than N={len(zl)}")
    tl, tm = _tables(zl, zm, k, tables)
    ids, mask = union_neighborhoods(tl, tm)
    nl, _ = row_normalize(zl)
    nm, _ = row_normalize(zm)
    n = len(zl)
    scores = np.zeros(n)
    valid = np.ones(n, dtype=bool)
    for start in range(0, n, block_rows):
        sl = slice(start, min(start + block_rows, n))
        s_l = np.einsum("id,ijd->ij", nl[sl], nl[ids[sl]]) * mask[sl]
        s_m = np.einsum("id,ijd->ij", nm[sl], nm[ids[sl]]) * mask[sl]
        num = np.einsum("ij,ij->i", s_l, s_m)
        den = np.linalg.norm(s_l, axis=1) * np.linalg.norm(s_m, axis=1)
        ok = den > 0
        scores[sl] = np.where(ok, num / np.where(ok, den, 1.0), 0.0)
        valid[sl] = ok
    valid &= ~(tl.zero_rows | tm.zero_rows)
    return PairwiseNodeScores("second_order_cos", run_pair, np.clip(scores, -1.0, 1.0), valid)


# ------------------------------------------------------------ many runs

def compare_runs(matrices, k: int = 20, measures=MEASURES, center: bool = False,
                 workers: int = 1) -> dict[str, list[PairwiseNodeScores]]:
    """All configured measures over all R(R-1)/2 run pairs.

    k-NN tables are computed once per run and shared across pairs.
    """
    mats = [_matrix(m) for m in matrices]
    if len(mats) < 2:
        raise ValueError("need at least two embeddings")
    for m in mats[1:]:
        _check_pair(mats[0], m)
    pairs = list(itertools.combinations(range(len(mats)), 2))
    need_knn = any(m in measures for m in ("knn_jaccard", "second_order_cos"))

    def run_pair(p):
        l, m = p
        out = {}
        if "aligned_cos" in measures:
            out["aligned_cos"] = aligned_cosine_similarity(mats[l], mats[m], center, p)
        if need_knn:
            t = (tables[l], tables[m])
            if "knn_jaccard" in measures:
                out["knn_jaccard"] = knn_jaccard(mats[l], mats[m], k, t, p)
            if "second_order_cos" in measures:
                out["second_order_cos"] = second_order_cosine(mats[l], mats[m], k, t, p)
        return out

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        tables = list(pool.map(lambda m: knn(m, k), mats)) if need_knn else None
        results = list(pool.map(run_pair, pairs))
    return {name: [r[name] for r in results] for name in MEASURES if name in measures}


@dataclass
class AngleDeviationReport:
    per_pair: dict[str, np.ndarray]
    category_mean: dict[str, float]
    skipped: dict[str, int] = field(default_factory=dict)


def angle_deviation(matrices, pairs) -> AngleDeviationReport:
    """Mean absolute deviation (degrees) of inter-node angles across runs."""
    mats = [row_normalize(_matrix(m)) for m in matrices]
    if len(mats) < 2:
        raise ValueError("need at least two embeddings")
    per_pair, means, skipped = {}, {}, {}
    for sample in pairs:
        if not sample.pairs:
            per_pair[sample.category] = np.empty(0)
            means[sample.category] = float("nan")
            skipped[sample.category] = 0
            continue
        idx = np.asarray(sample.pairs, dtype=np.int64)
        u, v = idx[:, 0], idx[:, 1]
        bad = np.zeros(len(idx), dtype=bool)
        thetas = []
        for z, zero in mats:
            bad |= zero[u] | zero[v]
            cos = np.clip(np.einsum("ij,ij->i", z[u], z[v]), -1.0, 1.0)
            thetas.append(np.degrees(np.arccos(cos)))
        th = np.array(thetas)                                      # (R, P)
        mad = np.abs(th - th.mean(axis=0)).mean(axis=0)[~bad]
        per_pair[sample.category] = mad
        means[sample.category] = float(mad.mean()) if len(mad) else float("nan")
        skipped[sample.category] = int(bad.sum())
    return AngleDeviationReport(per_pair, means, skipped)


# ------------------------------------------------------------ aggregation

LETTER_DEPTHS = (2, 4, 8, 16)


def letter_values(x: np.ndarray) -> dict[str, float]:
    """Median plus lower/upper quantiles at depths 1/4, 1/8, 1/16."""
    x = np.asarray(x, dtype=np.float64)
    out = {"median": float(np.quantile(x, 0.5))}
    for depth, name in zip(LETTER_DEPTHS[1:], ("fourths", "eighths", "sixteenths")):
        out[f"{name}_lower"] = float(np.quantile(x, 1.0 / depth))
        out[f"{name}_upper"] = float(np.quantile(x, 1.0 - 1.0 / depth))
    return out


def centrality_profile(node_means: np.ndarray, centrality: CentralityScores,
                       window_fraction: float = 0.01, valid: np.ndarray | None = None) -> dict:
    c = np.asarray(centrality.values, dtype=np.float64)
    if valid is not None:
        keep = np.flatnonzero(valid)
    else:
        keep = np.arange(len(c))
    order = keep[np.argsort(c[keep], kind="stable")]
    n = len(order)
    window = min(max(20, math.ceil(window_fraction * n)), n)
    kernel = np.ones(window) / window
    return {
        "centrality": centrality.kind,
        "window": window,
        "centrality_ma": np.convolve(c[order], kernel, mode="valid"),
        "score_ma": np.convolve(node_means[order], kernel, mode="valid"),
    }


@dataclass
class StabilityReport:
    measure: str
    pair_count: int
    node_mean: np.ndarray
    node_valid: np.ndarray
    grand_mean: float
    quantiles: dict[str, float]
    flagged_nodes: int
    profile: dict | None = None

    def summary(self) -> dict:
        out = {
            "pair_count": self.pair_count,
            "grand_mean": self.grand_mean,
            "quantiles": self.quantiles,
            "flagged_nodes": self.flagged_nodes,
        }
        if self.profile is not None:
            out["profile"] = {
                "centrality": self.profile["centrality"],
                "window": self.profile["window"],
                "centrality_ma": self.profile["centrality_ma"].tolist(),
                "score_ma": self.profile["score_ma"].tolist(),
            }
        return out


def aggregate(scores: list[PairwiseNodeScores], centrality: CentralityScores | None = None,
              window_fraction: float = 0.01) -> StabilityReport:
    if not scores:
        raise ValueError("no scores to aggregate")
    measure = scores[0].measure
    n = len(scores[0].values)
    for s in scores:
        if s.measure != measure or len(s.values) != n:
            raise ValueError("score sets differ in measure or node count")
    vals = np.array([s.values for s in scores])
    ok = np.array([s.valid for s in scores])
    counts = ok.sum(axis=0)
    node_valid = counts > 0
    node_mean = np.where(node_valid, (vals * ok).sum(axis=0) / np.maximum(counts, 1), np.nan)
    good = node_mean[node_valid]
    report = StabilityReport(
        measure=measure,
        pair_count=len(scores),
        node_mean=node_mean,
        node_valid=node_valid,
        grand_mean=float(good.mean()) if len(good) else float("nan"),
        quantiles=letter_values(good) if len(good) else {},
        flagged_nodes=int((~node_valid).sum()),
    )
    if centrality is not None and len(good):
        report.profile = centrality_profile(np.nan_to_num(node_mean), centrality,
                                            window_fraction, node_valid)
    return report
