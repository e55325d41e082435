"""Acceptance gate: one test per headline criterion, at its stated tolerance.

A summary line per criterion (PASS/FAIL plus the measured numbers) is printed
at the end of the pytest run.  The heavy criteria share embeddings through
module-scoped fixtures.
"""

import itertools
import time

import numpy as np
import pytest

from embstab.downstream import (make_split, predict, stability_experiment, stable_core,
                                train_classifier)
from embstab.embed import Embedding, embed
from embstab.geometry import (aligned_cosine_similarity, compare_runs, knn, knn_jaccard,
                              second_order_cosine)
from embstab.graph import generate_planted_partition, generate_watts_strogatz
from embstab.linalg import row_normalize
from oracles import grid_procrustes_2d, random_orthogonal, scan_knn, second_order_direct
from test_downstream import classifier_gradient_case
from test_embed import sgns_gradient_case

pytestmark = pytest.mark.slow

SEEDS = range(10)


def pair_means(mats, fn):
    return float(np.mean([fn(a, b).values.mean() for a, b in itertools.combinations(mats, 2)]))


def gaussian_null(n, d, pairs, offset):
    rng = [np.random.default_rng(offset + s) for s in range(2 * pairs)]
    mats = [r.standard_normal((n, d)) for r in rng]
    return [aligned_cosine_similarity(mats[2 * i], mats[2 * i + 1]).values.mean()
            for i in range(pairs)]


# ------------------------------------------------------------ measure oracles

def test_measure_oracle_equivalence(criterion):
    start = time.perf_counter()
    worst_cos, worst_so, knn_ok = 0.0, 0.0, True
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(20, 301))
        d = int(rng.integers(1, 17))
        k = int(rng.integers(1, 21))
        z_l, z_m = rng.standard_normal((2, n, d))
        knn_ok &= knn(z_l, k).neighbors.tolist() == scan_knn(z_l, min(k, n - 1))
        got = second_order_cosine(z_l, z_m, k).values
        worst_so = max(worst_so, float(np.abs(got - second_order_direct(z_l, z_m, k)).max()))
        # aligned cosine in the plane against exhaustive search over O(2)
        a, b = rng.standard_normal((2, n, 2))
        na, nb = row_normalize(a)[0], row_normalize(b)[0]
        q, _ = grid_procrustes_2d(na, nb)
        oracle = np.einsum("ij,ij->i", na @ q, nb)
        worst_cos = max(worst_cos,
                        float(np.abs(aligned_cosine_similarity(a, b).values - oracle).max()))
    elapsed = time.perf_counter() - start
    criterion(f"knn exact={knn_ok} aligned max|diff|={worst_cos:.2e} "
              f"second-order max|diff|={worst_so:.2e} runtime={elapsed:.1f}s")
    assert knn_ok
    assert worst_cos <= 1e-3
    assert worst_so <= 1e-9
    assert elapsed < 60


def test_rotation_invariance(criterion):
    worst = {"aligned": 0.0, "jaccard": 0.0, "second": 0.0}
    for seed in range(10):
        rng = np.random.default_rng(100 + seed)
        n, d = int(rng.integers(50, 600)), int(rng.integers(2, 64))
        z = rng.standard_normal((n, d))
        zr = z @ random_orthogonal(d, rng)
        worst["aligned"] = max(worst["aligned"],
                               float(np.abs(aligned_cosine_similarity(z, zr).values - 1).max()))
        worst["jaccard"] = max(worst["jaccard"],
                               float(np.abs(knn_jaccard(z, zr, 20).values - 1).max()))
        worst["second"] = max(worst["second"],
                              float(np.abs(second_order_cosine(z, zr, 20).values - 1).max()))
    criterion(" ".join(f"{k} max|1-s|={v:.1e}" for k, v in worst.items()))
    assert worst["aligned"] <= 1e-6
    assert worst["jaccard"] == 0.0
    assert worst["second"] <= 1e-6


def test_null_baseline(criterion):
    band = gaussian_null(2000, 128, 20, offset=10_000)
    lo, hi = min(band), max(band)
    sd = float(np.std(band))
    rng = [np.random.default_rng(s) for s in range(20)]
    mats = [r.standard_normal((2000, 128)) for r in rng]
    cos = [aligned_cosine_similarity(mats[2 * i], mats[2 * i + 1]).values.mean()
           for i in range(10)]
    jac = [knn_jaccard(mats[2 * i], mats[2 * i + 1], 20).values.mean() for i in range(10)]
    mean_cos, mean_jac = float(np.mean(cos)), float(np.mean(jac))
    criterion(f"aligned mean={mean_cos:.4f} (MC band [{lo:.4f}, {hi:.4f}], required |mean|<0.15)"
              f" jaccard mean={mean_jac:.4f}")
    assert lo - 3 * sd <= mean_cos <= hi + 3 * sd
    assert abs(mean_cos) < 0.15
    assert mean_jac < 0.05


# ------------------------------------------------------------------ embeddings

def test_hope_near_determinism(criterion):
    g = generate_watts_strogatz(1000, 0.01, 0.1, seed=0)
    mats = [embed("hope", g, 32, None, s).matrix for s in SEEDS]
    cos = pair_means(mats, aligned_cosine_similarity)
    jac = pair_means(mats, lambda a, b: knn_jaccard(a, b, 20))
    so = pair_means(mats, lambda a, b: second_order_cosine(a, b, 20))
    criterion(f"aligned={cos:.4f} jaccard={jac:.4f} second-order={so:.4f}")
    assert cos >= 0.99 and jac >= 0.95 and so >= 0.99


@pytest.fixture(scope="module")
def ws4000_runs():
    g = generate_watts_strogatz(4000, 0.01, 0.1, seed=0)
    return {a: [embed(a, g, 128, None, s).matrix for s in SEEDS]
            for a in ("hope", "node2vec", "line")}


def test_stability_ordering(criterion, ws4000_runs):
    scores = {a: compare_runs(m, k=20, measures=("aligned_cos", "second_order_cos"))
              for a, m in ws4000_runs.items()}
    cos = {a: float(np.mean([s.values.mean() for s in v["aligned_cos"]]))
           for a, v in scores.items()}
    so = {a: float(np.mean([s.values.mean() for s in v["second_order_cos"]]))
          for a, v in scores.items()}
    null = float(np.mean(gaussian_null(4000, 128, 3, offset=20_000)))
    criterion(f"aligned hope={cos['hope']:.4f} node2vec={cos['node2vec']:.4f} "
              f"line={cos['line']:.4f} null={null:.4f}; second-order "
              f"node2vec={so['node2vec']:.4f} line={so['line']:.4f}")
    assert cos["hope"] > cos["node2vec"] >= cos["line"] > null
    for a in ("node2vec", "line"):
        assert 0.6 <= cos[a] <= 0.99
        assert so[a] >= 0.95


def test_density_trend(criterion):
    means = {}
    for density in (0.1, 0.001):
        g = generate_watts_strogatz(2000, density, 0.1, seed=0)
        mats = [embed("node2vec", g, 128, None, s).matrix for s in range(5)]
        means[density] = pair_means(mats, aligned_cosine_similarity)
    criterion(f"node2vec aligned D=0.1: {means[0.1]:.4f}  D=0.001: {means[0.001]:.4f}")
    assert means[0.1] > means[0.001]


def test_gradients_match_finite_differences(criterion):
    failures = []
    for seed in range(20):
        for name, case in (("sgns", sgns_gradient_case), ("classifier", classifier_gradient_case)):
            try:
                case(1000 + seed)
            except AssertionError as exc:
                failures.append(f"{name}[{seed}]: {exc}")
    criterion(f"40 configurations, failures={len(failures)}")
    assert not failures, failures


# ------------------------------------------------------------------ downstream

def test_stable_core_mechanics(criterion):
    g, labels = generate_planted_partition([100, 100, 100], 0.1, 0.01, seed=0)
    split = make_split(labels, 0.75, seed=0)
    runs = [embed("node2vec", g, 128, None, s) for s in SEEDS]
    copies = [Embedding(runs[0].matrix, "node2vec", s) for s in SEEDS]
    identical = stability_experiment(copies, labels, split, 5, 10, seed=0).mode_ii
    single = [predict(train_classifier(runs[0], labels, split, s), runs[0], split.test_idx)
              for s in range(10)]
    again = [predict(train_classifier(runs[0], labels, split, s), runs[0], split.test_idx)
             for s in range(10)]
    core_i, core_i_again = stable_core(single), stable_core(again)
    report = stability_experiment(runs, labels, split, 5, 10, seed=0)
    f1_sd = float(np.std(report.f1_distribution))
    criterion(f"identical copies mode-ii={identical:.3f}; fixed-embedding core={core_i:.3f} "
              f"(rerun {core_i_again:.3f}); node2vec F1 mean="
              f"{np.mean(report.f1_distribution):.3f} sd={f1_sd:.4f} "
              f"mode-i={report.mode_i_mean:.3f} mode-ii={report.mode_ii:.3f}")
    assert identical == 1.0
    assert 0.0 <= core_i <= 1.0 and core_i == core_i_again
    assert f1_sd < 0.05
    assert report.mode_ii < 1.0


# ----------------------------------------------------------------- performance

def test_performance(criterion, ws4000_runs):
    z = np.random.default_rng(0).standard_normal((10_000, 128))
    t0 = time.perf_counter()
    knn(z, 20)
    knn_time = time.perf_counter() - t0
    t0 = time.perf_counter()
    out = compare_runs(ws4000_runs["node2vec"], k=20, workers=4)
    compare_time = time.perf_counter() - t0
    criterion(f"20-NN N=10000: {knn_time:.1f}s; compare R=10 N=4000 (45 pairs, 3 measures): "
              f"{compare_time:.1f}s")
    assert all(len(v) == 45 for v in out.values()) and len(out) == 3
    assert knn_time < 60
    assert compare_time < 600
