"""Node classification on embeddings and the stable-core measure.

The classifier is a seeded logistic regression (softmax for multi-class,
independent sigmoids for multi-label) trained by mini-batch gradient
descent.  Its random initialization and batch order are deliberate: they
make repeated training on one embedding non-degenerate, which is what the
mode (i) stable core measures.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, InsufficientDataError
from .graph import NodeLabels

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SplitSpec:
    train_idx: np.ndarray
    test_idx: np.ndarray
    seed: int
    fraction: float = 0.75
    stratified: bool = False


@dataclass(frozen=True)
class ClassifierParams:
    epochs: int = 100
    batch: int = 64
    lr: float = 0.1
    l2: float = 1e-4


@dataclass
class ClassifierModel:
    weights: np.ndarray
    bias: np.ndarray
    mode: str
    train_seed: int
    loss_history: list[float] = field(default_factory=list)
    feature_mean: np.ndarray | None = None
    feature_scale: np.ndarray | None = None

    def transform(self, x: np.ndarray) -> np.ndarray:
        if self.feature_mean is None:
            return x
        return (x - self.feature_mean) / self.feature_scale


@dataclass(frozen=True)
class PredictionRun:
    test_idx: np.ndarray
    predictions: np.ndarray      # (T,) class ids, or (T, L) bool for multi-label
    embedding_seed: int | None = None
    classifier_seed: int | None = None


def _quota(n: int, fraction: float) -> int:
    return min(n, math.ceil(fraction * n - 1e-9))


def make_split(labels: NodeLabels, fraction: float = 0.75, seed: int = 0) -> SplitSpec:
    nodes = labels.labeled_nodes()
    n = len(nodes)
    if n < 2:
        raise InsufficientDataError(f"need at least 2 labeled nodes, found {n}")
    rng = np.random.default_rng(seed)
    n_train = _quota(n, fraction)
    if not labels.multi_label:
        classes = labels.classes(nodes)
        counts = np.bincount(classes)
        present = counts[counts > 0]
        if present.min() >= 2:
            train = []
            remainders = []
            for c in np.flatnonzero(counts):
                members = rng.permutation(nodes[classes == c])
                exact = fraction * len(members)
                base = int(math.floor(exact + 1e-9))
                train.append(members[:base])
                remainders.append((exact - base, c, members[base:]))
            short = n_train - sum(len(t) for t in train)
            # largest remainder first; the seeded shuffle breaks ties
            tie = rng.permutation(len(remainders))
            order = sorted(range(len(remainders)), key=lambda i: (-remainders[i][0], tie[i]))
            for i in order[:short]:
                train.append(remainders[i][2][:1])
            train_idx = np.sort(np.concatenate(train))
            test_idx = np.setdiff1d(nodes, train_idx)
            return SplitSpec(train_idx, test_idx, seed, fraction, stratified=True)
        log.warning("a class has fewer than 2 members; falling back to an unstratified split")
    perm = rng.permutation(nodes)
    return SplitSpec(np.sort(perm[:n_train]), np.sort(perm[n_train:]), seed, fraction)


# ------------------------------------------------------------- classifier

def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def loss_and_grad(w: np.ndarray, b: np.ndarray, x: np.ndarray, y: np.ndarray, mode: str,
                  l2: float) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy plus (l2/2)||W||^2 and its gradient.

    ``y`` is a one-hot (multi-class) or indicator (multi-label) matrix.
    """
    m = len(x)
    z = x @ w + b
    if mode == "multiclass_softmax":
        zs = z - z.max(axis=1, keepdims=True)
        logp = zs - np.log(np.exp(zs).sum(axis=1, keepdims=True))
        loss = -(y * logp).sum() / m
        resid = np.exp(logp) - y
    else:
        # log(1 + e^z) - y z summed over labels
        loss = (np.logaddexp(0.0, z) - y * z).sum() / m
        resid = _sigmoid(z) - y
    loss += 0.5 * l2 * float((w * w).sum())
    gw = x.T @ resid / m + l2 * w
    gb = resid.sum(axis=0) / m
    return float(loss), gw, gb


def _targets(labels: NodeLabels, idx: np.ndarray) -> np.ndarray:
    return labels.indicator(idx)


def _mode(labels: NodeLabels) -> str:
    return "multilabel_ovr" if labels.multi_label else "multiclass_softmax"


def train_classifier(e, labels: NodeLabels, split: SplitSpec, seed: int = 0,
                     params: ClassifierParams | None = None) -> ClassifierModel:
    p = params or ClassifierParams()
    x_all = np.asarray(getattr(e, "matrix", e), dtype=np.float64)
    idx = np.asarray(split.train_idx)
    if len(idx) == 0:
        raise InsufficientDataError("empty training set")
    # standardize with training-set statistics so step sizes do not depend on
    # each algorithm's embedding scale
    mu = x_all[idx].mean(axis=0)
    sd = x_all[idx].std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    x = (x_all[idx] - mu) / sd
    y = _targets(labels, idx)
    mode = _mode(labels)
    rng = np.random.default_rng(seed)
    w = rng.normal(0.0, 0.01, size=(x.shape[1], labels.label_count))
    b = np.zeros(labels.label_count)
    history = [loss_and_grad(w, b, x, y, mode, p.l2)[0]]
    for _ in range(p.epochs):
        order = rng.permutation(len(x))
        for start in range(0, len(x), p.batch):
            sel = order[start:start + p.batch]
            loss, gw, gb = loss_and_grad(w, b, x[sel], y[sel], mode, p.l2)
            if not math.isfinite(loss):
                raise ConvergenceError(
                    f"classifier loss became non-finite; try a learning rate below {p.lr}")
            w -= p.lr * gw
            b -= p.lr * gb
        history.append(loss_and_grad(w, b, x, y, mode, p.l2)[0])
    if not math.isfinite(history[-1]):
        raise ConvergenceError(f"classifier diverged; try a learning rate below {p.lr}")
    return ClassifierModel(w, b, mode, seed, history, mu, sd)


def predict(model: ClassifierModel, e, idx, embedding_seed: int | None = None) -> PredictionRun:
    x = np.asarray(getattr(e, "matrix", e), dtype=np.float64)
    if x.shape[1] != model.weights.shape[0]:
        raise ValueError("model and embedding dimensions differ")
    idx = np.asarray(idx)
    z = model.transform(x[idx]) @ model.weights + model.bias
    if model.mode == "multiclass_softmax":
        pred = np.argmax(z, axis=1)
    else:
        pred = _sigmoid(z) > 0.5
    if embedding_seed is None:
        embedding_seed = getattr(e, "seed", None)
    return PredictionRun(idx, pred, embedding_seed, model.train_seed)


def confusion_counts(run: PredictionRun, labels: NodeLabels) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-label (TP, FP, FN)."""
    truth = labels.indicator(run.test_idx).astype(bool)
    if run.predictions.ndim == 1:
        pred = np.zeros_like(truth)
        pred[np.arange(len(pred)), run.predictions] = True
    else:
        pred = run.predictions.astype(bool)
    tp = (pred & truth).sum(axis=0)
    fp = (pred & ~truth).sum(axis=0)
    fn = (~pred & truth).sum(axis=0)
    return tp, fp, fn


def f1_from_counts(tp, fp, fn) -> float:
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom > 0 else 0.0


def micro_f1(run: PredictionRun, labels: NodeLabels) -> float:
    tp, fp, fn = confusion_counts(run, labels)
    return float(f1_from_counts(tp.sum(), fp.sum(), fn.sum()))


def macro_f1(run: PredictionRun, labels: NodeLabels) -> float:
    tp, fp, fn = confusion_counts(run, labels)
    return float(np.mean([f1_from_counts(*c) for c in zip(tp, fp, fn)]))


# ------------------------------------------------------------- stable core

def stable_core(runs: list[PredictionRun]) -> float:
    """Fraction of test nodes predicted identically by every run."""
    if len(runs) < 2:
        raise ValueError("stable core needs at least two prediction runs")
    ref = runs[0]
    same = np.ones(len(ref.test_idx), dtype=bool)
    for r in runs[1:]:
        if not np.array_equal(r.test_idx, ref.test_idx):
            raise ValueError("prediction runs cover different test nodes")
        eq = r.predictions == ref.predictions
        same &= eq if eq.ndim == 1 else eq.all(axis=1)
    return float(same.mean()) if len(same) else float("nan")


@dataclass
class StableCoreReport:
    mode_i: list[float]
    mode_i_mean: float
    mode_i_embeddings: list[int]
    mode_ii: float
    f1_distribution: list[float]
    classifier_seed_mode_ii: int
    classifier_seeds_mode_i: list[int]

    def to_dict(self) -> dict:
        return {
            "mode_i": {"per_embedding": self.mode_i, "mean": self.mode_i_mean,
                       "embeddings": self.mode_i_embeddings,
                       "classifier_seeds": self.classifier_seeds_mode_i},
            "mode_ii": {"stable_core": self.mode_ii,
                        "classifier_seed": self.classifier_seed_mode_ii,
                        "classifier_seed_policy": "fixed across embeddings"},
            "f1_distribution": self.f1_distribution,
        }


def _derived_seeds(seed: int, count: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(count, dtype=np.uint32)]


def stability_experiment(embeddings, labels: NodeLabels, split: SplitSpec, sample_count: int = 5,
                         reps: int = 10, seed: int = 0,
                         params: ClassifierParams | None = None) -> StableCoreReport:
    """Mode (i): ``reps`` classifier seeds on each of ``sample_count``
    sampled embeddings.  Mode (ii): one classifier per embedding, all with
    the same classifier seed.  The test set is ``split.test_idx`` throughout.
    """
    runs = list(embeddings.runs if hasattr(embeddings, "runs") else embeddings)
    if len(runs) < sample_count:
        raise ValueError(f"need at least {sample_count} embeddings, got {len(runs)}")
    if reps < 2:
        raise ValueError("mode (i) needs at least two classifier repetitions")
    sample_seed, clf_seed = np.random.SeedSequence(seed).spawn(2)
    chosen = sorted(np.random.default_rng(sample_seed).choice(len(runs), sample_count,
                                                              replace=False).tolist())
    seeds_i = _derived_seeds(int(clf_seed.generate_state(1)[0]), reps)
    fixed_seed = seeds_i[0]
    mode_i = []
    for j in chosen:
        preds = [predict(train_classifier(runs[j], labels, split, s, params), runs[j],
                         split.test_idx) for s in seeds_i]
        mode_i.append(stable_core(preds))
    preds_ii = [predict(train_classifier(e, labels, split, fixed_seed, params), e, split.test_idx)
                for e in runs]
    return StableCoreReport(
        mode_i=mode_i,
        mode_i_mean=float(np.mean(mode_i)),
        mode_i_embeddings=chosen,
        mode_ii=stable_core(preds_ii),
        f1_distribution=[micro_f1(p, labels) for p in preds_ii],
        classifier_seed_mode_ii=fixed_seed,
        classifier_seeds_mode_i=seeds_i,
    )


def _fold_assignment(labels: NodeLabels, nodes: np.ndarray, folds: int,
                     rng: np.random.Generator) -> np.ndarray:
    fold = np.empty(len(nodes), dtype=np.int64)
    if not labels.multi_label:
        classes = labels.classes(nodes)
        counts = np.bincount(classes)
        if counts[counts > 0].min() >= folds:
            offset = 0
            for c in np.flatnonzero(counts):
                members = rng.permutation(np.flatnonzero(classes == c))
                fold[members] = (np.arange(len(members)) + offset) % folds
                offset += len(members)
            return fold
        log.warning("a class has fewer than %d members; unstratified folds", folds)
    perm = rng.permutation(len(nodes))
    fold[perm] = np.arange(len(nodes)) % folds
    return fold


def cross_validate(e, labels: NodeLabels, folds: int = 10, reps: int = 10, seed: int = 0,
                   params: ClassifierParams | None = None) -> list[float]:
    """Repeated k-fold micro-F1; returns ``folds * reps`` values."""
    nodes = labels.labeled_nodes()
    if len(nodes) < folds:
        raise InsufficientDataError(f"{len(nodes)} labeled nodes cannot fill {folds} folds")
    fold_ss, clf_ss = np.random.SeedSequence(seed).spawn(2)
    fold_rng = np.random.default_rng(fold_ss)
    clf_seeds = _derived_seeds(int(clf_ss.generate_state(1)[0]), folds * reps)
    scores = []
    for rep in range(reps):
        assign = _fold_assignment(labels, nodes, folds, fold_rng)
        for f in range(folds):
            split = SplitSpec(nodes[assign != f], nodes[assign == f], seed)
            model = train_classifier(e, labels, split, clf_seeds[rep * folds + f], params)
            scores.append(micro_f1(predict(model, e, split.test_idx), labels))
    return scores
