"""Cross-validation, confusion matrices and text reports."""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .classifier import KnnClassifier, KnnConfig
from .features import FeatureStore, format_configs
from .lbp import LbpConfig


@dataclass(frozen=True, eq=False)
class FoldPlan:
    assignments: np.ndarray
    fold_count: int
    seed: int | None = None
    scheme: str = ""

    def __post_init__(self):
        a = np.array(self.assignments, dtype=np.int64, copy=True)
        if a.ndim != 1 or len(a) == 0:
            raise ValueError("fold plan needs at least one sample")
        if self.fold_count < 2:
            raise ValueError(f"fold_count must be >= 2, got {self.fold_count}")
        if a.min() < 0 or a.max() >= self.fold_count:
            raise ValueError("fold index out of range")
        a.flags.writeable = False
        object.__setattr__(self, "assignments", a)

    def __len__(self):
        return len(self.assignments)

    def __eq__(self, other):
        if not isinstance(other, FoldPlan):
            return NotImplemented
        return (self.fold_count == other.fold_count
                and np.array_equal(self.assignments, other.assignments))

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def stratified_kfold(labels: Sequence[str], fold_count: int, seed: int = 0) -> FoldPlan:
    """Shuffle each class with a seeded RNG and deal it round-robin over the folds.

    The dealing position carries over from one class to the next (classes in
    sorted order) so fold totals stay balanced too.
    """
    if fold_count < 2:
        raise ValueError(f"fold_count must be >= 2, got {fold_count}")
    labels = list(labels)
    classes = sorted(set(labels))
    by_class = {c: [i for i, lab in enumerate(labels) if lab == c] for c in classes}
    small = [c for c in classes if len(by_class[c]) < fold_count]
    if small:
        raise ValueError(
            f"classes with fewer than {fold_count} samples: "
            + ", ".join(f"{c} ({len(by_class[c])})" for c in small))
    rng = np.random.default_rng(seed)
    assignments = np.empty(len(labels), dtype=np.int64)
    pos = 0
    for c in classes:
        for i in rng.permutation(by_class[c]):
            assignments[i] = pos % fold_count
            pos += 1
    return FoldPlan(assignments, fold_count, seed, scheme=f"kfold:{fold_count} seed={seed}")


def loo_split(n: int) -> FoldPlan:
    if n < 2:
        raise ValueError(f"leave-one-out needs at least 2 samples, got {n}")
    return FoldPlan(np.arange(n), n, None, scheme="loo")


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Rows are true classes, columns predicted classes."""

    classes: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64, copy=True)
        n = len(self.classes)
        if counts.shape != (n, n):
            raise ValueError(f"counts shape {counts.shape} does not match {n} classes")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        counts.flags.writeable = False
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_labels(cls, true: Sequence[str], predicted: Sequence[str],
                    classes: Sequence[str] | None = None) -> ConfusionMatrix:
        if classes is None:
            classes = sorted(set(true) | set(predicted))
        index = {c: i for i, c in enumerate(classes)}
        counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
        for t, p in zip(true, predicted, strict=True):
            counts[index[t], index[p]] += 1
        return cls(tuple(classes), counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: ConfusionMatrix) -> ConfusionMatrix:
        if self.classes != other.classes:
            raise ValueError("cannot add confusion matrices over different classes")
        return ConfusionMatrix(self.classes, self.counts + other.counts)

    def __eq__(self, other):
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return self.classes == other.classes and np.array_equal(self.counts, other.counts)


def _as_matrix(m) -> ConfusionMatrix:
    if isinstance(m, ConfusionMatrix):
        return m
    counts = np.asarray(m)
    return ConfusionMatrix(tuple(str(i) for i in range(len(counts))), counts)


def accuracy(m) -> float:
    m = _as_matrix(m)
    if m.total == 0:
        raise ValueError("empty confusion matrix")
    return float(np.trace(m.counts)) / m.total


def precision_recall(m) -> list[tuple[float, float]]:
    """Per-class (precision, recall); a zero denominator yields 0."""
    c = _as_matrix(m).counts
    diag = np.diag(c).astype(np.float64)
    cols = c.sum(axis=0)
    rows = c.sum(axis=1)
    out = []
    for i in range(len(diag)):
        p = diag[i] / cols[i] if cols[i] else 0.0
        r = diag[i] / rows[i] if rows[i] else 0.0
        out.append((float(p), float(r)))
    return out


def cohen_kappa(m) -> float:
    c = _as_matrix(m).counts.astype(np.float64)
    total = c.sum()
    if total == 0:
        raise ValueError("empty confusion matrix")
    p_o = np.trace(c) / total
    p_e = float(np.dot(c.sum(axis=1), c.sum(axis=0))) / total**2
    if p_e == 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return float((p_o - p_e) / (1.0 - p_e))


@dataclass(frozen=True)
class EvalReport:
    matrix: ConfusionMatrix
    accuracy: float
    per_class: tuple[tuple[float, float], ...]
    kappa: float
    knn: KnnConfig
    configs: tuple[LbpConfig, ...] = ()
    scheme: str = ""
    predictions: tuple[str, ...] = field(default=(), repr=False, compare=False)

    @classmethod
    def from_matrix(cls, matrix: ConfusionMatrix, knn: KnnConfig,
                    configs: Sequence[LbpConfig] = (), scheme: str = "",
                    predictions: Sequence[str] = ()) -> EvalReport:
        return cls(matrix, accuracy(matrix), tuple(precision_recall(matrix)),
                   cohen_kappa(matrix), knn, tuple(configs), scheme, tuple(predictions))


def _predict_fold(store: FeatureStore, knn: KnnConfig, plan: FoldPlan, fold: int):
    test = plan.test_indices(fold)
    if len(test) == 0:
        return test, []
    train = plan.train_indices(fold)
    labels = store.labels
    clf = KnnClassifier(store.matrix[train], [labels[i] for i in train], knn, indices=train)
    return test, [p.label for p in clf.predict_many(store.matrix[test])]


def cross_validate(store: FeatureStore, knn: KnnConfig, plan: FoldPlan,
                   threads: int = 1) -> EvalReport:
    """Hold out each fold in turn and pool every prediction into one matrix."""
    if len(plan) != len(store):
        raise ValueError(f"fold plan covers {len(plan)} samples, store has {len(store)}")
    workers = threads if threads > 0 else (os.cpu_count() or 1)
    folds = range(plan.fold_count)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda f: _predict_fold(store, knn, plan, f), folds))
    else:
        results = [_predict_fold(store, knn, plan, f) for f in folds]

    predicted: list[str | None] = [None] * len(store)
    for test, labels in results:
        for i, lab in zip(test, labels):
            predicted[i] = lab
    matrix = ConfusionMatrix.from_labels(store.labels, predicted, classes=store.class_names)
    return EvalReport.from_matrix(matrix, knn, store.configs, plan.scheme, predicted)


def render_report(r: EvalReport) -> str:
    """Deterministic plain-text rendering of an evaluation report."""
    m = r.matrix
    order = sorted(range(len(m.classes)), key=lambda i: m.classes[i])
    names = [m.classes[i] for i in order]
    counts = m.counts[np.ix_(order, order)]
    per_class = [r.per_class[i] for i in order]
    cols = counts.sum(axis=0)
    rows = counts.sum(axis=1)

    lines = []
    if r.configs:
        lines.append(f"lbp={format_configs(r.configs)}")
    lines.append(f"knn: {r.knn}")
    if r.scheme:
        lines.append(f"scheme={r.scheme}")
    lines.append(f"samples={m.total}")
    lines.append(f"accuracy={r.accuracy:.4f}")
    lines.append(f"kappa={r.kappa:.4f}")
    lines.append("")

    width = max([len("class")] + [len(n) for n in names])
    lines.append(f"{'class':<{width}}  precision  recall")
    footnote = False
    for i, (name, (p, rec)) in enumerate(zip(names, per_class)):
        p_txt = f"{p:.4f}" + ("*" if cols[i] == 0 else " ")
        r_txt = f"{rec:.4f}" + ("*" if rows[i] == 0 else " ")
        footnote = footnote or cols[i] == 0 or rows[i] == 0
        lines.append(f"{name:<{width}}  {p_txt:>10} {r_txt:>7}".rstrip())
    if footnote:
        lines.append("* zero denominator, reported as 0")
    lines.append("")

    lines.append("confusion matrix (rows=true, columns=predicted)")
    cell = max([len(str(int(counts.max(initial=0))))] + [len(n) for n in names])
    lines.append(" " * width + "".join(f"  {n:>{cell}}" for n in names))
    for name, row in zip(names, counts):
        lines.append(f"{name:<{width}}" + "".join(f"  {int(v):>{cell}}" for v in row))
    return "\n".join(lines) + "\n"


def confusion_csv(m: ConfusionMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["class", *m.classes])
    for name, row in zip(m.classes, m.counts):
        w.writerow([name, *(int(v) for v in row)])
    return buf.getvalue()
