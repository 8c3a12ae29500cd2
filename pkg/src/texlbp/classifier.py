"""Histogram distances and a brute-force k-nearest-neighbor classifier."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .features import FeatureStore, FeatureVector

METRICS = ("chi_square", "minkowski")
WEIGHTINGS = ("uniform", "inverse_distance")
INVERSE_EPS = 1e-12


class LayoutMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class DistanceMetric:
    kind: str = "chi_square"
    order: float | None = None

    def __post_init__(self):
        if self.kind not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}, got {self.kind!r}")
        if self.kind == "minkowski":
            order = 2.0 if self.order is None else float(self.order)
            if not order > 0:
                raise ValueError(f"minkowski order must be positive, got {order}")
            object.__setattr__(self, "order", order)
        elif self.order is not None:
            raise ValueError("order only applies to the minkowski metric")

    def __str__(self):
        if self.kind == "minkowski":
            return f"minkowski(p={self.order:g})"
        return "chi2"

    def pairwise(self, queries: np.ndarray, train: np.ndarray) -> np.ndarray:
        """``(n_queries, n_train)`` distance matrix."""
        queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
        train = np.atleast_2d(np.asarray(train, dtype=np.float64))
        if queries.shape[1] != train.shape[1]:
            raise ValueError(f"length mismatch: {queries.shape[1]} vs {train.shape[1]}")
        out = np.empty((len(queries), len(train)))
        for i, q in enumerate(queries):
            if self.kind == "chi_square":
                out[i] = _chi_square_rows(q, train)
            else:
                out[i] = _minkowski_rows(q, train, self.order)
        return out


def _chi_square_rows(q: np.ndarray, rows: np.ndarray) -> np.ndarray:
    num = (rows - q) ** 2
    den = rows + q
    terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return 0.5 * terms.sum(axis=-1)


def _minkowski_rows(q: np.ndarray, rows: np.ndarray, order: float) -> np.ndarray:
    return (np.abs(rows - q) ** order).sum(axis=-1) ** (1.0 / order)


def _pair(p, q) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    return p, q


def chi_square(p, q) -> float:
    """Half the sum of (p - q)^2 / (p + q), skipping bins where both are zero."""
    p, q = _pair(p, q)
    return float(_chi_square_rows(p, q[None, :])[0])


def minkowski(x, y, order: float = 2.0) -> float:
    if not order > 0:
        raise ValueError(f"minkowski order must be positive, got {order}")
    x, y = _pair(x, y)
    return float(_minkowski_rows(x, y[None, :], float(order))[0])


@dataclass(frozen=True)
class KnnConfig:
    k: int = 1
    metric: DistanceMetric = DistanceMetric()
    weighting: str = "uniform"

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"weighting must be one of {WEIGHTINGS}, got {self.weighting!r}")

    def __str__(self):
        return f"k={self.k} metric={self.metric} weighting={self.weighting}"


@dataclass(frozen=True)
class Neighbor:
    index: int
    distance: float
    label: str


@dataclass(frozen=True)
class Prediction:
    label: str
    neighbors: tuple[Neighbor, ...]


def vote(neighbors: Sequence[tuple[float, str]], weighting: str = "uniform") -> str:
    """Pick a label from ``(distance, label)`` pairs.

    Ties on total weight go to the label whose closest neighbor is nearest,
    then to the lexicographically smallest label.
    """
    if not neighbors:
        raise ValueError("cannot vote with no neighbors")
    if weighting not in WEIGHTINGS:
        raise ValueError(f"weighting must be one of {WEIGHTINGS}, got {weighting!r}")
    weight: dict[str, float] = {}
    nearest: dict[str, float] = {}
    for d, label in neighbors:
        w = 1.0 if weighting == "uniform" else 1.0 / (d + INVERSE_EPS)
        weight[label] = weight.get(label, 0.0) + w
        nearest[label] = min(nearest.get(label, np.inf), d)
    return min(weight, key=lambda lab: (-weight[lab], nearest[lab], lab))


def select_neighbors(distances: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` smallest distances; equal distances favor lower indices."""
    order = np.argsort(distances, kind="stable")
    return order[:k]


class KnnClassifier:
    """Exact k-NN over a fixed training matrix. Read-only after construction."""

    def __init__(self, matrix: np.ndarray, labels: Sequence[str], cfg: KnnConfig,
                 indices: Sequence[int] | None = None):
        self.matrix = np.asarray(matrix, dtype=np.float64)
        if self.matrix.ndim != 2 or len(self.matrix) == 0:
            raise ValueError("training set is empty")
        if len(labels) != len(self.matrix):
            raise ValueError("labels and training matrix differ in length")
        self.labels = list(labels)
        self.cfg = cfg
        # indices reported in predictions, e.g. positions in a larger store
        self.indices = np.arange(len(self.matrix)) if indices is None else np.asarray(indices)

    @classmethod
    def from_store(cls, store: FeatureStore, cfg: KnnConfig) -> KnnClassifier:
        if len(store) == 0:
            raise ValueError("training set is empty")
        return cls(store.matrix, store.labels, cfg)

    def predict_many(self, queries: np.ndarray) -> list[Prediction]:
        queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
        if queries.shape[1] != self.matrix.shape[1]:
            raise LayoutMismatchError(
                f"query has {queries.shape[1]} values, training vectors have {self.matrix.shape[1]}")
        dist = self.cfg.metric.pairwise(queries, self.matrix)
        k = min(self.cfg.k, len(self.matrix))
        out = []
        for row in dist:
            picked = select_neighbors(row, k)
            neighbors = tuple(
                Neighbor(int(self.indices[j]), float(row[j]), self.labels[j]) for j in picked)
            label = vote([(n.distance, n.label) for n in neighbors], self.cfg.weighting)
            out.append(Prediction(label, neighbors))
        return out

    def predict(self, query: np.ndarray) -> Prediction:
        return self.predict_many(query)[0]


def knn_predict(train: FeatureStore, query: FeatureVector, cfg: KnnConfig) -> Prediction:
    """Classify one vector against a store; ``k`` is clamped to the store size."""
    if len(train) == 0:
        raise ValueError("training set is empty")
    if query.layout != train.layout:
        raise LayoutMismatchError(
            f"query configs [{';'.join(map(str, query.configs))}] do not match "
            f"store configs [{';'.join(map(str, train.configs))}]")
    return KnnClassifier.from_store(train, cfg).predict(query.values)
