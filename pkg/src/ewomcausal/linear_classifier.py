"""Binary max-margin linear classifier over keyword-count features.

The trainer minimizes the soft-margin hinge objective

    0.5 * (||w||^2 + b^2) + C * sum_i max(0, 1 - y_i (w.x_i + b))

by dual coordinate descent on the box-constrained dual (the bias is folded
in as a constant-one feature, so it is regularized like any weight). The
sweep itself lives in ``_kernels`` and is JIT-compiled when numba is on.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from .corpus import Document
from .entropy_keywords import KeywordSet


@dataclass(frozen=True)
class Hyper:
    C: float = 1.0
    tol: float = 1e-4
    max_iter: int = 1000

    def __post_init__(self) -> None:
        if self.C <= 0:
            raise ValueError("C must be > 0")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class FeatureSpace:
    """Ordered (topic_id, keyword) pairs defining the vector coordinates."""

    coords: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        if len(set(self.coords)) != len(self.coords):
            raise ValueError("feature space has duplicate (topic, keyword) pairs")

    @classmethod
    def from_keyword_sets(cls, keyword_sets: Mapping[str, KeywordSet]) -> "FeatureSpace":
        coords = []
        for topic in sorted(keyword_sets):
            for word in sorted(keyword_sets[topic].keywords):
                coords.append((topic, word))
        return cls(coords=tuple(coords))

    @property
    def dim(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class FeatureVector:
    doc_id: str
    values: np.ndarray


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float
    hyper: Hyper

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.weights)) or not np.isfinite(self.bias):
            raise ValueError("model has non-finite parameters")


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    per_fold: tuple[tuple[float, float, float], ...]


def featurize(doc: Document, space: FeatureSpace) -> FeatureVector:
    """Coordinate value = count of the keyword among the document tokens."""
    counts = Counter(doc.tokens)
    values = np.array([float(counts[w]) for _, w in space.coords])
    return FeatureVector(doc_id=doc.id, values=values)


def featurize_all(docs: Sequence[Document], space: FeatureSpace) -> list[FeatureVector]:
    return [featurize(d, space) for d in docs]


def _as_matrix(features: Sequence[FeatureVector] | np.ndarray) -> np.ndarray:
    if isinstance(features, np.ndarray):
        X = np.asarray(features, dtype=np.float64)
    else:
        X = np.stack([fv.values for fv in features]).astype(np.float64)
    if X.ndim != 2:
        raise ValueError("features must form a 2-D matrix")
    return X


def hinge_objective(weights: np.ndarray, bias: float, X: np.ndarray, y: np.ndarray, C: float) -> float:
    """Primal objective value; the bias participates in the regularizer."""
    margins = y * (X @ weights + bias)
    hinge = np.maximum(0.0, 1.0 - margins).sum()
    return 0.5 * (weights @ weights + bias * bias) + C * hinge


def train(
    features: Sequence[FeatureVector] | np.ndarray,
    labels: Sequence[int],
    hyper: Hyper = Hyper(),
    seed: int = 0,
) -> LinearModel:
    """Fit the soft-margin classifier. Deterministic for a given seed (the
    seed fixes the coordinate sweep order)."""
    X = _as_matrix(features)
    y = np.asarray(labels, dtype=np.float64)
    n, d = X.shape
    if d == 0:
        raise ValueError("feature space is empty")
    if y.shape != (n,):
        raise ValueError("labels length does not match feature count")
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise ValueError("labels must be +1/-1")
    if (y > 0).sum() == 0 or (y < 0).sum() == 0:
        raise ValueError("training needs at least one example of each class")
    if not np.all(np.isfinite(X)):
        raise ValueError("features contain non-finite values")

    X_aug = np.ascontiguousarray(np.hstack([X, np.ones((n, 1))]))
    order = np.random.default_rng(seed).permutation(n).astype(np.int64)
    w_aug, _, _ = _kernels.svm_dual_cd(
        X_aug, y, float(hyper.C), float(hyper.tol), int(hyper.max_iter), order
    )
    return LinearModel(weights=w_aug[:-1].copy(), bias=float(w_aug[-1]), hyper=hyper)


def predict(model: LinearModel, fv: FeatureVector | np.ndarray) -> tuple[int, float]:
    """Decision rule sign(w.x + b); an exact zero margin maps to +1."""
    x = fv.values if isinstance(fv, FeatureVector) else np.asarray(fv, dtype=np.float64)
    if x.shape != model.weights.shape:
        raise ValueError(
            f"dimension mismatch: feature has {x.shape[0]}, model has {model.weights.shape[0]}"
        )
    margin = float(model.weights @ x + model.bias)
    return (1 if margin >= 0.0 else -1), margin


def f1(precision: float, recall: float) -> float:
    """Harmonic mean, with the degenerate 0/0 case defined as 0."""
    if not (0.0 <= precision <= 1.0) or not (0.0 <= recall <= 1.0):
        raise ValueError("precision and recall must be in [0, 1]")
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _fold_metrics(y_true: np.ndarray, y_pred: np.ndarray) -> tuple[float, float, float]:
    tp = int(((y_pred == 1) & (y_true == 1)).sum())
    fp = int(((y_pred == 1) & (y_true == -1)).sum())
    fn = int(((y_pred == -1) & (y_true == 1)).sum())
    p = tp / (tp + fp) if tp + fp > 0 else 0.0
    r = tp / (tp + fn) if tp + fn > 0 else 0.0
    return p, r, f1(p, r)


def stratified_folds(labels: Sequence[int], k: int, seed: int = 0) -> list[np.ndarray]:
    """Seeded stratified partition: each class is shuffled then dealt
    round-robin, so every example lands in exactly one test fold."""
    y = np.asarray(labels)
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in (1, -1):
        idx = np.flatnonzero(y == cls)
        if len(idx) < k:
            raise ValueError(
                f"class {cls:+d} has {len(idx)} examples, fewer than k={k} folds"
            )
        idx = idx[rng.permutation(len(idx))]
        for j, i in enumerate(idx):
            folds[j % k].append(int(i))
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


def kfold_evaluate(
    features: Sequence[FeatureVector] | np.ndarray,
    labels: Sequence[int],
    k: int = 5,
    hyper: Hyper = Hyper(),
    seed: int = 0,
) -> Metrics:
    """Mean precision/recall/F1 over the k held-out folds."""
    X = _as_matrix(features)
    y = np.asarray(labels, dtype=np.int64)
    folds = stratified_folds(y, k, seed)
    per_fold = []
    for f, test_idx in enumerate(folds):
        mask = np.ones(len(y), dtype=bool)
        mask[test_idx] = False
        model = train(X[mask], y[mask], hyper, seed=seed + f)
        margins = X[test_idx] @ model.weights + model.bias
        preds = np.where(margins >= 0.0, 1, -1)
        per_fold.append(_fold_metrics(y[test_idx], preds))
    arr = np.array(per_fold)
    return Metrics(
        precision=float(arr[:, 0].mean()),
        recall=float(arr[:, 1].mean()),
        f1=float(arr[:, 2].mean()),
        per_fold=tuple(tuple(row) for row in per_fold),
    )


def save_model(model: LinearModel, path: str | Path) -> None:
    """Flat text format: one ``feature_index,weight`` line per coordinate
    plus a final ``bias`` line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("feature_index,weight\n")
        for i, w in enumerate(model.weights):
            fh.write(f"{i},{float(w)!r}\n")
        fh.write(f"bias,{float(model.bias)!r}\n")


def load_model(path: str | Path, hyper: Hyper = Hyper()) -> LinearModel:
    path = Path(path)
    weights: dict[int, float] = {}
    bias = None
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "feature_index,weight":
            raise ValueError(f"{path.name}: expected header 'feature_index,weight'")
        for line in fh:
            key, value = line.strip().split(",", 1)
            if key == "bias":
                bias = float(value)
            else:
                weights[int(key)] = float(value)
    if bias is None:
        raise ValueError(f"{path.name}: missing bias line")
    vec = np.zeros(len(weights))
    for i, w in weights.items():
        if not 0 <= i < len(weights):
            raise ValueError(f"{path.name}: non-contiguous feature index {i}")
        vec[i] = w
    return LinearModel(weights=vec, bias=bias, hyper=hyper)
