"""Classifier roster: three naive Bayes variants, KNN, and a random forest.

Everything is implemented directly on numpy so that tie-breaking and
determinism are exact contracts rather than library accidents:

* naive Bayes argmax ties resolve to the smallest label,
* KNN breaks distance ties by smaller training-row index and vote ties by
  smaller label,
* the forest derives per-tree seeds from one master seed and votes by
  majority with smallest-label ties.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from .labels import N_LABELS

CLASSIFIER_KINDS = (
    "bernoulli_nb",
    "gaussian_nb",
    "multinomial_nb",
    "knn",
    "random_forest",
)

PERSIST_FORMAT_VERSION = 1


class ClassifyError(ValueError):
    """Invalid training data or classifier configuration."""


@dataclass
class Dataset:
    """Feature matrix with ordinal labels and row identities."""

    X: np.ndarray
    y: np.ndarray
    region_ids: Optional[list[str]] = None

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2:
            raise ClassifyError("X must be a 2-D matrix")
        if self.X.shape[0] != self.y.shape[0]:
            raise ClassifyError(
                f"{self.X.shape[0]} rows but {self.y.shape[0]} labels"
            )
        if not np.all(np.isfinite(self.X)):
            raise ClassifyError("X contains non-finite values")
        if self.y.size and (self.y.min() < 0 or self.y.max() >= N_LABELS):
            raise ClassifyError(f"labels must lie in 0..{N_LABELS - 1}")
        if self.region_ids is None:
            self.region_ids = [f"r{i}" for i in range(self.X.shape[0])]
        elif len(self.region_ids) != self.X.shape[0]:
            raise ClassifyError("region_ids length does not match X")

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.X.shape[0]


def _resolve_classes(
    y: np.ndarray, classes: Optional[Sequence[int]]
) -> list[int]:
    """Sorted class list; declaring classes the data lacks is an error."""
    observed = sorted(int(v) for v in set(y.tolist()))
    if not observed:
        raise ClassifyError("cannot train on an empty dataset")
    if classes is None:
        return observed
    declared = sorted(int(c) for c in classes)
    missing = sorted(set(declared) - set(observed))
    if missing:
        raise ClassifyError(f"classes absent from training data: {missing}")
    extra = sorted(set(observed) - set(declared))
    if extra:
        raise ClassifyError(f"training labels outside declared classes: {extra}")
    return declared


def _check_width(X: np.ndarray, expected: int) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != expected:
        raise ClassifyError(
            f"feature width {X.shape[1]} does not match training width {expected}"
        )
    return X


class TrainedClassifier:
    """Common interface: immutable after training, reentrant predict."""

    kind: str = ""

    def predict(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_payload(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass
class BernoulliNB(TrainedClassifier):
    classes: list[int]
    threshold: float
    log_prior: np.ndarray  # (C,)
    log_p: np.ndarray  # (C, F) log P(feature on | class)
    log_q: np.ndarray  # (C, F) log P(feature off | class)
    kind: str = "bernoulli_nb"

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = _check_width(X, self.log_p.shape[1])
        xb = (X > self.threshold).astype(np.float64)
        ll = self.log_prior + xb @ self.log_p.T + (1.0 - xb) @ self.log_q.T
        picks = np.argmax(ll, axis=1)  # first max = smallest label
        return np.asarray([self.classes[i] for i in picks], dtype=np.int64)

    def to_payload(self) -> dict[str, Any]:
        return {
            "classes": self.classes,
            "threshold": self.threshold,
            "log_prior": self.log_prior.tolist(),
            "log_p": self.log_p.tolist(),
            "log_q": self.log_q.tolist(),
        }


def train_bernoulli_nb(
    data: Dataset,
    binarize_threshold: Optional[float] = None,
    classes: Optional[Sequence[int]] = None,
) -> BernoulliNB:
    """Bernoulli naive Bayes over features binarized at a threshold.

    The default threshold is 1/F, the level of a uniform topic distribution
    when the matrix is a pure width-K topic block; pass an explicit value for
    mixed feature sets. Per-class on-probabilities use add-1 smoothing.
    """
    if binarize_threshold is None:
        binarize_threshold = 1.0 / data.n_features
    if not math.isfinite(binarize_threshold):
        raise ClassifyError("binarize_threshold must be finite")
    cls = _resolve_classes(data.y, classes)
    xb = (data.X > binarize_threshold).astype(np.float64)
    n = len(data)
    log_prior = np.empty(len(cls))
    log_p = np.empty((len(cls), data.n_features))
    log_q = np.empty_like(log_p)
    for ci, c in enumerate(cls):
        rows = xb[data.y == c]
        n_c = rows.shape[0]
        p = (rows.sum(axis=0) + 1.0) / (n_c + 2.0)
        log_prior[ci] = math.log(n_c / n)
        log_p[ci] = np.log(p)
        log_q[ci] = np.log1p(-p)
    return BernoulliNB(
        classes=cls,
        threshold=float(binarize_threshold),
        log_prior=log_prior,
        log_p=log_p,
        log_q=log_q,
    )


@dataclass
class GaussianNB(TrainedClassifier):
    classes: list[int]
    log_prior: np.ndarray  # (C,)
    means: np.ndarray  # (C, F)
    variances: np.ndarray  # (C, F), floored
    kind: str = "gaussian_nb"

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = _check_width(X, self.means.shape[1])
        n_classes = len(self.classes)
        ll = np.empty((X.shape[0], n_classes))
        for ci in range(n_classes):
            mu = self.means[ci]
            var = self.variances[ci]
            ll[:, ci] = self.log_prior[ci] + np.sum(
                -0.5 * np.log(2.0 * np.pi * var) - (X - mu) ** 2 / (2.0 * var),
                axis=1,
            )
        picks = np.argmax(ll, axis=1)
        return np.asarray([self.classes[i] for i in picks], dtype=np.int64)

    def to_payload(self) -> dict[str, Any]:
        return {
            "classes": self.classes,
            "log_prior": self.log_prior.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }


def train_gaussian_nb(
    data: Dataset, classes: Optional[Sequence[int]] = None
) -> GaussianNB:
    """Gaussian naive Bayes with per-class mean/variance per feature.

    Variances are floored at 1e-9 times the largest global feature variance
    so constant features never produce a degenerate density. Every class
    needs at least 2 samples.
    """
    cls = _resolve_classes(data.y, classes)
    n = len(data)
    global_var = data.X.var(axis=0)
    eps = 1e-9 * float(global_var.max()) if global_var.size else 0.0
    if eps == 0.0:
        eps = 1e-9
    log_prior = np.empty(len(cls))
    means = np.empty((len(cls), data.n_features))
    variances = np.empty_like(means)
    for ci, c in enumerate(cls):
        rows = data.X[data.y == c]
        if rows.shape[0] < 2:
            raise ClassifyError(
                f"class {c} has {rows.shape[0]} sample(s); need at least 2"
            )
        log_prior[ci] = math.log(rows.shape[0] / n)
        means[ci] = rows.mean(axis=0)
        variances[ci] = np.maximum(rows.var(axis=0), eps)
    return GaussianNB(
        classes=cls, log_prior=log_prior, means=means, variances=variances
    )


@dataclass
class MultinomialNB(TrainedClassifier):
    classes: list[int]
    count_scale: float
    log_prior: np.ndarray  # (C,)
    log_theta: np.ndarray  # (C, F)
    kind: str = "multinomial_nb"

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = _check_width(X, self.log_theta.shape[1])
        if X.min() < 0:
            raise ClassifyError("multinomial features must be non-negative")
        counts = np.rint(X * self.count_scale)
        ll = self.log_prior + counts @ self.log_theta.T
        picks = np.argmax(ll, axis=1)
        return np.asarray([self.classes[i] for i in picks], dtype=np.int64)

    def to_payload(self) -> dict[str, Any]:
        return {
            "classes": self.classes,
            "count_scale": self.count_scale,
            "log_prior": self.log_prior.tolist(),
            "log_theta": self.log_theta.tolist(),
        }


def train_multinomial_nb(
    data: Dataset,
    count_scale: float = 1000.0,
    classes: Optional[Sequence[int]] = None,
) -> MultinomialNB:
    """Multinomial naive Bayes over pseudo-counts.

    Continuous proportions are converted to integer pseudo-counts by scaling
    (default 1000x) and rounding, then smoothed add-1; the same conversion is
    applied at predict time.
    """
    if count_scale <= 0:
        raise ClassifyError("count_scale must be > 0")
    if data.X.min() < 0:
        raise ClassifyError("multinomial features must be non-negative")
    cls = _resolve_classes(data.y, classes)
    counts = np.rint(data.X * count_scale)
    n = len(data)
    f = data.n_features
    log_prior = np.empty(len(cls))
    log_theta = np.empty((len(cls), f))
    for ci, c in enumerate(cls):
        rows = counts[data.y == c]
        totals = rows.sum(axis=0)
        log_prior[ci] = math.log(rows.shape[0] / n)
        log_theta[ci] = np.log((totals + 1.0) / (totals.sum() + f))
    return MultinomialNB(
        classes=cls,
        count_scale=float(count_scale),
        log_prior=log_prior,
        log_theta=log_theta,
    )


@dataclass
class KNN(TrainedClassifier):
    k: int
    metric: str
    X_train: np.ndarray
    y_train: np.ndarray
    kind: str = "knn"

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = _check_width(X, self.X_train.shape[1])
        out = np.empty(X.shape[0], dtype=np.int64)
        for i, row in enumerate(X):
            diff = self.X_train - row
            if self.metric == "euclidean":
                dist = np.sum(diff * diff, axis=1)  # squared; same ordering
            else:
                dist = np.sum(np.abs(diff), axis=1)
            # stable sort: equal distances keep ascending row-index order
            order = np.argsort(dist, kind="stable")[: self.k]
            votes = np.bincount(self.y_train[order], minlength=N_LABELS)
            out[i] = int(votes.argmax())  # argmax ties -> smallest label
        return out

    def to_payload(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "metric": self.metric,
            "X_train": self.X_train.tolist(),
            "y_train": self.y_train.tolist(),
        }


def train_knn(data: Dataset, k: int, metric: str = "euclidean") -> KNN:
    """K-nearest-neighbors; stores the training set verbatim."""
    if metric not in ("euclidean", "manhattan"):
        raise ClassifyError(f"unsupported metric {metric!r}")
    if k < 1 or k > len(data):
        raise ClassifyError(f"k={k} outside [1, {len(data)}]")
    return KNN(
        k=k,
        metric=metric,
        X_train=data.X.copy(),
        y_train=data.y.copy(),
    )


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p * p))


def _majority(y: np.ndarray) -> int:
    return int(np.bincount(y, minlength=N_LABELS).argmax())


def _build_tree(
    X: np.ndarray,
    y: np.ndarray,
    depth: int,
    max_depth: Optional[int],
    min_leaf: int,
    mtry: int,
    rng: np.random.Generator,
) -> dict[str, Any]:
    n = X.shape[0]
    if (
        (max_depth is not None and depth >= max_depth)
        or n < 2 * min_leaf
        or np.all(y == y[0])
    ):
        return {"leaf": _majority(y)}
    feat_ids = rng.choice(X.shape[1], size=mtry, replace=False)
    best: Optional[tuple[float, int, float]] = None
    for f in feat_ids:
        col = X[:, f]
        values = np.unique(col)
        if values.size < 2:
            continue
        for t in (values[:-1] + values[1:]) / 2.0:
            mask = col <= t
            n_left = int(mask.sum())
            if n_left < min_leaf or n - n_left < min_leaf:
                continue
            g = (
                n_left * _gini(np.bincount(y[mask], minlength=N_LABELS))
                + (n - n_left) * _gini(np.bincount(y[~mask], minlength=N_LABELS))
            ) / n
            if best is None or g < best[0]:
                best = (g, int(f), float(t))
    if best is None:
        return {"leaf": _majority(y)}
    _, f, t = best
    mask = X[:, f] <= t
    return {
        "f": f,
        "t": t,
        "l": _build_tree(X[mask], y[mask], depth + 1, max_depth, min_leaf, mtry, rng),
        "r": _build_tree(X[~mask], y[~mask], depth + 1, max_depth, min_leaf, mtry, rng),
    }


def _tree_predict(node: Mapping[str, Any], row: np.ndarray) -> int:
    while "leaf" not in node:
        node = node["l"] if row[node["f"]] <= node["t"] else node["r"]
    return int(node["leaf"])


@dataclass
class RandomForest(TrainedClassifier):
    n_trees: int
    max_depth: Optional[int]
    min_leaf: int
    seed: int
    n_features: int
    trees: list[dict[str, Any]]
    kind: str = "random_forest"

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = _check_width(X, self.n_features)
        out = np.empty(X.shape[0], dtype=np.int64)
        for i, row in enumerate(X):
            votes = np.zeros(N_LABELS, dtype=np.int64)
            for tree in self.trees:
                votes[_tree_predict(tree, row)] += 1
            out[i] = int(votes.argmax())
        return out

    def to_payload(self) -> dict[str, Any]:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "seed": self.seed,
            "n_features": self.n_features,
            "trees": self.trees,
        }


def train_random_forest(
    data: Dataset,
    n_trees: int = 50,
    max_depth: Optional[int] = None,
    min_leaf: int = 1,
    seed: int = 0,
) -> RandomForest:
    """Bagged CART forest: Gini splits, sqrt(F) features per split.

    Each tree gets a bootstrap sample and its own generator spawned from the
    master seed, so results are reproducible and independent of training
    order. max_depth=0 degenerates every tree to the training majority label.
    """
    if n_trees < 1:
        raise ClassifyError("n_trees must be >= 1")
    if min_leaf < 1:
        raise ClassifyError("min_leaf must be >= 1")
    if len(data) == 0:
        raise ClassifyError("cannot train on an empty dataset")
    mtry = max(1, int(math.sqrt(data.n_features)))
    seeds = np.random.SeedSequence(seed).spawn(n_trees)
    trees: list[dict[str, Any]] = []
    n = len(data)
    for child in seeds:
        rng = np.random.default_rng(child)
        boot = rng.integers(0, n, size=n)
        trees.append(
            _build_tree(
                data.X[boot], data.y[boot], 0, max_depth, min_leaf, mtry, rng
            )
        )
    return RandomForest(
        n_trees=n_trees,
        max_depth=max_depth,
        min_leaf=min_leaf,
        seed=seed,
        n_features=data.n_features,
        trees=trees,
    )


def accuracy(predicted: Sequence[int], true: Sequence[int]) -> float:
    """Fraction of exactly matching labels."""
    if len(predicted) != len(true):
        raise ClassifyError(
            f"length mismatch: {len(predicted)} predictions vs {len(true)} labels"
        )
    if len(true) == 0:
        raise ClassifyError("cannot score zero examples")
    p = np.asarray(predicted)
    t = np.asarray(true)
    return float(np.mean(p == t))


def train_classifier(
    kind: str, data: Dataset, params: Optional[Mapping[str, Any]] = None
) -> TrainedClassifier:
    """Dispatch by kind name; params pass through to the specific trainer."""
    params = dict(params or {})
    if kind == "bernoulli_nb":
        return train_bernoulli_nb(data, **params)
    if kind == "gaussian_nb":
        return train_gaussian_nb(data, **params)
    if kind == "multinomial_nb":
        return train_multinomial_nb(data, **params)
    if kind == "knn":
        return train_knn(data, **params)
    if kind == "random_forest":
        return train_random_forest(data, **params)
    raise ClassifyError(
        f"unknown classifier {kind!r}; expected one of {CLASSIFIER_KINDS}"
    )


def save_classifier(clf: TrainedClassifier, path: str) -> None:
    """Persist any trained classifier as versioned JSON."""
    doc = {
        "format_version": PERSIST_FORMAT_VERSION,
        "kind": clf.kind,
        "payload": clf.to_payload(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_classifier(path: str) -> TrainedClassifier:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != PERSIST_FORMAT_VERSION:
        raise ClassifyError(
            f"unsupported model format {doc.get('format_version')!r} in {path}"
        )
    kind = doc.get("kind")
    p = doc.get("payload", {})
    if kind == "bernoulli_nb":
        return BernoulliNB(
            classes=[int(c) for c in p["classes"]],
            threshold=float(p["threshold"]),
            log_prior=np.asarray(p["log_prior"]),
            log_p=np.asarray(p["log_p"]),
            log_q=np.asarray(p["log_q"]),
        )
    if kind == "gaussian_nb":
        return GaussianNB(
            classes=[int(c) for c in p["classes"]],
            log_prior=np.asarray(p["log_prior"]),
            means=np.asarray(p["means"]),
            variances=np.asarray(p["variances"]),
        )
    if kind == "multinomial_nb":
        return MultinomialNB(
            classes=[int(c) for c in p["classes"]],
            count_scale=float(p["count_scale"]),
            log_prior=np.asarray(p["log_prior"]),
            log_theta=np.asarray(p["log_theta"]),
        )
    if kind == "knn":
        return KNN(
            k=int(p["k"]),
            metric=p["metric"],
            X_train=np.asarray(p["X_train"], dtype=np.float64),
            y_train=np.asarray(p["y_train"], dtype=np.int64),
        )
    if kind == "random_forest":
        return RandomForest(
            n_trees=int(p["n_trees"]),
            max_depth=p["max_depth"],
            min_leaf=int(p["min_leaf"]),
            seed=int(p["seed"]),
            n_features=int(p["n_features"]),
            trees=p["trees"],
        )
    raise ClassifyError(f"unknown classifier kind {kind!r} in {path}")


def write_predictions_csv(
    region_ids: Sequence[str],
    true_labels: Sequence[int],
    predicted_labels: Sequence[int],
    path: str,
) -> None:
    """CSV export: region_id,true_label,predicted_label."""
    if not (len(region_ids) == len(true_labels) == len(predicted_labels)):
        raise ClassifyError("prediction export length mismatch")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["region_id", "true_label", "predicted_label"])
        for rid, t, p in zip(region_ids, true_labels, predicted_labels):
            writer.writerow([rid, int(t), int(p)])
