"""Small native classifier suite: kNN, naive Bayes, decision tree, perceptron.

These stand in for a full toolkit when populating performance matrices.
They handle mixed numeric/categorical features: kNN and the perceptron see a
one-hot + min-max encoded design matrix (statistics from the training fold
only), naive Bayes and the decision tree consume the typed columns directly.
Everything is deterministic given the seed passed at construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError
from .seeds import normalize_seed

__all__ = ["make_learner", "LEARNER_DEFAULTS"]

LEARNER_DEFAULTS: dict[str, dict[str, object]] = {
    "knn": {"k": 5, "weighting": "uniform"},
    "naive_bayes": {"laplace_alpha": 1.0},
    "decision_tree": {"max_depth": 10, "min_split": 2},
    "perceptron": {"learning_rate": 0.01, "epochs": 50},
}


@dataclass(frozen=True)
class Column:
    """One typed feature column of a (training or test) fold."""

    name: str
    kind: str  # "numeric" | "categorical"
    values: np.ndarray


class _FoldEncoder:
    """One-hot categorical + per-fold min-max numeric scaling."""

    def fit(self, columns: Sequence[Column]) -> "_FoldEncoder":
        self._spec = []
        for col in columns:
            if col.kind == "numeric":
                lo = float(np.min(col.values))
                hi = float(np.max(col.values))
                self._spec.append(("numeric", lo, hi))
            else:
                cats = sorted(str(v) for v in set(col.values.tolist()))
                self._spec.append(("categorical", cats, None))
        return self

    def transform(self, columns: Sequence[Column]) -> np.ndarray:
        n = len(columns[0].values)
        blocks = []
        for col, (kind, a, b) in zip(columns, self._spec):
            if kind == "numeric":
                lo, hi = a, b
                x = col.values.astype(float)
                if hi > lo:
                    blocks.append(((x - lo) / (hi - lo))[:, None])
                else:
                    blocks.append(np.zeros((n, 1)))
            else:
                onehot = np.zeros((n, len(a)))
                index = {cat: p for p, cat in enumerate(a)}
                for i, v in enumerate(col.values):
                    p = index.get(str(v))
                    if p is not None:
                        onehot[i, p] = 1.0
                blocks.append(onehot)
        return np.hstack(blocks) if blocks else np.zeros((n, 0))


def _sorted_classes(labels: np.ndarray) -> list[str]:
    return sorted(set(str(v) for v in labels.tolist()))


class KNearestClassifier:
    def __init__(self, k=5, weighting="uniform", seed=0):
        if int(k) < 1:
            raise ConfigurationError("knn: k must be >= 1")
        if weighting not in ("uniform", "inverse_distance"):
            raise ConfigurationError(f"knn: unknown weighting {weighting!r}")
        self.k = int(k)
        self.weighting = weighting

    def fit(self, columns, labels):
        self._encoder = _FoldEncoder().fit(columns)
        self._X = self._encoder.transform(columns)
        self._classes = _sorted_classes(labels)
        index = {c: i for i, c in enumerate(self._classes)}
        self._y = np.array([index[str(v)] for v in labels])
        return self

    def predict(self, columns):
        X = self._encoder.transform(columns)
        k = min(self.k, len(self._y))
        out = []
        for x in X:
            d = np.sqrt(((self._X - x) ** 2).sum(axis=1))
            nearest = np.argsort(d, kind="stable")[:k]
            votes = np.zeros(len(self._classes))
            if self.weighting == "uniform":
                for idx in nearest:
                    votes[self._y[idx]] += 1.0
            else:
                for idx in nearest:
                    votes[self._y[idx]] += 1.0 / (d[idx] + 1e-12)
            out.append(self._classes[int(np.argmax(votes))])
        return np.array(out, dtype=object)


class NaiveBayesClassifier:
    """Hybrid NB: Laplace-smoothed categorical tables + Gaussian numerics."""

    def __init__(self, laplace_alpha=1.0, seed=0):
        if float(laplace_alpha) < 0:
            raise ConfigurationError("naive_bayes: laplace_alpha must be >= 0")
        self.alpha = float(laplace_alpha)

    def fit(self, columns, labels):
        self._classes = _sorted_classes(labels)
        y = np.array([str(v) for v in labels])
        n = len(y)
        self._log_prior = {}
        self._models = []  # per column: ("cat", tables, n_values) | ("num", mean, var)
        class_rows = {c: np.nonzero(y == c)[0] for c in self._classes}
        for c in self._classes:
            self._log_prior[c] = np.log(len(class_rows[c]) / n)
        for col in columns:
            if col.kind == "categorical":
                vals = [str(v) for v in col.values.tolist()]
                universe = sorted(set(vals))
                tables = {}
                for c in self._classes:
                    counts = {u: 0 for u in universe}
                    for i in class_rows[c]:
                        counts[vals[i]] += 1
                    tables[c] = counts
                self._models.append(("cat", tables, len(universe)))
            else:
                x = col.values.astype(float)
                stats = {}
                for c in self._classes:
                    xs = x[class_rows[c]]
                    stats[c] = (float(xs.mean()), float(xs.var()) + 1e-9)
                self._models.append(("num", stats, None))
        return self

    def _log_likelihood(self, col_value, model, cls):
        kind, data, extra = model
        if kind == "cat":
            counts = data[cls]
            count = counts.get(str(col_value), 0)
            total = sum(counts.values())
            p = (count + self.alpha) / (total + self.alpha * extra)
            return np.log(max(p, 1e-300))
        mean, var = data[cls]
        x = float(col_value)
        return -0.5 * (np.log(2.0 * np.pi * var) + (x - mean) ** 2 / var)

    def predict(self, columns):
        n = len(columns[0].values)
        out = []
        for i in range(n):
            best_cls, best_score = None, -np.inf
            for c in self._classes:
                score = self._log_prior[c]
                for col, model in zip(columns, self._models):
                    score += self._log_likelihood(col.values[i], model, c)
                if score > best_score:
                    best_cls, best_score = c, score
            out.append(best_cls)
        return np.array(out, dtype=object)


class DecisionTreeClassifier:
    """CART-style tree: numeric threshold and categorical equality splits, Gini."""

    _MAX_THRESHOLDS = 32

    def __init__(self, max_depth=10, min_split=2, seed=0):
        if int(max_depth) < 0:
            raise ConfigurationError("decision_tree: max_depth must be >= 0")
        if int(min_split) < 2:
            raise ConfigurationError("decision_tree: min_split must be >= 2")
        self.max_depth = int(max_depth)
        self.min_split = int(min_split)

    def fit(self, columns, labels):
        self._classes = _sorted_classes(labels)
        index = {c: i for i, c in enumerate(self._classes)}
        y = np.array([index[str(v)] for v in labels])
        self._columns = columns
        self._tree = self._build(columns, y, depth=0)
        return self

    def _majority(self, y):
        counts = np.bincount(y, minlength=len(self._classes))
        return int(np.argmax(counts))  # argmax takes the smallest class on ties

    @staticmethod
    def _gini(y, n_classes):
        if len(y) == 0:
            return 0.0
        p = np.bincount(y, minlength=n_classes) / len(y)
        return 1.0 - float((p * p).sum())

    def _candidate_splits(self, col):
        if col.kind == "numeric":
            x = col.values.astype(float)
            uniq = np.unique(x)
            if len(uniq) < 2:
                return []
            mids = (uniq[:-1] + uniq[1:]) / 2.0
            if len(mids) > self._MAX_THRESHOLDS:
                pick = np.linspace(0, len(mids) - 1, self._MAX_THRESHOLDS)
                mids = mids[np.round(pick).astype(int)]
            return [("le", float(t)) for t in mids]
        cats = sorted(set(str(v) for v in col.values.tolist()))
        if len(cats) < 2:
            return []
        return [("eq", c) for c in cats]

    @staticmethod
    def _split_mask(col, kind, pivot):
        if kind == "le":
            return col.values.astype(float) <= pivot
        return np.array([str(v) == pivot for v in col.values])

    def _build(self, columns, y, depth):
        n = len(y)
        K = len(self._classes)
        leaf = ("leaf", self._majority(y))
        if depth >= self.max_depth or n < self.min_split or len(set(y.tolist())) == 1:
            return leaf
        parent = self._gini(y, K)
        best = None
        for j, col in enumerate(columns):
            for kind, pivot in self._candidate_splits(col):
                mask = self._split_mask(col, kind, pivot)
                n_left = int(mask.sum())
                if n_left == 0 or n_left == n:
                    continue
                g = (
                    n_left * self._gini(y[mask], K)
                    + (n - n_left) * self._gini(y[~mask], K)
                ) / n
                gain = parent - g
                if best is None or gain > best[0] + 1e-12:
                    best = (gain, j, kind, pivot, mask)
        if best is None or best[0] <= 1e-12:
            return leaf
        _, j, kind, pivot, mask = best
        left_cols = [Column(c.name, c.kind, c.values[mask]) for c in columns]
        right_cols = [Column(c.name, c.kind, c.values[~mask]) for c in columns]
        left = self._build(left_cols, y[mask], depth + 1)
        right = self._build(right_cols, y[~mask], depth + 1)
        return ("split", j, kind, pivot, left, right)

    def _walk(self, node, columns, i):
        while node[0] == "split":
            _, j, kind, pivot, left, right = node
            value = columns[j].values[i]
            if kind == "le":
                node = left if float(value) <= pivot else right
            else:
                node = left if str(value) == pivot else right
        return node[1]

    def predict(self, columns):
        n = len(columns[0].values)
        return np.array(
            [self._classes[self._walk(self._tree, columns, i)] for i in range(n)],
            dtype=object,
        )


class PerceptronClassifier:
    """Multiclass perceptron on the encoded design matrix, seeded epoch shuffles."""

    def __init__(self, learning_rate=0.01, epochs=50, seed=0):
        if float(learning_rate) <= 0:
            raise ConfigurationError("perceptron: learning_rate must be > 0")
        if int(epochs) < 1:
            raise ConfigurationError("perceptron: epochs must be >= 1")
        self.learning_rate = float(learning_rate)
        self.epochs = int(epochs)
        self.seed = normalize_seed(seed)

    def fit(self, columns, labels):
        self._encoder = _FoldEncoder().fit(columns)
        X = self._encoder.transform(columns)
        X = np.hstack([X, np.ones((X.shape[0], 1))])  # bias column
        self._classes = _sorted_classes(labels)
        index = {c: i for i, c in enumerate(self._classes)}
        y = np.array([index[str(v)] for v in labels])
        W = np.zeros((len(self._classes), X.shape[1]))
        rng = np.random.default_rng(self.seed)
        for _ in range(self.epochs):
            for i in rng.permutation(len(y)):
                scores = W @ X[i]
                pred = int(np.argmax(scores))
                if pred != y[i]:
                    W[y[i]] += self.learning_rate * X[i]
                    W[pred] -= self.learning_rate * X[i]
        self._W = W
        return self

    def predict(self, columns):
        X = self._encoder.transform(columns)
        X = np.hstack([X, np.ones((X.shape[0], 1))])
        picks = np.argmax(X @ self._W.T, axis=1)
        return np.array([self._classes[int(p)] for p in picks], dtype=object)


_LEARNERS = {
    "knn": KNearestClassifier,
    "naive_bayes": NaiveBayesClassifier,
    "decision_tree": DecisionTreeClassifier,
    "perceptron": PerceptronClassifier,
}


def make_learner(algorithm: str, params: Mapping[str, object], seed: int = 0):
    """Instantiate a native learner with defaults filled for absent params."""
    if algorithm not in _LEARNERS:
        raise ConfigurationError(
            f"unknown algorithm {algorithm!r}; known: " + ", ".join(sorted(_LEARNERS))
        )
    merged = dict(LEARNER_DEFAULTS[algorithm])
    unknown = set(params) - set(merged)
    if unknown:
        raise ConfigurationError(
            f"{algorithm}: unknown hyperparameters {sorted(unknown)}"
        )
    merged.update(params)
    return _LEARNERS[algorithm](**merged, seed=seed)
