"""Produce performance matrices: native learners on real small datasets via
random hyperparameter search, or synthetic low-rank matrices for verification.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence, TextIO

import numpy as np

from .errors import ConfigurationError, EvaluationError
from .learners import Column, make_learner
from .matrix import Configuration, PerformanceMatrix, validate_registry
from .seeds import child_seed, normalize_seed

__all__ = [
    "Dataset",
    "Column",
    "IntRange",
    "FloatRange",
    "LogFloatRange",
    "Choice",
    "LearnerSpec",
    "load_dataset",
    "default_learner_specs",
    "specs_from_json",
    "sample_configs",
    "evaluate_config",
    "build_matrix",
    "gen_synthetic",
    "cell_seed",
    "config_sample_seed",
]


@dataclass(frozen=True)
class Dataset:
    """Labeled tabular classification data with typed feature columns."""

    name: str
    columns: tuple[Column, ...]
    labels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        labels = np.array([str(v) for v in self.labels], dtype=object)
        object.__setattr__(self, "labels", labels)
        n = len(labels)
        if n < 2:
            raise ValueError(f"dataset {self.name}: needs at least 2 instances")
        if not self.columns:
            raise ValueError(f"dataset {self.name}: needs at least 1 feature")
        for col in self.columns:
            if len(col.values) != n:
                raise ValueError(
                    f"dataset {self.name}: column {col.name} length mismatch"
                )
        if any(v == "" for v in labels):
            raise ValueError(f"dataset {self.name}: missing labels are not allowed")

    @property
    def n_instances(self) -> int:
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return len(self.columns)

    def class_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for v in self.labels:
            counts[v] = counts.get(v, 0) + 1
        return counts

    def subset(self, idx: np.ndarray) -> tuple[list[Column], np.ndarray]:
        cols = [Column(c.name, c.kind, c.values[idx]) for c in self.columns]
        return cols, self.labels[idx]


def _infer_kind(raw: list[str]) -> str:
    for v in raw:
        if v == "":
            return "categorical"
        try:
            float(v)
        except ValueError:
            return "categorical"
    return "numeric"


def load_dataset(source: str | TextIO | Path, name: str | None = None) -> Dataset:
    """Read a dataset CSV (header row, last column is the class label).

    Rows with an empty label are dropped.  A feature column is numeric when
    every field parses as a float, otherwise categorical.
    """
    if isinstance(source, Path):
        name = name or source.stem
        text = source.read_text(encoding="utf-8")
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("dataset CSV is empty") from None
    if len(header) < 2:
        raise ValueError("dataset CSV needs at least one feature and a label column")
    rows = [line for line in reader if line and line[-1] != ""]
    feature_names = header[:-1]
    columns = []
    for j, fname in enumerate(feature_names):
        raw = [line[j] for line in rows]
        kind = _infer_kind(raw)
        if kind == "numeric":
            values = np.array([float(v) for v in raw])
        else:
            values = np.array(raw, dtype=object)
        columns.append(Column(fname, kind, values))
    labels = np.array([line[-1] for line in rows], dtype=object)
    return Dataset(name or "dataset", tuple(columns), labels)


# --------------------------------------------------------------------------
# hyperparameter sampling
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class IntRange:
    low: int
    high: int  # inclusive

    def __post_init__(self):
        if self.high < self.low:
            raise ConfigurationError(f"empty integer range [{self.low}, {self.high}]")

    def draw(self, rng) -> int:
        return int(rng.integers(self.low, self.high + 1))

    def contains(self, v) -> bool:
        return isinstance(v, (int, np.integer)) and self.low <= v <= self.high


@dataclass(frozen=True)
class FloatRange:
    low: float
    high: float

    def __post_init__(self):
        if self.high < self.low:
            raise ConfigurationError(f"empty range [{self.low}, {self.high}]")

    def draw(self, rng) -> float:
        return float(rng.uniform(self.low, self.high))

    def contains(self, v) -> bool:
        return isinstance(v, (int, float, np.floating)) and self.low <= v <= self.high


@dataclass(frozen=True)
class LogFloatRange:
    low: float
    high: float

    def __post_init__(self):
        if self.low <= 0 or self.high < self.low:
            raise ConfigurationError(
                f"log-uniform range needs 0 < low <= high, got [{self.low}, {self.high}]"
            )

    def draw(self, rng) -> float:
        return float(np.exp(rng.uniform(math.log(self.low), math.log(self.high))))

    def contains(self, v) -> bool:
        return isinstance(v, (int, float, np.floating)) and self.low <= v <= self.high


@dataclass(frozen=True)
class Choice:
    values: tuple

    def __post_init__(self):
        if not self.values:
            raise ConfigurationError("empty categorical choice set")
        object.__setattr__(self, "values", tuple(self.values))

    def draw(self, rng):
        return self.values[int(rng.integers(len(self.values)))]

    def contains(self, v) -> bool:
        return v in self.values


@dataclass(frozen=True)
class LearnerSpec:
    """Sampling ranges and the default setting for one learning algorithm."""

    algorithm: str
    ranges: Mapping[str, object]
    default_params: Mapping[str, object]

    def __post_init__(self):
        object.__setattr__(self, "ranges", dict(self.ranges))
        object.__setattr__(self, "default_params", dict(self.default_params))
        if not self.ranges:
            raise ConfigurationError(f"{self.algorithm}: no hyperparameter ranges")
        for name, value in self.default_params.items():
            r = self.ranges.get(name)
            if r is None:
                raise ConfigurationError(
                    f"{self.algorithm}: default names unknown hyperparameter {name!r}"
                )
            if not r.contains(value):
                raise ConfigurationError(
                    f"{self.algorithm}: default {name}={value!r} outside its range"
                )


def default_learner_specs() -> list[LearnerSpec]:
    """The stock native-learner search spaces and defaults."""
    return [
        LearnerSpec(
            "knn",
            {
                "k": IntRange(1, 25),
                "weighting": Choice(("uniform", "inverse_distance")),
            },
            {"k": 5, "weighting": "uniform"},
        ),
        LearnerSpec(
            "naive_bayes",
            {"laplace_alpha": LogFloatRange(1e-3, 10.0)},
            {"laplace_alpha": 1.0},
        ),
        LearnerSpec(
            "decision_tree",
            {"max_depth": IntRange(1, 20), "min_split": IntRange(2, 20)},
            {"max_depth": 10, "min_split": 2},
        ),
        LearnerSpec(
            "perceptron",
            {
                "learning_rate": LogFloatRange(1e-4, 1.0),
                "epochs": IntRange(5, 200),
            },
            {"learning_rate": 0.01, "epochs": 50},
        ),
    ]


_RANGE_PARSERS = {
    "int": lambda d: IntRange(int(d["low"]), int(d["high"])),
    "float": lambda d: FloatRange(float(d["low"]), float(d["high"])),
    "log_float": lambda d: LogFloatRange(float(d["low"]), float(d["high"])),
    "choice": lambda d: Choice(tuple(d["values"])),
}


def specs_from_json(source: str | TextIO) -> list[LearnerSpec]:
    """Parse learner specs from JSON: [{algorithm, ranges: {name: {type,...}}, default}]."""
    text = source if isinstance(source, str) else source.read()
    raw = json.loads(text)
    specs = []
    for item in raw:
        ranges = {}
        for name, rd in item["ranges"].items():
            kind = rd.get("type")
            if kind not in _RANGE_PARSERS:
                raise ConfigurationError(f"unknown range type {kind!r} for {name}")
            ranges[name] = _RANGE_PARSERS[kind](rd)
        specs.append(LearnerSpec(item["algorithm"], ranges, item.get("default", {})))
    return specs


def config_sample_seed(master_seed: int, spec_index: int) -> int:
    return child_seed(master_seed, 0, spec_index)


def cell_seed(master_seed: int, row_index: int, col_index: int) -> int:
    return child_seed(master_seed, 1, row_index, col_index)


def sample_configs(spec: LearnerSpec, n: int, seed: int) -> list[Configuration]:
    """Draw n configurations i.i.d. from the spec's ranges, plus the default.

    The default is appended as configuration n+1 with is_default=True.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(normalize_seed(seed))
    configs = []
    for i in range(n):
        params = {name: r.draw(rng) for name, r in spec.ranges.items()}
        configs.append(
            Configuration(f"{spec.algorithm}:{i:03d}", spec.algorithm, params, False)
        )
    configs.append(
        Configuration(
            f"{spec.algorithm}:default",
            spec.algorithm,
            dict(spec.default_params),
            True,
        )
    )
    return configs


# --------------------------------------------------------------------------
# cross-validated evaluation
# --------------------------------------------------------------------------

def _stratified_folds(labels: np.ndarray, folds: int, rng) -> np.ndarray:
    """Fold index per instance: per-class shuffle, then round-robin deal."""
    fold_of = np.empty(len(labels), dtype=int)
    for cls in sorted(set(labels.tolist())):
        idx = np.nonzero(labels == cls)[0]
        idx = idx[rng.permutation(len(idx))]
        for pos, i in enumerate(idx):
            fold_of[i] = pos % folds
    return fold_of


def evaluate_config(
    d: Dataset,
    algorithm: str,
    config: Configuration,
    folds: int,
    seed: int,
) -> float:
    """Stratified k-fold CV accuracy (percent) of one configuration.

    Accuracy is pooled over folds: total correct / total instances * 100, so
    the result is exact rational arithmetic regardless of fold sizes.
    """
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    counts = d.class_counts()
    smallest = min(counts.values())
    if folds > smallest:
        raise ValueError(
            f"stratification infeasible: folds={folds} exceeds the smallest "
            f"class count {smallest} in dataset {d.name}"
        )
    rng = np.random.default_rng(normalize_seed(seed))
    fold_of = _stratified_folds(d.labels, folds, rng)
    correct = 0
    for f in range(folds):
        test_idx = np.nonzero(fold_of == f)[0]
        train_idx = np.nonzero(fold_of != f)[0]
        train_cols, train_labels = d.subset(train_idx)
        test_cols, test_labels = d.subset(test_idx)
        model = make_learner(algorithm, config.params, seed=child_seed(seed, f))
        model.fit(train_cols, train_labels)
        pred = model.predict(test_cols)
        correct += int((pred == test_labels).sum())
    return 100.0 * correct / d.n_instances


def build_matrix(
    datasets: Sequence[Dataset],
    specs: Sequence[LearnerSpec],
    n_per_learner: int,
    folds: int,
    seed: int,
) -> tuple[PerformanceMatrix, list[Configuration]]:
    """Evaluate one shared sampled configuration list on every dataset.

    Configurations are sampled once per spec (so CF columns mean the same
    thing on every row) and the resulting matrix is fully observed.
    """
    if not datasets or not specs:
        raise ValueError("datasets and specs must be non-empty")
    registry: list[Configuration] = []
    for s_idx, spec in enumerate(specs):
        registry.extend(
            sample_configs(spec, n_per_learner, config_sample_seed(seed, s_idx))
        )
    validate_registry(registry)
    cells: dict[tuple[int, int], float] = {}
    for r, dataset in enumerate(datasets):
        for c, cfg in enumerate(registry):
            try:
                acc = evaluate_config(
                    dataset, cfg.algorithm, cfg, folds, cell_seed(seed, r, c)
                )
            except Exception as exc:
                raise EvaluationError(
                    f"evaluation failed for dataset '{dataset.name}', "
                    f"config '{cfg.config_id}': {exc}"
                ) from exc
            cells[(r, c)] = acc
    m = PerformanceMatrix(
        tuple(d.name for d in datasets),
        tuple(cfg.config_id for cfg in registry),
        cells,
    )
    return m, registry


# --------------------------------------------------------------------------
# synthetic matrices
# --------------------------------------------------------------------------

def gen_synthetic(
    rows: int,
    cols: int,
    rank: int,
    noise_sigma: float,
    seed: int,
) -> PerformanceMatrix:
    """Fully observed synthetic accuracy matrix of exact rank ``rank``.

    The first row-factor column is all ones, so the affine rescale into
    [55, 95] stays inside the factor span and the output rank equals
    ``rank`` exactly (before noise).  Gaussian noise is added afterwards and
    values are clipped into [0, 100].
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be positive")
    if rank < 1 or rank > min(rows, cols):
        raise ValueError(f"rank must be in [1, {min(rows, cols)}], got {rank}")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    rng = np.random.default_rng(normalize_seed(seed))
    A = rng.standard_normal((rows, rank))
    B = rng.standard_normal((cols, rank))
    A[:, 0] = 1.0
    M = A @ B.T
    lo, hi = float(M.min()), float(M.max())
    if hi > lo:
        M = 55.0 + 40.0 * (M - lo) / (hi - lo)
    else:
        M = np.full_like(M, 75.0)
    if noise_sigma > 0:
        M = M + rng.normal(0.0, noise_sigma, M.shape)
    M = np.clip(M, 0.0, 100.0)
    row_ids = tuple(f"d{r:03d}" for r in range(rows))
    col_ids = tuple(f"c{c:03d}" for c in range(cols))
    return PerformanceMatrix.from_dense(row_ids, col_ids, M)
