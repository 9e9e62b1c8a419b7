"""Sparse performance-matrix data model, CSV/JSON serialization, masking.

The matrix rows are datasets, columns are learning-algorithm configurations,
and cells hold classification accuracies as percentages in [0, 100].  Missing
cells are simply absent from the cell map.  All operations here are pure
functions; matrices and mask plans are immutable once built.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .errors import ConfigurationError, MatrixFormatError
from .seeds import normalize_seed

__all__ = [
    "Configuration",
    "PerformanceMatrix",
    "MaskPlan",
    "ColumnStats",
    "load_matrix",
    "save_matrix",
    "load_registry",
    "save_registry",
    "validate_registry",
    "apply_mask",
    "column_stats",
    "heldout_count",
    "format_accuracy",
]


@dataclass(frozen=True)
class Configuration:
    """A learning algorithm paired with one concrete hyperparameter assignment.

    ``params`` preserves insertion order; values may be numbers, booleans or
    categorical strings.  ``is_default`` marks the algorithm's stock setting.
    """

    config_id: str
    algorithm: str
    params: Mapping[str, object] = field(default_factory=dict)
    is_default: bool = False

    def __post_init__(self):
        if not self.config_id:
            raise ValueError("config_id must be non-empty")
        if not self.algorithm:
            raise ValueError("algorithm must be non-empty")
        object.__setattr__(self, "params", dict(self.params))


def validate_registry(configs: Sequence[Configuration]) -> None:
    """Check registry-level invariants: unique ids, at most one default per algorithm."""
    seen: set[str] = set()
    defaults: set[str] = set()
    for cfg in configs:
        if cfg.config_id in seen:
            raise ConfigurationError(f"duplicate config_id {cfg.config_id}")
        seen.add(cfg.config_id)
        if cfg.is_default:
            if cfg.algorithm in defaults:
                raise ConfigurationError(
                    f"algorithm {cfg.algorithm} has more than one default configuration"
                )
            defaults.add(cfg.algorithm)


def load_registry(source: str | TextIO) -> list[Configuration]:
    """Parse a config-registry JSON array into Configuration objects."""
    text = source if isinstance(source, str) else source.read()
    raw = json.loads(text)
    if not isinstance(raw, list):
        raise ConfigurationError("registry JSON must be an array of objects")
    configs = [
        Configuration(
            config_id=str(item["config_id"]),
            algorithm=str(item["algorithm"]),
            params=item.get("params", {}),
            is_default=bool(item.get("is_default", False)),
        )
        for item in raw
    ]
    validate_registry(configs)
    return configs


def save_registry(configs: Sequence[Configuration]) -> str:
    """Serialize configurations to the registry JSON format."""
    payload = [
        {
            "config_id": c.config_id,
            "algorithm": c.algorithm,
            "params": dict(c.params),
            "is_default": c.is_default,
        }
        for c in configs
    ]
    return json.dumps(payload, indent=2) + "\n"


@dataclass(frozen=True)
class PerformanceMatrix:
    """Partially observed dataset-by-configuration accuracy matrix."""

    row_ids: tuple[str, ...]
    col_ids: tuple[str, ...]
    cells: Mapping[tuple[int, int], float]

    def __post_init__(self):
        object.__setattr__(self, "row_ids", tuple(self.row_ids))
        object.__setattr__(self, "col_ids", tuple(self.col_ids))
        if len(set(self.row_ids)) != len(self.row_ids):
            raise ValueError("duplicate dataset_id in row_ids")
        if len(set(self.col_ids)) != len(self.col_ids):
            raise ValueError("duplicate config_id in col_ids")
        canon: dict[tuple[int, int], float] = {}
        for (i, j), v in dict(self.cells).items():
            if not (0 <= i < len(self.row_ids) and 0 <= j < len(self.col_ids)):
                raise ValueError(f"cell index ({i},{j}) out of range")
            v = float(v)
            if not (0.0 <= v <= 100.0):
                raise ValueError(
                    f"accuracy out of range at ({self.row_ids[i]},{self.col_ids[j]})"
                )
            canon[(int(i), int(j))] = v
        object.__setattr__(self, "cells", canon)

    @property
    def n_rows(self) -> int:
        return len(self.row_ids)

    @property
    def n_cols(self) -> int:
        return len(self.col_ids)

    @property
    def observed_count(self) -> int:
        return len(self.cells)

    def observed_row(self, i: int) -> dict[str, float]:
        """Observed accuracies of row ``i`` keyed by config_id."""
        return {
            self.col_ids[j]: v for (r, j), v in self.cells.items() if r == i
        }

    def to_dense(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(values, mask)``: NaN-filled float array plus boolean observed mask."""
        values = np.full((self.n_rows, self.n_cols), np.nan)
        mask = np.zeros((self.n_rows, self.n_cols), dtype=bool)
        for (i, j), v in self.cells.items():
            values[i, j] = v
            mask[i, j] = True
        return values, mask

    @classmethod
    def from_dense(
        cls,
        row_ids: Sequence[str],
        col_ids: Sequence[str],
        values: np.ndarray,
        mask: np.ndarray | None = None,
    ) -> "PerformanceMatrix":
        values = np.asarray(values, dtype=float)
        if mask is None:
            mask = np.isfinite(values)
        cells = {
            (int(i), int(j)): float(values[i, j])
            for i, j in zip(*np.nonzero(mask))
        }
        return cls(tuple(row_ids), tuple(col_ids), cells)


def format_accuracy(v: float) -> str:
    """Canonical CSV rendering: plain decimal, at most 4 fractional digits."""
    s = f"{float(v):.4f}".rstrip("0")
    return s + "0" if s.endswith(".") else s


def load_matrix(source: str | TextIO) -> PerformanceMatrix:
    """Parse matrix-CSV text into a PerformanceMatrix.

    Header is ``dataset_id,<config_id>...``; empty fields are missing cells.
    """
    stream = io.StringIO(source) if isinstance(source, str) else source
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise MatrixFormatError("empty header") from None
    if not header or header[0] != "dataset_id":
        raise MatrixFormatError("header must start with 'dataset_id'")
    col_ids = header[1:]
    seen_cols: set[str] = set()
    for c in col_ids:
        if not c:
            raise MatrixFormatError("empty config_id in header")
        if c in seen_cols:
            raise MatrixFormatError(f"duplicate config_id {c}")
        seen_cols.add(c)

    row_ids: list[str] = []
    seen_rows: set[str] = set()
    cells: dict[tuple[int, int], float] = {}
    for line in reader:
        if not line:
            continue
        row_id = line[0]
        if not row_id:
            raise MatrixFormatError("empty dataset_id in a data row")
        if row_id in seen_rows:
            raise MatrixFormatError(f"duplicate dataset_id {row_id}")
        if len(line) != len(col_ids) + 1:
            raise MatrixFormatError(
                f"row {row_id}: expected {len(col_ids) + 1} fields, got {len(line)}"
            )
        i = len(row_ids)
        seen_rows.add(row_id)
        row_ids.append(row_id)
        for j, fieldtext in enumerate(line[1:]):
            if fieldtext == "":
                continue
            try:
                v = float(fieldtext)
            except ValueError:
                raise MatrixFormatError(
                    f"invalid accuracy {fieldtext!r} at ({row_id},{col_ids[j]})"
                ) from None
            if not np.isfinite(v) or not (0.0 <= v <= 100.0):
                raise MatrixFormatError(
                    f"accuracy out of range at ({row_id},{col_ids[j]})"
                )
            cells[(i, j)] = v
    return PerformanceMatrix(tuple(row_ids), tuple(col_ids), cells)


def save_matrix(m: PerformanceMatrix) -> str:
    """Serialize to matrix-CSV; ``load_matrix(save_matrix(m))`` round-trips cell-exactly."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["dataset_id", *m.col_ids])
    for i, row_id in enumerate(m.row_ids):
        fields = [row_id]
        for j in range(m.n_cols):
            v = m.cells.get((i, j))
            fields.append("" if v is None else format_accuracy(v))
        writer.writerow(fields)
    return out.getvalue()


@dataclass(frozen=True)
class MaskPlan:
    """Record of a masking draw: what was removed, and from which (fraction, seed)."""

    retained_fraction: float
    seed: int
    heldout: frozenset[tuple[int, int]]


def heldout_count(n_observed: int, retained_fraction: float) -> int:
    """Number of cells to remove: round-half-up of (1 - retained) * observed.

    Decimal arithmetic on the shortest repr avoids binary-float artifacts
    (e.g. (1 - 0.9) * 5 must round up from exactly 0.5 to 1).
    """
    removed = (Decimal(1) - Decimal(repr(retained_fraction))) * n_observed
    return int(removed.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def apply_mask(
    m: PerformanceMatrix, retained_fraction: float, seed: int
) -> tuple[PerformanceMatrix, MaskPlan]:
    """Remove a uniform random subset of observed cells, deterministically.

    Sampling is a seeded partial Fisher-Yates shuffle over the observed cells
    enumerated in row-major order, so the draw does not depend on map
    iteration order.
    """
    if not (0.0 < retained_fraction <= 1.0):
        raise ValueError(
            f"retained_fraction must be in (0, 1], got {retained_fraction}"
        )
    observed = sorted(m.cells)
    if not observed:
        raise ValueError("matrix has no observed cells")
    n = len(observed)
    k = heldout_count(n, retained_fraction)
    rng = np.random.default_rng(normalize_seed(seed))
    idx = list(range(n))
    for i in range(k):
        j = int(rng.integers(i, n))
        idx[i], idx[j] = idx[j], idx[i]
    heldout = frozenset(observed[t] for t in idx[:k])
    kept = {cell: v for cell, v in m.cells.items() if cell not in heldout}
    masked = PerformanceMatrix(m.row_ids, m.col_ids, kept)
    plan = MaskPlan(retained_fraction, normalize_seed(seed), heldout)
    return masked, plan


@dataclass(frozen=True)
class ColumnStats:
    """Per-column observed means/counts plus the global observed mean.

    Empty columns carry NaN means; ``global_mean`` is NaN for an empty matrix.
    """

    col_means: tuple[float, ...]
    col_counts: tuple[int, ...]
    global_mean: float


def column_stats(m: PerformanceMatrix) -> ColumnStats:
    sums = np.zeros(m.n_cols)
    counts = np.zeros(m.n_cols, dtype=int)
    for (_, j), v in m.cells.items():
        sums[j] += v
        counts[j] += 1
    means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    total = sum(m.cells.values())
    global_mean = total / len(m.cells) if m.cells else float("nan")
    return ColumnStats(
        col_means=tuple(float(x) for x in means),
        col_counts=tuple(int(c) for c in counts),
        global_mean=float(global_mean),
    )
