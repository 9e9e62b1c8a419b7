"""Masking-sweep evaluation: mask, complete, recommend, score, aggregate.

The sweep runs every (engine setting, retained level, repetition) cell on
deterministically derived child seeds, scores each dataset's best-of-top-k
against the unmasked matrix, and aggregates into a Best/Median/Average +
per-level report.  Results are identical regardless of execution order or
the number of worker processes.
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import json
import statistics
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping, Sequence, TextIO

from .engines import CompletedMatrix, EngineSetting, complete, default_engine_grid
from .errors import ConfigurationError, EvaluationError
from .matrix import Configuration, PerformanceMatrix, apply_mask
from .recommend import oracle_best, score_best_of_topk, top_k
from .seeds import child_seed

__all__ = [
    "SweepPlan",
    "SweepRecord",
    "SweepResult",
    "EngineSummary",
    "OracleSummary",
    "EvaluationReport",
    "run_sweep",
    "aggregate",
    "oracle_table",
    "render_report",
    "records_to_csv",
    "records_from_csv",
    "plan_from_json",
    "round_half_up",
]

DEFAULT_RETAINED_LEVELS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class SweepPlan:
    retained_levels: tuple[float, ...] = DEFAULT_RETAINED_LEVELS
    repetitions: int = 10
    k: int = 4
    engine_settings: tuple[EngineSetting, ...] = field(
        default_factory=default_engine_grid
    )
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "retained_levels", tuple(self.retained_levels))
        object.__setattr__(self, "engine_settings", tuple(self.engine_settings))
        if not self.retained_levels:
            raise ValueError("retained_levels must be non-empty")
        for level in self.retained_levels:
            if not (0.0 < level <= 1.0):
                raise ValueError(f"retained level {level} outside (0, 1]")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.engine_settings:
            raise ValueError("engine_settings must be non-empty")
        labels = [s.label() for s in self.engine_settings]
        if len(set(labels)) != len(labels):
            raise ValueError("engine settings must have distinct labels")


@dataclass(frozen=True)
class SweepRecord:
    engine: str
    setting_id: str
    retained: float
    repetition: int
    dataset_id: str
    score: float
    # wall time of the completion that produced this record; diagnostic only,
    # excluded from equality so identical runs compare equal
    seconds: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class SweepResult:
    records: tuple[SweepRecord, ...]


@dataclass(frozen=True)
class EngineSummary:
    engine: str
    best: float
    median: float
    average: float
    per_level: Mapping[float, float]
    setting_means: Mapping[str, float]


@dataclass(frozen=True)
class OracleSummary:
    per_algorithm: Mapping[str, float]
    default_mean: float
    all_mean: float


@dataclass(frozen=True)
class EvaluationReport:
    engines: tuple[EngineSummary, ...]
    levels: tuple[float, ...]
    oracle: OracleSummary | None = None


def _mask_seed(plan: SweepPlan, si: int, li: int, ri: int) -> int:
    return child_seed(plan.master_seed, si, li, ri, 0)


def _fit_seed(plan: SweepPlan, si: int, li: int, ri: int) -> int:
    return child_seed(plan.master_seed, si, li, ri, 1)


def _run_cell(args) -> list[SweepRecord]:
    full, plan, si, li, ri, truth = args
    setting = plan.engine_settings[si]
    level = plan.retained_levels[li]
    try:
        masked, _ = apply_mask(full, level, _mask_seed(plan, si, li, ri))
        completed: CompletedMatrix = complete(
            masked, replace(setting, seed=_fit_seed(plan, si, li, ri))
        )
    except Exception as exc:
        raise EvaluationError(
            f"engine failure at setting={setting.label()} retained={level} "
            f"repetition={ri}: {exc}"
        ) from exc
    seconds = completed.fit_report.wall_time_seconds
    records = []
    for i, dataset_id in enumerate(full.row_ids):
        rec = top_k(completed.row_pairs(i), plan.k, dataset_id)
        score = score_best_of_topk(truth[i], rec)
        records.append(
            SweepRecord(
                engine=setting.engine,
                setting_id=setting.label(),
                retained=level,
                repetition=ri,
                dataset_id=dataset_id,
                score=score,
                seconds=seconds,
            )
        )
    return records


def run_sweep(full: PerformanceMatrix, plan: SweepPlan, jobs: int = 1) -> SweepResult:
    """Execute the full (setting x level x repetition) grid deterministically.

    Child seeds come from (master_seed, setting index, level index,
    repetition index), so any subset of cells can be reproduced in
    isolation.  ``jobs > 1`` runs cells in a process pool; record order and
    content are identical either way.
    """
    truth = [full.observed_row(i) for i in range(full.n_rows)]
    for i, row in enumerate(truth):
        if not row:
            raise ValueError(
                f"dataset row '{full.row_ids[i]}' has no observed cells"
            )
    tasks = [
        (full, plan, si, li, ri, truth)
        for si in range(len(plan.engine_settings))
        for li in range(len(plan.retained_levels))
        for ri in range(plan.repetitions)
    ]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            per_cell = list(pool.map(_run_cell, tasks, chunksize=1))
    else:
        per_cell = [_run_cell(t) for t in tasks]
    records = [rec for cell in per_cell for rec in cell]
    return SweepResult(tuple(records))


def aggregate(raw: SweepResult, plan: SweepPlan) -> EvaluationReport:
    """Fold raw records into the Best/Median/Average + per-level report.

    Per setting: mean over datasets x repetitions x levels.  Per engine:
    Best/Median/Average are max/median/mean over its settings' means; the
    per-level column pools that engine's records at the level.  The median
    of an even count is the mean of the two central values.
    """
    by_setting: dict[str, list[SweepRecord]] = {}
    for rec in raw.records:
        by_setting.setdefault(rec.setting_id, []).append(rec)

    plan_labels = [s.label() for s in plan.engine_settings]
    if set(by_setting) != set(plan_labels):
        raise EvaluationError(
            "raw records do not match the plan's engine settings: "
            f"plan has {sorted(plan_labels)}, records have {sorted(by_setting)}"
        )
    level_set = set(plan.retained_levels)
    n_datasets = len({rec.dataset_id for rec in raw.records})
    expected = len(plan.retained_levels) * plan.repetitions * n_datasets
    for label, records in by_setting.items():
        if len(records) != expected:
            raise EvaluationError(
                f"setting {label}: expected {expected} records, got {len(records)}"
            )
        if {rec.retained for rec in records} != level_set:
            raise EvaluationError(f"setting {label}: retained levels do not match plan")

    engine_order: list[str] = []
    for setting in plan.engine_settings:
        if setting.engine not in engine_order:
            engine_order.append(setting.engine)

    summaries = []
    for engine in engine_order:
        labels = [s.label() for s in plan.engine_settings if s.engine == engine]
        setting_means = {
            label: statistics.fmean(rec.score for rec in by_setting[label])
            for label in labels
        }
        values = list(setting_means.values())
        per_level = {}
        for level in plan.retained_levels:
            pooled = [
                rec.score
                for label in labels
                for rec in by_setting[label]
                if rec.retained == level
            ]
            per_level[level] = statistics.fmean(pooled)
        summaries.append(
            EngineSummary(
                engine=engine,
                best=max(values),
                median=statistics.median(values),
                average=statistics.fmean(values),
                per_level=per_level,
                setting_means=setting_means,
            )
        )
    return EvaluationReport(tuple(summaries), plan.retained_levels)


def oracle_table(
    full: PerformanceMatrix, registry: Sequence[Configuration]
) -> OracleSummary:
    """Per-algorithm, Default, and ALL oracle means over dataset rows."""
    known = {cfg.config_id for cfg in registry}
    uncovered = [cid for cid in full.col_ids if cid not in known]
    if uncovered:
        raise ConfigurationError(
            f"registry does not cover matrix columns: {', '.join(uncovered)}"
        )
    algorithms: list[str] = []
    for cfg in registry:
        if cfg.algorithm not in algorithms:
            algorithms.append(cfg.algorithm)
    default_ids = [cfg.config_id for cfg in registry if cfg.is_default]
    if not default_ids:
        raise ConfigurationError("registry has no default-flagged configurations")
    all_ids = [cfg.config_id for cfg in registry]
    rows = [full.observed_row(i) for i in range(full.n_rows)]
    per_algorithm = {}
    for algorithm in algorithms:
        ids = [cfg.config_id for cfg in registry if cfg.algorithm == algorithm]
        per_algorithm[algorithm] = statistics.fmean(
            oracle_best(row, ids) for row in rows
        )
    default_mean = statistics.fmean(oracle_best(row, default_ids) for row in rows)
    all_mean = statistics.fmean(oracle_best(row, all_ids) for row in rows)
    return OracleSummary(per_algorithm, default_mean, all_mean)


def round_half_up(x: float, places: int = 2) -> float:
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_UP))


def _fmt(x: float) -> str:
    return f"{round_half_up(x):.2f}"


def _fmt_level(level: float) -> str:
    return f"{level:g}"


def render_report(report: EvaluationReport, format: str) -> str:
    """Render the report as markdown tables or CSV blocks (deterministic)."""
    if format not in ("csv", "markdown"):
        raise ValueError(f"unknown report format {format!r}; use csv or markdown")
    levels = report.levels
    if format == "markdown":
        lines = []
        header = ["Engine", "Best", "Med", "Ave", *[_fmt_level(l) for l in levels]]
        lines.append("| " + " | ".join(header) + " |")
        lines.append("|" + "---|" * len(header))
        for s in report.engines:
            row = [
                s.engine,
                _fmt(s.best),
                _fmt(s.median),
                _fmt(s.average),
                *[_fmt(s.per_level[l]) for l in levels],
            ]
            lines.append("| " + " | ".join(row) + " |")
        if report.oracle is not None:
            lines.append("")
            names = [*report.oracle.per_algorithm.keys(), "Default", "ALL"]
            values = [
                *[_fmt(v) for v in report.oracle.per_algorithm.values()],
                _fmt(report.oracle.default_mean),
                _fmt(report.oracle.all_mean),
            ]
            lines.append("| " + " | ".join(names) + " |")
            lines.append("|" + "---|" * len(names))
            lines.append("| " + " | ".join(values) + " |")
        return "\n".join(lines) + "\n"

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ["engine", "best", "median", "average", *[_fmt_level(l) for l in levels]]
    )
    for s in report.engines:
        writer.writerow(
            [
                s.engine,
                _fmt(s.best),
                _fmt(s.median),
                _fmt(s.average),
                *[_fmt(s.per_level[l]) for l in levels],
            ]
        )
    if report.oracle is not None:
        writer.writerow([])
        writer.writerow(["candidates", "mean_best_accuracy"])
        for name, value in report.oracle.per_algorithm.items():
            writer.writerow([name, _fmt(value)])
        writer.writerow(["Default", _fmt(report.oracle.default_mean)])
        writer.writerow(["ALL", _fmt(report.oracle.all_mean)])
    return out.getvalue()


_RAW_HEADER = ["engine", "setting_id", "retained", "repetition", "dataset_id", "score"]


def records_to_csv(raw: SweepResult) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(_RAW_HEADER)
    for rec in raw.records:
        writer.writerow(
            [
                rec.engine,
                rec.setting_id,
                repr(rec.retained),
                rec.repetition,
                rec.dataset_id,
                repr(rec.score),
            ]
        )
    return out.getvalue()


def records_from_csv(source: str | TextIO) -> SweepResult:
    stream = io.StringIO(source) if isinstance(source, str) else source
    reader = csv.reader(stream)
    header = next(reader, None)
    if header != _RAW_HEADER:
        raise EvaluationError(
            f"raw records CSV must have header {','.join(_RAW_HEADER)}"
        )
    records = []
    for line in reader:
        if not line:
            continue
        engine, setting_id, retained, repetition, dataset_id, score = line
        records.append(
            SweepRecord(
                engine=engine,
                setting_id=setting_id,
                retained=float(retained),
                repetition=int(repetition),
                dataset_id=dataset_id,
                score=float(score),
                seconds=0.0,
            )
        )
    return SweepResult(tuple(records))


def plan_from_json(source: str | TextIO) -> SweepPlan:
    """Build a SweepPlan from JSON; omitted fields take the defaults.

    ``engine_settings`` entries mirror EngineSetting:
    {"engine": "mf", "hyperparams": {...}, "seed": 7}.
    """
    text = source if isinstance(source, str) else source.read()
    raw = json.loads(text)
    kwargs = {}
    if "retained_levels" in raw:
        kwargs["retained_levels"] = tuple(float(x) for x in raw["retained_levels"])
    if "repetitions" in raw:
        kwargs["repetitions"] = int(raw["repetitions"])
    if "k" in raw:
        kwargs["k"] = int(raw["k"])
    if "master_seed" in raw:
        kwargs["master_seed"] = int(raw["master_seed"])
    if "engine_settings" in raw:
        kwargs["engine_settings"] = tuple(
            EngineSetting(
                engine=item["engine"],
                hyperparams=item.get("hyperparams", {}),
                seed=int(item.get("seed", 0)),
            )
            for item in raw["engine_settings"]
        )
    return SweepPlan(**kwargs)
