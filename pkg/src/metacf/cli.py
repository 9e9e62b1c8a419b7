"""Command-line entry point wiring the pipelines together.

Exit codes: 0 success, 1 data/engine error, 2 usage error.  Every command
logs its resolved seed(s) to stderr so any output file can be reproduced
from the log line.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .engines import ENGINE_NAMES, EngineSetting, complete
from .errors import MetacfError
from .experiments import (
    default_learner_specs,
    gen_synthetic,
    build_matrix,
    load_dataset,
    specs_from_json,
)
from .harness import (
    SweepPlan,
    aggregate,
    oracle_table,
    plan_from_json,
    records_to_csv,
    records_from_csv,
    render_report,
    run_sweep,
)
from .matrix import (
    format_accuracy,
    load_matrix,
    load_registry,
    save_matrix,
)
from .metafeatures import content_recommend, meta_features
from .recommend import top_k


def _log(message: str) -> None:
    print(f"metacf: {message}", file=sys.stderr)


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def _recommendation_csv(recommendations) -> str:
    lines = ["dataset_id,rank,config_id,predicted_accuracy"]
    for rec in recommendations:
        for rank, (config_id, value) in enumerate(rec.ranked_configs, start=1):
            lines.append(
                f"{rec.dataset_id},{rank},{config_id},{format_accuracy(value)}"
            )
    return "\n".join(lines) + "\n"


def _cmd_ingest(args) -> int:
    m = load_matrix(_read(args.matrix))
    if args.registry:
        registry = load_registry(_read(args.registry))
        known = {cfg.config_id for cfg in registry}
        missing = [cid for cid in m.col_ids if cid not in known]
        if missing:
            raise MetacfError(
                f"registry does not cover matrix columns: {', '.join(missing)}"
            )
    _write(args.out, save_matrix(m))
    _log(
        f"ingest: {m.n_rows} datasets x {m.n_cols} configs, "
        f"{m.observed_count} observed cells -> {args.out}"
    )
    return 0


def _cmd_synth(args) -> int:
    m = gen_synthetic(args.rows, args.cols, args.rank, args.noise, args.seed)
    _write(args.out, save_matrix(m))
    _log(
        f"synth: seed={args.seed} rank={args.rank} noise={args.noise} "
        f"-> {args.out} ({args.rows}x{args.cols})"
    )
    return 0


def _cmd_bench_learners(args) -> int:
    data_dir = Path(args.data_dir)
    paths = sorted(data_dir.glob("*.csv"))
    if not paths:
        raise MetacfError(f"no dataset CSVs found in {data_dir}")
    datasets = [load_dataset(p) for p in paths]
    specs = (
        specs_from_json(_read(args.specs)) if args.specs else default_learner_specs()
    )
    _log(
        f"bench-learners: seed={args.seed} datasets={len(datasets)} "
        f"specs={len(specs)} n={args.n} folds={args.folds}"
    )
    m, registry = build_matrix(datasets, specs, args.n, args.folds, args.seed)
    _write(args.out_matrix, save_matrix(m))
    from .matrix import save_registry

    _write(args.out_registry, save_registry(registry))
    _log(
        f"bench-learners: wrote {m.n_rows}x{m.n_cols} matrix to "
        f"{args.out_matrix}, registry to {args.out_registry}"
    )
    return 0


def _parse_setting(args) -> EngineSetting:
    hyperparams = json.loads(args.hyperparams) if args.hyperparams else {}
    return EngineSetting(args.engine, hyperparams, args.seed)


def _cmd_complete(args) -> int:
    m = load_matrix(_read(args.matrix))
    setting = _parse_setting(args)
    completed = complete(m, setting)
    _write(args.out, save_matrix(completed.to_matrix()))
    report = completed.fit_report
    _log(
        f"complete: engine={setting.label()} seed={args.seed} "
        f"iterations={report.iterations_run} "
        f"loss={report.initial_loss:.6g}->{report.final_loss:.6g} "
        f"({report.wall_time_seconds:.2f}s) -> {args.out}"
    )
    return 0


def _cmd_recommend(args) -> int:
    m = load_matrix(_read(args.matrix))
    if args.mode == "cf":
        setting = _parse_setting(args)
        completed = complete(m, setting)
        recs = [
            top_k(completed.row_pairs(i), args.k, dataset_id)
            for i, dataset_id in enumerate(m.row_ids)
        ]
        _log(f"recommend: mode=cf engine={setting.label()} seed={args.seed} k={args.k}")
    else:
        if not args.data_dir or not args.target:
            raise MetacfError("content mode requires --data-dir and --target")
        data_dir = Path(args.data_dir)
        target_ds = load_dataset(data_dir / f"{args.target}.csv")
        training = []
        for i, dataset_id in enumerate(m.row_ids):
            if dataset_id == args.target:
                continue
            path = data_dir / f"{dataset_id}.csv"
            if not path.exists():
                raise MetacfError(f"no dataset CSV for matrix row '{dataset_id}'")
            row = m.observed_row(i)
            training.append((meta_features(load_dataset(path)), row))
        recs = [
            content_recommend(
                meta_features(target_ds),
                training,
                min(args.neighbors, len(training)),
                args.k,
                dataset_id=args.target,
            )
        ]
        _log(
            f"recommend: mode=content target={args.target} "
            f"neighbors={args.neighbors} k={args.k}"
        )
    _write(args.out, _recommendation_csv(recs))
    return 0


def _cmd_evaluate(args) -> int:
    m = load_matrix(_read(args.matrix))
    plan = plan_from_json(_read(args.plan)) if args.plan else SweepPlan()
    _log(
        f"evaluate: master_seed={plan.master_seed} settings={len(plan.engine_settings)} "
        f"levels={len(plan.retained_levels)} reps={plan.repetitions} k={plan.k} "
        f"jobs={args.jobs}"
    )
    raw = run_sweep(m, plan, jobs=args.jobs)
    report = aggregate(raw, plan)
    if args.registry:
        registry = load_registry(_read(args.registry))
        from dataclasses import replace as _replace

        report = _replace(report, oracle=oracle_table(m, registry))
    _write(args.out, render_report(report, args.format))
    if args.raw_out:
        _write(args.raw_out, records_to_csv(raw))
        _log(f"evaluate: raw records -> {args.raw_out}")
    _log(f"evaluate: report -> {args.out}")
    return 0


def _cmd_report(args) -> int:
    raw = records_from_csv(_read(args.raw))
    plan = plan_from_json(_read(args.plan)) if args.plan else SweepPlan()
    report = aggregate(raw, plan)
    _write(args.out, render_report(report, args.format))
    _log(f"report: {args.raw} -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metacf",
        description="Recommend learning algorithms and hyperparameters by "
        "collaborative filtering over a performance matrix.",
    )
    parser.add_argument(
        "--version", action="version", version=f"metacf {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and canonicalize a matrix CSV")
    p.add_argument("--matrix", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--registry")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic low-rank matrix")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser(
        "bench-learners",
        help="random-search native learners over dataset CSVs into a matrix",
    )
    p.add_argument("--data-dir", required=True)
    p.add_argument("--specs", help="learner spec JSON (defaults to the stock suite)")
    p.add_argument("--n", type=int, default=32, help="sampled configs per learner")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-matrix", required=True)
    p.add_argument("--out-registry", required=True)
    p.set_defaults(func=_cmd_bench_learners)

    p = sub.add_parser("complete", help="fill a matrix's missing cells")
    p.add_argument("--matrix", required=True)
    p.add_argument("--engine", required=True, choices=ENGINE_NAMES)
    p.add_argument("--hyperparams", help="inline JSON hyperparameter map")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_complete)

    p = sub.add_parser("recommend", help="rank configurations per dataset")
    p.add_argument("--matrix", required=True)
    p.add_argument("--mode", choices=("cf", "content"), default="cf")
    p.add_argument("--engine", choices=ENGINE_NAMES, default="mf")
    p.add_argument("--hyperparams")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--data-dir", help="dataset CSV directory (content mode)")
    p.add_argument("--target", help="target dataset name (content mode)")
    p.add_argument("--neighbors", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_recommend)

    p = sub.add_parser("evaluate", help="run the masking sweep and report")
    p.add_argument("--matrix", required=True)
    p.add_argument("--plan", help="sweep plan JSON (defaults apply when omitted)")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "markdown"), default="markdown")
    p.add_argument("--registry", help="adds the oracle section to the report")
    p.add_argument("--raw-out", help="also dump raw records CSV")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("report", help="re-aggregate a raw records dump")
    p.add_argument("--raw", required=True)
    p.add_argument("--plan")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "markdown"), default="markdown")
    p.set_defaults(func=_cmd_report)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)
    try:
        return args.func(args)
    except (MetacfError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"metacf: error: {exc}", file=sys.stderr)
        return 1


def main() -> int:
    return run()


if __name__ == "__main__":
    sys.exit(main())
