"""Acceptance suite: one test per exit criterion, each printing a pass line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; the whole module is self-contained and uses only public package APIs
plus independent inline oracles.
"""

import json
import time

import numpy as np
import pytest

from metacf.cli import run as cli_run
from metacf.engines import (
    EngineSetting,
    complete,
    complete_baseline,
    complete_mf,
    fkm_fit,
    latent_loss_and_grad,
    latent_param_count,
    mf_loss_and_grad,
    mf_param_count,
)
from metacf.experiments import gen_synthetic
from metacf.harness import SweepPlan, aggregate, records_from_csv, run_sweep
from metacf.matrix import PerformanceMatrix, apply_mask, heldout_count, load_matrix
from metacf.recommend import oracle_best, score_best_of_topk, top_k


def announce(n, text):
    print(f"[criterion {n:2d}] PASS: {text}")


def heldout_rmse(done, truth_values, heldout):
    err = np.array([done.values[c] - truth_values[c] for c in sorted(heldout)])
    return float(np.sqrt((err**2).mean()))


def random_sparse_matrix(rng, max_side=6):
    n_rows = int(rng.integers(2, max_side + 1))
    n_cols = int(rng.integers(2, max_side + 1))
    cells = {}
    for i in range(n_rows):
        for j in range(n_cols):
            if rng.uniform() < 0.7:
                cells[(i, j)] = float(np.round(rng.uniform(0, 100), 2))
    if not cells:
        cells[(0, 0)] = 50.0
    return PerformanceMatrix(
        tuple(f"d{i}" for i in range(n_rows)),
        tuple(f"c{j}" for j in range(n_cols)),
        cells,
    )


def test_criterion_1_paper_scale_values_are_anchors_only():
    # The published full-scale aggregate values depend on 125 specific
    # datasets and 9 toolkit learners that are out of scope here, so they
    # serve as format/semantics anchors only; criteria 2-10 are the
    # property-based substitutes this artifact is accepted against.
    anchors = {"ALL": 83.00, "Default": 81.93, "mf_best": 82.12, "baseline": 81.11}
    assert all(0 < v < 100 for v in anchors.values())
    announce(1, "full-scale aggregates treated as anchors; substitutes are criteria 2-10")


def test_criterion_2_single_setting_best_median_average_identity():
    full = gen_synthetic(8, 10, rank=2, noise_sigma=1.0, seed=3)
    plan = SweepPlan(
        retained_levels=(0.3, 0.6, 0.9),
        repetitions=2,
        k=4,
        engine_settings=(EngineSetting("baseline"),),
        master_seed=5,
    )
    report = aggregate(run_sweep(full, plan), plan)
    (summary,) = report.engines
    assert summary.best == summary.median == summary.average  # exact
    announce(2, f"single-setting engine reports Best == Median == Average "
                f"({summary.best:.4f}) exactly")


def test_criterion_3_monotone_retained_trend():
    t0 = time.perf_counter()
    full = gen_synthetic(60, 40, rank=3, noise_sigma=1.0, seed=7)
    levels = tuple(x / 10 for x in range(1, 10))
    plan = SweepPlan(
        retained_levels=levels,
        repetitions=10,
        k=4,
        engine_settings=(EngineSetting("mf", {"rank": 4}),),
        master_seed=2024,
    )
    report = aggregate(run_sweep(full, plan), plan)
    per_level = [report.engines[0].per_level[l] for l in levels]
    for lo, hi in zip(per_level[:-1], per_level[1:]):
        assert hi >= lo - 0.3, f"per-level means decreased too much: {per_level}"
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    announce(3, f"MF best-of-top-4 per-level means non-decreasing "
                f"(allowance 0.3): {[round(x, 2) for x in per_level]} "
                f"in {elapsed:.0f}s")


def test_criterion_4_low_rank_recovery():
    setting = EngineSetting("mf", {"rank": 4, "regularization": 0.05}, seed=1)
    results = {}
    for sigma, bound in ((0.0, 0.5), (1.0, 1.5)):
        full = gen_synthetic(60, 40, rank=2, noise_sigma=sigma, seed=42)
        truth, _ = full.to_dense()
        masked, plan = apply_mask(full, 0.5, seed=101)
        t0 = time.perf_counter()
        done = complete_mf(masked, setting)
        fit_time = time.perf_counter() - t0
        rmse = heldout_rmse(done, truth, plan.heldout)
        assert rmse <= bound, f"sigma={sigma}: rmse {rmse:.3f} > {bound}"
        assert fit_time < 30.0
        results[sigma] = rmse
    announce(4, f"held-out RMSE noiseless={results[0.0]:.3f} (<=0.5), "
                f"sigma=1 -> {results[1.0]:.3f} (<=1.5)")


def test_criterion_5_mf_beats_baseline():
    full = gen_synthetic(60, 40, rank=2, noise_sigma=1.0, seed=42)
    truth, _ = full.to_dense()
    wins = 0
    for rep in range(10):
        masked, plan = apply_mask(full, 0.5, seed=1000 + rep)
        mf = complete_mf(
            masked,
            EngineSetting("mf", {"rank": 4, "regularization": 0.05}, seed=rep),
        )
        base = complete_baseline(masked)
        if heldout_rmse(mf, truth, plan.heldout) < heldout_rmse(
            base, truth, plan.heldout
        ):
            wins += 1
    assert wins >= 9
    announce(5, f"MF beats baseline on held-out RMSE in {wins}/10 repetitions")


def test_criterion_6_gradient_checks():
    t0 = time.perf_counter()

    def check(loss_grad, n_params, trials=20):
        worst = 0.0
        for t in range(trials):
            rng = np.random.default_rng(500 + t)
            mask = rng.uniform(size=(4, 3)) < 0.7
            mask[0, 0] = True
            values = np.where(mask, rng.uniform(40, 95, (4, 3)), np.nan)
            flat = rng.uniform(-0.5, 0.5, n_params)
            _, grad = loss_grad(values, mask, flat)
            h = 1e-5
            fd = np.empty_like(flat)
            for i in range(len(flat)):
                up, dn = flat.copy(), flat.copy()
                up[i] += h
                dn[i] -= h
                fd[i] = (loss_grad(values, mask, up)[0] - loss_grad(values, mask, dn)[0]) / (2 * h)
            worst = max(worst, np.abs(grad - fd).max() / max(np.abs(fd).max(), 1e-8))
        return worst

    worst_mf = check(
        lambda v, m, f: mf_loss_and_grad(v, m, f, 2, 0.01), mf_param_count(4, 3, 2)
    )
    worst_nlpca = check(
        lambda v, m, f: latent_loss_and_grad(v, m, f, 2, [], 0.01),
        latent_param_count(4, 3, 2, []),
    )
    worst_ubp = check(
        lambda v, m, f: latent_loss_and_grad(v, m, f, 2, [5], 0.01),
        latent_param_count(4, 3, 2, [5]),
    )
    elapsed = time.perf_counter() - t0
    assert worst_mf <= 1e-4 and worst_nlpca <= 1e-4 and worst_ubp <= 1e-4
    assert elapsed < 10.0
    announce(6, f"gradients match finite differences: mf {worst_mf:.2e}, "
                f"nlpca {worst_nlpca:.2e}, ubp {worst_ubp:.2e} ({elapsed:.1f}s)")


def test_criterion_7_invariant_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(99)
    fast = {
        "baseline": EngineSetting("baseline"),
        "mf": EngineSetting("mf", {"rank": 2, "max_epochs": 3}),
        "fkm": EngineSetting("fkm", {"cluster_count": 2, "max_iters": 3}),
        "nlpca": EngineSetting("nlpca", {"latent_dim": 2, "max_epochs": 3}),
        "ubp": EngineSetting("ubp", {"latent_dim": 2, "hidden_layers": [4], "max_epochs": 5}),
    }
    engines = list(fast)

    # observed preservation + clipping, every engine in rotation (100 cases)
    for case in range(100):
        m = random_sparse_matrix(rng)
        setting = fast[engines[case % len(engines)]]
        done = complete(m, EngineSetting(setting.engine, setting.hyperparams, case))
        for cell, v in m.cells.items():
            assert done.values[cell] == v
        assert done.values.min() >= 0.0 and done.values.max() <= 100.0

    # masking determinism and exact held-out counts (100 cases)
    for case in range(100):
        m = random_sparse_matrix(rng)
        frac = float(rng.choice([0.1, 0.3, 0.5, 0.7, 0.9, 1.0]))
        seed = int(rng.integers(2**32))
        masked, plan = apply_mask(m, frac, seed)
        _, again = apply_mask(m, frac, seed)
        assert plan.heldout == again.heldout
        assert len(plan.heldout) == heldout_count(m.observed_count, frac)
        assert plan.heldout <= set(m.cells)
        assert set(masked.cells) == set(m.cells) - plan.heldout

    # FKM membership normalization (100 cases)
    for case in range(100):
        m = random_sparse_matrix(rng)
        fit = fkm_fit(
            m,
            EngineSetting(
                "fkm",
                {"cluster_count": min(2, m.n_rows), "max_iters": 3},
                case,
            ),
        )
        assert np.abs(fit.memberships.sum(axis=1) - 1.0).max() <= 1e-9

    # fkm(cluster_count=1) == baseline (100 cases)
    for case in range(100):
        m = random_sparse_matrix(rng)
        fkm = complete(m, EngineSetting("fkm", {"cluster_count": 1}, case))
        base = complete_baseline(m)
        assert np.abs(fkm.values - base.values).max() <= 1e-6

    # ranking invariants (100 cases each, checked together per draw)
    for case in range(100):
        n = int(rng.integers(1, 9))
        ids = [f"c{j}" for j in range(n)]
        predicted = [(cid, float(rng.uniform(0, 100))) for cid in ids]
        true_row = {cid: float(rng.uniform(0, 100)) for cid in ids}
        k = int(rng.integers(1, n + 1))
        oracle = oracle_best(true_row, ids)
        assert score_best_of_topk(true_row, top_k(predicted, k)) <= oracle
        assert score_best_of_topk(true_row, top_k(predicted, k + 1)) >= \
            score_best_of_topk(true_row, top_k(predicted, k))
        assert score_best_of_topk(true_row, top_k(predicted, n)) == oracle

    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    announce(7, f"invariant suite: 5 x 100 randomized cases in {elapsed:.1f}s")


def test_criterion_8_retraining_speed():
    # 125 datasets x (9 algorithms x 25 configs) = 125 x 1125
    full = gen_synthetic(125, 1125, rank=8, noise_sigma=1.0, seed=11)
    t0 = time.perf_counter()
    done = complete_mf(full, EngineSetting("mf", {"rank": 8}, seed=4))
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    assert done.fit_report.final_loss <= done.fit_report.initial_loss
    announce(8, f"125x1125 MF rank-8 completion in {elapsed:.2f}s (< 10s)")


@pytest.mark.slow
def test_criterion_9_end_to_end_desk_pipeline(tmp_path):
    t0 = time.perf_counter()
    from metacf.toydata import bundled_data_dir

    matrix_path = tmp_path / "matrix.csv"
    registry_path = tmp_path / "registry.json"
    code = cli_run(
        ["bench-learners", "--data-dir", str(bundled_data_dir()), "--n", "32",
         "--folds", "10", "--seed", "11",
         "--out-matrix", str(matrix_path), "--out-registry", str(registry_path)]
    )
    assert code == 0
    m = load_matrix(matrix_path.read_text(encoding="utf-8"))
    assert m.n_rows >= 8
    assert m.n_cols == 4 * 33  # 4 learners x (32 sampled + default)
    assert m.observed_count == m.n_rows * m.n_cols  # fully observed

    report_path = tmp_path / "report.md"
    raw_path = tmp_path / "raw.csv"
    code = cli_run(
        ["evaluate", "--matrix", str(matrix_path), "--out", str(report_path),
         "--format", "markdown", "--registry", str(registry_path),
         "--raw-out", str(raw_path), "--jobs", "2"]
    )
    assert code == 0
    report_text = report_path.read_text(encoding="utf-8")
    first_line = report_text.split("\n")[0]
    assert first_line.startswith("| Engine | Best | Med | Ave | 0.1 |")
    for engine in ("baseline", "fkm", "mf", "nlpca", "ubp"):
        assert f"| {engine} |" in report_text

    # per-dataset best-of-top-4 never exceeds the ALL oracle, checked
    # exhaustively from the raw records
    raw = records_from_csv(raw_path.read_text(encoding="utf-8"))
    plan = SweepPlan()
    assert len(raw.records) == 14 * 9 * 10 * m.n_rows
    all_oracle = {
        dataset_id: oracle_best(m.observed_row(i), m.col_ids)
        for i, dataset_id in enumerate(m.row_ids)
    }
    for rec in raw.records:
        assert rec.score <= all_oracle[rec.dataset_id] + 1e-12

    elapsed = time.perf_counter() - t0
    assert elapsed < 900.0
    announce(9, f"bench-learners + default-plan evaluate on {m.n_rows} bundled "
                f"datasets in {elapsed:.0f}s (< 900s); all {len(raw.records)} "
                f"records <= ALL oracle")


def test_criterion_10_brute_force_harness_oracle():
    values = np.array(
        [
            [70.0, 85.0, 60.0, 92.0],
            [90.0, 55.0, 80.0, 75.0],
            [65.0, 72.0, 88.0, 50.0],
        ]
    )
    m = PerformanceMatrix.from_dense(("d1", "d2", "d3"), ("c1", "c2", "c3", "c4"), values)
    level, master, k = 0.75, 31, 2
    plan = SweepPlan(
        retained_levels=(level,),
        repetitions=1,
        k=k,
        engine_settings=(EngineSetting("baseline"),),
        master_seed=master,
    )
    raw = run_sweep(m, plan)
    report = aggregate(raw, plan)

    # --- independent brute-force computation ---
    # child seed (counter-based hash of master + indices)
    mask_seed = int(
        np.random.SeedSequence(entropy=master, spawn_key=(0, 0, 0, 0)).generate_state(
            1, dtype=np.uint64
        )[0]
    )
    cells = sorted(m.cells)
    n_heldout = 3  # round-half-up of 0.25 * 12
    gen = np.random.default_rng(mask_seed)
    idx = list(range(len(cells)))
    for i in range(n_heldout):
        j = int(gen.integers(i, len(cells)))
        idx[i], idx[j] = idx[j], idx[i]
    heldout = {cells[t] for t in idx[:n_heldout]}
    kept = {c: v for c, v in m.cells.items() if c not in heldout}
    col_means = {}
    for j in range(4):
        obs = [v for (i, jj), v in kept.items() if jj == j]
        col_means[j] = sum(obs) / len(obs) if obs else sum(kept.values()) / len(kept)
    expected_scores = {}
    for i, dataset_id in enumerate(m.row_ids):
        row = [kept.get((i, j), col_means[j]) for j in range(4)]
        order = sorted(range(4), key=lambda j: (-row[j], j))[:k]
        expected_scores[dataset_id] = max(values[i, j] for j in order)

    assert len(raw.records) == 3
    for rec in raw.records:
        assert rec.score == expected_scores[rec.dataset_id]
    expected_mean = sum(expected_scores.values()) / 3
    (summary,) = report.engines
    assert summary.best == summary.median == summary.average == expected_mean
    assert summary.per_level[level] == expected_mean
    announce(10, f"3x4 baseline sweep trace matches the inline brute force "
                 f"(mean {expected_mean:.4f}) exactly")
