import numpy as np
import pytest

from metacf.errors import ConfigurationError
from metacf.experiments import (
    Choice,
    Column,
    Dataset,
    FloatRange,
    IntRange,
    LearnerSpec,
    LogFloatRange,
    build_matrix,
    cell_seed,
    default_learner_specs,
    evaluate_config,
    gen_synthetic,
    load_dataset,
    sample_configs,
    specs_from_json,
)
from metacf.learners import make_learner
from metacf.matrix import Configuration


def blob_dataset(name="blobs", n_per=30, centers=((0.0, 0.0), (6.0, 6.0)), sd=0.5, seed=0):
    rng = np.random.default_rng(seed)
    xs, ys, labels = [], [], []
    for label, (cx, cy) in zip("ab", centers):
        xs.extend(rng.normal(cx, sd, n_per))
        ys.extend(rng.normal(cy, sd, n_per))
        labels.extend([label] * n_per)
    return Dataset(
        name,
        (
            Column("x", "numeric", np.array(xs)),
            Column("y", "numeric", np.array(ys)),
        ),
        np.array(labels, dtype=object),
    )


def bits_dataset(seed=0):
    # conditionally independent binary features, strongly class-linked
    rng = np.random.default_rng(seed)
    prob = {"a": (0.9, 0.85, 0.15, 0.1), "b": (0.1, 0.15, 0.85, 0.9)}
    rows, labels = [], []
    for label in "ab":
        for _ in range(50):
            rows.append(["1" if rng.uniform() < p else "0" for p in prob[label]])
            labels.append(label)
    columns = tuple(
        Column(f"f{j}", "categorical", np.array([r[j] for r in rows], dtype=object))
        for j in range(4)
    )
    return Dataset("bits", columns, np.array(labels, dtype=object))


def axis_split_dataset(seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, 100)
    noise = rng.uniform(0, 1, 100)
    labels = np.where(x <= 0.5, "lo", "hi").astype(object)
    return Dataset(
        "axis",
        (
            Column("x", "numeric", x),
            Column("noise", "numeric", noise),
        ),
        labels,
    )


class TestSampleConfigs:
    def knn_spec(self):
        return LearnerSpec(
            "knn",
            {"k": IntRange(1, 25), "weighting": Choice(("uniform", "inverse_distance"))},
            {"k": 5, "weighting": "uniform"},
        )

    def test_membership_and_default(self):
        configs = sample_configs(self.knn_spec(), 5, seed=9)
        assert len(configs) == 6
        for cfg in configs[:5]:
            assert 1 <= cfg.params["k"] <= 25
            assert cfg.params["weighting"] in ("uniform", "inverse_distance")
            assert not cfg.is_default
        default = configs[-1]
        assert default.is_default
        assert default.params == {"k": 5, "weighting": "uniform"}

    def test_determinism(self):
        a = sample_configs(self.knn_spec(), 5, seed=9)
        b = sample_configs(self.knn_spec(), 5, seed=9)
        assert a == b

    def test_log_uniform_statistics(self):
        r = LogFloatRange(1e-4, 1.0)
        rng = np.random.default_rng(0)
        samples = np.array([r.draw(rng) for _ in range(10_000)])
        assert samples.min() >= 1e-4
        assert samples.max() <= 1.0
        med = np.median(samples)
        assert 1e-2 / 3 <= med <= 1e-2 * 3

    def test_invalid_range(self):
        with pytest.raises(ConfigurationError):
            IntRange(5, 4)
        with pytest.raises(ConfigurationError):
            LogFloatRange(0.0, 1.0)
        with pytest.raises(ConfigurationError):
            Choice(())

    def test_default_outside_range_rejected(self):
        with pytest.raises(ConfigurationError):
            LearnerSpec("knn", {"k": IntRange(1, 3)}, {"k": 5})

    def test_specs_json_round_trip(self):
        text = """
        [{"algorithm": "knn",
          "ranges": {"k": {"type": "int", "low": 1, "high": 9},
                     "weighting": {"type": "choice", "values": ["uniform"]}},
          "default": {"k": 3, "weighting": "uniform"}}]
        """
        (spec,) = specs_from_json(text)
        assert spec.algorithm == "knn"
        configs = sample_configs(spec, 2, seed=1)
        assert configs[-1].params["k"] == 3


class TestEvaluateConfig:
    def test_one_nn_on_separated_blobs(self):
        d = blob_dataset()
        cfg = Configuration("knn:t", "knn", {"k": 1, "weighting": "uniform"})
        acc = evaluate_config(d, "knn", cfg, folds=10, seed=4)
        assert acc >= 95.0

    def test_knn_agrees_with_brute_force_lookup(self):
        d = blob_dataset(n_per=20, seed=3)
        train_idx = np.arange(0, 30)
        test_idx = np.arange(30, 40)
        train_cols, train_labels = d.subset(train_idx)
        test_cols, test_labels = d.subset(test_idx)
        model = make_learner("knn", {"k": 1, "weighting": "uniform"})
        model.fit(train_cols, train_labels)
        got = model.predict(test_cols)
        # brute force on the same min-max scaling the learner applies
        def scaled(cols, ref_cols):
            out = []
            for col, ref in zip(cols, ref_cols):
                lo, hi = ref.values.min(), ref.values.max()
                out.append((col.values - lo) / (hi - lo))
            return np.stack(out, axis=1)
        X_train = scaled(train_cols, train_cols)
        X_test = scaled(test_cols, train_cols)
        for i in range(len(test_idx)):
            dist = ((X_train - X_test[i]) ** 2).sum(axis=1)
            assert got[i] == train_labels[int(np.argmin(dist))]

    def test_majority_vote_tree(self):
        rng = np.random.default_rng(8)
        labels = np.array(["a"] * 60 + ["b"] * 40, dtype=object)
        d = Dataset(
            "split6040",
            (Column("x", "numeric", rng.uniform(0, 1, 100)),),
            labels,
        )
        cfg = Configuration("dt:t", "decision_tree", {"max_depth": 0, "min_split": 2})
        acc = evaluate_config(d, "decision_tree", cfg, folds=10, seed=1)
        assert acc == pytest.approx(60.0)

    def test_folds_below_two_rejected(self):
        d = blob_dataset()
        cfg = Configuration("knn:t", "knn", {"k": 1})
        with pytest.raises(ValueError, match="folds"):
            evaluate_config(d, "knn", cfg, folds=1, seed=0)

    def test_infeasible_stratification(self):
        d = blob_dataset(n_per=4)
        cfg = Configuration("knn:t", "knn", {"k": 1})
        with pytest.raises(ValueError, match="stratification"):
            evaluate_config(d, "knn", cfg, folds=5, seed=0)

    def test_deterministic(self):
        d = blob_dataset(n_per=15, sd=2.0)
        cfg = Configuration("p:t", "perceptron", {"learning_rate": 0.05, "epochs": 20})
        a = evaluate_config(d, "perceptron", cfg, folds=5, seed=33)
        b = evaluate_config(d, "perceptron", cfg, folds=5, seed=33)
        assert a == b

    def test_accuracy_is_exact_fraction(self):
        d = blob_dataset(n_per=25, sd=3.0, seed=5)
        cfg = Configuration("knn:t", "knn", {"k": 3})
        acc = evaluate_config(d, "knn", cfg, folds=10, seed=2)
        assert (acc * d.n_instances / 100.0) == pytest.approx(
            round(acc * d.n_instances / 100.0)
        )


class TestLearnerSanity:
    def test_knn_on_blobs(self):
        d = blob_dataset(seed=1)
        cfg = Configuration("t", "knn", {"k": 5})
        assert evaluate_config(d, "knn", cfg, 10, seed=0) >= 90.0

    def test_perceptron_on_blobs(self):
        d = blob_dataset(seed=2)
        cfg = Configuration("t", "perceptron", {"learning_rate": 0.1, "epochs": 50})
        assert evaluate_config(d, "perceptron", cfg, 10, seed=0) >= 90.0

    def test_naive_bayes_on_independent_bits(self):
        d = bits_dataset(seed=3)
        cfg = Configuration("t", "naive_bayes", {"laplace_alpha": 1.0})
        assert evaluate_config(d, "naive_bayes", cfg, 10, seed=0) >= 90.0

    def test_decision_tree_on_axis_split(self):
        d = axis_split_dataset(seed=4)
        cfg = Configuration("t", "decision_tree", {"max_depth": 3, "min_split": 2})
        assert evaluate_config(d, "decision_tree", cfg, 10, seed=0) >= 90.0


class TestBuildMatrix:
    def small_spec(self):
        return LearnerSpec("knn", {"k": IntRange(1, 7)}, {"k": 5})

    def test_shape_fully_observed(self):
        datasets = [blob_dataset("d_one", seed=1), blob_dataset("d_two", seed=2)]
        m, registry = build_matrix(datasets, [self.small_spec()], 3, folds=5, seed=6)
        assert m.n_rows == 2
        assert m.n_cols == 4
        assert m.observed_count == 8
        assert len(registry) == 4
        assert registry[-1].is_default

    def test_determinism(self):
        datasets = [blob_dataset("d_one", seed=1)]
        a, _ = build_matrix(datasets, [self.small_spec()], 2, folds=5, seed=6)
        b, _ = build_matrix(datasets, [self.small_spec()], 2, folds=5, seed=6)
        assert a == b

    def test_cells_match_independent_reevaluation(self):
        datasets = [blob_dataset("d_one", seed=1), blob_dataset("d_two", seed=2)]
        m, registry = build_matrix(datasets, [self.small_spec()], 2, folds=5, seed=6)
        for r, d in enumerate(datasets):
            for c, cfg in enumerate(registry):
                again = evaluate_config(d, cfg.algorithm, cfg, 5, cell_seed(6, r, c))
                assert m.cells[(r, c)] == again

    def test_empty_inputs_rejected(self):
        with pytest.raises(ValueError):
            build_matrix([], [self.small_spec()], 2, 5, 0)


class TestGenSynthetic:
    def test_exact_rank(self):
        m = gen_synthetic(12, 9, rank=2, noise_sigma=0.0, seed=5)
        values, _ = m.to_dense()
        s = np.linalg.svd(values, compute_uv=False)
        assert s[2] < 1e-8 * s[0]
        assert s[1] > 1e-6 * s[0]

    def test_range_and_clipping(self):
        m = gen_synthetic(20, 15, rank=3, noise_sigma=5.0, seed=6)
        values, _ = m.to_dense()
        assert values.min() >= 0.0
        assert values.max() <= 100.0

    def test_determinism(self):
        a = gen_synthetic(6, 5, 2, 1.0, seed=7)
        b = gen_synthetic(6, 5, 2, 1.0, seed=7)
        assert a == b

    def test_rank_too_large(self):
        with pytest.raises(ValueError):
            gen_synthetic(4, 3, rank=4, noise_sigma=0.0, seed=0)

    def test_fully_observed(self):
        m = gen_synthetic(4, 3, rank=2, noise_sigma=0.0, seed=1)
        assert m.observed_count == 12


class TestLoadDataset:
    def test_mixed_types(self):
        text = "x,color,label\n1.5,red,a\n2.5,blue,b\n3.5,red,a\n0.5,blue,b\n"
        d = load_dataset(text, name="toy")
        assert d.columns[0].kind == "numeric"
        assert d.columns[1].kind == "categorical"
        assert d.n_instances == 4

    def test_rows_with_missing_labels_dropped(self):
        text = "x,label\n1.0,a\n2.0,\n3.0,b\n4.0,a\n"
        d = load_dataset(text, name="toy")
        assert d.n_instances == 3

    def test_too_small_rejected(self):
        with pytest.raises(ValueError):
            load_dataset("x,label\n1.0,a\n", name="toy")

    def test_default_specs_cover_four_learners(self):
        specs = default_learner_specs()
        assert [s.algorithm for s in specs] == [
            "knn",
            "naive_bayes",
            "decision_tree",
            "perceptron",
        ]
