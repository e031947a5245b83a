"""Features, the split protocol, hand-rolled logistic training, metrics."""

import numpy as np
import pandas as pd
import pytest

from fourops.analysis import (
    BASELINE_FEATURES,
    BINARY_CLASSES,
    DIFFICULTY_CLASSES,
    STRUCTURAL_FEATURES,
    ArityMismatchError,
    DegenerateError,
    EmptyDataError,
    FeatureVector,
    Hyperparams,
    ModelParams,
    NotSolvableError,
    baseline_features,
    binary_logistic_loss_grad,
    difficulty_from_subset_size,
    evaluate,
    feature_matrix,
    load_dataset,
    load_model,
    multinomial_logistic_loss_grad,
    save_model,
    split_by_bag,
    structural_features,
    subset_size_rule,
    train_binary_logistic,
    train_difficulty_baseline,
    train_multinomial_logistic,
)
from fourops.dataset import DifficultyLabel, OutOfRangeError, label_instance

FAST_HP = Hyperparams(max_epochs=120)


@pytest.fixture(scope="module")
def small_df(small_dataset_path):
    return load_dataset(small_dataset_path)


@pytest.fixture(scope="module")
def small_split(small_df):
    return split_by_bag(small_df, 0.2, seed=42)


class TestBaselineFeatures:
    def test_low_bag(self):
        fv = baseline_features((1, 1, 1, 1, 1, 25), 999)
        d = fv.as_dict()
        assert d["small_sum"] == 5
        assert d["big_value"] == 25
        assert d["distinct_count"] == 2
        assert d["target"] == 999
        assert d["target_mod_big"] == 24

    def test_high_bag(self):
        d = baseline_features((9, 9, 9, 9, 9, 75), 100).as_dict()
        assert d["small_sum"] == 45
        assert d["big_value"] == 75
        assert d["target_mod_10"] == 0

    def test_fixed_arity_and_names(self):
        fv = baseline_features((2, 3, 7, 9, 9, 75), 500)
        assert fv.names == BASELINE_FEATURES
        assert len(fv.values) == len(BASELINE_FEATURES) == 14

    def test_matrix_matches_scalar_path(self, small_df):
        X, names = feature_matrix(small_df, "baseline")
        assert names == BASELINE_FEATURES
        for i in (0, 117, 3000, len(small_df) - 1):
            row = small_df.iloc[i]
            bag = tuple(int(row[c]) for c in ("n1", "n2", "n3", "n4", "n5", "big"))
            fv = baseline_features(bag, int(row["target"]))
            assert np.allclose(X[i], fv.values)


class TestStructuralFeatures:
    def test_solved_record(self):
        record = label_instance(0, (2, 2, 2, 2, 2, 50), 100)
        d = structural_features(record).as_dict()
        assert d["subset_size"] == 2
        assert d["op_mul"] == 1
        assert d["op_add"] == d["op_sub"] == d["op_div"] == 0
        assert d["n_min_subsets"] == 1
        assert d["max_intermediate"] == 100

    def test_names(self):
        record = label_instance(0, (1, 2, 3, 4, 5, 75), 100)
        assert structural_features(record).names == STRUCTURAL_FEATURES

    def test_unsolvable_rejected(self):
        record = label_instance(0, (1, 1, 1, 1, 1, 25), 999)
        with pytest.raises(NotSolvableError):
            structural_features(record)


class TestFeatureVector:
    def test_arity_mismatch(self):
        with pytest.raises(ValueError):
            FeatureVector(("a", "b"), np.array([1.0]))

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            FeatureVector(("a",), np.array([np.nan]))


class TestSplitByBag:
    def test_partitions_bags(self, small_df):
        train, test = split_by_bag(small_df, 0.2, seed=1)
        train_bags = set(train["bag_id"])
        test_bags = set(test["bag_id"])
        assert not train_bags & test_bags
        assert len(train_bags | test_bags) == 40
        assert len(test_bags) == 8  # round(0.2 * 40)
        assert len(train) + len(test) == len(small_df)

    def test_whole_bags_move_together(self, small_df):
        _, test = split_by_bag(small_df, 0.2, seed=1)
        assert (test.groupby("bag_id").size() == 900).all()

    def test_deterministic(self, small_df):
        a = split_by_bag(small_df, 0.2, seed=5)[1]
        b = split_by_bag(small_df, 0.2, seed=5)[1]
        assert set(a["bag_id"]) == set(b["bag_id"])
        c = split_by_bag(small_df, 0.2, seed=6)[1]
        assert set(a["bag_id"]) != set(c["bag_id"])

    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.2, 1.5])
    def test_rejects_bad_fraction(self, small_df, fraction):
        with pytest.raises(ValueError):
            split_by_bag(small_df, fraction, seed=0)


def central_difference_grad(loss_of, w, eps=1e-6):
    grad = np.zeros_like(w)
    for i in range(len(w)):
        up, down = w.copy(), w.copy()
        up[i] += eps
        down[i] -= eps
        grad[i] = (loss_of(up) - loss_of(down)) / (2 * eps)
    return grad


class TestGradients:
    def test_binary_matches_central_differences(self):
        rng = np.random.default_rng(3)
        X1 = np.column_stack([np.ones(40), rng.normal(size=(40, 5))])
        y = (rng.random(40) < 0.5).astype(float)
        w = rng.normal(size=6)
        _, grad = binary_logistic_loss_grad(w, X1, y, l2=1e-3)
        numeric = central_difference_grad(
            lambda v: binary_logistic_loss_grad(v, X1, y, 1e-3)[0], w
        )
        assert np.max(np.abs(grad - numeric)) / max(np.max(np.abs(numeric)), 1e-12) < 1e-4

    def test_multinomial_matches_central_differences(self):
        rng = np.random.default_rng(4)
        X1 = np.column_stack([np.ones(30), rng.normal(size=(30, 4))])
        y_idx = rng.integers(0, 3, size=30)
        W = rng.normal(size=(3, 5))

        def loss_of(flat):
            return multinomial_logistic_loss_grad(flat.reshape(3, 5), X1, y_idx, 1e-3)[0]

        _, grad = multinomial_logistic_loss_grad(W, X1, y_idx, 1e-3)
        numeric = central_difference_grad(loss_of, W.ravel())
        assert (
            np.max(np.abs(grad.ravel() - numeric)) / max(np.max(np.abs(numeric)), 1e-12)
            < 1e-4
        )


class TestTraining:
    def test_binary_model_shape_and_loss_curve(self, small_split):
        train, _ = small_split
        model = train_binary_logistic(train, "baseline", FAST_HP)
        assert model.kind == "binary-logistic"
        assert model.classes == BINARY_CLASSES
        assert model.coef.shape == (1, len(model.feature_names) + 1)
        assert np.all(model.stds > 0)
        losses = model.loss_history
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_standardization_on_train_stats(self, small_split):
        train, _ = small_split
        model = train_binary_logistic(train, "baseline", FAST_HP)
        X, names = feature_matrix(train, "baseline")
        cols = [names.index(n) for n in model.feature_names]
        Xs = (X[:, cols] - model.means) / model.stds
        assert np.max(np.abs(Xs.mean(axis=0))) < 1e-9
        assert np.max(np.abs(Xs.std(axis=0) - 1)) < 1e-9

    def test_binary_degenerate(self, small_df):
        solvable_only = small_df[small_df["solvable"] == 1]
        with pytest.raises(DegenerateError):
            train_binary_logistic(solvable_only, "baseline", FAST_HP)

    def test_multinomial_degenerate(self, small_df):
        no_hard = small_df[small_df["difficulty"] != "H"]
        with pytest.raises(DegenerateError):
            train_multinomial_logistic(no_hard, "baseline", FAST_HP)

    def test_training_is_deterministic(self, small_split):
        train, _ = small_split
        a = train_binary_logistic(train, "baseline", FAST_HP)
        b = train_binary_logistic(train, "baseline", FAST_HP)
        assert np.array_equal(a.coef, b.coef)

    def test_multinomial_loss_curve(self, small_split):
        train, _ = small_split
        model = train_multinomial_logistic(train, "baseline", FAST_HP)
        assert model.coef.shape[0] == 4
        losses = model.loss_history
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_difficulty_baseline_is_multinomial_on_baseline(self, small_split):
        train, _ = small_split
        model = train_difficulty_baseline(train, FAST_HP)
        assert model.kind == "multinomial-logistic"
        assert model.feature_set == "baseline"

    def test_structural_features_make_solvability_trivial(self, small_split):
        # subset_size carries the unsolvable sentinel, so this is separable
        train, test = small_split
        model = train_binary_logistic(train, "baseline+structural", FAST_HP)
        assert evaluate(model, test).accuracy > 0.99


class TestEvaluate:
    def test_confusion_invariants(self, small_split):
        train, test = small_split
        model = train_multinomial_logistic(train, "baseline", FAST_HP)
        metrics = evaluate(model, test)
        assert metrics.confusion.sum() == len(test)
        for i, cls in enumerate(metrics.classes):
            assert metrics.confusion[i].sum() == metrics.support[cls]
        assert metrics.accuracy == pytest.approx(
            np.trace(metrics.confusion) / metrics.confusion.sum()
        )

    def test_row_order_invariance(self, small_split):
        train, test = small_split
        model = train_binary_logistic(train, "baseline", FAST_HP)
        shuffled = test.sample(frac=1.0, random_state=11)
        a = evaluate(model, test)
        b = evaluate(model, shuffled)
        assert a.accuracy == b.accuracy
        assert np.array_equal(a.confusion, b.confusion)

    def test_empty_data(self, small_split):
        train, test = small_split
        model = train_binary_logistic(train, "baseline", FAST_HP)
        with pytest.raises(EmptyDataError):
            evaluate(model, test.iloc[0:0])

    def test_feature_set_mismatch(self, small_split):
        train, test = small_split
        model = train_binary_logistic(train, "baseline", FAST_HP)
        with pytest.raises(ArityMismatchError):
            evaluate(model, test, "baseline+structural")

    def test_majority_class_accuracy(self, small_df):
        # intercept-only model always answers "solvable"
        model = ModelParams(
            kind="binary-logistic",
            feature_set="baseline",
            feature_names=(),
            classes=BINARY_CLASSES,
            coef=np.array([[5.0]]),
            means=np.zeros(0),
            stds=np.zeros(0),
            seed=0,
        )
        df = pd.concat(
            [
                small_df[small_df["solvable"] == 1].head(90),
                small_df[small_df["solvable"] == 0].head(10),
            ]
        )
        metrics = evaluate(model, df)
        assert metrics.accuracy == pytest.approx(0.9)
        assert metrics.recall["solvable"] == 1.0


class TestSubsetSizeRule:
    @pytest.mark.parametrize(
        "size,expected",
        [
            (None, DifficultyLabel.UNSOLVABLE),
            (1, DifficultyLabel.EASY),
            (2, DifficultyLabel.EASY),
            (3, DifficultyLabel.EASY),
            (4, DifficultyLabel.MEDIUM),
            (5, DifficultyLabel.MEDIUM),
            (6, DifficultyLabel.HARD),
        ],
    )
    def test_mapping(self, size, expected):
        assert difficulty_from_subset_size(size) is expected

    @pytest.mark.parametrize("size", [0, 7, -1])
    def test_out_of_range(self, size):
        with pytest.raises(OutOfRangeError):
            difficulty_from_subset_size(size)

    def test_monotone(self):
        rank = {"E": 0, "M": 1, "H": 2}
        labels = [difficulty_from_subset_size(s).value for s in range(1, 7)]
        assert [rank[v] for v in labels] == sorted(rank[v] for v in labels)

    def test_rule_model_is_exact_on_labeled_data(self, small_df):
        metrics = evaluate(subset_size_rule(), small_df)
        assert metrics.accuracy == 1.0
        assert metrics.classes == DIFFICULTY_CLASSES


class TestModelPersistence:
    def test_round_trip_binary(self, small_split, tmp_path):
        train, test = small_split
        model = train_binary_logistic(train, "baseline", FAST_HP)
        path = tmp_path / "binary.model"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.kind == model.kind
        assert loaded.feature_set == model.feature_set
        assert loaded.feature_names == model.feature_names
        assert loaded.classes == model.classes
        assert loaded.seed == model.seed
        assert np.array_equal(loaded.coef, model.coef)
        assert np.array_equal(loaded.means, model.means)
        assert np.array_equal(loaded.stds, model.stds)
        assert evaluate(loaded, test).accuracy == evaluate(model, test).accuracy

    def test_round_trip_multinomial(self, small_split, tmp_path):
        train, _ = small_split
        model = train_multinomial_logistic(train, "baseline", FAST_HP)
        path = tmp_path / "multi.model"
        save_model(model, path)
        loaded = load_model(path)
        assert np.array_equal(loaded.coef, model.coef)
        assert loaded.classes == DIFFICULTY_CLASSES

    def test_round_trip_rule(self, tmp_path):
        path = tmp_path / "rule.model"
        save_model(subset_size_rule(), path)
        loaded = load_model(path)
        assert loaded.kind == "subset-size-rule"
        assert loaded.feature_names == ("subset_size",)


class TestLoadDataset:
    def test_columns_and_dtypes(self, small_dataset_path):
        df = load_dataset(small_dataset_path)
        assert "witness" not in df.columns
        assert df["min_ops"].dtype == np.int32
        assert str(df["difficulty"].dtype) == "category"

    def test_with_witness(self, small_dataset_path):
        df = load_dataset(small_dataset_path, with_witness=True)
        assert "witness" in df.columns
        solvable = df[df["solvable"] == 1]
        assert solvable["witness"].str.startswith("(").all()
