import numpy as np
import pytest

from botmeter.classifiers import (KINDS, LRModel, ModelSpec, default_specs, fit,
                                  load_model, lr_loss_and_grad, predict,
                                  save_model)
from botmeter.errors import ValidationError


def separable_1d(n_per_class=100):
    X = np.array([[-1.0]] * n_per_class + [[1.0]] * n_per_class)
    y = np.array([0] * n_per_class + [1] * n_per_class)
    return X, y


def blobs(rng, n=400, d=4, gap=4.0):
    y = rng.integers(0, 2, n)
    X = rng.normal(size=(n, d)) + gap * y[:, None]
    return X, y


class TestSpecValidation:
    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            ModelSpec(kind="SVM")

    def test_bad_hyperparameters(self):
        with pytest.raises(ValidationError):
            ModelSpec(kind="KNN", k=0)
        with pytest.raises(ValidationError):
            ModelSpec(kind="RF", n_trees=0)
        with pytest.raises(ValidationError):
            ModelSpec(kind="LR", l2_lambda=-1)

    def test_single_class_rejected(self):
        X = np.zeros((4, 2))
        with pytest.raises(ValidationError):
            fit(ModelSpec(kind="NB"), X, [1, 1, 1, 1])

    def test_non_finite_named(self):
        X = np.zeros((3, 2))
        X[1, 1] = np.nan
        with pytest.raises(ValidationError, match="row 1, column 1"):
            fit(ModelSpec(kind="NB"), X, [0, 1, 0])

    def test_width_mismatch_on_predict(self):
        X, y = separable_1d(10)
        model = fit(ModelSpec(kind="NB"), X, y)
        with pytest.raises(ValidationError):
            predict(model, np.zeros((2, 3)))


class TestLR:
    def test_separable_sign_and_accuracy(self):
        X, y = separable_1d(100)
        model = fit(ModelSpec(kind="LR"), X, y)
        assert model.weights[0] > 0
        assert (predict(model, X) == y).mean() == 1.0

    def test_boundary_probability_goes_to_class_one(self):
        model = LRModel(ModelSpec(kind="LR"), mu=np.zeros(1), sigma=np.ones(1),
                        weights=np.array([1.0]), bias=0.0)
        assert predict(model, [[0.0]])[0] == 1  # sigma(0) = 0.5 >= 0.5

    def test_duplicated_column_shares_weight(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=200)
        y = (x > 0).astype(int)
        X = np.column_stack([x, x, rng.normal(size=200)])
        model = fit(ModelSpec(kind="LR"), X, y)
        assert abs(model.weights[0] - model.weights[1]) < 1e-3
        assert abs(model.weights[0]) > abs(model.weights[2])

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(42)
        for _ in range(10):
            n, d = rng.integers(4, 20), rng.integers(1, 6)
            X = rng.normal(size=(n, d))
            y = rng.integers(0, 2, n).astype(np.int64)
            w = rng.normal(size=d)
            b = float(rng.normal())
            lam = float(rng.uniform(0, 2))
            _, grad_w, grad_b = lr_loss_and_grad(w, b, X, y, lam)
            eps = 1e-6
            for j in range(d):
                delta = np.zeros(d)
                delta[j] = eps
                hi, _, _ = lr_loss_and_grad(w + delta, b, X, y, lam)
                lo, _, _ = lr_loss_and_grad(w - delta, b, X, y, lam)
                fd = (hi - lo) / (2 * eps)
                assert grad_w[j] == pytest.approx(fd, rel=1e-5, abs=1e-8)
            hi, _, _ = lr_loss_and_grad(w, b + eps, X, y, lam)
            lo, _, _ = lr_loss_and_grad(w, b - eps, X, y, lam)
            assert grad_b == pytest.approx((hi - lo) / (2 * eps), rel=1e-5, abs=1e-8)

    def test_deterministic_refit(self):
        rng = np.random.default_rng(1)
        X, y = blobs(rng)
        a = fit(ModelSpec(kind="LR"), X, y)
        b = fit(ModelSpec(kind="LR"), X, y)
        np.testing.assert_array_equal(a.weights, b.weights)
        assert a.bias == b.bias


class TestNB:
    def test_zero_variance_hits_smoothing_floor(self):
        X = np.array([[1.0], [1.0], [2.0], [4.0]])
        y = np.array([0, 0, 1, 1])
        spec = ModelSpec(kind="NB")
        model = fit(spec, X, y)
        assert model.means[0, 0] == 1.0
        floor = spec.var_smoothing * X.var(axis=0).max()
        assert model.variances[0, 0] == pytest.approx(floor)

    def test_posterior_sums_to_one(self):
        rng = np.random.default_rng(3)
        X, y = blobs(rng, n=100)
        model = fit(ModelSpec(kind="NB"), X, y)
        proba = model.predict_proba(rng.normal(size=(50, X.shape[1])))
        np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-12)

    def test_tie_goes_to_class_zero(self):
        X = np.array([[-1.0], [1.0]])
        y = np.array([0, 1])
        model = fit(ModelSpec(kind="NB"), X, y)
        assert predict(model, [[0.0]])[0] == 0  # symmetric -> equal scores


class TestKNN:
    def test_nearest_neighbor(self):
        model = fit(ModelSpec(kind="KNN", k=1),
                    [[0.0, 0.0], [10.0, 10.0]], [0, 1])
        assert predict(model, [[1.0, 1.0]])[0] == 0

    def test_distance_tie_prefers_lower_train_index(self):
        model = fit(ModelSpec(kind="KNN", k=1),
                    [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]],
                    [1, 0, 1, 0])
        # Query equidistant from all four; stable order keeps index 0.
        assert predict(model, [[0.0, 0.0]])[0] == 1

    def test_even_k_vote_tie_is_class_zero(self):
        model = fit(ModelSpec(kind="KNN", k=2),
                    [[0.0], [1.0], [10.0], [11.0]], [0, 0, 1, 1])
        # Around 5.0 the two nearest split 1-1 for k=2 at 4.0 -> tie -> 0.
        model2 = fit(ModelSpec(kind="KNN", k=4),
                     [[0.0], [1.0], [10.0], [11.0]], [0, 0, 1, 1])
        assert predict(model2, [[5.5]])[0] == 0

    def test_blob_accuracy(self):
        rng = np.random.default_rng(5)
        X, y = blobs(rng, n=600)
        model = fit(ModelSpec(kind="KNN"), X, y)
        assert (predict(model, X) == y).mean() > 0.98

    def test_training_row_permutation_invariance_without_ties(self):
        # Continuous features make exact distance ties measure-zero, so the
        # prediction must not depend on training-row order.
        rng = np.random.default_rng(19)
        X, y = blobs(rng, n=200, gap=1.0)
        queries = rng.normal(size=(80, X.shape[1])) + 0.5
        base = predict(fit(ModelSpec(kind="KNN"), X, y), queries)
        perm = rng.permutation(len(X))
        shuffled = predict(fit(ModelSpec(kind="KNN"), X[perm], y[perm]), queries)
        np.testing.assert_array_equal(base, shuffled)


class TestRF:
    def test_single_stump_on_one_informative_feature(self):
        X = np.array([[-2.0, 7.0], [-1.0, 7.0], [1.0, 7.0], [2.0, 7.0]])
        y = np.array([0, 0, 1, 1])
        model = fit(ModelSpec(kind="RF", n_trees=1, bootstrap=False), X, y)
        tree = model.trees[0]
        assert tree["feature"] == 0
        assert -1.0 <= tree["threshold"] <= 1.0
        assert "counts" in tree["left"] and "counts" in tree["right"]
        assert (predict(model, X) == y).all()

    def test_leaf_counts_sum_to_samples(self):
        rng = np.random.default_rng(7)
        X, y = blobs(rng, n=80, gap=1.0)
        model = fit(ModelSpec(kind="RF", n_trees=5), X, y)

        def leaf_total(node):
            if "counts" in node:
                return sum(node["counts"])
            return leaf_total(node["left"]) + leaf_total(node["right"])

        for tree in model.trees:
            assert leaf_total(tree) == len(X)

    def test_majority_vote(self):
        stump = lambda cls: {"counts": [1 - cls, cls]}
        from botmeter.classifiers import RFModel
        model = RFModel(ModelSpec(kind="RF", n_trees=3), 1,
                        [stump(1), stump(1), stump(0)])
        assert predict(model, [[0.0]])[0] == 1

    def test_same_seed_identical_forest(self):
        rng = np.random.default_rng(11)
        X, y = blobs(rng, n=120, gap=1.5)
        a = fit(ModelSpec(kind="RF", n_trees=12, seed=5), X, y)
        b = fit(ModelSpec(kind="RF", n_trees=12, seed=5), X, y)
        assert a.trees == b.trees
        c = fit(ModelSpec(kind="RF", n_trees=12, seed=6), X, y)
        assert c.trees != a.trees

    def test_rf_beats_nb_on_correlated_features(self):
        # XOR-style classes with duplicated informative columns: the
        # independence assumption breaks NB while trees cope.
        rng = np.random.default_rng(13)
        n = 800
        a = rng.normal(size=n)
        b = rng.normal(size=n)
        y = ((a > 0) ^ (b > 0)).astype(int)
        X = np.column_stack([a, b, a + rng.normal(scale=0.05, size=n),
                             b + rng.normal(scale=0.05, size=n)])
        cut = 600
        rf = fit(ModelSpec(kind="RF", seed=1), X[:cut], y[:cut])
        nb = fit(ModelSpec(kind="NB"), X[:cut], y[:cut])
        rf_acc = (predict(rf, X[cut:]) == y[cut:]).mean()
        nb_acc = (predict(nb, X[cut:]) == y[cut:]).mean()
        assert rf_acc >= nb_acc
        assert rf_acc > 0.9


class TestSerialization:
    @pytest.mark.parametrize("kind", KINDS)
    def test_roundtrip_reproduces_predictions(self, kind, tmp_path):
        rng = np.random.default_rng(17)
        X, y = blobs(rng, n=150, d=3, gap=2.0)
        spec = ModelSpec(kind=kind, n_trees=10, seed=2)
        model = fit(spec, X, y)
        path = tmp_path / f"{kind}.json"
        save_model(model, path)
        loaded = load_model(path)
        queries = rng.normal(size=(60, 3)) + 1.0
        np.testing.assert_array_equal(predict(model, queries),
                                      predict(loaded, queries))
        assert loaded.spec == spec

    def test_version_check(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"format_version": 99, "kind": "NB", "spec": {}, "state": {}}')
        with pytest.raises(ValidationError):
            load_model(path)


def test_default_specs_order():
    assert [s.kind for s in default_specs()] == ["NB", "KNN", "RF", "LR"]
