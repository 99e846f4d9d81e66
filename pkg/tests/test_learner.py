import numpy as np
import pytest
from hypothesis import given, strategies as st
from mpmath import mp, matrix as mpmatrix

from qrc_excited.learner import (
    RegressionModel,
    ScalingParams,
    Standardizer,
    apply_scaling,
    augment,
    fit_ols,
    fit_ridge_augmented,
    fit_scaling,
    invert_scaling,
    mae,
    mse,
    per_target_mae,
    solve_ridge,
    train_model,
)


class TestScaling:
    def test_two_values(self):
        params = fit_scaling(np.array([1.0, 3.0]))
        np.testing.assert_array_equal(apply_scaling(np.array([[1.0], [3.0]]), params).ravel(), [-1, 1])

    def test_affine_extension(self):
        params = fit_scaling(np.array([0.0, 2.0]))
        assert apply_scaling(np.array([[3.0]]), params)[0, 0] == 2.0

    def test_degenerate_target(self):
        with pytest.raises(ValueError):
            fit_scaling(np.array([[1.0, 2.0], [1.0, 3.0]]))

    def test_empty(self):
        with pytest.raises(ValueError):
            fit_scaling(np.zeros((0, 3)))

    @given(st.integers(0, 10**6))
    def test_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        y = rng.normal(size=(20, 3)) * rng.uniform(0.1, 10, size=3)
        params = fit_scaling(y[:10])
        np.testing.assert_allclose(invert_scaling(apply_scaling(y, params), params), y, rtol=0, atol=1e-12)

    def test_training_range_maps_to_unit_interval(self, rng):
        y = rng.normal(size=(30, 3))
        s = fit_scaling(y).apply(y)
        np.testing.assert_allclose(s.min(axis=0), -1, atol=1e-15)
        np.testing.assert_allclose(s.max(axis=0), 1, atol=1e-15)

    @given(st.integers(0, 10**6))
    def test_shared_scaling_preserves_model_ranking(self, seed):
        rng = np.random.default_rng(seed)
        truth = rng.normal(size=(25, 1))
        params = ScalingParams(np.array([-2.0]), np.array([3.0]))
        candidates = [truth + rng.normal(scale=s, size=truth.shape) for s in (0.1, 0.5, 1.0, 0.3)]
        scaled = [mae(params.apply(c), params.apply(truth)) for c in candidates]
        raw = [mae(c, truth) for c in candidates]
        assert int(np.argmin(scaled)) == int(np.argmin(raw))


class TestOls:
    def test_exact_linear(self):
        fit = fit_ols(np.array([[1.0], [2.0]]), np.array([2.0, 4.0]))
        np.testing.assert_allclose(fit.weights, [2.0], atol=1e-15)

    def test_zero_targets(self, rng):
        fit = fit_ols(rng.normal(size=(10, 3)), np.zeros(10))
        np.testing.assert_array_equal(fit.weights, 0.0)

    def test_matches_high_precision_normal_equations(self, rng):
        v = rng.normal(size=(30, 24))
        y = rng.normal(size=30)
        mp.dps = 50
        vm = mpmatrix(v.tolist())
        w_oracle = (vm.T * vm) ** -1 * vm.T * mpmatrix(y.tolist())
        w_oracle = np.array([float(x) for x in w_oracle])
        fit = fit_ols(v, y)
        np.testing.assert_allclose(v @ fit.weights - y, v @ w_oracle - y, atol=1e-8)

    def test_rank_deficiency_flagged(self, rng):
        v = rng.normal(size=(10, 2))
        v = np.column_stack([v, v[:, 0]])
        fit = fit_ols(v, rng.normal(size=10))
        assert fit.rank_deficient and fit.rank == 2

    def test_shape_errors(self):
        with pytest.raises(ValueError):
            fit_ols(np.zeros((3, 2)), np.zeros(4))
        with pytest.raises(ValueError):
            fit_ols(np.zeros((0, 2)), np.zeros(0))

    @given(st.integers(0, 10**6), st.integers(5, 40), st.integers(1, 5))
    def test_residual_orthogonal_to_columns(self, seed, rows, cols):
        rng = np.random.default_rng(seed)
        cols = min(cols, rows)
        v = rng.normal(size=(rows, cols))
        y = rng.normal(size=rows)
        w = fit_ols(v, y).weights
        assert np.max(np.abs(v.T @ (v @ w - y))) < 1e-8


class TestRidge:
    def test_reduces_to_ols(self, rng):
        v, y = rng.normal(size=(20, 5)), rng.normal(size=20)
        ridge = fit_ridge_augmented(v, y, alpha=0.0, copies=1, sigma=0.0, rng=0)
        np.testing.assert_array_equal(ridge.weights, fit_ols(v, y).weights)

    def test_large_alpha_shrinks_to_zero(self, rng):
        v, y = rng.normal(size=(20, 5)), rng.normal(size=20)
        assert np.linalg.norm(fit_ridge_augmented(v, y, alpha=1e12, rng=0).weights) < 1e-6

    def test_negative_alpha(self, rng):
        with pytest.raises(ValueError):
            solve_ridge(rng.normal(size=(4, 2)), rng.normal(size=4), -1.0)

    @given(st.integers(0, 10**6), st.floats(1e-6, 10.0))
    def test_normal_equations(self, seed, alpha):
        rng = np.random.default_rng(seed)
        v, y = augment(rng.normal(size=(15, 6)), rng.normal(size=15), 10, 2e-3, rng)
        w = solve_ridge(v, y, alpha).weights
        lhs = (v.T @ v + alpha * np.eye(6)) @ w
        np.testing.assert_allclose(lhs, v.T @ y, atol=1e-8)

    def test_augment_shapes_and_jitter(self, rng):
        v, y = rng.normal(size=(4, 3)), rng.normal(size=4)
        va, ya = augment(v, y, 100, 2e-3, rng)
        assert va.shape == (400, 3) and ya.shape == (400,)
        assert np.std(va - np.tile(v, (100, 1))) == pytest.approx(2e-3, rel=0.1)

    def test_regularization_benefit_report(self, capsys):
        # noisy features with near-collinear columns; reported, not enforced
        gains = []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            base = rng.normal(size=(80, 4))
            x = np.column_stack([base, base + rng.normal(scale=1e-3, size=base.shape)])
            w = rng.normal(size=8)
            y = x @ w + rng.normal(scale=0.1, size=80)
            xn = x + rng.normal(scale=2e-3, size=x.shape)
            tr, te = slice(0, 30), slice(30, 80)
            ols = mae(xn[te] @ fit_ols(xn[tr], y[tr]).weights, y[te])
            ridge = mae(xn[te] @ fit_ridge_augmented(xn[tr], y[tr], rng=rng).weights, y[te])
            gains.append(ols - ridge)
        print(f"ridge minus OLS test MAE gain over 20 seeds: {np.mean(gains):.4g}")


class TestMetrics:
    def test_identical(self, rng):
        a = rng.normal(size=(5, 3))
        assert mae(a, a) == 0 and mse(a, a) == 0

    def test_offset(self, rng):
        a = rng.normal(size=(5, 3))
        assert mae(a + 1, a) == pytest.approx(1, abs=1e-15)

    def test_formula(self):
        assert mae(np.zeros((1, 3)), np.array([[1.0, 2.0, 3.0]])) == 2.0

    def test_per_target(self):
        np.testing.assert_array_equal(per_target_mae(np.zeros((2, 2)), np.array([[1.0, 2.0], [3.0, 4.0]])), [2, 3])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            mae(np.zeros(3), np.zeros(4))


class TestModel:
    def test_train_predict_round_trip(self, rng):
        x = rng.normal(size=(40, 6))
        y = x @ rng.normal(size=(6, 3))
        scaling = fit_scaling(y)
        plain = train_model(x, scaling.apply(y), scaling=scaling)
        cols = np.column_stack([fit_ols(x, scaling.apply(y)[:, k]).weights for k in range(3)])
        np.testing.assert_array_equal(plain.predict_scaled(x), x @ cols)
        np.testing.assert_allclose(plain.predict(x), scaling.invert(x @ cols), atol=1e-14)
        model = train_model(x, scaling.apply(y), scaling=scaling, standardize_features=True)
        back = RegressionModel.from_dict(model.to_dict())
        np.testing.assert_array_equal(back.predict(x), model.predict(x))

    def test_ridge_reproducible(self, rng):
        x, y = rng.normal(size=(20, 4)), rng.normal(size=(20, 3))
        a = train_model(x, y, ridge=True, rng=5).weights
        b = train_model(x, y, ridge=True, rng=5).weights
        np.testing.assert_array_equal(a, b)

    def test_standardizer_round_trip(self, rng):
        x = rng.normal(size=(10, 3))
        s = Standardizer.fit(x)
        np.testing.assert_allclose(s.invert(s.apply(x)), x, atol=1e-14)
        with pytest.raises(ValueError):
            Standardizer.fit(np.ones((4, 2)))
