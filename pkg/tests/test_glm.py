import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import central_difference, relative_error

from skewfit import glm
from skewfit.data import Dataset, generate_synthetic
from skewfit.glm import ModelParams, OptimizerSettings


def random_problem(rng, n=20, d=5):
    x = rng.normal(size=(n, d))
    y = (rng.random(n) < 0.4).astype(int)
    y[:2] = [0, 1]
    return Dataset(x, y, tuple(f"x{i}" for i in range(d)))


def loss_at(data, lam, weights=None, intercept=True):
    return lambda b: glm.weighted_cross_entropy(
        ModelParams(b, lam, include_intercept=intercept), data, weights)


class TestScore:
    def test_zero_beta(self):
        m = ModelParams(np.zeros(4))
        assert glm.score(m, [3.0, -1.0, 8.0]) == 0.5

    def test_log_three(self):
        m = ModelParams([math.log(3)], include_intercept=False)
        assert glm.score(m, [1.0]) == pytest.approx(0.75, abs=1e-15)

    def test_underflow_guard(self):
        m = ModelParams([-745.0], include_intercept=False)
        p = glm.score(m, [1.0])
        assert 0 < p < 1e-11 and math.isfinite(p)

    def test_matrix_input(self):
        m = ModelParams([0.0, 1.0])
        assert glm.score(m, np.array([[0.0], [1.0]])).shape == (2,)

    def test_wrong_width(self):
        with pytest.raises(ValueError):
            glm.score(ModelParams(np.zeros(3)), [1.0])

    @settings(max_examples=100)
    @given(st.floats(-40, 40), st.floats(-40, 40))
    def test_monotone(self, a, b):
        m = ModelParams([1.0], include_intercept=False)
        lo, hi = sorted((a, b))
        assert glm.score(m, [lo]) <= glm.score(m, [hi])


class TestLosses:
    def test_zero_beta_is_n_log_two(self):
        d = generate_synthetic(2, 37, 1)
        assert glm.cross_entropy(ModelParams(np.zeros(10)), d) == pytest.approx(37 * math.log(2))

    def test_single_sample(self):
        d = Dataset(np.array([[1.0]]), np.array([1]), ("a",))
        m = ModelParams([math.log(3)], include_intercept=False)
        assert glm.cross_entropy(m, d) == pytest.approx(0.2876820724517809, abs=1e-12)

    def test_penalty_is_lambda_squared_norm(self):
        d = Dataset(np.array([[0.0]]), np.array([1]), ("a",))
        m0 = ModelParams([0.0, 2.0], 0.0)
        m1 = ModelParams([0.0, 2.0], 0.3)
        gap = glm.cross_entropy(m1, d) - glm.cross_entropy(m0, d)
        assert gap == pytest.approx(0.3 * 4.0)

    def test_unit_weights_equal_plain(self):
        rng = np.random.default_rng(0)
        d = random_problem(rng)
        m = ModelParams(rng.normal(size=6), 0.2)
        assert glm.weighted_cross_entropy(m, d, np.ones(d.n)) == glm.cross_entropy(m, d)

    def test_indicator_weights(self):
        rng = np.random.default_rng(1)
        d = random_problem(rng)
        m = ModelParams(rng.normal(size=6), 0.2)
        w = np.zeros(d.n)
        w[4] = 1.0
        single = glm.cross_entropy(m, d.subset([4]))
        assert glm.weighted_cross_entropy(m, d, w) == pytest.approx(single, rel=1e-13)

    def test_homogeneity(self):
        rng = np.random.default_rng(2)
        d = random_problem(rng)
        m = ModelParams(rng.normal(size=6), 0.0)
        assert glm.weighted_cross_entropy(m, d, 2 * np.ones(d.n)) == pytest.approx(
            2 * glm.cross_entropy(m, d), rel=1e-14)

    @pytest.mark.parametrize("w", [np.zeros(3), np.array([1, -1, 1]), np.array([1, np.nan, 1])])
    def test_bad_weights(self, w):
        d = Dataset(np.zeros((3, 1)), np.array([0, 1, 0]), ("a",))
        with pytest.raises(ValueError):
            glm.weighted_cross_entropy(ModelParams(np.zeros(2)), d, w)

    def test_extreme_margin_is_finite(self):
        d = Dataset(np.array([[1.0], [-1.0]]), np.array([0, 1]), ("a",))
        m = ModelParams([800.0], include_intercept=False)
        assert math.isfinite(glm.cross_entropy(m, d))


class TestGradients:
    def test_component_error(self):
        rng = np.random.default_rng(3)
        d = random_problem(rng, 20, 5)
        w = rng.random(20) * 3
        beta = rng.normal(size=6)
        g = glm.gradient(ModelParams(beta, 0.3), d, w)
        fd = central_difference(loss_at(d, 0.3, w), beta)
        assert np.max(np.abs(g - fd)) < 1e-6

    def test_soft_f_component_error(self):
        rng = np.random.default_rng(4)
        d = random_problem(rng, 20, 5)
        beta = rng.normal(size=6)
        m = ModelParams(beta, 0.3)
        fd = central_difference(lambda b: glm.soft_f(glm.with_beta(m, b), d), beta)
        assert np.max(np.abs(glm.soft_f_gradient(m, d) - fd)) < 1e-6

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.booleans())
    def test_weighted_relative(self, seed, intercept):
        rng = np.random.default_rng(seed)
        d = random_problem(rng, 30, 4)
        w = rng.random(30) * 2
        beta = rng.normal(size=4 + intercept)
        g = glm.gradient(ModelParams(beta, 0.1, include_intercept=intercept), d, w)
        fd = central_difference(loss_at(d, 0.1, w, intercept), beta)
        assert relative_error(g, fd) < 1e-5

    def test_stationary_at_optimum(self):
        d = generate_synthetic(1, 300, 5)
        m = glm.fit(d, 0.0)
        assert np.linalg.norm(glm.gradient(m, d)) <= 1e-6


class TestFit:
    def test_separable_pair_stays_finite(self):
        d = Dataset(np.array([[-1.0], [1.0]]), np.array([0, 1]), ("a",))
        m = glm.fit(d, 1.0)
        assert np.isfinite(m.beta).all()
        assert np.linalg.norm(glm.gradient(m, d)) <= 1e-6

    def test_shrinkage_is_monotone(self):
        d = generate_synthetic(3, 400, 2)
        norms = [np.linalg.norm(glm.fit(d, lam).beta) for lam in (0.01, 0.1, 1.0, 10.0)]
        assert all(a > b for a, b in zip(norms, norms[1:]))

    def test_single_class_rejected(self):
        d = Dataset(np.zeros((3, 1)), np.zeros(3), ("a",))
        with pytest.raises(ValueError):
            glm.fit(d, 0.1)

    def test_no_intercept_mode(self):
        d = generate_synthetic(4, 200, 0)
        m = glm.fit(d, 0.1, include_intercept=False)
        assert m.beta.size == d.d and m.n_features == d.d

    def test_optimizer_contract(self):
        hits = 0
        rng = np.random.default_rng(11)
        for _ in range(40):
            d = random_problem(rng, 100, 5)
            lam = float(rng.choice([0.01, 0.1, 1.0]))
            m = glm.fit(d, lam, rng.random(100) + 0.1)
            hits += m.converged and m.grad_norm <= 1e-6
        assert hits >= 38

    def test_weight_scale_equivariance(self):
        d = generate_synthetic(1, 300, 9)
        w = np.random.default_rng(0).random(300) + 0.5
        a = glm.fit(d, 0.0, w).beta
        b = glm.fit(d, 0.0, 7.5 * w).beta
        np.testing.assert_allclose(a, b, atol=1e-6)

    def test_deterministic(self):
        d = generate_synthetic(5, 300, 1)
        assert np.array_equal(glm.fit(d, 0.1).beta, glm.fit(d, 0.1).beta)

    def test_json_roundtrip(self):
        d = generate_synthetic(2, 200, 0)
        m = glm.fit(d, 0.1)
        back = ModelParams.from_json(m.to_json())
        np.testing.assert_array_equal(back.beta, m.beta)
        assert back.feature_names == m.feature_names
        assert back.include_intercept and back.lambda_beta == 0.1

    def test_params_validation(self):
        with pytest.raises(ValueError):
            ModelParams([np.inf])
        with pytest.raises(ValueError):
            ModelParams([0.0], -1.0)


class TestConvexity:
    def test_chord_inequality(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            d = random_problem(rng, 25, 3)
            w = rng.random(25) * 2
            f = loss_at(d, 0.05, w)
            b1, b2 = rng.normal(size=4) * 2, rng.normal(size=4) * 2
            f1, f2 = f(b1), f(b2)
            for t in np.linspace(0, 1, 11):
                assert f((1 - t) * b1 + t * b2) <= (1 - t) * f1 + t * f2 + 1e-9 * (1 + abs(f1) + abs(f2))


class TestCostSensitive:
    def test_balanced(self):
        d = Dataset(np.zeros((4, 1)), np.array([0, 1, 0, 1]), ("a",))
        assert np.all(glm.cost_sensitive_weights(d) == 1.0)

    def test_ninety_ten(self):
        d = Dataset(np.zeros((100, 1)), np.r_[np.ones(10), np.zeros(90)], ("a",))
        w = glm.cost_sensitive_weights(d)
        assert w[0] == 5.0
        assert w[-1] == pytest.approx(5 / 9, rel=1e-15)


class TestSoftF:
    def test_balanced_zero_beta(self):
        d = Dataset(np.zeros((4, 1)), np.array([1, 1, 0, 0]), ("a",))
        assert glm.soft_f(ModelParams(np.zeros(2)), d) == pytest.approx(0.5, abs=1e-15)

    def test_near_perfect_scores(self):
        x = np.array([[1.0], [1.0], [-1.0], [-1.0]])
        d = Dataset(x, np.array([1, 1, 0, 0]), ("a",))
        m = ModelParams([60.0], include_intercept=False)
        assert glm.soft_f(m, d) == pytest.approx(1.0, abs=1e-12)

    def test_fit_improves_surrogate(self):
        d = generate_synthetic(5, 400, 3)
        m = glm.fit_soft_f(d, 0.01)
        start = glm.soft_f(ModelParams(np.zeros(m.beta.size), 0.01), d)
        assert glm.soft_f(m, d) > start
        assert np.linalg.norm(glm.soft_f_gradient(m, d)) <= 1e-5

    def test_needs_positive(self):
        with pytest.raises(ValueError):
            glm.fit_soft_f(Dataset(np.zeros((3, 1)), np.zeros(3), ("a",)), 0.1)


class TestMinimize:
    def test_quadratic_bfgs(self):
        a = np.diag([1.0, 10.0, 100.0])
        res = glm.minimize(lambda x: (0.5 * x @ a @ x - x.sum(), a @ x - 1), np.zeros(3))
        assert res.converged
        np.testing.assert_allclose(res.x, 1 / np.diag(a), atol=1e-6)

    def test_values_non_increasing(self):
        d = generate_synthetic(6, 300, 0)
        x = glm.design_matrix(d.features)
        y = d.labels.astype(float)
        res = glm.minimize(lambda b: glm._nll(b, x, y, np.ones(d.n), 0.01), np.zeros(10))
        v = np.array(res.values)
        assert np.all(np.diff(v) <= 8 * np.finfo(float).eps * np.abs(v[:-1]))

    def test_settings_validation(self):
        with pytest.raises(ValueError):
            OptimizerSettings(gradient_tolerance=0.0)
        with pytest.raises(ValueError):
            OptimizerSettings(max_iterations=0)
