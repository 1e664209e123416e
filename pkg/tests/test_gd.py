import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import mixedlr.gd as gd
from mixedlr.am import assign_labels
from mixedlr.data import Instance, boundary_radius, perturbed_init
from mixedlr.errors import DimensionMismatch, Divergence, NoStableStep
from mixedlr.gd import GdConfig, gd_step, run_gd, tune_step_size
from mixedlr.linalg import solve_least_squares
from mixedlr.metrics import fit_convergence_exponent

from conftest import make_instance


def clustered_loss(inst, thetas, labels):
    return sum(np.sum((inst.y[labels == j] - inst.X[labels == j] @ thetas[j]) ** 2)
               for j in range(thetas.shape[0]))


def finite_difference_gradient(inst, thetas, labels, h=1e-6):
    grad = np.zeros_like(thetas)
    for idx in np.ndindex(*thetas.shape):
        up, down = thetas.copy(), thetas.copy()
        up[idx] += h
        down[idx] -= h
        grad[idx] = (clustered_loss(inst, up, labels) - clustered_loss(inst, down, labels)) / (2 * h)
    return grad


def power_iteration_lambda_max(A, iters=2000):
    v = np.ones(A.shape[0]) / np.sqrt(A.shape[0])
    for _ in range(iters):
        w = A @ v
        v = w / np.linalg.norm(w)
    return float(v @ A @ v)


class TestStep:
    def test_zero_step(self, small_problem):
        truth, inst = small_problem
        params = np.random.default_rng(0).standard_normal((2, inst.d))
        assert np.array_equal(gd_step(inst, params, inst.z, 0.0).thetas, params)

    def test_stationary_at_truth(self, small_problem):
        truth, inst = small_problem
        out = gd_step(inst, truth.thetas, inst.z, 0.01)
        np.testing.assert_allclose(out.thetas, truth.thetas, atol=1e-12)

    def test_single_component_finite_differences(self):
        _, inst = make_instance(d=2, n=4, K=1, sigma=0.3, seed=5)
        theta = np.array([[0.3, -0.7]])
        labels = np.zeros(4, dtype=int)
        gamma = 1.0
        analytic = (theta - gd_step(inst, theta, labels, gamma).thetas) / gamma
        np.testing.assert_allclose(analytic, finite_difference_gradient(inst, theta, labels), rtol=1e-5)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10_000), n=st.integers(2, 10), d=st.integers(1, 3))
    def test_matches_finite_differences(self, seed, n, d):
        _, inst = make_instance(d=d, n=n, sigma=0.5, seed=seed)
        thetas = np.random.default_rng(seed).standard_normal((2, d))
        labels = assign_labels(inst, thetas)
        analytic = thetas - gd_step(inst, thetas, labels, 1.0).thetas
        numeric = finite_difference_gradient(inst, thetas, labels)
        scale = max(1.0, np.abs(numeric).max())
        np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-5 * scale)

    def test_shape_checks(self, small_problem):
        _, inst = small_problem
        with pytest.raises(DimensionMismatch):
            gd_step(inst, np.zeros((2, inst.d + 1)), inst.z, 0.1)
        with pytest.raises(DimensionMismatch):
            gd_step(inst, np.zeros((2, inst.d)), inst.z[:-1], 0.1)


class TestTuner:
    def test_below_stability_threshold(self):
        _, inst = make_instance(d=5, n=40, K=1, sigma=0.2, seed=1)
        gamma = tune_step_size(inst, np.zeros((1, 5)))
        lam = power_iteration_lambda_max(inst.X.T @ inst.X)
        assert gamma < 1.0 / lam

    def test_deterministic(self, small_problem):
        truth, inst = small_problem
        init = perturbed_init(truth, 0.5, 0)
        assert tune_step_size(inst, init) == tune_step_size(inst, init)

    @pytest.mark.parametrize("k", [1, 3, 6])
    def test_doubling_contract(self, monkeypatch, small_problem, k):
        truth, inst = small_problem
        gamma0 = 1.0 / (4.0 * inst.n)
        monkeypatch.setattr(gd, "_probe_passes", lambda i, p, g, r: g < gamma0 * 2 ** k * (1 - 1e-12))
        assert tune_step_size(inst, truth) == gamma0 * 2 ** (k - 1)

    def test_no_stable_step(self, monkeypatch, small_problem):
        truth, inst = small_problem
        monkeypatch.setattr(gd, "_probe_passes", lambda *a: False)
        with pytest.raises(NoStableStep):
            tune_step_size(inst, truth)


class TestRunGd:
    def test_fixed_point(self, small_problem):
        truth, inst = small_problem
        trace = run_gd(inst, truth.params(), GdConfig(gamma=1e-3, max_rounds=5))
        for it in trace.iterates:
            np.testing.assert_allclose(it.thetas, truth.thetas, atol=1e-12)

    def test_single_component_converges_to_ols(self):
        _, inst = make_instance(d=5, n=60, K=1, sigma=0.3, seed=2)
        gamma = tune_step_size(inst, np.zeros((1, 5)))
        trace = run_gd(inst, np.zeros((1, 5)), GdConfig(gamma=gamma, max_rounds=2000, track_truth=False))
        ols = solve_least_squares(inst.X, inst.y)
        assert np.linalg.norm(trace.final.thetas[0] - ols) <= 1e-6

    def test_divergence_carries_trace(self, small_problem):
        truth, inst = small_problem
        init = perturbed_init(truth, 0.5, 0)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(Divergence) as info:
                run_gd(inst, init, GdConfig(gamma=1.0, max_rounds=100))
        assert info.value.trace.rounds >= 1

    def test_table1_small_row(self):
        # reference: about 45 iterations to 1e-3 at d = 50; accepted: 30 to 80
        iters = []
        for seed in range(5):
            truth, inst = make_instance(d=50, n=300, seed=seed)
            init = perturbed_init(truth, boundary_radius(truth, inst.n), seed)
            gamma = tune_step_size(inst, init)
            trace = run_gd(inst, init, GdConfig(gamma=gamma, max_rounds=500, target_precision=1e-3))
            iters.append(trace.reached_target_at)
        assert 30 <= np.median(iters) <= 80

    def test_linear_rate(self):
        truth, inst = make_instance(d=50, n=300, seed=1)
        init = perturbed_init(truth, boundary_radius(truth, inst.n), 1)
        gamma = tune_step_size(inst, init)
        trace = run_gd(inst, init, GdConfig(gamma=gamma, max_rounds=400, target_precision=1e-10))
        assert fit_convergence_exponent(trace.dist_to_truth).slope == pytest.approx(1.0, abs=0.15)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            GdConfig(gamma=0.0)
        with pytest.raises(ValueError):
            GdConfig(gamma=0.1, max_rounds=0)
