import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixedlr.errors import NoConvergence, NotSymmetric, RankDeficientWarning
from mixedlr.linalg import solve_least_squares, standard_gaussian_matrix, top_k_eigpairs


class TestGaussian:
    def test_deterministic(self):
        a = standard_gaussian_matrix(7, 3, 2)
        b = standard_gaussian_matrix(7, 3, 2)
        assert a.shape == (3, 2)
        assert np.array_equal(a, b)

    def test_seed_separation(self):
        assert not np.array_equal(standard_gaussian_matrix(7, 3, 2), standard_gaussian_matrix(8, 3, 2))

    def test_moments(self):
        z = standard_gaussian_matrix(7, 10_000, 1)[:, 0]
        assert abs(z.mean()) < 0.05
        assert abs(z.var() - 1.0) < 0.1

    def test_distribution(self):
        from scipy import stats

        z = standard_gaussian_matrix(11, 20_000, 1)[:, 0]
        assert stats.kstest(z, "norm").pvalue > 1e-3

    def test_odd_count_and_tuple_seed(self):
        z = standard_gaussian_matrix((1, 2, 3), 3, 3)
        assert z.shape == (3, 3) and np.all(np.isfinite(z))

    @pytest.mark.parametrize("n,d", [(0, 2), (2, 0)])
    def test_bad_shape(self, n, d):
        with pytest.raises(ValueError):
            standard_gaussian_matrix(0, n, d)


def _inv2x2_normal_equations(A, b):
    # independent oracle: (A^T A)^{-1} A^T b by the adjugate formula
    (p, q), (_, s) = A.T @ A
    det = p * s - q * q
    inv = np.array([[s, -q], [-q, p]]) / det
    return inv @ (A.T @ b)


class TestLeastSquares:
    def test_identity(self):
        np.testing.assert_allclose(solve_least_squares(np.eye(2), [3.0, 4.0]), [3.0, 4.0])

    def test_mean_of_pair(self):
        np.testing.assert_allclose(solve_least_squares([[1.0], [1.0]], [1.0, 3.0]), [2.0])

    def test_normal_equations_oracle(self):
        A = standard_gaussian_matrix(21, 8, 2)
        b = A @ np.array([1.0, -2.0])
        x = solve_least_squares(A, b)
        np.testing.assert_allclose(x, [1.0, -2.0], atol=1e-10)
        np.testing.assert_allclose(x, _inv2x2_normal_equations(A, b), atol=1e-10)

    def test_rank_deficient_min_norm(self):
        A = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        b = np.array([1.0, 2.0, 3.0])
        with pytest.warns(RankDeficientWarning):
            x = solve_least_squares(A, b)
        np.testing.assert_allclose(x, [0.5, 0.5], atol=1e-12)
        x2, rank = solve_least_squares(A, b, full_output=True)
        assert rank == 1
        np.testing.assert_allclose(x2, np.linalg.pinv(A) @ b, atol=1e-12)

    def test_underdetermined_is_min_norm(self):
        A = standard_gaussian_matrix(5, 3, 6)
        b = np.array([1.0, -1.0, 2.0])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankDeficientWarning)
            x = solve_least_squares(A, b)
        np.testing.assert_allclose(x, np.linalg.pinv(A) @ b, atol=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10_000), d=st.integers(1, 8), extra=st.integers(0, 30))
    def test_normal_residual_and_recovery(self, seed, d, extra):
        n = d + extra
        A = standard_gaussian_matrix((seed, 0), n, d)
        x0 = standard_gaussian_matrix((seed, 1), d, 1)[:, 0]
        b_noisy = A @ x0 + standard_gaussian_matrix((seed, 2), n, 1)[:, 0]
        x = solve_least_squares(A, b_noisy)
        assert np.linalg.norm(A.T @ (b_noisy - A @ x)) <= 1e-8 * (1 + np.linalg.norm(A.T @ b_noisy))
        np.testing.assert_allclose(solve_least_squares(A, A @ x0), x0, atol=1e-10)


def _assert_eigpairs(S, pairs, k):
    V, lam = pairs.vectors, pairs.values
    assert V.shape == (S.shape[0], k)
    assert np.all(np.diff(lam) <= 0)
    np.testing.assert_allclose(V.T @ V, np.eye(k), atol=1e-9)
    for j in range(k):
        assert np.linalg.norm(S @ V[:, j] - lam[j] * V[:, j]) <= 1e-7 * (1 + abs(lam[j]))


def _same_up_to_sign(u, v, atol):
    return min(np.max(np.abs(u - v)), np.max(np.abs(u + v))) <= atol


class TestTopK:
    def test_diagonal(self):
        S = np.diag([5.0, 2.0, 1.0])
        pairs = top_k_eigpairs(S, 2)
        np.testing.assert_allclose(pairs.values, [5.0, 2.0], atol=1e-9)
        assert _same_up_to_sign(pairs.vectors[:, 0], np.array([1.0, 0, 0]), 1e-9)
        assert _same_up_to_sign(pairs.vectors[:, 1], np.array([0, 1.0, 0]), 1e-9)
        _assert_eigpairs(S, pairs, 2)

    def test_analytic_2x2(self):
        S = np.array([[2.0, 1.0], [1.0, 2.0]])
        pairs = top_k_eigpairs(S, 2)
        np.testing.assert_allclose(pairs.values, [3.0, 1.0], atol=1e-12)
        r = 1 / np.sqrt(2)
        assert _same_up_to_sign(pairs.vectors[:, 0], np.array([r, r]), 1e-12)
        assert _same_up_to_sign(pairs.vectors[:, 1], np.array([r, -r]), 1e-12)

    def test_constructed_spectrum(self):
        R, _ = np.linalg.qr(standard_gaussian_matrix(4, 3, 3))
        S = R @ np.diag([9.0, 4.0, 1.0]) @ R.T
        S = (S + S.T) / 2
        pairs = top_k_eigpairs(S, 2)
        np.testing.assert_allclose(pairs.values, [9.0, 4.0], atol=1e-9)
        for j in range(2):
            assert _same_up_to_sign(pairs.vectors[:, j], R[:, j], 1e-6)

    def test_larger_matrix_against_eigh(self):
        # spectrum with negative entries: ordering must be algebraic
        d = 40
        R, _ = np.linalg.qr(standard_gaussian_matrix(9, d, d))
        spectrum = np.concatenate([[6.0, 3.0], np.linspace(-8.0, 1.0, d - 2)])
        S = R @ np.diag(spectrum) @ R.T
        S = (S + S.T) / 2
        pairs = top_k_eigpairs(S, 2)
        np.testing.assert_allclose(pairs.values, np.linalg.eigvalsh(S)[::-1][:2], atol=1e-8)
        _assert_eigpairs(S, pairs, 2)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000), d=st.integers(2, 12), k=st.integers(1, 3))
    def test_random_symmetric(self, seed, d, k):
        k = min(k, d)
        A = standard_gaussian_matrix(seed, d, d)
        S = (A + A.T) / 2
        pairs = top_k_eigpairs(S, k)
        _assert_eigpairs(S, pairs, k)
        np.testing.assert_allclose(pairs.values, np.linalg.eigvalsh(S)[::-1][:k], atol=1e-7)

    def test_not_symmetric(self):
        with pytest.raises(NotSymmetric):
            top_k_eigpairs(np.array([[1.0, 2.0], [0.0, 1.0]]), 1)

    def test_budget_exhausted(self):
        d = 60
        R, _ = np.linalg.qr(standard_gaussian_matrix(2, d, d))
        S = R @ np.diag(np.linspace(1.0, 1.01, d)) @ R.T
        with pytest.raises(NoConvergence):
            top_k_eigpairs((S + S.T) / 2, 1, max_iter=2, oversample=0)

    def test_bad_k(self):
        with pytest.raises(ValueError):
            top_k_eigpairs(np.eye(3), 4)

    def test_pure(self):
        A = standard_gaussian_matrix(1, 6, 6)
        S = A + A.T
        a, b = top_k_eigpairs(S, 2), top_k_eigpairs(S, 2)
        assert np.array_equal(a.values, b.values) and np.array_equal(a.vectors, b.vectors)
