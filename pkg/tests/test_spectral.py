import numpy as np
import pytest

from mixedlr.am import AmConfig, run_am
from mixedlr.data import GroundTruth, Instance, sample_instance
from mixedlr.errors import NotSymmetric
from mixedlr.metrics import dist, loss
from mixedlr.spectral import GridSpec, grid_init, init_subspace, moment_matrix, spectral_init


def principal_angle(A, B):
    """Largest principal angle between the column spans of orthonormal A and B."""
    # the sine form stays accurate for tiny angles where arccos does not
    residual = A - B @ (B.T @ A)
    return float(np.arcsin(min(1.0, np.linalg.norm(residual, 2))))


def planar_truth(d, first, second):
    thetas = np.zeros((2, d))
    thetas[0, :2], thetas[1, :2] = first, second
    return GroundTruth(thetas, [0.5, 0.5])


class TestMomentMatrix:
    def test_single_sample(self):
        x = np.array([[1.0, -2.0, 0.5]])
        M = moment_matrix(Instance(x, np.array([3.0])))
        np.testing.assert_allclose(M, 9.0 * np.outer(x[0], x[0]))

    def test_symmetric_psd(self, small_problem):
        _, inst = small_problem
        M = moment_matrix(inst)
        assert np.array_equal(M, M.T)
        assert np.linalg.eigvalsh(M).min() >= -1e-10

    def test_population_value(self):
        inst = sample_instance(GroundTruth(np.eye(2), [0.5, 0.5]), 100_000, 0)
        np.testing.assert_allclose(moment_matrix(inst), [[2.0, 0.0], [0.0, 2.0]], atol=0.1)


class TestSubspace:
    def test_diagonal(self):
        B = init_subspace(np.diag([5.0, 2.0, 1.0]))
        assert principal_angle(B, np.eye(3)[:, :2]) <= 1e-9

    def test_recovers_planar_truth(self):
        # orthogonal equal-norm components give the widest eigengap
        d = 20
        n = int(6 * d * np.log(d) ** 2)
        inst = sample_instance(planar_truth(d, [1.0, 0.0], [0.0, 1.0]), n, 0)
        B = init_subspace(moment_matrix(inst))
        assert principal_angle(B, np.eye(d)[:, :2]) <= 0.2

    def test_angle_shrinks_with_samples(self):
        d = 20
        truth = planar_truth(d, [1.0, 0.0], [0.0, 1.0])
        angles = []
        for n in (1000, 4000, 16000, 64000):
            inst = sample_instance(truth, n, 1)
            angles.append(principal_angle(init_subspace(moment_matrix(inst)), np.eye(d)[:, :2]))
        assert angles[-1] <= 0.1
        assert angles[-1] < angles[0] / 3

    def test_full_space(self):
        inst = sample_instance(planar_truth(2, [1.0, 0.0], [0.0, 1.0]), 50, 1)
        B = init_subspace(moment_matrix(inst))
        np.testing.assert_allclose(B.T @ B, np.eye(2), atol=1e-10)
        assert principal_angle(B, np.eye(2)) <= 1e-9

    def test_rejects_asymmetric(self):
        with pytest.raises(NotSymmetric):
            init_subspace(np.array([[1.0, 1.0, 0], [0, 1.0, 0], [0, 0, 1.0]]))


class TestGrid:
    def test_truth_on_grid(self):
        truth = planar_truth(3, [0.5, -1.0], [1.0, 0.5])
        inst = sample_instance(truth, 40, 2)
        est = grid_init(inst, np.eye(3)[:, :2], GridSpec(points_per_axis=5, radius=1.0))
        assert loss(inst, est) <= 1e-24
        assert dist(est, truth) <= 1e-15

    def test_refinement_never_hurts(self):
        truth = planar_truth(4, [0.37, -0.81], [0.93, 0.22])
        inst = sample_instance(truth, 60, 5)
        basis = np.eye(4)[:, :2]
        losses = [loss(inst, grid_init(inst, basis, GridSpec(G, radius=1.0))) for G in (3, 5, 9, 17)]
        assert all(b <= a for a, b in zip(losses, losses[1:]))

    def test_nearest_grid_point_bound(self):
        d, G = 10, 41
        truth = planar_truth(d, [0.62, -1.13], [-0.91, 0.37])
        inst = sample_instance(truth, 600, 7)
        R = 1.5 * max(np.linalg.norm(truth.thetas, axis=1))
        est = grid_init(inst, np.eye(d)[:, :2], GridSpec(G, radius=R))
        assert dist(est, truth) <= 2 * R / (G - 1) * np.sqrt(2)

    def test_two_stage_agrees_on_easy_instance(self):
        truth = planar_truth(6, [1.0, -0.5], [-0.5, 1.0])
        inst = sample_instance(truth, 200, 0)
        basis = np.eye(6)[:, :2]
        grid = GridSpec(21, radius=1.5)
        full = grid_init(inst, basis, grid)
        fast = grid_init(inst, basis, grid, two_stage=True)
        assert dist(fast, full) <= 1e-12

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            GridSpec(0)
        with pytest.raises(ValueError):
            GridSpec(5, radius=-1.0)


def test_pipeline_single_instance():
    from mixedlr.data import random_truth

    truth = random_truth(2, 10, 0)
    inst = sample_instance(truth, 600, 0)
    init = spectral_init(inst, GridSpec(21))
    trace = run_am(inst, init, AmConfig(max_rounds=30))
    assert trace.dist_to_truth[-1] <= 1e-6
