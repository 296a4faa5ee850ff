import numpy as np
import pytest

import data_generation
from smpcnav import dynamics
from smpcnav import uncertainty
from smpcnav.uncertainty import CovarianceBlocks, FeedbackGain


def random_blocks(rng):
    return CovarianceBlocks.from_matrix(data_generation.random_psd(rng, 7))


def test_embed_gain():
    assert np.all(uncertainty.embed_gain(FeedbackGain.zero()) == 0)
    K = uncertainty.embed_gain(FeedbackGain.partial([[1, 2], [3, 4]], 5))
    assert np.allclose(K[0], [0, 0, 0, 5, 0, 1, 2])
    assert np.allclose(K[1], [0, 0, 0, 0, 0, 3, 4])
    M = np.arange(14.0).reshape(2, 7)
    assert np.array_equal(uncertainty.embed_gain(FeedbackGain.dense(M)), M)


def test_closed_loop_matrix():
    A_r, B_r = dynamics.robot_discrete_jacobians([0, 0, 0.3, 1, 0.2],
                                                 [0.1, 0], 0.1)
    A = uncertainty.closed_loop_matrix(A_r, B_r, np.zeros((2, 7)))
    assert np.allclose(A[:5, :5], A_r)
    assert np.allclose(A[5:, 5:], np.eye(2))

    B = np.zeros((5, 2))
    B[3:, :] = np.eye(2)
    A = uncertainty.closed_loop_matrix(np.eye(5), B, np.ones((2, 7)))
    expected = np.eye(7)
    expected[3:5, :] += 1
    assert np.allclose(A, expected)
    assert np.all(A[5:, :5] == 0)


def test_propagate_noise_only():
    sigma = uncertainty.propagate_covariance(
        CovarianceBlocks(), np.eye(5), np.zeros((5, 2)), np.zeros((2, 7)),
        0.16 * np.eye(2), 0.1)
    assert np.allclose(sigma.sigma_h, 0.0016 * np.eye(2))
    assert np.all(sigma.sigma_r == 0)
    assert np.all(sigma.sigma_rh == 0)


def test_open_loop_keeps_robot_blocks_zero():
    x, u, dt = np.array([0, 0, 0, 0.8, 0]), np.zeros(2), 0.1
    sigma = CovarianceBlocks()
    for _ in range(20):
        A_r, B_r = dynamics.robot_discrete_jacobians(x, u, dt)
        sigma = uncertainty.propagate_covariance(
            sigma, A_r, B_r, np.zeros((2, 7)), 0.16 * np.eye(2), dt)
        x = dynamics.rk4_step(x, u, dt)
    assert np.all(sigma.sigma_r == 0)
    assert np.all(sigma.sigma_rh == 0)
    assert np.allclose(sigma.sigma_h, 20 * 0.0016 * np.eye(2))


def test_propagation_matches_monte_carlo():
    rng = np.random.RandomState(42)
    n = 100000
    for _ in range(10):
        sigma = data_generation.random_psd(rng, 7)
        A_r = np.eye(5) + 0.1 * rng.standard_normal((5, 5))
        B_r = 0.1 * rng.standard_normal((5, 2))
        K = rng.standard_normal((2, 7))
        w = data_generation.random_psd(rng, 2)
        dt = 0.1

        predicted = uncertainty.propagate_covariance(
            CovarianceBlocks.from_matrix(sigma), A_r, B_r, K, w,
            dt).assemble()

        A = uncertainty.closed_loop_matrix(A_r, B_r, K)
        x = rng.multivariate_normal(np.zeros(7), sigma, n)
        noise = rng.multivariate_normal(np.zeros(2), w, n)
        samples = x.dot(A.T)
        samples[:, 5:] += dt * noise
        empirical = np.cov(samples, rowvar=False)

        error = np.linalg.norm(empirical - predicted) / \
            np.linalg.norm(predicted)
        assert error < 0.02


def test_propagation_symmetric_and_psd():
    rng = np.random.RandomState(3)
    for _ in range(20):
        sigma = random_blocks(rng)
        A_r = np.eye(5) + 0.2 * rng.standard_normal((5, 5))
        B_r = 0.1 * rng.standard_normal((5, 2))
        K = rng.standard_normal((2, 7))
        result = uncertainty.propagate_covariance(
            sigma, A_r, B_r, K, data_generation.random_psd(rng, 2), 0.1)
        assert np.array_equal(result.sigma_r, result.sigma_r.T)
        assert np.array_equal(result.sigma_h, result.sigma_h.T)
        assert np.linalg.eigvalsh(result.assemble()).min() >= -1e-12


def test_block_propagation_consistency():
    rng = np.random.RandomState(4)
    sigma = random_blocks(rng)
    A_r = np.eye(5) + 0.1 * rng.standard_normal((5, 5))
    B_r = 0.1 * rng.standard_normal((5, 2))
    K = rng.standard_normal((2, 7))
    w = data_generation.random_psd(rng, 2)
    full = uncertainty.propagate_matrix(sigma.assemble(), A_r, B_r, K, w,
                                        0.1)
    blocks = uncertainty.propagate_covariance(sigma, A_r, B_r, K, w, 0.1)
    assert np.allclose(blocks.sigma_r, full[:5, :5])
    assert np.allclose(blocks.sigma_rh, full[:5, 5:])
    assert np.allclose(blocks.sigma_h, full[5:, 5:])


def test_human_covariance_schedule():
    noise = uncertainty.NoiseModel.constant(0.16, 10)
    schedule = uncertainty.human_covariance_schedule(noise, 0.1, 10)
    assert len(schedule) == 11
    assert np.all(schedule[0] == 0)
    assert np.allclose(schedule[5], 0.008 * np.eye(2))
    traces = [np.trace(S) for S in schedule]
    assert all(b >= a for a, b in zip(traces, traces[1:]))

    zero = uncertainty.NoiseModel.constant(0.0, 10)
    assert all(np.all(S == 0) for S in
               uncertainty.human_covariance_schedule(zero, 0.1, 10))


def test_noise_model_rejects_indefinite():
    with pytest.raises(ValueError):
        uncertainty.NoiseModel([np.diag([1.0, -1.0])])
    with pytest.raises(ValueError):
        uncertainty.human_covariance_schedule(
            uncertainty.NoiseModel.constant(0.1, 3), 0.1, 5)


def test_expected_stage_cost_examples():
    x_ref, u_ref = np.array([1., 2., 0., 0.8, 0.]), np.zeros(2)
    sigma = CovarianceBlocks(sigma_r=0.04 * np.eye(5))
    cost = uncertainty.expected_stage_cost(
        x_ref, u_ref, sigma, np.zeros((2, 7)), np.eye(5), np.eye(2),
        (x_ref, u_ref))
    assert np.isclose(cost, 0.1)

    K = np.ones((2, 7))
    full = CovarianceBlocks(0.04 * np.eye(5), np.zeros((5, 2)),
                            0.01 * np.eye(2))
    without_gain = uncertainty.expected_stage_cost(
        x_ref, u_ref, full, np.zeros((2, 7)), np.eye(5), np.eye(2),
        (x_ref, u_ref))
    assert np.isclose(without_gain, 0.1)
    with_gain = uncertainty.expected_stage_cost(
        x_ref, u_ref, full, K, np.eye(5), np.eye(2), (x_ref, u_ref))
    assert np.isclose(with_gain, 0.1 + 0.5 * 2 * (5 * 0.04 + 2 * 0.01))


def test_expected_costs_degenerate_without_uncertainty():
    rng = np.random.RandomState(5)
    Q, R = np.diag([50, 50, 0.1, 2, 0.1]), np.diag([2., 2.])
    for _ in range(100):
        x, x_ref = rng.standard_normal(5), rng.standard_normal(5)
        u, u_ref = rng.standard_normal(2), rng.standard_normal(2)
        K = rng.standard_normal((2, 7))
        nominal = uncertainty.tracking_stage_cost(x, u, Q, R, x_ref, u_ref)
        expected = uncertainty.expected_stage_cost(
            x, u, CovarianceBlocks(), K, Q, R, (x_ref, u_ref))
        assert expected == nominal
        terminal = uncertainty.expected_terminal_cost(
            x, CovarianceBlocks(), Q, x_ref)
        assert terminal == uncertainty.tracking_terminal_cost(x, Q, x_ref)


def test_expected_terminal_cost_examples():
    x = np.array([1., 0., 0., 0., 0.])
    sigma = CovarianceBlocks(sigma_r=np.eye(5))
    assert np.isclose(uncertainty.expected_terminal_cost(x, sigma, np.eye(5),
                                                         x), 2.5)
    assert uncertainty.expected_terminal_cost(x, sigma, np.zeros((5, 5)),
                                              np.zeros(5)) == 0


def test_constraint_variance_examples():
    g = np.zeros(9)
    g[5] = 1.0
    sigma = CovarianceBlocks(sigma_h=0.09 * np.eye(2))
    assert np.isclose(uncertainty.constraint_variance(g, sigma,
                                                      np.zeros((2, 7))),
                      0.09)

    rng = np.random.RandomState(6)
    K = rng.standard_normal((2, 7))
    assert uncertainty.constraint_variance(rng.standard_normal(9),
                                           CovarianceBlocks(), K) == 0

    g = np.zeros(9)
    g[7] = 1.0
    variance = uncertainty.constraint_variance(g, np.eye(7), K)
    assert np.isclose(variance, np.sum(K[0] ** 2))


def test_constraint_variance_non_negative():
    rng = np.random.RandomState(7)
    for _ in range(50):
        sigma = random_blocks(rng)
        value = uncertainty.constraint_variance(
            rng.standard_normal(9), sigma, rng.standard_normal((2, 7)))
        assert value >= 0


def test_covariance_blocks_storage():
    rng = np.random.RandomState(8)
    S = data_generation.random_psd(rng, 7)
    blocks = CovarianceBlocks.from_matrix(S)
    assert len(blocks.sigma_r_upper) == uncertainty.SIGMA_R_SIZE
    assert np.allclose(blocks.assemble(), S)
    assert np.isclose(blocks.velocity_variance, S[3, 3])
    assert blocks == CovarianceBlocks.from_matrix(S)
