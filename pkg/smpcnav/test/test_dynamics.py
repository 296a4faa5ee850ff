import numpy as np

from smpcnav import dynamics
from smpcnav import types


def test_robot_ode_examples():
    assert np.allclose(dynamics.robot_ode([0, 0, 0, 1, 0], [0, 0]),
                       [1, 0, 0, 0, 0])
    assert np.allclose(dynamics.robot_ode([0, 0, np.pi / 2, 2, 0.5],
                                          [1, -1]),
                       [0, 2, 0.5, 1, -1])
    assert np.allclose(dynamics.robot_ode([3, -1, np.pi, 0, 0], [0, 0]), 0)


def test_rk4_straight_lines():
    assert np.allclose(dynamics.rk4_step([0, 0, 0, 1, 0], [0, 0], 0.1),
                       [0.1, 0, 0, 1, 0])
    assert np.allclose(dynamics.rk4_step([0, 0, np.pi / 2, 1, 0], [0, 0],
                                         0.1),
                       [0, 0.1, np.pi / 2, 1, 0])


def test_rk4_circular_arc():
    x = dynamics.rk4_step([0, 0, 0, 1, 1], [0, 0], 0.1)
    expected = [np.sin(0.1), 1 - np.cos(0.1), 0.1, 1, 1]
    assert np.allclose(x, expected, rtol=0, atol=1e-7)


def test_rk4_keeps_robot_state_type():
    x = dynamics.rk4_step(types.RobotState(0, 0, 0, 1, 0),
                          types.RobotInput(0, 0), 0.1)
    assert isinstance(x, types.RobotState)
    assert np.isclose(x.px, 0.1)


def test_rk4_against_fine_integration():
    rng = np.random.RandomState(0)
    dt, substeps = 0.1, 1000
    for _ in range(10):
        x = np.concatenate([rng.uniform(-5, 5, 3), rng.uniform(-1, 1, 1),
                            rng.uniform(-0.9, 0.9, 1)])
        u = rng.uniform(-0.1, 0.1, 2)
        reference = x.copy()
        for _ in range(substeps):
            reference = dynamics.rk4_step(reference, u, dt / substeps)
        assert np.allclose(dynamics.rk4_step(x, u, dt), reference,
                           rtol=0, atol=1e-7)


def test_rk4_is_reproducible():
    x, u = [0.3, -0.2, 0.7, 0.9, 0.4], [0.5, -1.0]
    a = dynamics.rk4_step(x, u, 0.1)
    b = dynamics.rk4_step(x, u, 0.1)
    assert np.array_equal(a, b)


def finite_difference_jacobians(x, u, dt, h=1e-6):
    A = np.zeros((5, 5))
    B = np.zeros((5, 2))
    for i in range(5):
        e = np.zeros(5)
        e[i] = h
        A[:, i] = (dynamics.rk4_step(x + e, u, dt) -
                   dynamics.rk4_step(x - e, u, dt)) / (2 * h)
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        B[:, i] = (dynamics.rk4_step(x, u + e, dt) -
                   dynamics.rk4_step(x, u - e, dt)) / (2 * h)
    return A, B


def test_jacobians_match_finite_differences():
    rng = np.random.RandomState(1)
    for _ in range(100):
        x = np.concatenate([rng.uniform(-5, 5, 3), rng.uniform(-2, 2, 2)])
        u = rng.uniform(-2, 2, 2)
        A, B = dynamics.robot_discrete_jacobians(x, u, 0.1)
        A_fd, B_fd = finite_difference_jacobians(x, u, 0.1)
        assert np.allclose(A, A_fd, rtol=1e-6, atol=1e-8)
        assert np.allclose(B, B_fd, rtol=1e-6, atol=1e-8)


def test_jacobian_examples():
    A, B = dynamics.robot_discrete_jacobians([0, 0, 0, 1, 0], [0, 0], 0.1)
    assert np.allclose(A[:, 0], [1, 0, 0, 0, 0])
    assert np.allclose(A[:, 1], [0, 1, 0, 0, 0])
    assert np.isclose(A[0, 3], 0.1)
    _, B = dynamics.robot_discrete_jacobians(np.zeros(5), [0, 0], 0.1)
    assert np.isclose(B[0, 0], 0.005)


def test_human_step():
    assert np.allclose(dynamics.human_step([0, 0], [1, 0], 0.1), [0.1, 0])
    assert np.allclose(dynamics.human_step([5, 2], [0, 0], 0.1), [5, 2])
    assert np.allclose(dynamics.human_step([1, 1], [-1, 2], 0.25),
                       [0.75, 1.5])


def test_human_step_composition():
    x0, u, dt = np.array([0.5, -1.5]), np.array([0.25, -0.5]), 0.125
    x = x0
    for _ in range(8):
        x = dynamics.human_step(x, u, dt)
    assert np.array_equal(x, x0 + 8 * dt * u)


def test_human_matrices_match_step():
    A_h, B_h = dynamics.human_matrices(0.2)
    x, u = np.array([1.0, -2.0]), np.array([0.3, 0.7])
    assert np.allclose(A_h.dot(x) + B_h.dot(u),
                       dynamics.human_step(x, u, 0.2))


def test_distance_examples():
    d, g = dynamics.distance_and_gradient([0, 0, 0, 0, 0], [3, 4])
    assert np.isclose(d, 5)
    assert np.allclose(g, [-0.6, -0.8, 0, 0, 0, 0.6, 0.8])
    d, g = dynamics.distance_and_gradient([1, 0, 0.3, 1, 1], [0, 0])
    assert np.isclose(d, 1)
    assert np.allclose(g[:2], [1, 0])
    assert np.allclose(g[2:5], 0)


def test_distance_coincident():
    d, g = dynamics.distance_and_gradient([2, 3, 0, 0, 0], [2, 3])
    assert np.isclose(d, dynamics.EPS_DIST)
    assert np.allclose(g, 0)


def test_distance_gradient_finite_differences():
    rng = np.random.RandomState(2)
    h = 1e-6
    for _ in range(20):
        z = rng.uniform(-3, 3, 7)
        d, g = dynamics.distance_and_gradient(z[:5], z[5:])
        if d < 0.01:
            continue
        fd = np.zeros(7)
        for i in range(7):
            e = np.zeros(7)
            e[i] = h
            zp, zm = z + e, z - e
            fd[i] = (dynamics.distance_and_gradient(zp[:5], zp[5:])[0] -
                     dynamics.distance_and_gradient(zm[:5], zm[5:])[0]) / \
                (2 * h)
        assert np.allclose(g, fd, rtol=1e-6, atol=1e-8)
