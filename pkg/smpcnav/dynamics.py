# -*- coding: utf-8 -*-
"""Robot and human motion models.

The robot is a kinematic differential-drive model driven by accelerations,
discretized with one explicit RK4 step under zero-order hold. The human is
a point mass whose velocity is the input.

Every model function accepts numbers or casadi symbols. With numbers it
evaluates a compiled casadi function, so the numeric path and the OCP
constraints share the exact same arithmetic.
"""

import logging

import casadi as ca
import numpy as np
from repoze.lru import lru_cache

from smpcnav import symbolic
from smpcnav.types import as_vector, RobotState, HumanState
from smpcnav.types import ROBOT_STATE_SIZE, ROBOT_INPUT_SIZE, HUMAN_STATE_SIZE


logger = logging.getLogger(__name__)

# Distance below which the smoothed distance is used
EPS_DIST = 1e-6


def _ode_expr(x, u):
    return ca.vertcat(x[3] * ca.cos(x[2]),
                      x[3] * ca.sin(x[2]),
                      x[4],
                      u[0],
                      u[1])


def _rk4_expr(x, u, dt):
    k1 = _ode_expr(x, u)
    k2 = _ode_expr(x + dt / 2 * k1, u)
    k3 = _ode_expr(x + dt / 2 * k2, u)
    k4 = _ode_expr(x + dt * k3, u)
    return x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


@lru_cache(1)
def _ode_function():
    x = ca.SX.sym('x', ROBOT_STATE_SIZE)
    u = ca.SX.sym('u', ROBOT_INPUT_SIZE)
    return ca.Function('robot_ode', [x, u], [_ode_expr(x, u)])


@lru_cache(16)
def _rk4_functions(dt):
    """Compiled RK4 step and its exact Jacobians for a step length."""
    x = ca.SX.sym('x', ROBOT_STATE_SIZE)
    u = ca.SX.sym('u', ROBOT_INPUT_SIZE)
    x_next = _rk4_expr(x, u, dt)
    step = ca.Function('rk4_step', [x, u], [x_next])
    jacobians = ca.Function('rk4_jacobians', [x, u],
                            [ca.jacobian(x_next, x), ca.jacobian(x_next, u)])
    return step, jacobians


def robot_ode(x, u):
    """Continuous-time robot dynamics (v cos θ, v sin θ, ω, a, α).

    >>> robot_ode([0, 0, 0, 1, 0], [0, 0]).tolist()
    [1.0, 0.0, 0.0, 0.0, 0.0]
    """
    if symbolic.is_symbolic(x, u):
        return _ode_expr(x, u)
    return symbolic.to_vector(_ode_function()(as_vector(x), as_vector(u)))


def rk4_step(x, u, dt):
    """One RK4 step of the robot dynamics with the input held constant.

    Numeric calls return a ``RobotState`` when ``x`` is one, a numpy
    vector otherwise.
    """
    if symbolic.is_symbolic(x, u):
        return _rk4_expr(x, u, dt)
    step, _ = _rk4_functions(float(dt))
    x_next = symbolic.to_vector(step(as_vector(x), as_vector(u)))
    if isinstance(x, RobotState):
        return RobotState(x_next)
    return x_next


def robot_discrete_jacobians(x, u, dt):
    """Jacobians (A_r, B_r) of ``rk4_step`` w.r.t. state and input.

    Computed by algorithmic differentiation through the four RK4 stages.
    """
    _, jacobians = _rk4_functions(float(dt))
    if symbolic.is_symbolic(x, u):
        return jacobians(x, u)
    A_r, B_r = jacobians(as_vector(x), as_vector(u))
    return symbolic.to_matrix(A_r), symbolic.to_matrix(B_r)


def human_matrices(dt):
    """Exact zero-order-hold discretization (A_h, B_h) of x' = u."""
    return np.eye(HUMAN_STATE_SIZE), dt * np.eye(HUMAN_STATE_SIZE)


def human_step(x, u, dt):
    """Constant velocity step of the human position.

    >>> human_step([1., 1.], [-1., 2.], 0.25).tolist()
    [0.75, 1.5]
    """
    if symbolic.is_symbolic(x, u):
        return x + dt * u
    x_next = as_vector(x) + dt * as_vector(u)
    if isinstance(x, HumanState):
        return HumanState(x_next)
    return x_next


def _distance_expr(robot_position, human_position):
    squared = ca.sumsqr(robot_position - human_position)
    return ca.sqrt(squared + ca.if_else(squared < EPS_DIST ** 2,
                                        EPS_DIST ** 2, 0))


@lru_cache(1)
def _distance_function():
    z = ca.SX.sym('z', ROBOT_STATE_SIZE + HUMAN_STATE_SIZE)
    d = _distance_expr(z[0:2], z[5:7])
    return ca.Function('distance', [z], [d, ca.gradient(d, z)])


def distance_expr(robot_state, human_state):
    """Symbolic robot-human distance, smoothed near zero."""
    return _distance_expr(robot_state[0:2], human_state[0:2])


def distance_and_gradient(xr, xh):
    """Robot-human distance and its gradient w.r.t. the joint 7-vector.

    Below ``EPS_DIST`` the smoothed distance sqrt(|dp|^2 + eps^2) is
    returned, whose gradient vanishes at coincident positions.

    >>> d, g = distance_and_gradient([0, 0, 0, 0, 0], [3, 4])
    >>> g_ref = [-0.6, -0.8, 0, 0, 0, 0.6, 0.8]
    >>> bool(np.isclose(d, 5.0)), np.allclose(g, g_ref)
    (True, True)
    """
    z = np.concatenate([as_vector(xr), as_vector(xh)])
    d, grad = _distance_function()(z)
    return symbolic.to_scalar(d), symbolic.to_vector(grad)
