"""Receding-horizon control with the optimized feedback policy as fallback."""

import logging

import numpy as np

from smpcnav import ocp
from smpcnav.types import as_vector, RobotInput, JointState
from smpcnav.ocp import PolicyMode


logger = logging.getLogger(__name__)


class FallbackExhausted(RuntimeError):
    """No stage of the last successful policy is left to apply."""
    pass


class MpcState(object):
    """State of the MPC loop of one episode.

    Attributes:
        joint_state (JointState): last measured state.
        solution (OcpSolution): last successful solution, None before the
            first success.
        status (SolverStatus): status of the last solve.
        steps_since_success (int): solves since ``solution`` was obtained.
        t (float): simulation time [s].
        attempt (OcpSolution): solution of the last solve, successful or
            not, kept for its solver stats.
    """

    def __init__(self, joint_state=None, solution=None, status=None,
                 steps_since_success=0, t=0.0, attempt=None):
        self.joint_state = joint_state or JointState()
        self.solution = solution
        self.status = status
        self.steps_since_success = steps_since_success
        self.t = t
        self.attempt = attempt


def apply_policy(solution, j, mode, deviation):
    """Input of stage ``j`` of the feedback policy u_j + K_j deviation.

    Nominal and open-loop policies have no feedback term.

    >>> sol = ocp.OcpSolution('full', np.zeros((3, 5)), [[1., 2.], [3., 4.]],
    ...                       np.zeros((3, 2)))
    >>> apply_policy(sol, 1, PolicyMode.FULL, np.ones(7)).vector.tolist()
    [3.0, 4.0]
    """
    mode = PolicyMode(mode)
    if not 0 <= j <= solution.N - 1:
        raise ValueError("Policy stage {} outside [0, {}]".format(
            j, solution.N - 1))
    u = np.array(solution.inputs[j], dtype=float)
    if mode in (PolicyMode.PARTIAL, PolicyMode.FULL):
        u = u + solution.gains[j].dot(as_vector(deviation))
    return RobotInput(u)


def mpc_step(state, config, mode, measured, solver_options=None):
    """Solve the OCP at the measured state and return the input to apply.

    ``config`` must carry the references of the current time. The solve is
    warm-started from the last successful solution shifted to the current
    step. When the solve fails, stage ``j = steps_since_success`` of the
    last successful policy is applied to the measured state.

    Returns:
        (RobotInput, MpcState): the input and the new loop state.

    Raises:
        FallbackExhausted: the solve failed and no stale stage is left.
    """
    mode = PolicyMode(mode)
    measured_vector = as_vector(measured)
    if not np.all(np.isfinite(measured_vector)):
        raise ValueError("Measured state is not finite")

    guess = None
    if state.solution is not None:
        steps = min(state.steps_since_success + 1, config.N)
        guess = ocp.shift_guess(state.solution, config, steps)

    solution = ocp.solve_ocp(config, mode, measured, guess,
                             solver_options=solver_options)
    t = state.t + config.dt

    if solution.converged:
        new_state = MpcState(measured, solution, solution.status, 0, t,
                             solution)
        return RobotInput(solution.inputs[0]), new_state

    j = state.steps_since_success + 1
    if state.solution is None or j >= state.solution.N - 1:
        error = FallbackExhausted(
            "Solver failed ({}) with no policy stage left".format(
                solution.status.value))
        error.status = solution.status
        raise error
    logger.warning('t={:.2f}: {} solve failed ({}), applying stage {} of '
                   'the last policy'.format(state.t, mode.value,
                                            solution.status.value, j))
    stale = state.solution
    deviation = measured_vector - stale.joint_state(j)
    u = apply_policy(stale, j, mode, deviation)
    new_state = MpcState(measured, stale, solution.status, j, t, solution)
    return u, new_state
