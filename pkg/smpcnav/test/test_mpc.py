import numpy as np
import pytest

import data_generation
from smpcnav import dynamics
from smpcnav import mpc
from smpcnav import nlp
from smpcnav import ocp
from smpcnav.ocp import PolicyMode
from smpcnav.types import JointState
from smpcnav.types import RobotState
from smpcnav.uncertainty import CovarianceBlocks


def stale_solution(N=6):
    states = np.zeros((N + 1, 5))
    states[:, 0] = 0.08 * np.arange(N + 1)
    states[:, 3] = 0.8
    inputs = np.tile([0.1, -0.2], (N, 1)) + np.arange(N)[:, None]
    human = np.tile([4.0, 0.05], (N + 1, 1))
    gains = np.zeros((N, 2, 7))
    gains[1:, 0, 5] = 0.5
    gains[1:, 1, 5] = -0.25
    covariances = [CovarianceBlocks() for _ in range(N + 1)]
    betas = np.full((N + 1, 9), 1e-3)
    return ocp.OcpSolution(PolicyMode.FULL, states, inputs, human, gains,
                           covariances, betas=betas,
                           stats={'status': 'converged'})


def test_apply_policy_without_deviation():
    sol = stale_solution()
    u = mpc.apply_policy(sol, 2, PolicyMode.FULL, np.zeros(7))
    assert np.allclose(u.vector, sol.inputs[2])


def test_apply_policy_feedback():
    sol = stale_solution()
    deviation = np.zeros(7)
    deviation[5] = 0.2
    u = mpc.apply_policy(sol, 1, PolicyMode.FULL, deviation)
    assert np.allclose(u.vector, sol.inputs[1] + [0.1, -0.05])
    u = mpc.apply_policy(sol, 1, PolicyMode.OPEN_LOOP, deviation)
    assert np.allclose(u.vector, sol.inputs[1])


def test_apply_policy_partial_ignores_heading():
    sol = stale_solution()
    sol.gains[1] = np.zeros((2, 7))
    sol.gains[1][:, 5:] = [[1, 2], [3, 4]]
    sol.gains[1][0, 3] = 5
    deviation = np.zeros(7)
    deviation[2] = 0.3
    u = mpc.apply_policy(sol, 1, PolicyMode.PARTIAL, deviation)
    assert np.allclose(u.vector, sol.inputs[1])


def test_apply_policy_stage_range():
    with pytest.raises(ValueError):
        mpc.apply_policy(stale_solution(6), 6, PolicyMode.FULL, np.zeros(7))


def failing_solve(monkeypatch, status=nlp.SolverStatus.MAX_ITER):
    def solve(config, mode, initial_state, guess=None, pin_gains=False,
              solver_options=None):
        failed = guess if guess is not None else stale_solution()
        return ocp.OcpSolution(mode, failed.states, failed.inputs,
                               failed.human_states, failed.gains,
                               stats={'status': status.value,
                                      'iterations': 0, 'wall_time': 0.0})
    monkeypatch.setattr(ocp, 'solve_ocp', solve)


def test_fallback_uses_stale_policy(monkeypatch):
    config = data_generation.corridor_config(N=6)
    sol = stale_solution()
    state = mpc.MpcState(JointState.from_vector(sol.joint_state(0)), sol,
                         nlp.SolverStatus.CONVERGED, 0)
    failing_solve(monkeypatch)

    measured = JointState.from_vector(sol.joint_state(1))
    u, state = mpc.mpc_step(state, config, PolicyMode.FULL, measured)
    assert np.allclose(u.vector, sol.inputs[1])
    assert state.steps_since_success == 1
    assert state.solution is sol
    assert state.status == nlp.SolverStatus.MAX_ITER

    deviated = sol.joint_state(2)
    deviated[5] += 0.2
    u, state = mpc.mpc_step(state, config, PolicyMode.FULL,
                            JointState.from_vector(deviated))
    assert np.allclose(u.vector, sol.inputs[2] + [0.1, -0.05])
    assert state.steps_since_success == 2


def test_fallback_exhaustion(monkeypatch):
    config = data_generation.corridor_config(N=6)
    sol = stale_solution()
    failing_solve(monkeypatch, nlp.SolverStatus.INFEASIBLE)
    state = mpc.MpcState(JointState.from_vector(sol.joint_state(0)), sol,
                         nlp.SolverStatus.CONVERGED, 0)
    used = []
    with pytest.raises(mpc.FallbackExhausted) as error:
        for _ in range(10):
            measured = JointState.from_vector(sol.joint_state(0))
            _, state = mpc.mpc_step(state, config, PolicyMode.FULL, measured)
            used.append(state.steps_since_success)
    assert used == [1, 2, 3, 4]
    assert error.value.status == nlp.SolverStatus.INFEASIBLE


def test_failure_without_previous_solution(monkeypatch):
    config = data_generation.corridor_config(N=6)
    failing_solve(monkeypatch)
    with pytest.raises(mpc.FallbackExhausted):
        mpc.mpc_step(mpc.MpcState(), config, PolicyMode.NOMINAL,
                     ocp.initial_joint_state(config.references))


def test_rejects_non_finite_measurement():
    config = data_generation.corridor_config(N=6)
    measured = np.full(7, np.nan)
    with pytest.raises(ValueError):
        mpc.mpc_step(mpc.MpcState(), config, PolicyMode.NOMINAL, measured)


def test_success_applies_first_input():
    config = data_generation.far_human_config(N=8)
    x0 = ocp.initial_joint_state(config.references)
    u, state = mpc.mpc_step(mpc.MpcState(x0), config, PolicyMode.NOMINAL, x0)
    assert state.status == nlp.SolverStatus.CONVERGED
    assert np.array_equal(u.vector, state.solution.inputs[0])
    assert state.steps_since_success == 0


def test_warm_start_from_unchanged_state():
    config = data_generation.far_human_config(N=8)
    x0 = ocp.initial_joint_state(config.references)
    _, state = mpc.mpc_step(mpc.MpcState(x0), config, PolicyMode.NOMINAL, x0)
    guess = ocp.shift_guess(state.solution, config, 0)
    again = ocp.solve_ocp(config, PolicyMode.NOMINAL, x0, guess)
    assert again.converged
    assert again.stats['iterations'] <= 5


def test_cost_to_go_does_not_increase_without_human():
    config = data_generation.far_human_config(N=10, v_ref=0.0)
    human = ocp.initial_joint_state(config.references).human
    joint = JointState(RobotState(-0.3, 0.0, 0.0, 0.0, 0.0), human)
    state = mpc.MpcState(joint)
    values = []
    for _ in range(12):
        u, state = mpc.mpc_step(state, config, PolicyMode.NOMINAL, joint)
        assert state.status == nlp.SolverStatus.CONVERGED
        values.append(state.solution.objective)
        joint = JointState(dynamics.rk4_step(joint.robot, u, config.dt),
                           human)
    for before, after in zip(values, values[1:]):
        assert after <= before + 1e-4
    assert values[-1] < 0.1 * values[0]
