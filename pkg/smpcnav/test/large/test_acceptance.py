"""Long statistical runs of the closed loop and the solver.

Run with ``pytest --runslow``.
"""
import numpy as np
import pytest

from smpcnav import config
from smpcnav import ocp
from smpcnav import simulate
from smpcnav.ocp import PolicyMode
from smpcnav.types import V

MODES = ['nominal', 'open_loop', 'partial', 'full']
STOCHASTIC = ['open_loop', 'partial', 'full']


@pytest.fixture(scope='module')
def corridor_runs():
    c = config.default_config()
    c['parallelism'] = 4
    return simulate.monte_carlo(c, modes=MODES, gammas=[3.0, 2.0],
                                n_episodes=200, base_seed=0)


@pytest.mark.slow
def test_feedback_avoids_collisions(corridor_runs):
    assert corridor_runs.paired
    assert corridor_runs.group('nominal')['collisions'] >= 40
    for mode in STOCHASTIC:
        assert corridor_runs.group(mode, 3.0)['collisions'] <= 3


@pytest.mark.slow
def test_feedback_lowers_tracking_cost(corridor_runs):
    open_loop = corridor_runs.group('open_loop', 3.0)['median_cost']
    partial = corridor_runs.group('partial', 3.0)['median_cost']
    full = corridor_runs.group('full', 3.0)['median_cost']
    assert open_loop >= 1.15 * partial
    assert open_loop >= 1.15 * full
    assert abs(partial - full) <= 0.1 * max(partial, full)


@pytest.mark.slow
def test_smaller_gamma_trades_safety_for_cost(corridor_runs):
    for mode in STOCHASTIC:
        strict = corridor_runs.group(mode, 3.0)
        loose = corridor_runs.group(mode, 2.0)
        assert loose['collisions'] >= strict['collisions']
        assert loose['median_cost'] < strict['median_cost']


@pytest.mark.slow
def test_solve_time_grows_with_policy_size():
    c = config.default_config()
    report = simulate.arc_benchmark(c, n_solves=100, base_seed=0,
                                    modes=MODES, parallelism=1)
    medians = [report.median_time(mode) for mode in MODES]
    assert medians == sorted(medians)
    assert len(set(medians)) == len(medians)


def encounter_config(**kwargs):
    """Corridor OCP where the robot meets the human mid-horizon."""
    t = 1.9
    c = ocp.ScenarioConfig(**kwargs)
    references = ocp.generate_corridor_references(
        c, t, 0.0, c.v_ref, (4.0 - 0.6 * t, 0.05), (-0.6, 0.0))
    return c.with_references(references)


@pytest.mark.slow
def test_velocity_feedback_shrinks_terminal_uncertainty():
    c = encounter_config()
    x0 = ocp.initial_joint_state(c.references)
    solution = ocp.solve_ocp(c, PolicyMode.PARTIAL, x0)
    assert solution.converged
    assert solution.covariances[-1].velocity_variance <= c.eps_sigma + 1e-8
    assert np.abs(solution.gains[1:, 0, V]).max() > 1e-6

    without = encounter_config(k_rv_enabled_from=c.N)
    restricted = ocp.solve_ocp(without, PolicyMode.PARTIAL, x0)
    gains = solution.gains.copy()
    gains[:, 0, V] = 0.0
    propagated = ocp._propagated_covariances(c, solution.states,
                                             solution.inputs, gains)
    assert restricted.converged
    assert (restricted.slacks.sum() > 1e-6 or
            propagated[-1].velocity_variance > c.eps_sigma)
