# -*- coding: utf-8 -*-
"""Closed-loop episodes with a randomly walking human and Monte Carlo runs.

Every episode owns its random stream, seeded with ``base_seed + i`` for
episode ``i``. All policy modes see the same human realization of an
episode, so modes are compared on paired samples.
"""

import collections
import hashlib
import logging

import numpy as np
import scipy.linalg

from smpcnav import context
from smpcnav import dynamics
from smpcnav import log
from smpcnav import mpc
from smpcnav import ocp
from smpcnav import uncertainty
from smpcnav.ocp import PolicyMode, ScenarioConfig
from smpcnav.types import JointState, RobotState, HumanState
from smpcnav.types import ROBOT_INPUT_SIZE, HUMAN_STATE_SIZE


logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ['t', 'px', 'py', 'theta', 'v', 'omega', 'hx', 'hy',
                      'a', 'alpha', 'distance', 'status']


class SamplingError(ValueError):
    """Noise covariance that cannot be sampled from."""
    pass


def _noise_factor(W):
    """Lower factor L with L L' = W of a PSD matrix."""
    W = np.asarray(W, dtype=float)
    if not np.allclose(W, W.T, atol=1e-12):
        raise SamplingError("Noise covariance is not symmetric: {}".format(
            W.tolist()))
    eigenvalues = np.linalg.eigvalsh(W)
    if eigenvalues.min() < -1e-12:
        raise SamplingError("Noise covariance is not positive "
                            "semi-definite: {}".format(W.tolist()))
    try:
        return scipy.linalg.cholesky(W, lower=True)
    except scipy.linalg.LinAlgError:
        w, V = np.linalg.eigh(W)
        return V * np.sqrt(np.maximum(w, 0.0))


def sample_human_inputs(seed, nominal_inputs, w_h, steps):
    """Realized human velocities u_k + L_k n_k with n_k standard normal.

    Args:
        seed (int): seed of the episode random stream.
        nominal_inputs (array steps x 2): nominal human velocities.
        w_h (list of 2x2 arrays): velocity covariance per step.
        steps (int): number of steps to sample.

    >>> u = sample_human_inputs(0, np.ones((3, 2)), [np.zeros((2, 2))] * 3, 3)
    >>> bool(np.all(u == 1.0))
    True
    """
    nominal = np.asarray(nominal_inputs, dtype=float)
    if len(nominal) < steps or len(w_h) < steps:
        raise ValueError("Need {} steps of nominal inputs and noise".format(
            steps))
    factors = [_noise_factor(W) for W in w_h[:steps]]
    rng = np.random.RandomState(seed)
    normals = rng.standard_normal((steps, HUMAN_STATE_SIZE))
    return np.array([nominal[k] + factors[k].dot(normals[k])
                     for k in range(steps)])


def disturbance_hash(realized):
    """Fingerprint of a realized disturbance stream."""
    data = np.ascontiguousarray(realized, dtype=np.float64)
    return hashlib.sha1(data.tobytes()).hexdigest()


class Scenario(object):
    """Start poses and references of the corridor or arc scenario.

    The arc scenario of single runs uses the middle of the configured
    radius and human distance ranges.
    """

    def __init__(self, kind, dt, v_ref, robot_start_x=0.0,
                 human_start=(4.0, 0.05), human_velocity=(-0.6, 0.0),
                 radius=3.0, start_angle=0.0, human_offset=0.05,
                 human_ahead=3.0):
        if kind not in ('corridor', 'arc'):
            raise ValueError("Unknown scenario {}".format(kind))
        self.kind = kind
        self.dt = dt
        self.v_ref = v_ref
        self.robot_start_x = robot_start_x
        self.human_start = np.asarray(human_start, dtype=float)
        self.human_velocity = np.asarray(human_velocity, dtype=float)
        self.radius = radius
        self.start_angle = start_angle
        self.human_offset = human_offset
        self.human_ahead = human_ahead

    @classmethod
    def from_config(cls, config):
        return cls(
            config['scenario'], config['dt'], config['v_ref'],
            robot_start_x=config['robot_start_x'],
            human_start=(config['human_start_x'], config['human_start_y']),
            human_velocity=(config['human_vx'], config['human_vy']),
            radius=0.5 * (config['arc_radius_min'] +
                          config['arc_radius_max']),
            human_offset=config['arc_human_offset'],
            human_ahead=0.5 * (config['arc_human_ahead_min'] +
                               config['arc_human_ahead_max']))

    @property
    def human_speed(self):
        return float(np.linalg.norm(self.human_velocity))

    def references(self, config, t, human_position=None):
        """OCP references at time ``t`` with the human measured at
        ``human_position`` (its start position when None)."""
        if self.kind == 'corridor':
            start = self.human_start if human_position is None \
                else human_position
            return ocp.generate_corridor_references(
                config, t, self.robot_start_x, self.v_ref, start,
                self.human_velocity)
        return ocp.generate_arc_references(
            config, self.radius, t, self.start_angle, self.v_ref,
            human_position, self.human_speed, self.human_offset,
            self.human_ahead)

    def initial_state(self, config):
        return ocp.initial_joint_state(self.references(config, 0.0))

    def human_nominal_inputs(self, steps):
        """Nominal human velocities of a whole episode."""
        long_config = ScenarioConfig(N=steps, dt=self.dt, v_ref=self.v_ref)
        return self.references(long_config, 0.0).human_inputs


class EpisodeReport(object):
    """Outcome of one closed-loop episode.

    Attributes:
        collided (bool): the distance dropped below delta_safe.
        collision_step (int): step of the collision, None without one.
        min_distance (float): smallest robot-human distance [m].
        mean_stage_cost (float): mean tracking stage cost over the steps.
        solver_failures (int): number of failed solves.
        failure_kinds (dict): failed solves per solver status.
        fallback_exhausted (bool): the episode ended without a policy.
        trajectory (list): one row per step, see ``TRAJECTORY_COLUMNS``.
    """

    def __init__(self, mode, gamma, seed, disturbance):
        self.mode = PolicyMode(mode)
        self.gamma = gamma
        self.seed = seed
        self.disturbance_hash = disturbance
        self.collided = False
        self.collision_step = None
        self.min_distance = np.inf
        self.mean_stage_cost = 0.0
        self.solver_failures = 0
        self.failure_kinds = collections.OrderedDict()
        self.fallback_exhausted = False
        self.steps = 0
        self.trajectory = []
        self.solve_times = []
        self.iterations = []

    def count_failure(self, status):
        self.solver_failures += 1
        self.failure_kinds[status.value] = \
            self.failure_kinds.get(status.value, 0) + 1

    def to_dict(self):
        """Deterministic summary, without wall times."""
        return collections.OrderedDict([
            ('mode', self.mode.value),
            ('gamma', self.gamma),
            ('seed', self.seed),
            ('disturbance_hash', self.disturbance_hash),
            ('collided', self.collided),
            ('collision_step', self.collision_step),
            ('min_distance', self.min_distance),
            ('mean_stage_cost', self.mean_stage_cost),
            ('solver_failures', self.solver_failures),
            ('failure_kinds', dict(self.failure_kinds)),
            ('fallback_exhausted', self.fallback_exhausted),
            ('steps', self.steps),
            ('iterations', list(self.iterations)),
        ])

    def timing_dict(self):
        return collections.OrderedDict([
            ('mode', self.mode.value),
            ('gamma', self.gamma),
            ('seed', self.seed),
            ('solve_times', list(self.solve_times)),
        ])


def _distance(joint):
    d, _ = dynamics.distance_and_gradient(joint.robot, joint.human)
    return d


def _trajectory_row(t, joint, u, distance, status):
    inputs = list(u.vector) if u is not None else [None] * ROBOT_INPUT_SIZE
    return [t] + list(joint.robot.vector) + list(joint.human.vector) + \
        inputs + [distance, status]


def run_episode(mode, gamma, config, seed, duration=None,
                solver_options=None):
    """Simulate one closed-loop episode.

    The human moves with the inputs sampled from ``seed``, the robot with
    the MPC input held for one step. A collision at any step boundary ends
    the episode, as does running out of fallback policy stages.

    Args:
        mode (PolicyMode): policy mode.
        gamma (float): tightening multiplier, None for the configured one.
        config (dict): run configuration.
        seed (int): episode seed.
        duration (float): simulated time [s], defaults to the configured one.
    """
    mode = PolicyMode(mode)
    dt = config['dt']
    duration = config['duration'] if duration is None else duration
    steps = int(round(duration / dt))
    if steps < 1 or abs(steps * dt - duration) > 1e-9:
        raise ValueError("Duration {} is not a multiple of dt {}".format(
            duration, dt))
    if solver_options is None:
        solver_options = solver_options_from_config(config)

    base = ScenarioConfig.from_config(config, gamma)
    base.validate()
    scenario = Scenario.from_config(config)
    noise = [config['w_h_var'] * np.eye(HUMAN_STATE_SIZE)] * steps
    realized = sample_human_inputs(seed, scenario.human_nominal_inputs(steps),
                                   noise, steps)

    report = EpisodeReport(mode, gamma, seed, disturbance_hash(realized))
    joint = scenario.initial_state(base)
    state = mpc.MpcState(joint)
    costs = []
    for i in range(steps + 1):
        t = i * dt
        distance = _distance(joint)
        report.min_distance = min(report.min_distance, distance)
        if distance < base.delta_safe:
            report.collided = True
            report.collision_step = i
            report.trajectory.append(_trajectory_row(t, joint, None,
                                                     distance, 'collision'))
            logger.info('{} seed {}: collision at t={:.2f}'.format(
                mode.value, seed, t))
            break
        if i == steps:
            report.trajectory.append(_trajectory_row(t, joint, None,
                                                     distance, 'end'))
            break

        references = scenario.references(base, t, joint.human.vector)
        step_config = base.with_references(references)
        try:
            u, state = mpc.mpc_step(state, step_config, mode, joint,
                                    solver_options)
        except mpc.FallbackExhausted as e:
            report.count_failure(e.status)
            report.fallback_exhausted = True
            report.trajectory.append(_trajectory_row(t, joint, None,
                                                     distance, 'exhausted'))
            logger.warning('{} seed {}: fallback exhausted at t={:.2f}'
                           .format(mode.value, seed, t))
            break

        attempt = state.attempt
        report.solve_times.append(attempt.stats['wall_time'])
        report.iterations.append(attempt.stats['iterations'])
        if not attempt.converged:
            report.count_failure(attempt.status)
        costs.append(uncertainty.tracking_stage_cost(
            joint.robot.vector, u.vector, base.Q, base.R,
            references.robot[0], np.zeros(ROBOT_INPUT_SIZE)))
        report.trajectory.append(_trajectory_row(t, joint, u, distance,
                                                 state.status.value))
        report.steps += 1

        joint = JointState(
            dynamics.rk4_step(joint.robot, u, dt),
            dynamics.human_step(joint.human, HumanState(realized[i]), dt))

    report.mean_stage_cost = float(np.mean(costs)) if costs else 0.0
    return report


def solver_options_from_config(config):
    return {'max_iter': config['max_iter'], 'tol': config['solver_tol'],
            'hessian': config['hessian']}


class MonteCarloReport(object):
    """Statistics per policy mode and tightening multiplier.

    Attributes:
        groups (list of dict): one entry per (mode, gamma) with episode,
            collision and exhaustion counts and cost statistics.
        episodes (list of EpisodeReport): all episodes, grouped in the
            order of ``groups``.
        base_seed (int): seed of the first episode.
        paired (bool): all modes saw the same disturbance per episode.
        timings (list of dict): solve-time quantiles per group.
    """

    def __init__(self, groups, episodes, base_seed, paired, timings=None):
        self.groups = groups
        self.episodes = episodes
        self.base_seed = base_seed
        self.paired = paired
        self.timings = timings or []

    def group(self, mode, gamma=None):
        mode = PolicyMode(mode)
        for g in self.groups:
            if g['mode'] == mode.value and (not mode.stochastic or
                                            g['gamma'] == gamma):
                return g
        raise KeyError((mode.value, gamma))

    def to_dict(self):
        return collections.OrderedDict([
            ('base_seed', self.base_seed),
            ('paired', self.paired),
            ('groups', self.groups),
        ])

    def timing_dict(self):
        return collections.OrderedDict([
            ('base_seed', self.base_seed),
            ('groups', self.timings),
        ])


def _quantiles(values, qs=(0.0, 0.25, 0.5, 0.75, 1.0)):
    if not values:
        return None
    return [float(v) for v in np.quantile(values, qs)]


def summarize(mode, gamma, episodes):
    """Aggregate statistics of the episodes of one (mode, gamma)."""
    costs = [e.mean_stage_cost for e in episodes if not e.fallback_exhausted]
    failures = collections.OrderedDict()
    for e in episodes:
        for kind, count in e.failure_kinds.items():
            failures[kind] = failures.get(kind, 0) + count
    return collections.OrderedDict([
        ('mode', PolicyMode(mode).value),
        ('gamma', gamma),
        ('episodes', len(episodes)),
        ('collisions', sum(1 for e in episodes if e.collided)),
        ('fallback_exhausted', sum(1 for e in episodes
                                   if e.fallback_exhausted)),
        ('median_cost', float(np.median(costs)) if costs else None),
        ('cost_quantiles', _quantiles(costs)),
        ('min_distance_quantiles',
         _quantiles([e.min_distance for e in episodes])),
        ('solver_failures', sum(e.solver_failures for e in episodes)),
        ('failure_kinds', dict(failures)),
    ])


def solve_time_summary(mode, gamma, episodes):
    times = [t for e in episodes for t in e.solve_times]
    return collections.OrderedDict([
        ('mode', PolicyMode(mode).value),
        ('gamma', gamma),
        ('solves', len(times)),
        ('solve_time_quantiles', _quantiles(times)),
    ])


def _run_task(task):
    log.setup()
    mode, gamma, config, seed = task
    return run_episode(mode, gamma, config, seed)


def monte_carlo(config, modes=None, gammas=None, n_episodes=None,
                base_seed=None, parallelism=None):
    """Run paired episodes for every mode and gamma.

    Episode ``i`` uses the seed ``base_seed + i`` in every group. The
    nominal mode does not depend on gamma and is run once, reported with
    gamma None. A mode listed twice gives two identical groups.
    """
    modes = [PolicyMode(m) for m in (modes or config['modes'])]
    gammas = list(gammas or config['gammas'])
    n_episodes = config['episodes'] if n_episodes is None else n_episodes
    base_seed = config['seed'] if base_seed is None else base_seed
    parallelism = config['parallelism'] if parallelism is None \
        else parallelism
    if n_episodes < 1:
        raise ValueError("Need at least one episode, got {}".format(
            n_episodes))

    keys = []
    for mode in modes:
        for gamma in (gammas if mode.stochastic else [None]):
            keys.append((mode.value, gamma))
    unique_keys = list(collections.OrderedDict.fromkeys(keys))

    tasks = [(mode, gamma, config, base_seed + i)
             for mode, gamma in unique_keys for i in range(n_episodes)]
    logger.info('Running {} episodes in {} groups'.format(
        len(tasks), len(unique_keys)))
    results = context.parallel_map(_run_task, tasks, parallelism)

    by_key = {}
    for index, key in enumerate(unique_keys):
        by_key[key] = results[index * n_episodes:(index + 1) * n_episodes]

    hashes = [[e.disturbance_hash for e in by_key[key]]
              for key in unique_keys]
    paired = all(h == hashes[0] for h in hashes)

    groups, episodes, timings = [], [], []
    for key in keys:
        mode, gamma = key
        groups.append(summarize(mode, gamma, by_key[key]))
        timings.append(solve_time_summary(mode, gamma, by_key[key]))
        episodes.extend(by_key[key])
    return MonteCarloReport(groups, episodes, base_seed, paired, timings)


EPISODE_COLUMNS = ['mode', 'gamma', 'seed', 'collided', 'collision_step',
                   'min_distance', 'mean_stage_cost', 'solver_failures',
                   'fallback_exhausted', 'steps']


def episode_rows(episodes):
    """Per-episode scatter data of a Monte Carlo run."""
    return [[e.mode.value, e.gamma, e.seed, int(e.collided),
             e.collision_step, e.min_distance, e.mean_stage_cost,
             e.solver_failures, int(e.fallback_exhausted), e.steps]
            for e in episodes]


def sample_arc_scenario(config, rng):
    """Random arc radius, robot start angle and human distance ahead."""
    radius = rng.uniform(config['arc_radius_min'], config['arc_radius_max'])
    angle = rng.uniform(0.0, 2 * np.pi)
    ahead = rng.uniform(config['arc_human_ahead_min'],
                        config['arc_human_ahead_max'])
    return radius, angle, ahead


def _bench_task(task):
    log.setup()
    index, config, modes, seed = task
    rng = np.random.RandomState(seed)
    radius, angle, ahead = sample_arc_scenario(config, rng)
    base = ScenarioConfig.from_config(config)
    scenario = Scenario.from_config(config)
    references = ocp.generate_arc_references(
        base, radius, 0.0, angle, base.v_ref, None, scenario.human_speed,
        config['arc_human_offset'], ahead)
    problem = base.with_references(references)
    x0 = ocp.initial_joint_state(references)
    options = solver_options_from_config(config)

    nominal = ocp.solve_ocp(problem, PolicyMode.NOMINAL, x0,
                            solver_options=options)
    results = collections.OrderedDict()
    for mode in modes:
        if mode == PolicyMode.NOMINAL:
            solution = nominal
        else:
            guess = ocp.initial_guess(problem, mode, x0, nominal)
            solution = ocp.solve_ocp(problem, mode, x0, guess,
                                     solver_options=options)
        results[mode.value] = (solution.status.value,
                               solution.stats['iterations'],
                               solution.stats['wall_time'])
    scenario_row = collections.OrderedDict([
        ('index', index), ('seed', seed), ('radius', radius),
        ('start_angle', angle), ('human_ahead', ahead)])
    return scenario_row, results


class BenchReport(object):
    """Solve statistics of OCPs over random arc scenarios.

    Attributes:
        scenarios (list of dict): sampled radius, start angle and human
            distance of every solve.
        statuses (dict): mode to the list of solver statuses.
        iterations (dict): mode to the list of SQP iteration counts.
        times (dict): mode to the list of wall times [s].
    """

    def __init__(self, modes):
        self.modes = [PolicyMode(m) for m in modes]
        self.scenarios = []
        self.statuses = collections.OrderedDict((m.value, [])
                                                for m in self.modes)
        self.iterations = collections.OrderedDict((m.value, [])
                                                  for m in self.modes)
        self.times = collections.OrderedDict((m.value, [])
                                             for m in self.modes)

    def add(self, scenario_row, results):
        self.scenarios.append(scenario_row)
        for mode, (status, iterations, wall_time) in results.items():
            self.statuses[mode].append(status)
            self.iterations[mode].append(iterations)
            self.times[mode].append(wall_time)

    def median_time(self, mode):
        return float(np.median(self.times[PolicyMode(mode).value]))

    def to_dict(self):
        summary = []
        for mode in self.statuses:
            counts = collections.Counter(self.statuses[mode])
            summary.append(collections.OrderedDict([
                ('mode', mode),
                ('solves', len(self.statuses[mode])),
                ('status_counts', dict(sorted(counts.items()))),
                ('median_iterations',
                 float(np.median(self.iterations[mode]))),
            ]))
        return collections.OrderedDict([
            ('modes', summary),
            ('scenarios', self.scenarios),
        ])

    def timing_dict(self):
        return collections.OrderedDict(
            (mode, collections.OrderedDict([
                ('median', self.median_time(mode)),
                ('quantiles', _quantiles(times)),
            ])) for mode, times in self.times.items())


def arc_benchmark(config, n_solves=None, base_seed=None, modes=None,
                  parallelism=None):
    """Solve OCPs of all modes over random arc scenarios.

    Scenario ``i`` is sampled from the seed ``base_seed + i``. Each is
    solved by the nominal OCP from the reference, the stochastic modes are
    warm-started from the nominal solution.
    """
    n_solves = config['bench_solves'] if n_solves is None else n_solves
    if n_solves < 1:
        raise ValueError("Need at least one solve, got {}".format(n_solves))
    base_seed = config['seed'] if base_seed is None else base_seed
    modes = [PolicyMode(m) for m in (modes or config['modes'])]
    parallelism = config['parallelism'] if parallelism is None \
        else parallelism

    tasks = [(i, config, modes, base_seed + i) for i in range(n_solves)]
    logger.info('Solving {} arc scenarios for modes {}'.format(
        n_solves, ', '.join(m.value for m in modes)))
    report = BenchReport(modes)
    for scenario_row, results in context.parallel_map(_bench_task, tasks,
                                                      parallelism):
        report.add(scenario_row, results)
    return report
