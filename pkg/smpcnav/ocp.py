# -*- coding: utf-8 -*-
"""Stochastic optimal control problem of the robot passing a human.

The OCP is transcribed with multiple shooting. Decision variables are laid
out stage by stage (see ``OcpLayout``), so the Lagrangian Hessian is block
diagonal with one block per stage.

The symbolic problem only depends on the structural scalars of a
``ScenarioConfig``. Measured state, references and the human covariance
schedule enter as a parameter vector, so the compiled template is reused
across MPC steps.
"""

import collections
import copy
import enum
import logging

import casadi as ca
import numpy as np
from repoze.lru import lru_cache

from smpcnav import dynamics
from smpcnav import nlp
from smpcnav import symbolic
from smpcnav import uncertainty
from smpcnav.types import as_vector, JointState, RobotState
from smpcnav.types import ROBOT_STATE_SIZE, ROBOT_INPUT_SIZE
from smpcnav.types import HUMAN_STATE_SIZE, JOINT_STATE_SIZE, V
from smpcnav.uncertainty import CovarianceBlocks, FeedbackGain, GainMode


logger = logging.getLogger(__name__)

NR, NU, NH, NX = ROBOT_STATE_SIZE, ROBOT_INPUT_SIZE, HUMAN_STATE_SIZE, \
    JOINT_STATE_SIZE

CONSTRAINT_NAMES = ('v_max', 'v_min', 'omega_max', 'omega_min', 'a_max',
                    'a_min', 'alpha_max', 'alpha_min', 'collision')
N_CONSTRAINTS = len(CONSTRAINT_NAMES)

# Position of the forward-velocity variance in the sigma_r triangle
VELOCITY_VARIANCE_INDEX = symbolic.upper_indices(NR).index((V, V))


class OcpDimensionError(ValueError):
    """Arrays or guesses not matching the horizon or policy mode."""
    pass


class PolicyMode(enum.Enum):
    NOMINAL = 'nominal'
    OPEN_LOOP = 'open_loop'
    PARTIAL = 'partial'
    FULL = 'full'

    @property
    def stochastic(self):
        return self != PolicyMode.NOMINAL

    @property
    def gain_mode(self):
        return {PolicyMode.PARTIAL: GainMode.PARTIAL,
                PolicyMode.FULL: GainMode.FULL}.get(self, GainMode.ZERO)


OcpStructure = collections.namedtuple('OcpStructure', [
    'N', 'dt', 'q_pos', 'q_theta', 'q_v', 'q_omega', 'r_a', 'r_alpha',
    'qe_scale', 'delta_safe', 'gamma', 'eps_v', 'eps_sigma', 'eps_beta',
    'tau', 'v_min', 'v_max', 'omega_max', 'a_max', 'alpha_max',
    'k_rv_enabled_from'])

References = collections.namedtuple('References',
                                    ['robot', 'human', 'human_inputs'])


class ScenarioConfig(object):
    """Parameters of one OCP.

    Holds the structural scalars (horizon, weights, bounds, tightening)
    and the time-varying data: robot reference, human nominal trajectory
    and inputs, and the human velocity noise model.
    """

    def __init__(self, N=20, dt=0.1, q_pos=50.0, q_theta=0.1, q_v=2.0,
                 q_omega=0.1, r_a=2.0, r_alpha=2.0, qe_scale=1.0,
                 delta_safe=0.3, gamma=3.0, eps_v=0.01, eps_sigma=1e-4,
                 eps_beta=1e-6, tau=1e3, v_min=0.0, v_max=1.0,
                 omega_max=1.5, a_max=2.0, alpha_max=3.0,
                 k_rv_enabled_from=1, v_ref=0.8, w_h_var=0.16,
                 noise=None, references=None):
        self.N = int(N)
        self.dt = float(dt)
        self.q_pos = float(q_pos)
        self.q_theta = float(q_theta)
        self.q_v = float(q_v)
        self.q_omega = float(q_omega)
        self.r_a = float(r_a)
        self.r_alpha = float(r_alpha)
        self.qe_scale = float(qe_scale)
        self.delta_safe = float(delta_safe)
        self.gamma = float(gamma)
        self.eps_v = float(eps_v)
        self.eps_sigma = float(eps_sigma)
        self.eps_beta = float(eps_beta)
        self.tau = float(tau)
        self.v_min = float(v_min)
        self.v_max = float(v_max)
        self.omega_max = float(omega_max)
        self.a_max = float(a_max)
        self.alpha_max = float(alpha_max)
        self.k_rv_enabled_from = int(k_rv_enabled_from)
        self.v_ref = float(v_ref)
        self.w_h_var = float(w_h_var)
        self.noise = noise
        self.references = references

    @classmethod
    def from_config(cls, config, gamma=None):
        """Build from a run configuration dictionary."""
        return cls(
            N=config['horizon_n'], dt=config['dt'],
            q_pos=config['q_pos'], q_theta=config['q_theta'],
            q_v=config['q_v'], q_omega=config['q_omega'],
            r_a=config['r_a'], r_alpha=config['r_alpha'],
            qe_scale=config['qe_scale'], delta_safe=config['delta_safe'],
            gamma=config['gamma'] if gamma is None else gamma,
            eps_v=config['eps_v'], eps_sigma=config['eps_sigma'],
            eps_beta=config['eps_beta'], tau=config['tau'],
            v_min=config['v_min'], v_max=config['v_max'],
            omega_max=config['omega_max'], a_max=config['a_max'],
            alpha_max=config['alpha_max'],
            k_rv_enabled_from=config['k_rv_enabled_from'],
            v_ref=config['v_ref'], w_h_var=config['w_h_var'])

    def structure(self, mode=None):
        """Scalars that determine the compiled problem.

        The nominal problem ignores the tightening, so its structure is
        independent of gamma.
        """
        gamma = self.gamma
        if mode is not None and not PolicyMode(mode).stochastic:
            gamma = 0.0
        return OcpStructure(
            self.N, self.dt, self.q_pos, self.q_theta, self.q_v,
            self.q_omega, self.r_a, self.r_alpha, self.qe_scale,
            self.delta_safe, gamma, self.eps_v, self.eps_sigma,
            self.eps_beta, self.tau, self.v_min, self.v_max, self.omega_max,
            self.a_max, self.alpha_max, self.k_rv_enabled_from)

    def with_references(self, references):
        config = copy.copy(self)
        config.references = references
        return config

    @property
    def Q(self):
        return np.diag([self.q_pos, self.q_pos, self.q_theta, self.q_v,
                        self.q_omega])

    @property
    def R(self):
        return np.diag([self.r_a, self.r_alpha])

    @property
    def Q_e(self):
        return self.qe_scale * self.Q

    @property
    def bounds(self):
        return (self.v_min, self.v_max, self.omega_max, self.a_max,
                self.alpha_max, self.delta_safe)

    def noise_model(self):
        if self.noise is not None:
            return self.noise
        return uncertainty.NoiseModel.constant(self.w_h_var, self.N)

    def human_covariances(self):
        """Predicted human position covariances for stages 0..N."""
        return uncertainty.human_covariance_schedule(self.noise_model(),
                                                     self.dt, self.N)

    def validate(self):
        if self.N < 2:
            raise ValueError("Horizon N must be at least 2, got {}"
                             .format(self.N))
        if self.dt <= 0:
            raise ValueError("dt must be positive, got {}".format(self.dt))
        weights = (self.q_pos, self.q_theta, self.q_v, self.q_omega,
                   self.r_a, self.r_alpha, self.qe_scale, self.tau)
        if min(weights) < 0:
            raise ValueError("Weights must be non-negative")
        if self.delta_safe <= 0:
            raise ValueError("delta_safe must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if min(self.eps_v, self.eps_sigma, self.eps_beta) <= 0:
            raise ValueError("eps_v, eps_sigma and eps_beta must be positive")
        if self.v_min > self.v_max:
            raise ValueError("v_min larger than v_max")
        if self.references is not None:
            expected = ((self.N + 1, NR), (self.N + 1, NH), (self.N, NH))
            shapes = tuple(np.shape(a) for a in self.references)
            if shapes != expected:
                raise OcpDimensionError(
                    "Reference shapes {} do not match horizon {}".format(
                        shapes, self.N))
        if len(self.noise_model()) < self.N:
            raise OcpDimensionError("Noise model shorter than the horizon")


def generate_corridor_references(config, t, robot_start_x, v_ref,
                                 human_start, v_h):
    """References of the corridor scenario from simulation time ``t``.

    The robot reference travels along the x axis at ``v_ref``, the human
    walks from ``human_start`` at the constant velocity ``v_h``.

    >>> config = ScenarioConfig(N=10)
    >>> refs = generate_corridor_references(config, 0.0, 0.0, 0.8,
    ...                                     [4.0, 0.0], [-0.6, 0.0])
    >>> np.allclose(refs.robot[5], [0.4, 0, 0, 0.8, 0])
    True
    >>> np.allclose(refs.human[10], [3.4, 0.0])
    True
    """
    N, dt = config.N, config.dt
    times = dt * np.arange(N + 1)
    robot = np.zeros((N + 1, NR))
    robot[:, 0] = robot_start_x + v_ref * (t + times)
    robot[:, 3] = v_ref
    v_h = np.asarray(v_h, dtype=float)
    human = np.asarray(human_start, dtype=float) + np.outer(times, v_h)
    human_inputs = np.tile(v_h, (N, 1))
    return References(robot, human, human_inputs)


def arc_center(radius):
    """Center of the arcs; the robot arc passes through the origin."""
    return np.array([0.0, radius])


def arc_point(radius, angle):
    """Offset from ``arc_center`` of the point of a circle at ``angle``.

    Angle zero is the origin side of the circle, where the tangent heading
    equals the angle.
    """
    return np.array([radius * np.sin(angle), -radius * np.cos(angle)])


def generate_arc_references(config, radius, t=0.0, start_angle=0.0,
                            v_ref=None, human_position=None,
                            human_speed=0.6, human_offset=0.05,
                            human_ahead=3.0):
    """References of the arc scenario.

    The robot drives counter-clockwise on a circle of ``radius`` with speed
    ``v_ref`` and yaw rate ``v_ref / radius``, starting at ``start_angle``
    at time zero. The reference is the RK4 rollout of the exact arc state
    at time ``t`` under zero inputs, so it is dynamically feasible.

    The human walks clockwise on a concentric arc. Without a measured
    ``human_position`` it starts ``human_ahead`` meters of arc ahead of the
    robot, ``human_offset`` meters further out.
    """
    if radius <= 0:
        raise ValueError("Arc radius must be positive, got {}".format(radius))
    N, dt = config.N, config.dt
    v_ref = config.v_ref if v_ref is None else v_ref
    center = arc_center(radius)

    angle = start_angle + v_ref * t / radius
    state = np.concatenate([center + arc_point(radius, angle),
                            [angle, v_ref, v_ref / radius]])
    robot = [state]
    for _ in range(N):
        robot.append(dynamics.rk4_step(robot[-1], np.zeros(NU), dt))
    robot = np.array(robot)

    if human_position is None:
        human_radius = radius + human_offset
        human_angle = start_angle + human_ahead / radius - \
            human_speed * t / human_radius
    else:
        delta = np.asarray(human_position, dtype=float) - center
        human_radius = float(np.hypot(delta[0], delta[1]))
        human_angle = float(np.arctan2(delta[0], -delta[1]))
    angles = human_angle - human_speed * dt * np.arange(N + 1) / human_radius
    human = np.array([center + arc_point(human_radius, a) for a in angles])
    if human_position is not None:
        human[0] = human_position
    human_inputs = np.diff(human, axis=0) / dt
    return References(robot, human, human_inputs)


def _constraint_expr(w, bounds):
    v_min, v_max, omega_max, a_max, alpha_max, delta_safe = bounds
    v, omega = w[3], w[4]
    a, alpha = w[NX], w[NX + 1]
    distance = dynamics.distance_expr(w[0:NR], w[NR:NX])
    return ca.vertcat(v - v_max,
                      v_min - v,
                      omega - omega_max,
                      -omega - omega_max,
                      a - a_max,
                      -a - a_max,
                      alpha - alpha_max,
                      -alpha - alpha_max,
                      delta_safe - distance)


@lru_cache(16)
def _constraint_function(bounds):
    w = ca.SX.sym('w', NX + NU)
    h = _constraint_expr(w, bounds)
    return ca.Function('stage_constraints', [w], [h, ca.jacobian(h, w)])


def stage_constraints(x, u, config):
    """Stage constraint values (<= 0 convention) and their Jacobian.

    ``x`` is the joint 7-state and ``u`` the robot input. The Jacobian has
    the 7 state columns followed by the 2 input columns.

    >>> x = [0., 0., 0., 0.5, 0., 3., 4.]
    >>> h, J = stage_constraints(x, [0., 0.], ScenarioConfig())
    >>> bool(np.isclose(h[-1], -4.7)), bool(np.all(h < 0))
    (True, True)
    """
    function = _constraint_function(tuple(config.bounds))
    if symbolic.is_symbolic(x, u):
        return function(ca.vertcat(x, u))
    w = np.concatenate([as_vector(x), as_vector(u)])
    h, J = function(w)
    return symbolic.to_vector(h), symbolic.to_matrix(J)


def tightened_soft_constraint(h, beta, gamma, s):
    """Residual h + gamma sqrt(beta) - s of a tightened soft constraint.

    The constraint holds when the residual is non-positive.

    >>> round(tightened_soft_constraint(-1.0, 0.04, 3.0, 0.0), 12)
    -0.4
    """
    if symbolic.is_symbolic(h, beta, s):
        return h + gamma * ca.sqrt(beta) - s
    return np.asarray(h) + gamma * np.sqrt(beta) - np.asarray(s)


def minimal_slack(h, beta, gamma):
    """Smallest feasible slack of a tightened soft constraint.

    >>> round(float(minimal_slack(0.1, 0.01, 2.0)), 12)
    0.3
    """
    return np.maximum(0.0, tightened_soft_constraint(h, beta, gamma, 0.0))


class OcpLayout(object):
    """Stage-major layout of the decision vector.

    Stage k holds, when present: robot state ``x`` (k >= 1), covariance
    triangles ``sigma_r`` and ``sigma_rh`` (stochastic, k >= 1), gains
    (``k_full`` for full feedback, ``kh`` and ``krv`` for partial feedback,
    1 <= k <= N-1), input ``u`` (k <= N-1), ``beta`` (stochastic) and slack
    ``s``.
    """

    def __init__(self, N, mode, k_rv_enabled_from=1):
        self.N = N
        self.mode = PolicyMode(mode)
        self.k_rv_enabled_from = k_rv_enabled_from
        self.stages = []
        self.blocks = []
        offset = 0
        for k in range(N + 1):
            entries = collections.OrderedDict()
            start = offset
            for name, size in self._sizes(k):
                entries[name] = slice(offset, offset + size)
                offset += size
            self.stages.append(entries)
            self.blocks.append(slice(start, offset))
        self.n_vars = offset

    def _sizes(self, k):
        N, mode = self.N, self.mode
        interior = 1 <= k <= N - 1
        sizes = []
        if k >= 1:
            sizes.append(('x', NR))
        if mode.stochastic and k >= 1:
            sizes.append(('sigma_r', uncertainty.SIGMA_R_SIZE))
            sizes.append(('sigma_rh', uncertainty.SIGMA_RH_SIZE))
        if mode == PolicyMode.FULL and interior:
            sizes.append(('k_full', NU * NX))
        if mode == PolicyMode.PARTIAL and interior:
            sizes.append(('kh', NU * NH))
            if k >= self.k_rv_enabled_from:
                sizes.append(('krv', 1))
        if k <= N - 1:
            sizes.append(('u', NU))
        if mode.stochastic:
            sizes.append(('beta', N_CONSTRAINTS))
        sizes.append(('s', N_CONSTRAINTS))
        return sizes

    def has(self, k, name):
        return name in self.stages[k]

    def index(self, k, name):
        return self.stages[k][name]

    def symbols(self, z):
        """Per-name lists over stages of the symbolic variable slices."""
        return self._split(z)

    def unpack(self, z):
        """Per-name lists over stages of numeric values, None if absent."""
        return self._split(np.asarray(z, dtype=float))

    def _split(self, z):
        names = ('x', 'sigma_r', 'sigma_rh', 'k_full', 'kh', 'krv', 'u',
                 'beta', 's')
        values = {name: [None] * (self.N + 1) for name in names}
        for k, entries in enumerate(self.stages):
            for name, index in entries.items():
                values[name][k] = z[index]
        return values

    def pack(self, values):
        """Decision vector from per-name lists over stages."""
        z = np.zeros(self.n_vars)
        for k, entries in enumerate(self.stages):
            for name, index in entries.items():
                z[index] = np.asarray(values[name][k], dtype=float).ravel()
        return z

    def equality_count(self, pin_gains=False):
        count = NR * self.N
        if self.mode.stochastic:
            count += (uncertainty.SIGMA_R_SIZE +
                      uncertainty.SIGMA_RH_SIZE) * self.N
        if pin_gains:
            count += NU * NX * (self.N - 1)
        return count

    def inequality_count(self):
        per_stage = 2 * N_CONSTRAINTS if self.mode.stochastic \
            else N_CONSTRAINTS
        return per_stage * (self.N + 1)


def variable_count(N, mode, k_rv_enabled_from=1):
    """Closed-form number of decision variables.

    >>> variable_count(20, PolicyMode.NOMINAL)
    369
    """
    mode = PolicyMode(mode)
    count = NR * N + NU * N + N_CONSTRAINTS * (N + 1)
    if mode.stochastic:
        count += (uncertainty.SIGMA_R_SIZE + uncertainty.SIGMA_RH_SIZE) * N
        count += N_CONSTRAINTS * (N + 1)
    if mode == PolicyMode.FULL:
        count += NU * NX * (N - 1)
    if mode == PolicyMode.PARTIAL:
        count += NU * NH * (N - 1)
        count += max(0, N - max(1, k_rv_enabled_from))
    return count


def _gain_matrix(mode, values, k):
    """Gain matrix of stage k from per-name symbolic values."""
    if mode == PolicyMode.FULL and values['k_full'][k] is not None:
        return symbolic.matrix_from_rows(values['k_full'][k], NU, NX)
    if mode == PolicyMode.PARTIAL and values['kh'][k] is not None:
        krv = values['krv'][k]
        return uncertainty.partial_gain_matrix(
            symbolic.matrix_from_rows(values['kh'][k], NU, NH),
            krv[0] if krv is not None else 0.0)
    return np.zeros((NU, NX))


def _feedback_gain(mode, values, k):
    """Numeric ``FeedbackGain`` of stage k from unpacked values."""
    if mode == PolicyMode.FULL and values['k_full'][k] is not None:
        return FeedbackGain.dense(
            symbolic.matrix_from_rows(values['k_full'][k], NU, NX))
    if mode == PolicyMode.PARTIAL and values['kh'][k] is not None:
        krv = values['krv'][k]
        return FeedbackGain.partial(
            symbolic.matrix_from_rows(values['kh'][k], NU, NH),
            krv[0] if krv is not None else 0.0)
    return FeedbackGain.zero()


def parameter_size(N):
    return NR + (N + 1) * (NR + NH + uncertainty.SIGMA_H_SIZE)


def _split_parameters(p, N):
    """Measured robot state, robot reference, human nominal states and
    human covariance triangles from the parameter vector."""
    x0 = p[0:NR]
    offset = NR
    robot, human, sigma_h = [], [], []
    for k in range(N + 1):
        robot.append(p[offset:offset + NR])
        offset += NR
    for k in range(N + 1):
        human.append(p[offset:offset + NH])
        offset += NH
    for k in range(N + 1):
        sigma_h.append(p[offset:offset + uncertainty.SIGMA_H_SIZE])
        offset += uncertainty.SIGMA_H_SIZE
    return x0, robot, human, sigma_h


def parameter_vector(config, initial_state):
    robot, human, _ = config.references
    triangles = [symbolic.upper_from_symmetric(S)
                 for S in config.human_covariances()]
    return np.concatenate([as_vector(initial_state.robot),
                           np.ravel(robot), np.ravel(human),
                           np.ravel(triangles)])


def _variable_bounds(layout, structure):
    lower = np.full(layout.n_vars, -np.inf)
    upper = np.full(layout.n_vars, np.inf)
    N = layout.N
    for k in range(N + 1):
        lower[layout.index(k, 's')] = 0.0
        if layout.has(k, 'beta'):
            lower[layout.index(k, 'beta')] = structure.eps_beta
    x_N = layout.index(N, 'x')
    lower[x_N.start + V] = 0.0
    upper[x_N.start + V] = structure.eps_v
    if layout.has(N, 'sigma_r'):
        upper[layout.index(N, 'sigma_r').start +
              VELOCITY_VARIANCE_INDEX] = structure.eps_sigma
    return lower, upper


@lru_cache(64)
def _compile(structure, mode, pin_gains):
    """Symbolic OCP template for a structure, policy mode and pinning."""
    mode = PolicyMode(mode)
    config = ScenarioConfig(**structure._asdict())
    N, dt = config.N, config.dt
    layout = OcpLayout(N, mode, config.k_rv_enabled_from)
    logger.debug('Compiling {} OCP with {} variables'.format(
        mode.value, layout.n_vars))

    z = ca.SX.sym('z', layout.n_vars)
    p = ca.SX.sym('p', parameter_size(N))
    x0, robot_ref, human, sigma_h = _split_parameters(p, N)
    var = layout.symbols(z)
    states = [x0] + var['x'][1:]
    zero_input = np.zeros(NU)
    zero_noise = np.zeros((NH, NH))
    bounds = tuple(config.bounds)

    objective, tracking = 0, 0
    equalities, inequalities = [], []
    for k in range(N + 1):
        x = states[k]
        u = var['u'][k] if k < N else ca.SX.zeros(NU)
        K = _gain_matrix(mode, var, k)

        S = None
        if mode.stochastic:
            if k == 0:
                sigma_r, sigma_rh = np.zeros((NR, NR)), np.zeros((NR, NH))
            else:
                sigma_r = symbolic.symmetric_from_upper(var['sigma_r'][k], NR)
                sigma_rh = symbolic.matrix_from_rows(var['sigma_rh'][k],
                                                     NR, NH)
            S = uncertainty.assemble_covariance(
                sigma_r, sigma_rh, symbolic.symmetric_from_upper(sigma_h[k],
                                                                 NH))

        if k < N:
            stage_tracking = uncertainty.tracking_stage_cost(
                x, u, config.Q, config.R, robot_ref[k], zero_input)
            tracking += stage_tracking
            if mode.stochastic:
                objective += uncertainty.expected_stage_cost(
                    x, u, S, K, config.Q, config.R,
                    (robot_ref[k], zero_input))
            else:
                objective += stage_tracking

            equalities.append(states[k + 1] - dynamics.rk4_step(x, u, dt))
            if mode.stochastic:
                A_r, B_r = dynamics.robot_discrete_jacobians(x, u, dt)
                S_next = uncertainty.propagate_matrix(S, A_r, B_r, K,
                                                      zero_noise, dt)
                equalities.append(
                    symbolic.upper_from_symmetric(S_next[:NR, :NR]) -
                    var['sigma_r'][k + 1])
                equalities.append(
                    symbolic.rows_from_matrix(S_next[:NR, NR:]) -
                    var['sigma_rh'][k + 1])
        else:
            terminal_tracking = uncertainty.tracking_terminal_cost(
                x, config.Q_e, robot_ref[k])
            tracking += terminal_tracking
            if mode.stochastic:
                objective += uncertainty.expected_terminal_cost(
                    x, S, config.Q_e, robot_ref[k])
            else:
                objective += terminal_tracking

        h, J = _constraint_function(bounds)(ca.vertcat(x, human[k], u))
        s = var['s'][k]
        objective += config.tau * ca.sum1(s)
        if mode.stochastic:
            beta = var['beta'][k]
            H = uncertainty.constraint_variances(J, S, K)
            inequalities.append(H - beta)
            inequalities.append(tightened_soft_constraint(
                h, beta, config.gamma, s))
        else:
            inequalities.append(h - s)

    if pin_gains:
        for k in range(1, N):
            equalities.append(var['k_full'][k])

    lower, upper = _variable_bounds(layout, structure)
    problem = nlp.NlpProblem(
        z, objective, ca.vertcat(*equalities), ca.vertcat(*inequalities),
        lower=lower, upper=upper, parameters=p, blocks=layout.blocks,
        quadratic=tracking, name='ocp_' + mode.value)
    return layout, problem


def build_ocp(config, mode, initial_state, guess=None, pin_gains=False):
    """Build the OCP of a policy mode at a measured joint state.

    Args:
        config (ScenarioConfig): parameters, references included.
        mode (PolicyMode): policy mode.
        initial_state (JointState): measured robot and human state.
        guess (OcpSolution): optional warm start of the same mode
            and horizon. Defaults to ``initial_guess(config, mode, ...)``.
        pin_gains (bool): full feedback only, fix all gains to zero by
            equality constraints.

    Returns:
        (OcpLayout, NlpProblem)
    """
    mode = PolicyMode(mode)
    config.validate()
    if config.references is None:
        raise OcpDimensionError("Scenario config has no references")
    if pin_gains and mode != PolicyMode.FULL:
        raise ValueError("Pinned gains need the full feedback mode")
    if not np.allclose(as_vector(initial_state.human),
                       config.references.human[0], atol=1e-9):
        raise ValueError("Initial human state differs from the human "
                         "nominal trajectory at stage 0")

    layout, template = _compile(config.structure(mode), mode.value,
                                bool(pin_gains))
    if guess is None:
        guess = initial_guess(config, mode, initial_state)
    if guess.mode != mode or len(guess.states) != config.N + 1:
        raise OcpDimensionError(
            "Initial guess of mode {} and horizon {} for a {} OCP with "
            "horizon {}".format(guess.mode.value, len(guess.states) - 1,
                                mode.value, config.N))
    problem = template.with_data(
        initial=pack(layout, guess),
        parameter_values=parameter_vector(config, initial_state))
    return layout, problem


class OcpSolution(object):
    """Trajectories, policy and uncertainty of an OCP solution.

    Attributes:
        mode (PolicyMode): policy mode.
        states (array N+1 x 5): robot states.
        inputs (array N x 2): robot inputs.
        human_states (array N+1 x 2): human nominal positions.
        gains (array N x 2 x 7): dense feedback gains, stage 0 is zero.
        covariances (list of CovarianceBlocks or None): stages 0..N.
        slacks (array N+1 x 9): constraint slacks.
        betas (array N+1 x 9 or None): constraint variance bounds.
        objective (float): objective value.
        stats (dict): status, iterations, kkt_residual, wall_time.
    """

    def __init__(self, mode, states, inputs, human_states, gains=None,
                 covariances=None, slacks=None, betas=None, objective=None,
                 stats=None):
        self.mode = PolicyMode(mode)
        self.states = np.asarray(states, dtype=float)
        self.inputs = np.asarray(inputs, dtype=float)
        self.human_states = np.asarray(human_states, dtype=float)
        N = len(self.inputs)
        self.gains = np.zeros((N, NU, NX)) if gains is None else \
            np.asarray(gains, dtype=float)
        self.covariances = covariances
        self.slacks = np.zeros((N + 1, N_CONSTRAINTS)) if slacks is None \
            else np.asarray(slacks, dtype=float)
        self.betas = None if betas is None else np.asarray(betas,
                                                           dtype=float)
        self.objective = objective
        self.stats = stats or {}

    @property
    def N(self):
        return len(self.inputs)

    @property
    def status(self):
        if 'status' not in self.stats:
            return None
        return nlp.SolverStatus(self.stats['status'])

    @property
    def converged(self):
        return self.status == nlp.SolverStatus.CONVERGED

    def joint_state(self, k):
        return np.concatenate([self.states[k], self.human_states[k]])

    def robot_state(self, k):
        return RobotState(self.states[k])


def pack(layout, solution):
    """Decision vector of a solution in a layout of the same mode."""
    N = layout.N
    values = {'x': list(solution.states), 'u': list(solution.inputs),
              's': list(solution.slacks)}
    if layout.mode.stochastic:
        values['beta'] = list(solution.betas)
        values['sigma_r'] = [c.sigma_r_upper for c in solution.covariances]
        values['sigma_rh'] = [c.sigma_rh.ravel()
                              for c in solution.covariances]
    values['k_full'] = [K.ravel() for K in solution.gains] + [None]
    values['kh'] = [K[:, NR:].ravel() for K in solution.gains] + [None]
    values['krv'] = [[K[0, V]] for K in solution.gains] + [None]
    return layout.pack(values)


def unpack(layout, z, config, initial_state, result=None):
    """``OcpSolution`` from a decision vector."""
    mode, N = layout.mode, layout.N
    values = layout.unpack(z)
    states = np.array([as_vector(initial_state.robot)] + values['x'][1:])
    inputs = np.array(values['u'][:N])
    gains = np.array([uncertainty.embed_gain(_feedback_gain(mode, values, k))
                      for k in range(N)])
    gains[0] = 0.0

    covariances = betas = None
    if mode.stochastic:
        schedule = config.human_covariances()
        covariances = [CovarianceBlocks(sigma_h=schedule[0])]
        for k in range(1, N + 1):
            covariances.append(CovarianceBlocks(
                symbolic.symmetric_from_upper(values['sigma_r'][k], NR),
                values['sigma_rh'][k].reshape(NR, NH), schedule[k]))
        betas = np.array(values['beta'])

    solution = OcpSolution(mode, states, inputs, config.references.human,
                           gains, covariances, np.array(values['s']), betas)
    if result is not None:
        solution.objective = result.objective
        solution.stats = result.stats()
    return solution


def _propagated_covariances(config, states, inputs, gains):
    """Forward propagation of the joint covariance along a trajectory."""
    noise = config.noise_model()
    covariances = [CovarianceBlocks()]
    for k in range(config.N):
        A_r, B_r = dynamics.robot_discrete_jacobians(states[k], inputs[k],
                                                     config.dt)
        covariances.append(uncertainty.propagate_covariance(
            covariances[-1], A_r, B_r, gains[k], noise.w_h[k], config.dt))
    return covariances


def _stage_inputs(inputs, k):
    return inputs[k] if k < len(inputs) else np.zeros(NU)


def initial_guess(config, mode, initial_state, nominal=None):
    """Initial guess of an OCP.

    The nominal OCP starts from the reference. Stochastic modes start from
    ``nominal`` (a nominal solution) when given, with zero gains, the
    covariances of the open-loop propagation, beta = max(H, eps_beta) and
    the smallest feasible slacks.
    """
    mode = PolicyMode(mode)
    N = config.N
    robot_ref, human, _ = config.references
    if nominal is not None:
        states = np.array(nominal.states, dtype=float)
        inputs = np.array(nominal.inputs, dtype=float)
    else:
        states = np.array(robot_ref, dtype=float)
        inputs = np.zeros((N, NU))
    states[0] = as_vector(initial_state.robot)
    gains = np.zeros((N, NU, NX))

    covariances = betas = None
    if mode.stochastic:
        covariances = _propagated_covariances(config, states, inputs, gains)
    slacks, beta_rows = [], []
    for k in range(N + 1):
        x = np.concatenate([states[k], human[k]])
        h, J = stage_constraints(x, _stage_inputs(inputs, k), config)
        if mode.stochastic:
            K = gains[k] if k < N else np.zeros((NU, NX))
            H = uncertainty.constraint_variances(J, covariances[k], K)
            beta = np.maximum(H, config.eps_beta)
            beta_rows.append(beta)
            slacks.append(minimal_slack(h, beta, config.gamma))
        else:
            slacks.append(np.maximum(h, 0.0))
    if mode.stochastic:
        betas = np.array(beta_rows)
    return OcpSolution(mode, states, inputs, human, gains, covariances,
                       np.array(slacks), betas)


def shift_guess(prev, config, steps=1):
    """Receding-horizon warm start from a previous solution.

    All stage quantities move ``steps`` stages forward and the last stage
    is repeated. Stage 0 gets zero gain and zero robot covariance, slacks
    and betas are clamped to their bounds. Human data come from
    ``config``.
    """
    def shift(values):
        values = np.asarray(values, dtype=float)
        tail = np.repeat(values[-1:], steps, axis=0)
        return np.concatenate([values[steps:], tail])[:len(values)]

    states = shift(prev.states)
    inputs = shift(prev.inputs)
    gains = shift(prev.gains)
    gains[0] = 0.0
    slacks = np.maximum(shift(prev.slacks), 0.0)
    betas = covariances = None
    if prev.mode.stochastic:
        betas = np.maximum(shift(prev.betas), config.eps_beta)
        schedule = config.human_covariances()
        moved = prev.covariances[steps:] + \
            [prev.covariances[-1]] * steps
        covariances = [CovarianceBlocks(c.sigma_r, c.sigma_rh, schedule[k])
                       for k, c in enumerate(moved[:len(prev.covariances)])]
        covariances[0] = CovarianceBlocks(sigma_h=schedule[0])
    human = prev.human_states if config.references is None \
        else config.references.human
    return OcpSolution(prev.mode, states, inputs, human, gains, covariances,
                       slacks, betas)


def solve_ocp(config, mode, initial_state, guess=None, pin_gains=False,
              solver_options=None):
    """Build and solve an OCP.

    Stochastic modes without ``guess`` are started from the solution of
    the nominal OCP. Returns the ``OcpSolution`` with its solver stats.
    """
    mode = PolicyMode(mode)
    options = dict(solver_options or {})
    warm_time = 0.0
    if guess is None and mode.stochastic:
        nominal = solve_ocp(config, PolicyMode.NOMINAL, initial_state,
                            solver_options=options)
        warm_time = nominal.stats['wall_time']
        guess = initial_guess(config, mode, initial_state, nominal)
    layout, problem = build_ocp(config, mode, initial_state, guess,
                                pin_gains)
    result = nlp.solve(problem, **options)
    solution = unpack(layout, result.z, config, initial_state, result)
    solution.stats['warm_start_time'] = warm_time
    if not result.converged:
        logger.warning('{} OCP not converged: {} after {} iterations, '
                       'kkt {:.2e}'.format(mode.value, result.status.value,
                                           result.iterations, result.kkt))
    return solution


def initial_joint_state(references):
    """Joint state at the start of the references."""
    return JointState.from_vector(np.concatenate([references.robot[0],
                                                  references.human[0]]))
