import os

import yaml

from smpcnav.ocp import PolicyMode


default_config_yaml = '''
# Optimal control problem
horizon_n: 20                 # Number of discretization intervals N
dt: 0.1                       # Discretization step [s]
q_pos: 50.0                   # Weight of the position tracking error
q_theta: 0.1                  # Weight of the heading tracking error
q_v: 2.0                      # Weight of the forward velocity tracking error
q_omega: 0.1                  # Weight of the angular velocity tracking error
r_a: 2.0                      # Weight of the forward acceleration
r_alpha: 2.0                  # Weight of the angular acceleration
qe_scale: 1.0                 # Terminal weight is qe_scale times the stage state weight
delta_safe: 0.3               # Minimum robot-human distance [m]
gamma: 3.0                    # Number of standard deviations of constraint tightening
eps_v: 0.01                   # Bound on the terminal forward velocity [m/s]
eps_sigma: 1.0e-4             # Bound on the terminal forward velocity variance [m^2/s^2]
eps_beta: 1.0e-6              # Lower bound of the constraint variance variables
tau: 1000.0                   # Weight of the l1 slack penalty
k_rv_enabled_from: 1          # First stage with forward velocity feedback in partial mode

# Actuator limits
v_min: 0.0                    # [m/s]
v_max: 1.0                    # [m/s]
omega_max: 1.5                # [rad/s]
a_max: 2.0                    # [m/s^2]
alpha_max: 3.0                # [rad/s^2]

# Scenario
scenario: corridor            # corridor or arc
v_ref: 0.8                    # Reference forward velocity [m/s]
w_h_var: 0.16                 # Variance of each human velocity component [m^2/s^2]
robot_start_x: 0.0            # Corridor robot start [m]
human_start_x: 4.0            # Corridor human start [m]
human_start_y: 0.05
human_vx: -0.6                # Nominal human velocity [m/s]
human_vy: 0.0
arc_radius_min: 1.5           # Range of the robot arc radius [m]
arc_radius_max: 5.0
arc_human_offset: 0.05        # Human arc radius minus robot arc radius [m]
arc_human_ahead_min: 2.0      # Range of the initial robot-human distance along the arc [m]
arc_human_ahead_max: 4.0

# Simulation
duration: 5.0                 # Length of a closed-loop episode [s]
modes: [nominal, open_loop, partial, full]
gammas: [3.0, 2.0]            # Tightening multipliers compared by montecarlo
episodes: 200                 # Monte Carlo episodes per mode and gamma
seed: 0                       # Seed of the first episode, episode i uses seed + i
parallelism: 1                # Number of processes
bench_solves: 300             # Number of random arc scenarios of bench
out_dir:                      # Output folder, defaults to the folder of the config file

# Solver
max_iter: 200                 # Maximum number of SQP iterations
solver_tol: 1.0e-6            # KKT residual tolerance
hessian: bfgs                 # bfgs or exact
'''

INT_KEYS = ('horizon_n', 'k_rv_enabled_from', 'episodes', 'seed',
            'parallelism', 'bench_solves', 'max_iter')
CHOICES = {
    'scenario': ('corridor', 'arc'),
    'hessian': ('bfgs', 'exact'),
}


class ConfigError(ValueError):
    pass


def default_config():
    """Return default configuration"""
    return yaml.safe_load(default_config_yaml)


def _key_lines(text):
    """Line number of every top-level key of a YAML mapping."""
    node = yaml.compose(text)
    if node is None or not isinstance(node, yaml.MappingNode):
        return {}
    return {key.value: key.start_mark.line + 1 for key, _ in node.value}


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _coerce(key, value, default, line):
    def mismatch(expected):
        return ConfigError("Line {}: {} expects {}, got {!r}".format(
            line, key, expected, value))

    if key == 'out_dir':
        if value is not None and not isinstance(value, str):
            raise mismatch('a path')
        return value
    if key in INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise mismatch('an integer')
        return value
    if key == 'modes':
        if not isinstance(value, list) or not value:
            raise mismatch('a list of policy modes')
        names = [m.value for m in PolicyMode]
        for mode in value:
            if mode not in names:
                raise ConfigError("Line {}: unknown mode {!r}, expected one "
                                  "of {}".format(line, mode, names))
        return list(value)
    if key == 'gammas':
        if not isinstance(value, list) or not value or \
                not all(_is_number(g) for g in value):
            raise mismatch('a list of numbers')
        return [float(g) for g in value]
    if key in CHOICES:
        if value not in CHOICES[key]:
            raise mismatch('one of {}'.format(list(CHOICES[key])))
        return value
    if isinstance(default, float):
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                raise mismatch('a number')
        if not _is_number(value):
            raise mismatch('a number')
        return float(value)
    return value


def validate_config(config):
    """Check the invariants of a configuration."""
    def check(condition, message):
        if not condition:
            raise ConfigError(message)

    check(config['horizon_n'] >= 2, "horizon_n must be at least 2, got {}"
          .format(config['horizon_n']))
    check(config['dt'] > 0, "dt must be positive")
    for key in ('q_pos', 'q_theta', 'q_v', 'q_omega', 'r_a', 'r_alpha',
                'qe_scale', 'tau'):
        check(config[key] >= 0, "{} must be non-negative".format(key))
    check(config['delta_safe'] > 0, "delta_safe must be positive")
    check(config['gamma'] >= 0, "gamma must be non-negative")
    check(all(g >= 0 for g in config['gammas']),
          "gammas must be non-negative")
    for key in ('eps_v', 'eps_sigma', 'eps_beta', 'solver_tol', 'duration'):
        check(config[key] > 0, "{} must be positive".format(key))
    check(config['v_min'] <= config['v_max'], "v_min larger than v_max")
    for key in ('omega_max', 'a_max', 'alpha_max'):
        check(config[key] > 0, "{} must be positive".format(key))
    check(0 < config['arc_radius_min'] <= config['arc_radius_max'],
          "Arc radius range must be positive and ordered")
    check(0 <= config['arc_human_ahead_min'] <=
          config['arc_human_ahead_max'],
          "Arc human distance range must be non-negative and ordered")
    check(1 <= config['k_rv_enabled_from'] <= config['horizon_n'],
          "k_rv_enabled_from must be in [1, horizon_n]")
    for key in ('episodes', 'parallelism', 'bench_solves', 'max_iter'):
        check(config[key] >= 1, "{} must be at least 1".format(key))
    steps = config['duration'] / config['dt']
    check(abs(steps - round(steps)) < 1e-9,
          "duration {} is not a multiple of dt {}".format(
              config['duration'], config['dt']))
    return config


def parse_config(text):
    """Parse a YAML configuration over the defaults and validate it.

    >>> parse_config('')['horizon_n']
    20
    >>> parse_config('gamma: 2')['gamma']
    2.0
    """
    config = default_config()
    try:
        new_config = yaml.safe_load(text)
        lines = _key_lines(text)
    except yaml.YAMLError as e:
        raise ConfigError("Invalid YAML: {}".format(e))
    if new_config is None:
        return validate_config(config)
    if not isinstance(new_config, dict):
        raise ConfigError("Configuration must be a mapping of keys to values")

    unknown = [k for k in new_config if k not in config]
    if unknown:
        raise ConfigError("Unknown config key(s): {} (line {})".format(
            ', '.join(str(k) for k in unknown), lines.get(unknown[0])))
    for k, v in new_config.items():
        config[k] = _coerce(k, v, config[k], lines.get(k))
    return validate_config(config)


def load_config(filepath):
    """Load config from a config.yaml filepath"""
    if not os.path.isfile(filepath):
        return validate_config(default_config())
    with open(filepath) as fin:
        return parse_config(fin.read())


def emit_config(config):
    """YAML text that parses back to ``config``."""
    return yaml.safe_dump(dict(config), default_flow_style=False)
