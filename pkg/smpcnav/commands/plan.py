import logging
from timeit import default_timer as timer

from smpcnav import dataset
from smpcnav import io
from smpcnav import ocp
from smpcnav import simulate
from smpcnav.ocp import PolicyMode

logger = logging.getLogger(__name__)

EXIT_SOLVER_FAILURE = 3  # exit code of a failed plan

TRAJECTORY_COLUMNS = ['k', 't', 'px', 'py', 'theta', 'v', 'omega', 'hx',
                      'hy', 'a', 'alpha', 'slack_sum']


class Command:
    name = 'plan'
    help = "Solve one OCP from the scenario start"

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True,
                            help='config.yaml or folder holding it')
        parser.add_argument('--mode', default='full',
                            choices=[m.value for m in PolicyMode],
                            help='policy mode')
        parser.add_argument('--out', help='output folder')

    def run(self, args):
        data = dataset.RunSet(args.config, args.out)
        mode = PolicyMode(args.mode)

        start = timer()
        solution = self.solve(data.config, mode)
        end = timer()
        data.append_profile('plan', end - start)

        self.write_outputs(data, solution)
        if not solution.converged:
            logger.error('Plan failed: {}'.format(solution.status.value))
            return EXIT_SOLVER_FAILURE
        logger.info('Plan {} converged in {} iterations'.format(
            mode.value, solution.stats['iterations']))
        return 0

    def solve(self, config, mode):
        base = ocp.ScenarioConfig.from_config(config)
        scenario = simulate.Scenario.from_config(config)
        references = scenario.references(base, 0.0)
        problem = base.with_references(references)
        return ocp.solve_ocp(problem, mode,
                             ocp.initial_joint_state(references),
                             solver_options=simulate.
                             solver_options_from_config(config))

    def write_outputs(self, data, solution):
        config = data.config
        dt = config['dt']
        rows = []
        for k, x in enumerate(solution.states):
            u = solution.inputs[k] if k < solution.N else [None, None]
            rows.append([k, k * dt] + list(x) +
                        list(solution.human_states[k]) + list(u) +
                        [float(solution.slacks[k].sum())])
        data.save_csv('plan_trajectory.csv', 'plan_trajectory',
                      TRAJECTORY_COLUMNS, rows)
        data.save_csv('plan_ellipses.csv', 'plan_ellipses',
                      io.ELLIPSE_COLUMNS,
                      io.ellipse_rows(solution, config['delta_safe'], dt))

        stats = solution.stats
        report = {
            'mode': solution.mode.value,
            'status': stats['status'],
            'iterations': stats['iterations'],
            'kkt_residual': stats['kkt_residual'],
            'objective': solution.objective,
            'gains': solution.gains,
            'slacks': solution.slacks,
            'betas': solution.betas,
            'velocity_variances': None if solution.covariances is None else
            [c.velocity_variance for c in solution.covariances],
        }
        data.save_json(report, 'plan.json')
        data.save_timing({'wall_time': stats['wall_time'],
                          'warm_start_time': stats['warm_start_time']},
                         'plan_timing.json')
