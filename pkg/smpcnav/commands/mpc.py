import logging
from timeit import default_timer as timer

from smpcnav import dataset
from smpcnav import simulate
from smpcnav.ocp import PolicyMode

logger = logging.getLogger(__name__)


class Command:
    name = 'mpc'
    help = "Run one closed-loop episode"

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True,
                            help='config.yaml or folder holding it')
        parser.add_argument('--mode', default='full',
                            choices=[m.value for m in PolicyMode],
                            help='policy mode')
        parser.add_argument('--seed', type=int,
                            help='episode seed, defaults to the config seed')
        parser.add_argument('--out', help='output folder')

    def run(self, args):
        data = dataset.RunSet(args.config, args.out)
        config = data.config
        mode = PolicyMode(args.mode)
        seed = config['seed'] if args.seed is None else args.seed

        start = timer()
        report = simulate.run_episode(mode, config['gamma'], config, seed)
        end = timer()
        data.append_profile('mpc', end - start)

        name = 'episode_{}_{}'.format(mode.value, seed)
        data.save_csv(name + '.csv', 'episode_trajectory',
                      simulate.TRAJECTORY_COLUMNS, report.trajectory)
        data.save_json(report.to_dict(), name + '.json')
        data.save_timing(report.timing_dict(), name + '_timing.json')
        logger.info('Episode {}: collided {}, min distance {:.3f}, mean '
                    'stage cost {:.4f}'.format(name, report.collided,
                                               report.min_distance,
                                               report.mean_stage_cost))
        return 0
