import logging
from timeit import default_timer as timer

from smpcnav import dataset
from smpcnav import simulate

logger = logging.getLogger(__name__)


class Command:
    name = 'bench'
    help = "Time OCP solves over random arc scenarios"

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True,
                            help='config.yaml or folder holding it')
        parser.add_argument('--seed', type=int,
                            help='seed of the first scenario')
        parser.add_argument('--solves', type=int,
                            help='number of scenarios')
        parser.add_argument('--out', help='output folder')

    def run(self, args):
        data = dataset.RunSet(args.config, args.out)

        start = timer()
        report = simulate.arc_benchmark(data.config, n_solves=args.solves,
                                        base_seed=args.seed)
        end = timer()
        data.append_profile('bench', end - start)

        data.save_json(report.to_dict(), 'bench.json')
        data.save_timing(report.timing_dict(), 'bench_timing.json')
        for mode in report.times:
            logger.info('{}: median solve time {:.4f} s'.format(
                mode, report.median_time(mode)))
        return 0
