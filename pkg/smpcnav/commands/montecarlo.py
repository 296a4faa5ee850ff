import logging
from timeit import default_timer as timer

from smpcnav import context
from smpcnav import dataset
from smpcnav import simulate

logger = logging.getLogger(__name__)


class Command:
    name = 'montecarlo'
    help = "Run paired closed-loop episodes for all modes and gammas"

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True,
                            help='config.yaml or folder holding it')
        parser.add_argument('--seed', type=int,
                            help='seed of the first episode')
        parser.add_argument('--episodes', type=int,
                            help='episodes per mode and gamma')
        parser.add_argument('--out', help='output folder')

    def run(self, args):
        data = dataset.RunSet(args.config, args.out)
        config = data.config

        start = timer()
        report = simulate.monte_carlo(config, n_episodes=args.episodes,
                                      base_seed=args.seed)
        end = timer()
        data.append_profile('montecarlo', end - start)
        logger.info('Peak memory {:.1f} MB'.format(
            context.peak_memory_mb()))

        data.save_json(report.to_dict(), 'montecarlo.json')
        data.save_timing(report.timing_dict(), 'montecarlo_timing.json')
        data.save_csv('episodes.csv', 'montecarlo_episodes',
                      simulate.EPISODE_COLUMNS,
                      simulate.episode_rows(report.episodes))
        data.save_report(self.summary_table(report), 'montecarlo.txt')
        data.save_resolved_config()
        if not report.paired:
            logger.warning('Episodes of different modes saw different '
                           'disturbances')
        return 0

    def summary_table(self, report):
        """Collision counts and median costs, one column per group."""
        def label(group):
            if group['gamma'] is None:
                return group['mode']
            return '{} g={}'.format(group['mode'], group['gamma'])

        def cost(group):
            if group['median_cost'] is None:
                return '-'
            return '{:.3f}'.format(group['median_cost'])

        header = ['', ] + [label(g) for g in report.groups]
        lines = [
            header,
            ['collisions'] + [str(g['collisions']) for g in report.groups],
            ['median cost'] + [cost(g) for g in report.groups],
            ['exhausted'] + [str(g['fallback_exhausted'])
                             for g in report.groups],
            ['episodes'] + [str(g['episodes']) for g in report.groups],
        ]
        widths = [max(len(line[i]) for line in lines)
                  for i in range(len(header))]
        text = []
        for line in lines:
            text.append('  '.join(cell.rjust(w)
                                  for cell, w in zip(line, widths)))
        return '\n'.join(text) + '\n'
