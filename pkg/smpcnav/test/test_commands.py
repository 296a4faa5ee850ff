import argparse
import os

import data_generation
from smpcnav import commands
from smpcnav import io
from smpcnav import main


def run_command(command, args):
    parser = argparse.ArgumentParser()
    command.add_arguments(parser)
    parsed_args = parser.parse_args(args)
    return command.run(parsed_args)


def small_run_folder(tmpdir, **overrides):
    values = dict(horizon_n=6, duration=0.3, episodes=1, bench_solves=1,
                  human_start_y=1e6, human_vx=0.0, modes=['nominal'])
    values.update(overrides)
    return data_generation.create_run_folder(tmpdir, **values)


def read(path):
    with io.open_rt(path) as fin:
        return fin.read()


def test_plan_outputs(tmpdir):
    path = small_run_folder(tmpdir)
    for out in ('a', 'b'):
        code = run_command(commands.plan.Command(),
                           ['--config', path, '--mode', 'open_loop',
                            '--out', out])
        assert code == 0

    a, b = os.path.join(path, 'a'), os.path.join(path, 'b')
    for filename in ('plan_trajectory.csv', 'plan_ellipses.csv',
                     'plan.json'):
        assert read(os.path.join(a, filename)) == \
            read(os.path.join(b, filename))
    assert os.path.isfile(os.path.join(a, 'plan_timing.json'))
    assert os.path.isfile(os.path.join(a, 'profile.log'))

    with io.open_rt(os.path.join(a, 'plan_ellipses.csv')) as fin:
        header, rows = io.read_csv(fin)
    assert len(rows) == 7
    for row in rows:
        values = dict(zip(header, row))
        assert float(values['robot_a']) == 0
        assert float(values['robot_b']) == 0

    with io.open_rt(os.path.join(a, 'plan.json')) as fin:
        plan = io.json_load(fin)
    assert plan['mode'] == 'open_loop'
    assert plan['config']['horizon_n'] == 6


def test_mpc_episode(tmpdir):
    path = small_run_folder(tmpdir)
    code = run_command(commands.mpc.Command(),
                       ['--config', path, '--mode', 'nominal', '--seed', '3'])
    assert code == 0
    with io.open_rt(os.path.join(path, 'episode_nominal_3.json')) as fin:
        episode = io.json_load(fin)
    assert episode['seed'] == 3
    assert not episode['collided']
    with io.open_rt(os.path.join(path, 'episode_nominal_3.csv')) as fin:
        header, rows = io.read_csv(fin)
    assert header[0] == 't'
    assert rows[-1][-1] in ('end', 'exhausted')


def test_montecarlo(tmpdir):
    path = small_run_folder(tmpdir)
    code = run_command(commands.montecarlo.Command(),
                       ['--config', path, '--seed', '7'])
    assert code == 0
    with io.open_rt(os.path.join(path, 'montecarlo.json')) as fin:
        report = io.json_load(fin)
    assert report['base_seed'] == 7
    assert report['groups'][0]['episodes'] == 1
    assert os.path.isfile(os.path.join(path, 'episodes.csv'))
    assert os.path.isfile(os.path.join(path, 'reports', 'montecarlo.txt'))
    assert os.path.isfile(os.path.join(path, 'resolved_config.yaml'))


def test_bench(tmpdir):
    path = small_run_folder(tmpdir, scenario='arc',
                            modes=['nominal', 'open_loop'])
    code = run_command(commands.bench.Command(), ['--config', path])
    assert code == 0
    with io.open_rt(os.path.join(path, 'bench.json')) as fin:
        report = io.json_load(fin)
    assert [m['mode'] for m in report['modes']] == ['nominal', 'open_loop']
    assert all(m['solves'] == 1 for m in report['modes'])
    assert len(report['scenarios']) == 1


def test_config_error_exit_code(tmpdir):
    path = data_generation.create_run_folder(tmpdir, text='horizon_n: 0\n')
    assert main.main(['plan', '--config', path]) == main.EXIT_CONFIG_ERROR


def test_unknown_key_exit_code(tmpdir):
    path = data_generation.create_run_folder(tmpdir, text='gama: 2.0\n')
    assert main.main(['mpc', '--config', path]) == main.EXIT_CONFIG_ERROR


def test_io_error_exit_code(tmpdir):
    path = data_generation.create_run_folder(tmpdir)
    code = main.main(['plan', '--config', path,
                      '--out', os.path.join('config.yaml', 'out')])
    assert code == main.EXIT_IO_ERROR


def test_missing_config_file_exit_code(tmpdir):
    missing = str(tmpdir.join('typo_config.yaml'))
    code = main.main(['bench', '--config', missing, '--solves', '0'])
    assert code == main.EXIT_IO_ERROR
    assert not os.path.exists(missing)
