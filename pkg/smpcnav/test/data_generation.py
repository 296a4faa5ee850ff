import os

import numpy as np

from smpcnav import config
from smpcnav import ocp


def random_psd(rng, n, scale=1.0):
    '''
    Random symmetric positive definite matrix

    >>> S = random_psd(np.random.RandomState(0), 3)
    >>> bool(np.linalg.eigvalsh(S).min() > 0)
    True
    '''
    A = rng.standard_normal((n, n))
    return scale * (A.dot(A.T) / n + 0.1 * np.eye(n))


def run_config(**overrides):
    """Default run configuration with overrides, validated."""
    c = config.default_config()
    c.update(overrides)
    return config.validate_config(c)


def corridor_config(N=10, human_start=(4.0, 0.05), human_velocity=(-0.6, 0),
                    t=0.0, **kwargs):
    '''
    Scenario config with corridor references

    >>> c = corridor_config(N=4)
    >>> c.references.robot.shape, c.references.human.shape
    ((5, 5), (5, 2))
    '''
    c = ocp.ScenarioConfig(N=N, **kwargs)
    references = ocp.generate_corridor_references(
        c, t, 0.0, c.v_ref, human_start, human_velocity)
    return c.with_references(references)


def far_human_config(N=10, **kwargs):
    """Corridor config with the human far out of reach."""
    return corridor_config(N=N, human_start=(4.0, 1e6),
                           human_velocity=(0.0, 0.0), **kwargs)


def create_run_folder(tmpdir, text=None, **overrides):
    """Folder with a config.yaml, from ``text`` or from overrides."""
    path = str(tmpdir.mkdir('run'))
    if text is None:
        c = config.default_config()
        c.update(overrides)
        text = config.emit_config(c)
    with open(os.path.join(path, 'config.yaml'), 'w') as fout:
        fout.write(text)
    return path
