from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import csv
import errno
import io
import json
import os

import numpy as np

from smpcnav.types import PX, PY, V, OMEGA


CSV_VERSION = 1

ELLIPSE_COLUMNS = ['k', 't', 'robot_x', 'robot_y', 'robot_a', 'robot_b',
                   'robot_angle', 'human_x', 'human_y', 'human_a', 'human_b',
                   'human_angle', 'safe_a', 'safe_b', 'v', 'v_band',
                   'omega', 'omega_band']


def mkdir_p(path):
    '''Make a directory including parent directories.
    '''
    try:
        os.makedirs(path)
    except os.error as exc:
        if exc.errno != errno.EEXIST or not os.path.isdir(path):
            raise


def open_wt(path):
    """Open a file in text mode for writing utf-8."""
    return io.open(path, 'w', encoding='utf-8', newline='')


def open_rt(path):
    """Open a file in text mode for reading utf-8."""
    return io.open(path, 'r', encoding='utf-8', newline='')


def _to_builtin(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError("{!r} is not JSON serializable".format(obj))


def json_dump_kwargs(minify=False):
    if minify:
        indent, separators = None, (',', ':')
    else:
        indent, separators = 4, (',', ': ')
    return dict(indent=indent, ensure_ascii=False,
                separators=separators, default=_to_builtin)


def json_dump(data, fout, minify=False):
    return json.dump(data, fout, **json_dump_kwargs(minify))


def json_dumps(data, minify=False):
    return json.dumps(data, **json_dump_kwargs(minify))


def json_load(fp):
    return json.load(fp)


def json_loads(text):
    return json.loads(text)


def _format(value):
    if value is None:
        return ''
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(fout, name, columns, rows):
    """Write a versioned CSV table: a schema comment, a header, the rows."""
    fout.write('# {} v{}\n'.format(name, CSV_VERSION))
    writer = csv.writer(fout, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError("Row of {} values for {} columns".format(
                len(row), len(columns)))
        writer.writerow([_format(v) for v in row])


def read_csv(fin):
    """Header and rows of a CSV written by ``write_csv``, as strings."""
    lines = [line for line in fin if not line.startswith('#')]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def covariance_ellipse(sigma, scale=3.0):
    """Semi-axes and orientation of the ``scale`` sigma ellipse of a 2x2
    covariance.

    Returns (a, b, angle) with a >= b and angle the direction of the major
    axis [rad].

    >>> a, b, angle = covariance_ellipse(np.diag([0.04, 0.01]))
    >>> round(a, 12), round(b, 12), round(angle, 12)
    (0.6, 0.3, 0.0)
    """
    sigma = 0.5 * (np.asarray(sigma, dtype=float) +
                   np.asarray(sigma, dtype=float).T)
    w, V = np.linalg.eigh(sigma)
    w = np.maximum(w, 0.0)
    major = V[:, 1]
    angle = float(np.arctan2(major[1], major[0]))
    if angle < 0:
        angle += np.pi
    if np.isclose(angle, np.pi):
        angle = 0.0
    a, b = scale * np.sqrt(w[1]), scale * np.sqrt(w[0])
    return float(a), float(b), angle


def ellipse_rows(solution, delta_safe, dt, scale=3.0):
    """Plot data of the covariance tube of a solution, one row per stage.

    Robot and human position ellipses at ``scale`` sigma, the robot ellipse
    grown by ``delta_safe`` (the Minkowski sum with the safety circle, per
    semi-axis) and ``scale`` sigma bands of v and omega. Columns are
    ``ELLIPSE_COLUMNS``.
    """
    rows = []
    for k, x in enumerate(solution.states):
        if solution.covariances is None:
            sigma_r = np.zeros((5, 5))
            sigma_h = np.zeros((2, 2))
        else:
            sigma_r = solution.covariances[k].sigma_r
            sigma_h = solution.covariances[k].sigma_h
        robot = covariance_ellipse(sigma_r[PX:PY + 1, PX:PY + 1], scale)
        human = covariance_ellipse(sigma_h, scale)
        h = solution.human_states[k]
        rows.append([k, k * dt, x[PX], x[PY], robot[0], robot[1], robot[2],
                     h[0], h[1], human[0], human[1], human[2],
                     robot[0] + delta_safe, robot[1] + delta_safe,
                     x[V], scale * np.sqrt(max(sigma_r[V, V], 0.0)),
                     x[OMEGA],
                     scale * np.sqrt(max(sigma_r[OMEGA, OMEGA], 0.0))])
    return rows
