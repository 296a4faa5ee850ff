# -*- coding: utf-8 -*-

import errno
import logging
import os

from smpcnav import config
from smpcnav import io


logger = logging.getLogger(__name__)


class RunSet(object):
    """Accessors to the configuration and outputs of a run folder.

    The folder holds ``config.yaml``. Results are written next to it, or
    to ``out_dir`` when configured, with reports in the ``reports``
    subfolder.
    """
    def __init__(self, data_path, out_dir=None):
        """Init run set associated to a folder or a config file.

        A folder without ``config.yaml`` runs on the defaults, a path that
        is neither a file nor a folder raises IOError.
        """
        if os.path.isfile(data_path):
            self.config_path = data_path
            self.data_path = os.path.dirname(os.path.abspath(data_path))
        elif os.path.isdir(data_path):
            self.config_path = os.path.join(data_path, 'config.yaml')
            self.data_path = data_path
        else:
            raise IOError(errno.ENOENT, "No config file or run folder",
                          data_path)
        self.config = config.load_config(self.config_path)
        out_dir = out_dir or self.config['out_dir']
        if out_dir is None:
            self.out_path = self.data_path
        else:
            self.out_path = os.path.join(self.data_path, out_dir)
        io.mkdir_p(self.out_path)

    def profile_log(self):
        "Filename where to write timings."
        return os.path.join(self.out_path, 'profile.log')

    def append_profile(self, command, seconds):
        with open(self.profile_log(), 'a') as fout:
            fout.write('{}: {}\n'.format(command, seconds))

    def _report_path(self):
        return os.path.join(self.out_path, 'reports')

    def load_report(self, path):
        """Load a report file as a string."""
        with io.open_rt(os.path.join(self._report_path(), path)) as fin:
            return fin.read()

    def save_report(self, report_str, path):
        """Save report string to a file."""
        filepath = os.path.join(self._report_path(), path)
        io.mkdir_p(os.path.dirname(filepath))
        with io.open_wt(filepath) as fout:
            return fout.write(report_str)

    def save_json(self, data, filename):
        """Save a JSON document with the resolved config attached."""
        document = dict(data)
        document['config'] = self.config
        with io.open_wt(os.path.join(self.out_path, filename)) as fout:
            io.json_dump(document, fout)

    def load_json(self, filename):
        with io.open_rt(os.path.join(self.out_path, filename)) as fin:
            return io.json_load(fin)

    def save_timing(self, data, filename):
        """Save wall times, which are not reproducible across runs."""
        with io.open_wt(os.path.join(self.out_path, filename)) as fout:
            io.json_dump(data, fout)

    def save_csv(self, filename, name, columns, rows):
        with io.open_wt(os.path.join(self.out_path, filename)) as fout:
            io.write_csv(fout, name, columns, rows)

    def load_csv(self, filename):
        with io.open_rt(os.path.join(self.out_path, filename)) as fin:
            return io.read_csv(fin)

    def save_resolved_config(self):
        with io.open_wt(os.path.join(self.out_path,
                                     'resolved_config.yaml')) as fout:
            fout.write(config.emit_config(self.config))

    def exists(self, filename):
        return os.path.isfile(os.path.join(self.out_path, filename))
