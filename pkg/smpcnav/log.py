import logging
import os


def setup(level=None):
    """Configure the root logger of this process.

    The level defaults to the ``SMPCNAV_LOG_LEVEL`` environment variable,
    INFO when unset. Worker processes inherit the variable. The SQP
    iterate log is emitted at DEBUG.
    """
    if level is None:
        level = os.environ.get('SMPCNAV_LOG_LEVEL', 'INFO').upper()
    logging.basicConfig(format='%(asctime)s %(levelname)s: %(message)s',
                        level=level)
