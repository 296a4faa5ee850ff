"""Command line dispatch and exit codes."""

import argparse
import logging
import sys

import yaml

from smpcnav import commands
from smpcnav import log
from smpcnav.config import ConfigError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_IO_ERROR = 4


def create_parser(command_objects):
    parser = argparse.ArgumentParser(
        prog='smpcnav',
        description='Stochastic MPC of a robot passing an uncertain human')
    subparsers = parser.add_subparsers(help='Command to run', dest='command')
    subparsers.required = True
    for command in command_objects:
        subparser = subparsers.add_parser(command.name, help=command.help)
        command.add_arguments(subparser)
    return parser


def main(argv=None):
    """Run a command and return its exit code."""
    log.setup()
    command_objects = [c.Command() for c in commands.smpcnav_commands]
    parser = create_parser(command_objects)
    args = parser.parse_args(argv)

    for command in command_objects:
        if args.command == command.name:
            try:
                return command.run(args) or EXIT_OK
            except (ConfigError, yaml.YAMLError) as e:
                logger.error('Configuration error: {}'.format(e))
                return EXIT_CONFIG_ERROR
            except (IOError, OSError) as e:
                logger.error('I/O error: {}'.format(e))
                return EXIT_IO_ERROR


if __name__ == '__main__':
    sys.exit(main())
