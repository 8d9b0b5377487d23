import logging
import sys
from typing import Sequence

import better_exceptions
from tabulate import tabulate

import config
from app.core.helpers import COMMANDS, BadArgument, TepaiError
from app.extensions import load_extensions

log = logging.getLogger('tepai')


def _report_error(error: BaseException) -> str:
    formatter = better_exceptions.ExceptionFormatter(colored=sys.stderr.isatty())
    return ''.join(formatter.format_exception(type(error), error, error.__traceback__))


def print_help(name: str | None = None) -> int:
    if name is None:
        seen = {}
        for cmd in COMMANDS.values():
            seen.setdefault(cmd.name, cmd)

        print(f'{config.name} {config.version}: {config.description}\n')
        print(tabulate([(cmd.name, cmd.description) for cmd in seen.values()], tablefmt='plain'))
        print('\nRun "launcher.py help <command>" to see the flags of a command.')
        return config.ExitCodes.success

    try:
        cmd = COMMANDS[name]
    except KeyError:
        raise BadArgument(f'unknown command {name!r}', field='command') from None

    if cmd.flags is None:
        print(cmd.description)
    else:
        cmd.flags.parser.prog = f'launcher.py {cmd.name}'
        cmd.flags.parser.print_help()
    return config.ExitCodes.success


def main(argv: Sequence[str]) -> int:
    logging.basicConfig(
        level=config.log_level.upper(),
        format='%(asctime)s %(levelname)-7s %(name)s: %(message)s',
        datefmt='%H:%M:%S',
    )
    load_extensions()

    try:
        match list(argv):
            case [_] | [_, 'help' | '-h' | '--help']:
                return print_help()
            case [_, 'help', name]:
                return print_help(name)
            case [_, '--version' | '-V']:
                print(config.version)
                return config.ExitCodes.success
            case [_, name, *args] if name in COMMANDS:
                return COMMANDS[name].invoke(args)
            case [_, name, *_]:
                raise BadArgument(f'unknown command {name!r}; run "launcher.py help"', field='command')
    except TepaiError as exc:
        log.error('%s', exc)
        return exc.exit_code
    except KeyboardInterrupt:
        log.warning('Interrupted')
        return config.ExitCodes.numerical_failure
    except Exception as exc:
        log.critical('Uncaught error:\n%s', _report_error(exc))
        return config.ExitCodes.numerical_failure

    return print_help()


if __name__ == '__main__':
    sys.exit(main(sys.argv))
