from __future__ import annotations

import math
from typing import Any, Callable, ClassVar, Final, TYPE_CHECKING

from config import ExitCodes

if TYPE_CHECKING:
    from app.core.flags import FlagMeta
    from app.core.models import Command

__all__ = (
    'TepaiError',
    'BadArgument',
    'DimensionMismatch',
    'TermFileError',
    'AnglePreconditionError',
    'UnsupportedConfiguration',
    'HierarchyError',
    'ResourceLimitError',
    'NumericalFailure',
    'COMMANDS',
    'command',
    'ceil_tolerant',
)

# Relative slack when ceiling a float that should be an exact integer (e.g. 199999.99999999997)
CEIL_TOLERANCE: Final[float] = 1e-9


class TepaiError(Exception):
    """Base class for every domain error raised by this package."""

    exit_code: ClassVar[int] = ExitCodes.validation

    def __init__(self, message: str, **extra: Any) -> None:
        super().__init__(message)
        self.extra: dict[str, Any] = extra


class BadArgument(TepaiError):
    """A command line flag or a configuration field is invalid.

    The message always starts with the dotted path of the offending field, if there is one.
    """

    def __init__(self, message: str, *, field: str | None = None) -> None:
        super().__init__(f'{field}: {message}' if field else message, field=field)
        self.field: str | None = field


class DimensionMismatch(TepaiError):
    pass


class TermFileError(TepaiError):
    def __init__(self, message: str, *, path: str, line: int | None = None) -> None:
        where = f'{path}:{line}' if line is not None else path
        super().__init__(f'{where}: {message}', path=path, line=line)
        self.line: int | None = line


class AnglePreconditionError(TepaiError):
    def __init__(self, theta: float, delta: float) -> None:
        super().__init__(
            f'rotation angle |theta|={theta:.6g} exceeds delta={delta:.6g}; increase N or delta',
            theta=theta,
            delta=delta,
        )


class UnsupportedConfiguration(TepaiError):
    pass


class HierarchyError(TepaiError):
    pass


class ResourceLimitError(TepaiError):
    exit_code = ExitCodes.resource_limit


class NumericalFailure(TepaiError):
    exit_code = ExitCodes.numerical_failure


def ceil_tolerant(value: float, /) -> int:
    """Ceiling that forgives floating-point noise just above an integer."""
    return math.ceil(value - CEIL_TOLERANCE * max(1.0, abs(value)))


# name: command
COMMANDS: dict[str, Command] = {}


def command(
    name: str | None = None,
    *,
    aliases: tuple[str, ...] = (),
    flags: FlagMeta | None = None,
) -> Callable[[Callable[..., int]], Command]:
    """Registers a launcher subcommand.

    The decorated function receives the parsed flag namespace and returns an exit code.
    """
    from app.core.models import Command

    def decorator(func: Callable[..., int]) -> Command:
        cmd = Command(name=name or func.__name__.removeprefix('cmd_'), callback=func, aliases=aliases, flags=flags)
        for key in (cmd.name, *aliases):
            COMMANDS[key] = cmd
        return cmd

    return decorator
