from __future__ import annotations as _  # PyCharm thinking "annotations" is shadowing

import inspect
import math
import re
import types
import typing
from argparse import ArgumentParser as _ArgumentParser, Namespace
from dataclasses import dataclass, field
from typing import Annotated, Any, Callable, Generic, Iterator, Sequence, TYPE_CHECKING, Type, TypeVar

from app.core.helpers import BadArgument

if TYPE_CHECKING:
    FlagMetaT = TypeVar('FlagMetaT', bound='FlagMeta')

T = TypeVar('T')

__all__ = (
    'ArgumentParser',
    'Flag',
    'FlagMeta',
    'FlagNamespace',
    'Flags',
    'flag',
    'store_true',
    'angle',
)

_ANGLE_FACTOR_REGEX: re.Pattern[str] = re.compile(r'^(?:(?P<pi>pi|π)|(?P<base>[0-9.]+)\^(?P<exp>[+-]?[0-9]+)|(?P<num>[0-9.]+(?:e[+-]?[0-9]+)?))$')


class ArgumentParser(_ArgumentParser):
    """argparse parser that raises :class:`BadArgument` instead of exiting."""

    def error(self, message: str) -> None:
        raise BadArgument(message)


def _angle_factor(factor: str, argument: str) -> float:
    if not (match := _ANGLE_FACTOR_REGEX.match(factor)):
        raise BadArgument(f'invalid angle {argument!r}')

    if match.group('pi'):
        return math.pi
    if match.group('base'):
        return float(match.group('base')) ** int(match.group('exp'))
    return float(match.group('num'))


def angle(argument: str) -> float:
    """Converts angle literals such as ``0.0245``, ``pi/128``, ``3pi/4`` or ``2^-7*pi``."""
    text = argument.strip().lower().replace(' ', '')
    try:
        return float(text)
    except ValueError:
        pass

    numerator, _, denominator = text.partition('/')
    value = 1.0
    for part, power in ((numerator, 1), (denominator, -1)):
        if not part and power == -1:
            continue
        # "3pi" is shorthand for "3*pi"
        for factor in re.sub(r'(?<=[0-9.])(?=pi|π)', '*', part).split('*'):
            value *= _angle_factor(factor, argument) ** power

    return value


@dataclass
class Flag(Generic[T]):
    """A single command-line option of a :class:`Flags` group."""
    name: str | None = None
    short: str | None = None
    converter: Callable[[str], T] | Type[T] | None = None
    description: str | None = None
    required: bool = False
    default: T | None = None
    switch: bool = False
    many: bool = False
    dest: str = field(default='', repr=False)

    @property
    def option_strings(self) -> list[str]:
        options = ['--' + self.name]
        if self.short is not None:
            options.append('-' + self.short)
        return options

    @property
    def unset(self) -> T | bool | None:
        return False if self.switch else self.default

    def add_to(self, parser: ArgumentParser, /) -> None:
        if self.switch:
            parser.add_argument(*self.option_strings, dest=self.dest, action='store_true', help=self.description)
            return

        # None marks "not passed" so that defaults are applied after parsing
        parser.add_argument(
            *self.option_strings,
            nargs='*' if self.many else None,
            type=self.convert,
            dest=self.dest,
            required=self.required,
            default=None,
            help=self.description,
        )

    def convert(self, argument: str) -> T:
        if self.converter is None:
            return argument  # type: ignore
        try:
            return self.converter(argument)
        except BadArgument as exc:
            raise BadArgument(str(exc), field='--' + self.name) from exc
        except (TypeError, ValueError) as exc:
            raise BadArgument(f'could not convert {argument!r}: {exc}', field='--' + self.name) from exc

    def bind(self, attribute: str, annotation: Any) -> None:
        """Fills in the destination, option name and converter from the class attribute it was declared as."""
        self.dest = attribute
        if self.name is None:
            self.name = attribute.casefold().replace('_', '-')
        if self.switch:
            return

        if typing.get_origin(annotation) in (typing.Union, types.UnionType):
            # Optional[X] and X | None convert as X
            options = [arg for arg in typing.get_args(annotation) if arg is not type(None)]
            annotation = options[0] if len(options) == 1 else str

        if typing.get_origin(annotation) in (list, tuple, Sequence):
            self.many = True
            annotation = typing.get_args(annotation)[0]

        if annotation is Any or not isinstance(annotation, type) or annotation is type(None):
            annotation = str

        if self.converter is None:
            self.converter = annotation


def flag(
    *,
    name: str | None = None,
    short: str | None = None,
    converter: Callable[[str], T] | Type[T] | None = None,
    description: str | None = None,
    required: bool = False,
    default: T | None = None,
) -> Annotated[T, Flag[T]]:
    """Declares an option taking a value (or several, when annotated as a list)."""
    return Flag(
        name=name and name.casefold(),
        short=short,
        converter=converter,
        description=description,
        required=required,
        default=default,
    )


def store_true(*, name: str | None = None, short: str | None = None, description: str | None = None) -> Annotated[bool, Flag[bool]]:
    """Declares an on/off switch."""
    return Flag(name=name and name.casefold(), short=short, description=description, switch=True)  # type: ignore


def _declared_flags(cls: type, attrs: dict[str, Any]) -> dict[str, Flag[Any]]:
    # own annotations only; inherited flags are merged by the metaclass
    annotations = inspect.get_annotations(cls, eval_str=True)
    declared = {}

    for attribute in dict.fromkeys([*annotations, *attrs]):
        if attribute.startswith('_'):
            continue

        annotation = annotations.get(attribute, str)
        if typing.get_origin(annotation) is typing.ClassVar:
            continue

        value = attrs.get(attribute)
        if value is None and attribute in annotations:
            value = Flag()
        elif not isinstance(value, Flag):
            continue

        value.bind(attribute, annotation)
        declared[attribute] = value

    return declared


class FlagMeta(type, Generic[T]):
    if TYPE_CHECKING:
        _flags: dict[str, Flag[T]]
        _parser: ArgumentParser

    def __new__(mcs: Type[FlagMetaT], name: str, bases: tuple[Type[Any], ...], attrs: dict[str, Any]) -> FlagMetaT:
        cls = super().__new__(mcs, name, bases, attrs)
        cls.__doc__ = inspect.cleandoc(inspect.getdoc(cls) or '')

        merged = {}
        for base in reversed(cls.__mro__[1:]):
            merged.update(getattr(base, '_flags', {}))
        merged.update(_declared_flags(cls, attrs))

        cls._flags = merged
        cls._parser = ArgumentParser(prog=attrs.get('__prog__'), description=cls.__doc__)
        for option in merged.values():
            option.add_to(cls._parser)

        return cls

    @property
    def flags(cls) -> dict[str, Flag[T]]:
        return cls._flags

    @property
    def parser(cls) -> ArgumentParser:
        return cls._parser

    @property
    def default(cls) -> FlagNamespace[T]:
        """Every flag at its default; raises ValueError if any flag is required."""
        if any(option.required for option in cls._flags.values()):
            raise ValueError(f'{cls.__name__} has required flags and no default namespace')

        return FlagNamespace(Namespace(**{option.dest: option.unset for option in cls._flags.values()}))


class FlagNamespace(Generic[T]):
    """Parsed flags, read as attributes."""

    def __init__(self, ns: Namespace) -> None:
        self.__argparse_namespace__ = ns

    def __getattr__(self, item: str) -> T:
        return getattr(self.__argparse_namespace__, item)

    def __iter__(self) -> Iterator[tuple[str, T]]:
        yield from vars(self.__argparse_namespace__).items()

    def __repr__(self) -> str:
        return repr(self.__argparse_namespace__)


class Flags(metaclass=FlagMeta):  # type: FlagMeta[T]
    """Base class for all flag groups."""

    @classmethod
    def parse(cls, argv: Sequence[str]) -> FlagNamespace[T]:
        ns = cls.parser.parse_args(list(argv))
        for dest, option in cls.flags.items():
            if getattr(ns, dest, None) is None:
                setattr(ns, dest, option.unset)

        return FlagNamespace(ns)
