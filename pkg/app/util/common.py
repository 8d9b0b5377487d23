from __future__ import annotations

from typing import Any, Iterable

__all__ = (
    'Streams',
    'derive_seed',
    'humanize_list',
    'humanize_duration',
    'format_count',
)


class Streams:
    """Independent random streams derived from one master seed."""
    sampling = 0
    measurement = 1
    trotter = 2


def derive_seed(master_seed: int, stream: int, index: int) -> tuple[int, int, int]:
    """Seed tuple for ``numpy.random.default_rng``; shot ``index`` gets the same stream on every worker."""
    return int(master_seed), int(stream), int(index)


def humanize_list(items: Iterable[Any], *, joiner: str = 'and') -> str:
    """``['a', 'b', 'c'] -> 'a, b, and c'``"""
    *head, last = [str(item) for item in items] or ['']
    if not head:
        return last
    if len(head) == 1:
        return f'{head[0]} {joiner} {last}'
    return f'{", ".join(head)}, {joiner} {last}'


def humanize_duration(seconds: float, /) -> str:
    """Wall-clock time of a run: ``0.0123 -> '12.3 ms'``, ``75.2 -> '1 min 15 s'``."""
    if seconds < 1:
        return f'{seconds * 1e3:.3g} ms'
    if seconds < 60:
        return f'{seconds:.3g} s'

    minutes, secs = divmod(round(seconds), 60)
    hours, minutes = divmod(minutes, 60)
    if hours:
        return f'{hours} h {minutes} min'
    return f'{minutes} min {secs} s'


def format_count(value: float, /) -> str:
    """``2438336 -> '2,438,336'``; counts from a billion on as ``'1.2e+10'``."""
    if value >= 1e9:
        return f'{value:.3g}'
    return f'{round(value):,}'
