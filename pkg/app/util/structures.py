from __future__ import annotations

import math
from time import perf_counter
from typing import Iterable, TYPE_CHECKING

if TYPE_CHECKING:
    from typing_extensions import Self

__all__ = (
    'Timer',
    'ShotAccumulator',
)


class Timer:
    """Context manager measuring wall-clock time with :func:`time.perf_counter`."""

    def __init__(self) -> None:
        self.start_time: float = 0.0
        self.end_time: float | None = None

    def __enter__(self) -> Self:
        self.start_time = perf_counter()
        return self

    def __exit__(self, _type, _val, _tb) -> None:
        self.end_time = perf_counter()

    @property
    def time(self) -> float:
        """Elapsed seconds of the finished block."""
        if self.end_time is None:
            raise RuntimeError('timer is still running')
        return self.end_time - self.start_time


class ShotAccumulator:
    """Mergeable collection of per-shot values.

    Every value is kept, so memory grows with the shot count. Sums are taken with :func:`math.fsum`, which is
    correctly rounded and therefore independent of the order in which partial accumulators are merged.
    """

    __slots__ = ('_values',)

    def __init__(self, values: Iterable[float] = ()) -> None:
        self._values: list[float] = [float(v) for v in values]

    def add(self, value: float) -> None:
        self._values.append(float(value))

    def merge(self, other: ShotAccumulator) -> Self:
        self._values.extend(other._values)
        return self

    @property
    def count(self) -> int:
        return len(self._values)

    @property
    def total(self) -> float:
        return math.fsum(self._values)

    @property
    def mean(self) -> float:
        if not self._values:
            raise RuntimeError('no shots have been accumulated')
        return self.total / self.count

    @property
    def variance(self) -> float:
        """Unbiased sample variance; 0 for fewer than two shots."""
        if self.count < 2:
            return 0.0

        mean = self.mean
        return math.fsum((v - mean) ** 2 for v in self._values) / (self.count - 1)

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance / self.count) if self.count else 0.0

    def __repr__(self) -> str:
        return f'<ShotAccumulator count={self.count}>'
