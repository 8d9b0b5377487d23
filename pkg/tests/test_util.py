import pytest

from app.util.common import Streams, derive_seed, format_count, humanize_duration, humanize_list
from app.util.structures import ShotAccumulator, Timer


@pytest.mark.parametrize(
    'items, expected',
    [
        ([], ''),
        (['a'], 'a'),
        (['a', 'b'], 'a or b'),
        (['a', 'b', 'c'], 'a, b, or c'),
    ],
)
def test_humanize_list(items, expected):
    assert humanize_list(items, joiner='or') == expected


@pytest.mark.parametrize(
    'seconds, expected',
    [
        (0.0123, '12.3 ms'),
        (4.5, '4.5 s'),
        (75.2, '1 min 15 s'),
        (7500, '2 h 5 min'),
    ],
)
def test_humanize_duration(seconds, expected):
    assert humanize_duration(seconds) == expected


def test_format_count():
    assert format_count(2438336) == '2,438,336'
    assert format_count(1.2e10) == '1.2e+10'


def test_seed_streams_are_distinct():
    assert derive_seed(7, Streams.sampling, 3) != derive_seed(7, Streams.measurement, 3)
    assert derive_seed(7, Streams.trotter, 3) == (7, 2, 3)


def test_timer():
    with Timer() as timer:
        pass
    assert timer.time >= 0

    with pytest.raises(RuntimeError):
        _ = Timer().time


def test_shot_accumulator_merge_is_order_independent():
    values = [0.1, -1.0, 1e-17, 3.0, -2.1]
    left = ShotAccumulator(values[:2]).merge(ShotAccumulator(values[2:]))
    right = ShotAccumulator(values[3:]).merge(ShotAccumulator(values[:3]))
    assert left.count == right.count == 5
    assert left.total == right.total
    assert left.mean == pytest.approx(0.0)
    assert left.std_error > 0
    assert ShotAccumulator().std_error == 0.0
    assert ShotAccumulator([1.0]).variance == 0.0


def test_shot_accumulator_variance_survives_large_offsets():
    shots = ShotAccumulator([1e9 + 1, 1e9 + 2])
    shots.add(1e9 + 3)
    assert shots.mean == 1e9 + 2
    assert shots.variance == 1.0
