from __future__ import annotations

import math
from logging import getLogger
from typing import Any, TYPE_CHECKING

import numpy as np

from app.core.flags import angle, flag
from app.core.helpers import BadArgument, TepaiError, command
from app.database import write_csv
from app.extensions import ConfigFlags, default_run_dir, load_run_config
from app.features.analytics import nu_expected_finite, nu_infinity, overhead_asymptotic, shots_bound
from app.features.sampler import PAISampler, exact_overhead
from app.util.common import Streams, derive_seed
from config import ExitCodes

if TYPE_CHECKING:
    from app.core.flags import FlagNamespace
    from app.core.models import RunConfig

log = getLogger(__name__)

AXES: tuple[str, ...] = ('T', 'delta', 'N')
COLUMNS: tuple[str, ...] = (
    'T', 'N', 'delta', 'nu_inf', 'nu_expected', 'nu_std', 'overhead', 'overhead_asymptotic', 'shots_bound',
)
EMPIRICAL_COLUMNS: tuple[str, ...] = ('nu_mean', 'nu_var', 'draws')


class SweepFlags(ConfigFlags):
    """Tabulates gate-count and overhead predictions along one parameter axis."""

    axis: str = flag(short='a', required=True, description='Axis to sweep: T, delta or N.')
    values: list[float] = flag(short='v', converter=angle, description='Values along the axis, e.g. pi/2 pi/4.')
    epsilon: float = flag(short='e', default=0.05, description='Target precision for the shot bound column.')
    empirical: int = flag(short='k', default=0, description='Sample this many circuits per row for nu_mean/nu_var.')


def _point(cfg: RunConfig, axis: str, value: float) -> RunConfig:
    if axis == 'N':
        if value != int(value):
            raise BadArgument(f'N values must be integers, got {value}', field='values')
        return cfg.with_overrides(N=int(value))
    if axis == 'delta':
        return cfg.with_overrides(delta=value)
    return cfg.with_overrides(T=value)


def sweep_row(cfg: RunConfig, epsilon: float, empirical: int = 0) -> dict[str, Any]:
    template = cfg.template()
    delta = cfg.resolve_delta()
    c_norm_T = cfg.c_norm_avg() * cfg.T

    overhead = exact_overhead(template, delta)
    finite = nu_expected_finite(template, delta)
    row = {
        'T': cfg.T,
        'N': cfg.N,
        'delta': delta,
        'nu_inf': nu_infinity(c_norm_T, delta),
        'nu_expected': finite.mean,
        'nu_std': math.sqrt(finite.variance),
        'overhead': overhead,
        'overhead_asymptotic': overhead_asymptotic(c_norm_T, delta),
        'shots_bound': shots_bound(overhead, epsilon),
    }

    if empirical:
        sampler = PAISampler(template, delta)
        counts = np.array([sampler.sample(derive_seed(cfg.seed, Streams.sampling, i)).nu for i in range(empirical)])
        row |= {
            'nu_mean': float(counts.mean()),
            'nu_var': float(counts.var(ddof=1)) if empirical > 1 else 0.0,
            'draws': empirical,
        }
    return row


@command(flags=SweepFlags)
def cmd_sweep(flags: FlagNamespace[Any]) -> int:
    """Sweeps T, delta or N and writes one CSV row per value."""
    if flags.axis not in AXES:
        raise BadArgument(f'must be one of {", ".join(AXES)}, got {flags.axis!r}', field='axis')
    if flags.empirical < 0:
        raise BadArgument(f'must be non-negative, got {flags.empirical}', field='empirical')

    cfg = load_run_config(flags)
    values = flags.values or []

    rows = []
    for value in values:
        point = _point(cfg, flags.axis, value)
        try:
            rows.append(sweep_row(point, flags.epsilon, flags.empirical))
        except TepaiError as exc:
            log.warning('Skipping %s=%g: %s', flags.axis, value, exc)

    columns = COLUMNS + EMPIRICAL_COLUMNS if flags.empirical else COLUMNS
    path = cfg.output or default_run_dir(cfg, f'sweep-{flags.axis}') / 'sweep.csv'
    path = write_csv(path, columns, rows)

    log.info('Wrote %d sweep row(s) to %s', len(rows), path)
    print(path)
    return ExitCodes.success
