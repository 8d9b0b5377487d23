from __future__ import annotations

from logging import getLogger
from typing import Any, TYPE_CHECKING

from tabulate import tabulate

import config
from app.core.flags import angle, flag, store_true
from app.core.helpers import BadArgument, command
from app.database import write_csv
from app.extensions import ConfigFlags, default_run_dir, load_run_config
from app.features.simulator import exact_evolution, expectation, run_estimator, run_trotter_reference
from app.features.trotter import make_template
from config import ExitCodes

if TYPE_CHECKING:
    from app.core.flags import FlagNamespace
    from app.core.models import RunConfig

log = getLogger(__name__)


class TrajectoryFlags(ConfigFlags):
    """Estimates <O>(t) on a grid of evolution times."""

    times: list[float] = flag(short='t', converter=angle, required=True, description='Strictly increasing times.')
    trotter_steps: list[int] = flag(description='Also run the product formula with these step counts.')
    exact: bool = store_true(short='x', description='Add the exact expectation (dense, at most 12 qubits).')


def check_times(times: list[float]) -> None:
    if not times:
        raise BadArgument('at least one time is required', field='times')
    if times[0] < 0:
        raise BadArgument(f'times must be non-negative, got {times[0]}', field='times')
    if any(b <= a for a, b in zip(times, times[1:])):
        raise BadArgument('times must be strictly increasing', field='times')


def trajectory_row(cfg: RunConfig, t: float, trotter_steps: list[int], exact: bool) -> dict[str, Any]:
    point = cfg.with_overrides(T=t)
    observable, state = point.pauli_observable(), point.state()

    result = run_estimator(
        point.template(),
        point.resolve_delta(),
        observable,
        state,
        point.shots,
        point.mode,
        point.noise,
        point.seed,
        workers=point.workers,
    )
    row = {'T': t, 'mean': result.mean, 'std_error': result.std_error, 'nu_mean': result.nu_mean}

    for steps in trotter_steps:
        template = make_template(point.hamiltonian, t, steps) if t > 0 else point.template()
        reference = run_trotter_reference(
            template, observable, state, point.noise, point.shots, seed=point.seed, workers=point.workers,
        )
        row[f'trotter_{steps}'] = reference.mean

    if exact:
        row['exact'] = expectation(exact_evolution(point.hamiltonian, t, state), observable)

    return row


@command(flags=TrajectoryFlags)
def cmd_trajectory(flags: FlagNamespace[Any]) -> int:
    """Runs TE-PAI at every time on the grid and writes the resulting curve as CSV."""
    times = flags.times or []
    check_times(times)

    trotter_steps = flags.trotter_steps or []
    if any(steps < 1 for steps in trotter_steps):
        raise BadArgument('step counts must be at least 1', field='trotter-steps')

    cfg = load_run_config(flags)
    if cfg.shots == 0:
        raise BadArgument('a trajectory needs at least one shot per time', field='shots')
    if flags.exact and cfg.hamiltonian.n_qubits > config.dense_limit:
        raise BadArgument(
            f'the exact curve needs at most {config.dense_limit} qubits, the model has {cfg.hamiltonian.n_qubits}',
            field='exact',
        )

    rows = []
    for t in times:
        rows.append(row := trajectory_row(cfg, t, trotter_steps, flags.exact))
        log.info('T=%g: %.6f ± %.6f', t, row['mean'], row['std_error'])

    columns = ['T', 'mean', 'std_error', 'nu_mean', *(f'trotter_{steps}' for steps in trotter_steps)]
    if flags.exact:
        columns.append('exact')

    path = cfg.output or default_run_dir(cfg, 'trajectory') / 'trajectory.csv'
    path = write_csv(path, columns, rows)

    print(tabulate(rows, headers='keys', floatfmt='.6f'))
    print(path)
    return ExitCodes.success
