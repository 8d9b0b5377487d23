from __future__ import annotations

import math
from logging import getLogger
from typing import Any, TYPE_CHECKING

from tabulate import tabulate

from app.core.flags import flag, store_true
from app.core.helpers import command
from app.database import RunStore
from app.extensions import ConfigFlags, default_run_dir, load_run_config
from app.features.analytics import nu_expected_finite, nu_infinity, overhead_asymptotic, shots_bound
from app.features.sampler import exact_overhead
from app.features.simulator import run_estimator, run_trotter_reference
from app.features.trotter import step_choice
from app.util.structures import Timer
from config import ExitCodes

if TYPE_CHECKING:
    from app.core.flags import FlagNamespace
    from app.core.models import RunConfig

log = getLogger(__name__)


class RunFlags(ConfigFlags):
    """Samples TE-PAI circuits, simulates them and writes the run artifacts."""

    epsilon: float = flag(short='e', default=0.05, description='Target precision for the reported shot bound.')
    reference: bool = store_true(short='r', description='Also run the dense product formula once for comparison.')
    record_gates: bool = store_true(description='Store every gate of every circuit in the shot log.')


def build_header(cfg: RunConfig, epsilon: float) -> dict[str, Any]:
    """Config echo plus the closed-form and exact predictions for this run."""
    template = cfg.template()
    delta = cfg.resolve_delta()
    c_norm_T = cfg.c_norm_avg() * cfg.T

    overhead = exact_overhead(template, delta)
    finite = nu_expected_finite(template, delta)
    choice = step_choice(cfg.hamiltonian, cfg.T, epsilon)
    return {
        'config': cfg.to_json(),
        'hamiltonian': {'label': cfg.hamiltonian.label, 'n_qubits': cfg.hamiltonian.n_qubits, 'L': cfg.hamiltonian.L},
        'delta': delta,
        'c_norm_avg': cfg.c_norm_avg(),
        'abs_angle_sum': template.abs_angle_sum(),
        'nu_inf': nu_infinity(c_norm_T, delta),
        'nu_expected': finite.mean,
        'nu_variance': finite.variance,
        'overhead': overhead,
        'overhead_asymptotic': overhead_asymptotic(c_norm_T, delta),
        'epsilon': epsilon,
        'shots_bound': shots_bound(overhead, epsilon),
        'suggested_N': choice.N,
        'suggested_N_heuristic': choice.heuristic,
    }


@command(flags=RunFlags)
def cmd_run(flags: FlagNamespace[Any]) -> int:
    """Runs one TE-PAI experiment."""
    cfg = load_run_config(flags)
    if flags.record_gates:
        cfg = cfg.with_overrides(record_gates=True)

    header = build_header(cfg, flags.epsilon)
    store = RunStore(default_run_dir(cfg, 'run'))
    store.write_header(header)
    log.info(
        'delta=%.6g nu_inf=%.1f overhead=%.4f shots bound=%d at epsilon=%g',
        header['delta'], header['nu_inf'], header['overhead'], header['shots_bound'], flags.epsilon,
    )

    if cfg.shots == 0:
        log.info('No shots requested, only the header was written')
        return ExitCodes.success

    observable, state = cfg.pauli_observable(), cfg.state()
    with Timer() as timer:
        result = run_estimator(
            cfg.template(),
            header['delta'],
            observable,
            state,
            cfg.shots,
            cfg.mode,
            cfg.noise,
            cfg.seed,
            workers=cfg.workers,
            record_gates=cfg.record_gates,
        )

    extra = {}
    if flags.reference:
        reference = run_trotter_reference(cfg.template(), observable, state)
        extra['trotter_reference'] = reference.mean

    store.append_shots(result.records)
    store.write_summary(result, **extra)
    store.write_timing(timer.time, cfg.workers or 0)

    rows = [
        ('estimate', f'{result.mean:.6f} ± {result.std_error:.6f}'),
        ('shots', result.shots),
        ('mean gates', f'{result.nu_mean:.1f} (nu_inf {header["nu_inf"]:.1f})'),
        ('overhead', f'{header["overhead"]:.4f}'),
    ]
    if 'trotter_reference' in extra:
        sigma = abs(result.mean - extra['trotter_reference']) / result.std_error if result.std_error else math.inf
        rows.append(('trotter reference', f'{extra["trotter_reference"]:.6f} ({sigma:.2f} sigma)'))
    rows.append(('artifacts', str(store.directory)))

    print(tabulate(rows, tablefmt='plain'))
    return ExitCodes.success
