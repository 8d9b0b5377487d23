from __future__ import annotations

from logging import getLogger
from typing import Any, TYPE_CHECKING

from tabulate import tabulate

from app.core.flags import flag
from app.core.helpers import BadArgument, command, ceil_tolerant
from app.database import RunStore
from app.extensions import ConfigFlags, default_run_dir, load_run_config
from app.features.analytics import nu_infinity, qdrift_rotation_count
from app.features.simulator import run_qdrift_estimator
from app.util.structures import Timer
from config import ExitCodes

if TYPE_CHECKING:
    from app.core.flags import FlagNamespace

log = getLogger(__name__)


class QDriftFlags(ConfigFlags):
    """Runs the qDRIFT baseline on the same model and observable as a TE-PAI run."""

    rotations: int = flag(short='r', description='Rotations per circuit; defaults to --steps.')
    epsilon: float = flag(
        short='e',
        description='Pick the rotation count 2 (||c||_1 T)^2 / epsilon instead of --rotations.',
    )


@command(flags=QDriftFlags)
def cmd_qdrift(flags: FlagNamespace[Any]) -> int:
    """Estimates <O> with qDRIFT and compares its gate count with TE-PAI."""
    if flags.rotations is not None and flags.epsilon is not None:
        raise BadArgument('--rotations and --epsilon are mutually exclusive', field='rotations')

    cfg = load_run_config(flags)
    cfg.hamiltonian.require_constant('qDRIFT sampling')
    if cfg.T == 0:
        raise BadArgument('qDRIFT needs a positive evolution time', field='T')

    c_norm_T = cfg.c_norm_avg() * cfg.T
    if flags.epsilon is not None:
        cfg = cfg.with_overrides(N=max(1, ceil_tolerant(qdrift_rotation_count(c_norm_T, flags.epsilon))))
    elif flags.rotations is not None:
        cfg = cfg.with_overrides(N=flags.rotations)

    header = {
        'config': cfg.to_json(),
        'method': 'qdrift',
        'rotations': cfg.N,
        'tepai_nu_inf': nu_infinity(c_norm_T, cfg.resolve_delta()),
    }
    store = RunStore(default_run_dir(cfg, 'qdrift'))
    store.write_header(header)
    if cfg.shots == 0:
        return ExitCodes.success

    with Timer() as timer:
        result = run_qdrift_estimator(
            cfg.template(),
            cfg.pauli_observable(),
            cfg.state(),
            cfg.shots,
            cfg.mode,
            cfg.noise,
            cfg.seed,
            workers=cfg.workers,
        )

    store.append_shots(result.records)
    store.write_summary(result)
    store.write_timing(timer.time, cfg.workers or 0)

    print(tabulate([
        ('estimate', f'{result.mean:.6f} ± {result.std_error:.6f}'),
        ('rotations per circuit', cfg.N),
        ('TE-PAI gates (nu_inf)', f'{header["tepai_nu_inf"]:.1f}'),
        ('artifacts', str(store.directory)),
    ], tablefmt='plain'))
    return ExitCodes.success
