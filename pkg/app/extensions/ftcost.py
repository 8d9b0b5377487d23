from __future__ import annotations

import math
from logging import getLogger
from pathlib import Path
from typing import Any, TYPE_CHECKING

import config
from app.core.flags import Flags, angle, flag
from app.core.helpers import BadArgument, command
from app.data.presets import CostParameters, SPIN_RING_100, SPIN_RING_100_REFERENCE
from app.database import dump_json
from app.features.analytics import nu_infinity
from app.features.ftcost import HierarchyAngle, catalyst_tower_sweep, format_reports, table1
from config import ExitCodes

if TYPE_CHECKING:
    from app.core.flags import FlagNamespace

log = getLogger(__name__)


class FTCostFlags(Flags):
    """Fault-tolerant T-gate and qubit costs of TE-PAI against direct synthesis and Trotterization.

    Defaults describe the 100-qubit spin ring at T=1 with delta=pi/256.
    """

    c_norm_avg: float = flag(short='c', default=SPIN_RING_100.c_norm_avg, description='Time-averaged ||c||_1.')
    T: float = flag(name='time', short='T', default=SPIN_RING_100.T, description='Total evolution time.')
    delta: float = flag(short='d', converter=angle, default=SPIN_RING_100.delta, description='Fixed angle pi/2^(l-1).')
    l0: int = flag(description='Hierarchy level of the fixed angle; overrides --delta.')
    N_trotter: int = flag(name='trotter-steps', default=SPIN_RING_100.N_trotter, description='Trotter steps.')
    L: int = flag(name='terms', short='L', default=SPIN_RING_100.L, description='Hamiltonian terms per step.')
    eps_pai: float = flag(default=SPIN_RING_100.eps_pai, description='Synthesis precision for the single TE-PAI angle.')
    eps_trotter: float = flag(default=SPIN_RING_100.eps_trotter, description='Per-rotation synthesis precision.')
    n3: int = flag(default=1, description='T states spent per level-3 rotation in Hamming phasing.')
    sweep: list[int] = flag(description='Also tabulate catalyst towers for these top levels.')
    output: str = flag(description='Write the reports as JSON to this path.')


def _parameters(flags: FlagNamespace[Any]) -> CostParameters:
    delta = flags.delta
    if flags.l0 is not None:
        delta = HierarchyAngle.from_level(flags.l0).angle

    return CostParameters(
        c_norm_avg=flags.c_norm_avg,
        T=flags.T,
        delta=delta,
        N_trotter=flags.N_trotter,
        L=flags.L,
        eps_pai=flags.eps_pai,
        eps_trotter=flags.eps_trotter,
    )


def _matches_reference(params: CostParameters) -> bool:
    return all(math.isclose(a, b, rel_tol=1e-12) for a, b in zip(params, SPIN_RING_100))


@command(flags=FTCostFlags)
def cmd_ftcost(flags: FlagNamespace[Any]) -> int:
    """Prints the fault-tolerant cost table."""
    params = _parameters(flags)
    if params.c_norm_avg <= 0 or params.T <= 0:
        raise BadArgument('||c||_1 and T must be positive', field='c-norm-avg')

    references = SPIN_RING_100_REFERENCE if _matches_reference(params) and flags.n3 == 1 else None
    reports = table1(
        params.c_norm_avg,
        params.T,
        params.delta,
        params.N_trotter,
        params.L,
        eps_pai=params.eps_pai,
        eps_trotter=params.eps_trotter,
        n3=flags.n3,
        references=references,
    )
    print(format_reports(reports))

    towers = []
    if flags.sweep:
        K = round(nu_infinity(params.c_norm_avg * params.T, params.delta))
        towers = catalyst_tower_sweep(K, flags.sweep)
        print()
        print(format_reports(towers))

    path = Path(flags.output or Path(config.output_dir) / 'ftcost.json')

    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_json({
        'parameters': params._asdict() | {'n3': flags.n3},
        'reports': [report.to_json() for report in reports],
        'towers': [report.to_json() for report in towers],
    }) + '\n')
    log.info('Wrote cost reports to %s', path)
    return ExitCodes.success
