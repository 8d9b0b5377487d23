from __future__ import annotations

from logging import getLogger
from pathlib import Path
from typing import Any, TYPE_CHECKING

from tabulate import tabulate

from app.core.flags import flag
from app.core.helpers import command
from app.database import dump_json
from app.extensions import ConfigFlags, default_run_dir, load_run_config
from app.features.analytics import overhead_asymptotic
from app.features.simulator import exact_evolution, expectation, run_trotter_reference
from app.features.trotter import (
    TrotterErrorBound,
    choose_N,
    classical_cost,
    spin_ring_commutator_bound,
    trotter_error_bound,
)
from config import ExitCodes

if TYPE_CHECKING:
    from app.core.flags import FlagNamespace

log = getLogger(__name__)


class ExactFlags(ConfigFlags):
    """Dense reference values for a configuration: the exact expectation and the product-formula error."""

    epsilon: float = flag(short='e', default=1e-3, description='Target Trotter error for the suggested step count.')
    bound: str = flag(default='auto', description='Commutator norm: auto, dense or bound.')


@command(flags=ExactFlags)
def cmd_exact(flags: FlagNamespace[Any]) -> int:
    """Computes <O>(T) exactly and bounds the Trotter error of constant Hamiltonians and spin rings."""
    cfg = load_run_config(flags)
    h, observable, state = cfg.hamiltonian, cfg.pauli_observable(), cfg.state()

    exact = expectation(exact_evolution(h, cfg.T, state), observable)
    trotter = run_trotter_reference(cfg.template(), observable, state).mean
    result: dict[str, Any] = {
        'config': cfg.to_json(),
        'exact': exact,
        'trotter': trotter,
        'trotter_deviation': abs(trotter - exact),
    }

    bound = None
    if cfg.T > 0 and not h.is_time_dependent:
        bound = trotter_error_bound(h, cfg.T, cfg.N, mode=flags.bound)
    elif cfg.T > 0 and cfg.model.kind == 'spin_ring':
        bound = TrotterErrorBound.from_norm(cfg.T, cfg.N, spin_ring_commutator_bound(h))

    if bound is not None:
        result |= {
            'trotter_error_bound': bound.epsilon_T,
            'commutator_norm_sq': bound.commutator_norm_sq,
            'simple_bound': bound.simple_bound,
            'epsilon': flags.epsilon,
            'suggested_N': choose_N(h, cfg.T, flags.epsilon, commutator_norm_sq=bound.commutator_norm_sq),
        }
        if bound.epsilon_T < result['trotter_deviation']:
            log.warning('Trotter deviation %.3g exceeds its bound %.3g', result['trotter_deviation'], bound.epsilon_T)

    if cfg.T > 0:
        overhead = overhead_asymptotic(cfg.c_norm_avg() * cfg.T, cfg.resolve_delta())
        result['classical_draws'] = classical_cost(h, cfg.T, flags.epsilon, 1.0, overhead)

    path = Path(cfg.output) if cfg.output else default_run_dir(cfg, 'exact') / 'exact.json'
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_json(result) + '\n')

    print(tabulate([(k, v) for k, v in result.items() if k != 'config'], tablefmt='plain', floatfmt='.8g'))
    return ExitCodes.success
