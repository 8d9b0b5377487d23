"""Fault-tolerant T-gate and qubit accounting for fixed-angle rotations.

Four ways of paying for ``K`` rotations of angle ``delta`` are compared: synthesizing every continuous
Trotter angle, synthesizing every fixed-angle rotation, Hamming-weight phasing of batches, and catalyst
towers built from controlled-T circuits. Everything here is integer arithmetic on Python ints except
the per-rotation ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from logging import getLogger
from typing import Any, Final, Iterable, Literal, Mapping, NamedTuple, TypeAlias, TYPE_CHECKING

from tabulate import tabulate

from app.core.helpers import BadArgument, HierarchyError
from app.features.analytics import nu_infinity
from app.util.common import format_count

if TYPE_CHECKING:
    from typing_extensions import Self

__all__ = (
    'HierarchyAngle',
    'ResourceReport',
    'TowerLayout',
    'hierarchy_level',
    'rus_expected_trials',
    'rus_worst_case_trials',
    'synthesis_t_count',
    'hamming_cost',
    'direct_synthesis_report',
    'trotter_direct_report',
    'hamming_phasing_report',
    'catalyst_tower_layout',
    'catalyst_tower_report',
    'catalyst_tower_sweep',
    'table1',
    'format_reports',
)

log = getLogger(__name__)

Method: TypeAlias = Literal['trotter_direct', 'direct_synthesis', 'hamming_phasing', 'catalyst_tower']
SynthesisMethod: TypeAlias = Literal['deterministic', 'repeat_until_success']

# (slope, intercept) of the average T-count per synthesized rotation in log2(1/epsilon)
SYNTHESIS_FITS: Final[dict[str, tuple[float, float]]] = {
    'deterministic': (3.02, 1.77),
    'repeat_until_success': (1.03, 5.75),
}
# Lowest level whose angle is not Clifford: delta_3 = pi/4 is the T gate
MIN_LEVEL: Final[int] = 3
# Level whose rotations are stored first by the phasing and tower schemes
BASE_LEVEL: Final[int] = 4
# T gates consumed by one controlled-T (CT) circuit
T_PER_CT: Final[int] = 4


class HierarchyAngle(NamedTuple):
    level: int
    angle: float

    @classmethod
    def from_level(cls, level: int) -> Self:
        if level < MIN_LEVEL:
            raise HierarchyError(f'hierarchy levels start at {MIN_LEVEL}, got {level}')
        return cls(level, math.pi * 2.0 ** (1 - level))


def hierarchy_level(delta: float, *, tolerance: float = 1e-9) -> HierarchyAngle:
    """Returns the level ``l`` with ``delta = pi * 2^(1 - l)``."""
    if not 0 < delta < math.pi:
        raise HierarchyError(f'delta must lie in (0, pi), got {delta}')

    exact = 1.0 - math.log2(delta / math.pi)
    level = max(MIN_LEVEL, round(exact))
    nearest = HierarchyAngle.from_level(level)

    if abs(nearest.angle - delta) > tolerance * nearest.angle:
        raise HierarchyError(
            f'delta={delta:.10g} is not of the form pi*2^(1-l); the nearest is '
            f'delta_{nearest.level} = pi/{2 ** (nearest.level - 1)} = {nearest.angle:.10g}',
            nearest_level=nearest.level,
        )
    return nearest


def rus_expected_trials(terms: int | None = None) -> float:
    """Expected trials of a repeat-until-success chain, ``sum_i i / 2^i = 2``.

    Each trial succeeds with probability 1/2. Passing ``terms`` returns the truncated partial sum.
    """
    if terms is None:
        return 2.0
    if terms < 0:
        raise BadArgument(f'terms must be non-negative, got {terms}')
    return math.fsum(i / 2.0 ** i for i in range(1, terms + 1))


def rus_worst_case_trials(level: int) -> int:
    """Failures before a level-``l`` chain is forced to succeed: it bottoms out at the T gate."""
    return HierarchyAngle.from_level(level).level - MIN_LEVEL


def synthesis_t_count(epsilon: float, method: SynthesisMethod = 'deterministic') -> int:
    """Average T gates to synthesize one arbitrary rotation to precision epsilon.

    The fit is rounded to the nearest integer rather than up. This gives 62 at ``epsilon = 1e-6`` and 82 at
    ``1e-8`` for deterministic synthesis (a ceiling would give 83), and 26 for repeat-until-success at ``1e-6``.
    """
    if not 0 < epsilon < 1:
        raise BadArgument(f'synthesis precision must lie in (0, 1), got {epsilon}')
    if method not in SYNTHESIS_FITS:
        raise BadArgument(f'unknown synthesis method {method!r}')

    slope, intercept = SYNTHESIS_FITS[method]
    return round(slope * math.log2(1.0 / epsilon) + intercept)


@dataclass(frozen=True)
class ResourceReport:
    method: Method
    t_gates: int
    storage_qubits: int | None = None
    ancilla_qubits: int | None = None
    parameters: dict[str, Any] = field(default_factory=dict)
    # Externally quoted figures this row is compared against, if any
    reference: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ('t_gates', 'storage_qubits', 'ancilla_qubits'):
            if (value := getattr(self, name)) is not None and value < 0:
                raise BadArgument(f'{name} must be non-negative, got {value}')

    @property
    def t_per_rotation(self) -> float | None:
        K = self.parameters.get('K')
        return self.t_gates / K if K else None

    def with_reference(self, reference: Mapping[str, int] | None) -> Self:
        if not reference:
            return self
        return type(self)(self.method, self.t_gates, self.storage_qubits, self.ancilla_qubits, self.parameters, dict(reference))

    def to_json(self) -> dict[str, Any]:
        return {
            'method': self.method,
            't_gates': self.t_gates,
            'storage_qubits': self.storage_qubits,
            'ancilla_qubits': self.ancilla_qubits,
            'parameters': self.parameters,
            'reference': self.reference,
        }


def _check_count(K: int, name: str = 'K') -> None:
    if K < 0:
        raise BadArgument(f'{name} must be non-negative, got {K}')


def direct_synthesis_report(K: int, epsilon: float, method: SynthesisMethod = 'deterministic') -> ResourceReport:
    _check_count(K)
    per_rotation = synthesis_t_count(epsilon, method)
    return ResourceReport(
        'direct_synthesis',
        K * per_rotation,
        parameters={'K': K, 'epsilon_syn': epsilon, 't_per_rotation': per_rotation},
    )


def trotter_direct_report(N: int, L: int, epsilon: float) -> ResourceReport:
    """Synthesis of all ``N * L`` continuous Trotter angles."""
    _check_count(N, 'N')
    _check_count(L, 'L')
    report = direct_synthesis_report(N * L, epsilon)
    return ResourceReport('trotter_direct', report.t_gates, parameters={**report.parameters, 'N': N, 'L': L})


def hamming_cost(n: int, c_syn: int) -> int:
    """T gates to apply ``n`` identical rotations by Hamming-weight phasing: ``c_syn * floor(log2 n + 1) + 4(n - 1)``."""
    if n < 1:
        raise BadArgument(f'a Hamming batch needs at least one rotation, got {n}')
    return c_syn * n.bit_length() + 4 * (n - 1)


def _storage_counts(l0: int) -> list[int]:
    """``n_l = 2^(l - 4)`` stored rotations for ``l = 4..l0``."""
    if l0 < BASE_LEVEL:
        raise BadArgument(f'the top level l0 must be at least {BASE_LEVEL}, got {l0}')
    return [1 << (level - BASE_LEVEL) for level in range(BASE_LEVEL, l0 + 1)]


def hamming_phasing_report(K: int, l0: int, c_syn: int, *, n3: int = 1) -> ResourceReport:
    """Batches of ``n_l0`` rotations, each round phasing every stored level with one Hamming circuit.

    ``n3`` T states are spent per round at level 3, where the correction chain ends.
    """
    _check_count(K)
    counts = _storage_counts(l0)
    rounds = -(-K // counts[-1])
    per_round = sum(hamming_cost(n, c_syn) for n in counts) + n3

    return ResourceReport(
        'hamming_phasing',
        rounds * per_round,
        storage_qubits=sum(counts),
        ancilla_qubits=sum(n - 1 for n in counts),
        parameters={'K': K, 'l0': l0, 'c_syn': c_syn, 'n3': n3, 'rounds': rounds, 't_per_round': per_round},
    )


@dataclass(frozen=True)
class TowerLayout:
    l0: int
    # CT circuits per layer, from level l0 down to level 4
    ct_per_layer: tuple[int, ...]
    storage: int

    @property
    def ct_total(self) -> int:
        return sum(self.ct_per_layer)

    @property
    def ancilla(self) -> int:
        return self.ct_total

    @property
    def final_t_gates(self) -> int:
        """Bare T gates applied after the bottom layer."""
        return self.ct_per_layer[-1]

    @property
    def t_per_round(self) -> int:
        return T_PER_CT * self.ct_total + self.final_t_gates

    @property
    def rotations_per_round(self) -> int:
        return 1 << (self.l0 - BASE_LEVEL)

    @property
    def per_rotation_cost(self) -> float:
        """``t_per_round / 2^(l0 - 3)``."""
        return self.t_per_round / 2.0 ** (self.l0 - 3)

    @staticmethod
    def closed_form_ct_total(l0: int) -> int:
        return -(-((1 << (l0 - 2)) - l0 + 1) // 2)

    @staticmethod
    def closed_form_t_per_round(l0: int) -> int:
        extra = 1 if l0 % 2 else 6
        return ((1 << l0) - 3 * l0 + extra) // 2


def catalyst_tower_layout(l0: int) -> TowerLayout:
    """Builds the tower layer by layer.

    The top layer consumes the ``2^(l0 - 4)`` stored level-``l0`` rotations in pairs. Every lower layer
    pairs its own stored rotations with the corrections pushed down from the layer above, so layer ``l``
    runs ``ceil((2^(l - 4) + ct_(l + 1)) / 2)`` CT circuits.
    """
    counts = _storage_counts(l0)
    layers = [-(-counts[-1] // 2)]
    for stored in reversed(counts[:-1]):
        layers.append(-(-(stored + layers[-1]) // 2))

    layout = TowerLayout(l0, tuple(layers), sum(counts))
    if layout.ct_total != TowerLayout.closed_form_ct_total(l0):
        raise AssertionError(f'tower with l0={l0} has {layout.ct_total} CT circuits, closed form disagrees')
    return layout


def catalyst_tower_report(K: int, l0: int) -> ResourceReport:
    _check_count(K)
    layout = catalyst_tower_layout(l0)
    rounds = -(-K // layout.rotations_per_round)

    return ResourceReport(
        'catalyst_tower',
        rounds * layout.t_per_round,
        storage_qubits=layout.storage,
        ancilla_qubits=layout.ancilla,
        parameters={
            'K': K,
            'l0': l0,
            'rounds': rounds,
            't_per_round': layout.t_per_round,
            'ct_per_layer': list(layout.ct_per_layer),
            'per_rotation_cost': layout.per_rotation_cost,
        },
    )


def catalyst_tower_sweep(K: int, levels: Iterable[int]) -> list[ResourceReport]:
    """Tower reports for each top level; every ``t_gates / K`` stays at or below 8."""
    reports = [catalyst_tower_report(K, l0) for l0 in levels]
    for report in reports:
        if (ratio := report.t_per_rotation) is not None and ratio > 8:
            log.warning('Tower with l0=%s costs %.3f T gates per rotation', report.parameters['l0'], ratio)
    return reports


def table1(
    c_norm_avg: float,
    T: float,
    delta: float,
    N_trotter: int,
    L: int,
    *,
    eps_pai: float = 1e-6,
    eps_trotter: float = 1e-8,
    n3: int = 1,
    references: Mapping[str, Mapping[str, int]] | None = None,
) -> list[ResourceReport]:
    """All four cost models for one TE-PAI configuration, with ``K = round(nu_inf)`` fixed-angle rotations.

    ``references`` maps a method name to externally quoted figures; any disagreement is logged, never forced.
    """
    level = hierarchy_level(delta).level
    if level < BASE_LEVEL:
        raise HierarchyError(f'phasing and towers need delta at level {BASE_LEVEL} or deeper, got level {level}')

    K = round(nu_infinity(c_norm_avg * T, delta))
    c_syn = synthesis_t_count(eps_pai)
    log.info('Cost table for K=%d rotations at level %d (c_syn=%d)', K, level, c_syn)

    references = references or {}
    reports = [
        trotter_direct_report(N_trotter, L, eps_trotter),
        direct_synthesis_report(K, eps_pai),
        hamming_phasing_report(K, level, c_syn, n3=n3),
        catalyst_tower_report(K, level),
    ]
    reports = [report.with_reference(references.get(report.method)) for report in reports]

    for report in reports:
        for key, quoted in report.reference.items():
            ours = getattr(report, key)
            if ours != quoted:
                log.warning(
                    '%s %s: computed %s, reference %s (%.2f%% apart)',
                    report.method, key, ours, quoted, 100.0 * abs(ours - quoted) / max(1, quoted),
                )
    return reports


def format_reports(reports: Iterable[ResourceReport]) -> str:
    rows = []
    for report in reports:
        reference = report.reference.get('t_gates')
        rows.append((
            report.method,
            format_count(report.t_gates),
            '-' if reference is None else format_count(reference),
            '-' if report.storage_qubits is None else report.storage_qubits,
            '-' if report.ancilla_qubits is None else report.ancilla_qubits,
            '-' if report.t_per_rotation is None else f'{report.t_per_rotation:.2f}',
        ))

    return tabulate(
        rows,
        headers=('method', 'T gates', 'reference', 'storage', 'ancilla', 'T / rotation'),
        colalign=('left', 'right', 'right', 'right', 'right', 'right'),
    )
