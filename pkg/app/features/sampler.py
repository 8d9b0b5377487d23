from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from logging import getLogger
from typing import Any, NamedTuple, TYPE_CHECKING

import numpy as np

from app.core.helpers import AnglePreconditionError, BadArgument
from app.features.trotter import TrotterTemplate

if TYPE_CHECKING:
    from app.core.hamiltonian import Hamiltonian
    from app.core.pauli import PauliString
    from app.util.types import FloatArray, Seed

__all__ = (
    'Variant',
    'GammaWeights',
    'SampledGate',
    'SampledCircuit',
    'PAISampler',
    'gamma_weights',
    'gamma_arrays',
    'sample_circuit',
    'exact_overhead',
    'sample_qdrift',
)

log = getLogger(__name__)

# Angles within this relative slack of delta are treated as equal to delta
ANGLE_TOLERANCE: float = 1e-12


class Variant(IntEnum):
    IDENTITY = 0
    DELTA = 1
    PI = 2


@dataclass(frozen=True)
class GammaWeights:
    """Signed weights of ``R(theta) = g1 * I + g2 * R(delta) + g3 * R(pi)`` as superoperators."""
    gamma1: float
    gamma2: float
    gamma3: float
    l1: float
    p1: float
    p2: float
    p3: float

    @property
    def gammas(self) -> tuple[float, float, float]:
        return self.gamma1, self.gamma2, self.gamma3

    @property
    def probabilities(self) -> tuple[float, float, float]:
        return self.p1, self.p2, self.p3


def _check_delta(delta: float) -> None:
    if not 0 < delta < math.pi:
        raise BadArgument(f'delta must lie in (0, pi), got {delta}')


def _check_angles(theta: float | FloatArray, delta: float) -> None:
    largest = float(np.max(theta)) if np.ndim(theta) else float(theta)
    if largest > delta * (1 + ANGLE_TOLERANCE):
        raise AnglePreconditionError(largest, delta)
    if (float(np.min(theta)) if np.ndim(theta) else float(theta)) < 0:
        raise BadArgument('gamma weights take |theta|; got a negative angle')


def gamma_arrays(theta: FloatArray, delta: float) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray]:
    """Vectorized ``(gamma1, gamma2, |gamma3|, ||gamma||_1)`` for ``0 <= theta <= delta < pi``.

    Every quantity is written in product form so nothing cancels as ``theta -> 0``.
    """
    theta = np.minimum(np.asarray(theta, dtype=float), delta)
    half = 0.5 * theta
    gap = np.sin(0.5 * delta - half)

    gamma1 = np.cos(half) * gap / math.sin(0.5 * delta)
    gamma2 = np.sin(theta) / math.sin(delta)
    gamma3_abs = np.sin(half) * gap / math.cos(0.5 * delta)
    # ||gamma||_1 = sec(delta/2) cos(delta/2 - theta) = 1 + 2 sin(theta/2) sin(delta/2 - theta/2) / cos(delta/2)
    l1 = 1.0 + 2.0 * gamma3_abs
    return gamma1, gamma2, gamma3_abs, l1


def _log_l1(theta: FloatArray, delta: float) -> FloatArray:
    _, _, gamma3_abs, _ = gamma_arrays(theta, delta)
    return np.log1p(2.0 * gamma3_abs)


def gamma_weights(theta: float, delta: float) -> GammaWeights:
    """Closed-form decomposition weights for one rotation angle (pass ``|theta|``)."""
    _check_delta(delta)
    _check_angles(theta, delta)

    g1, g2, g3_abs, l1 = (float(v) for v in gamma_arrays(np.asarray(theta), delta))
    return GammaWeights(
        gamma1=g1,
        gamma2=g2,
        gamma3=-g3_abs,
        l1=l1,
        p1=g1 / l1,
        p2=g2 / l1,
        p3=g3_abs / l1,
    )


class SampledGate(NamedTuple):
    generator: PauliString
    variant: Variant
    # signed rotation angle: +/-delta, or pi
    angle: float
    k: int
    j: int

    def angle_label(self) -> str:
        if self.variant is Variant.PI:
            return 'pi'
        return '+delta' if self.angle > 0 else '-delta'


@dataclass(frozen=True)
class SampledCircuit:
    """One random circuit; only non-identity gates are stored."""
    gates: tuple[SampledGate, ...]
    sign: int
    overhead: float
    delta: float
    draw_seed: tuple[int, ...] = field(default=())

    @property
    def nu(self) -> int:
        return len(self.gates)

    @property
    def prefactor(self) -> float:
        return self.overhead * self.sign

    def count(self, variant: Variant) -> int:
        return sum(gate.variant is variant for gate in self.gates)

    def to_record(self) -> dict[str, Any]:
        return {
            'draw_seed': list(self.draw_seed),
            'sign': self.sign,
            'nu': self.nu,
            'gates': [{'pauli': str(g.generator), 'angle': g.angle_label()} for g in self.gates],
        }


def _as_seed_tuple(seed: Seed) -> tuple[int, ...]:
    return (int(seed),) if isinstance(seed, (int, np.integer)) else tuple(int(s) for s in seed)


class PAISampler:
    """Draws TE-PAI circuits from one template at one global delta.

    The overhead ``prod_{j,k} ||gamma(|theta_kj|)||_1`` and, for constant templates, the per-position
    probabilities are computed once and shared by every draw.
    Position ``(j, k)`` consumes the ``((j - 1) * L + k)``-th uniform of the draw's own generator, so a
    draw depends only on its seed and never on which worker produced it.
    """

    def __init__(self, template: TrotterTemplate, delta: float) -> None:
        _check_delta(delta)
        self.template: TrotterTemplate = template
        self.delta: float = delta

        if template.max_abs_angle > delta * (1 + ANGLE_TOLERANCE):
            raise AnglePreconditionError(template.max_abs_angle, delta)

        self._strings = template.hamiltonian.strings

    @cached_property
    def overhead(self) -> float:
        return exact_overhead(self.template, self.delta)

    @cached_property
    def _constant_probabilities(self) -> tuple[FloatArray, FloatArray]:
        row = self.template.angles_at(1)
        _, g2, g3_abs, l1 = gamma_arrays(np.abs(row), self.delta)
        return g2 / l1, g3_abs / l1

    def _probabilities(self, block: FloatArray) -> tuple[FloatArray, FloatArray]:
        if self.template.is_constant:
            p2, p3 = self._constant_probabilities
            return np.broadcast_to(p2, block.shape), np.broadcast_to(p3, block.shape)

        _, g2, g3_abs, l1 = gamma_arrays(np.abs(block), self.delta)
        return g2 / l1, g3_abs / l1

    def sample(self, seed: Seed) -> SampledCircuit:
        rng = np.random.default_rng(seed)
        gates: list[SampledGate] = []
        pi_count = 0

        for start, block in self.template.iter_blocks():
            p2, p3 = self._probabilities(block)
            u = rng.random(block.shape)

            # u < p2 -> R(+/-delta); p2 <= u < p2 + p3 -> R(pi); otherwise identity
            rows, cols = np.nonzero(u < p2 + p3)
            for row, k in zip(rows.tolist(), cols.tolist()):
                j = start + row
                if u[row, k] < p2[row, k]:
                    angle = math.copysign(self.delta, block[row, k])
                    gates.append(SampledGate(self._strings[k], Variant.DELTA, angle, k, j))
                else:
                    pi_count += 1
                    gates.append(SampledGate(self._strings[k], Variant.PI, math.pi, k, j))

        return SampledCircuit(
            gates=tuple(gates),
            sign=-1 if pi_count % 2 else 1,
            overhead=self.overhead,
            delta=self.delta,
            draw_seed=_as_seed_tuple(seed),
        )


def sample_circuit(template: TrotterTemplate, delta: float, seed: Seed) -> SampledCircuit:
    return PAISampler(template, delta).sample(seed)


def exact_overhead(template: TrotterTemplate, delta: float) -> float:
    """``||g||_1 = prod_{j,k} ||gamma(|theta_kj|)||_1``, accumulated as a sum of logarithms."""
    _check_delta(delta)
    if template.max_abs_angle > delta * (1 + ANGLE_TOLERANCE):
        raise AnglePreconditionError(template.max_abs_angle, delta)

    if template.is_constant:
        per_step = float(_log_l1(np.abs(template.angles_at(1)), delta).sum())
        return math.exp(template.N * per_step)

    logs = [math.fsum(_log_l1(np.abs(block), delta).ravel()) for _, block in template.iter_blocks()]
    return math.exp(math.fsum(logs))


def sample_qdrift(h: Hamiltonian, T: float, N: int, seed: Seed) -> SampledCircuit:
    """qDRIFT: N terms drawn with ``p_j = |c_j| / ||c||_1``, each applied as ``exp(-i sgn(c_j) h_j tau)``.

    ``tau = T ||c||_1 / N``; the rotation angle is therefore ``2 sgn(c_j) tau``. qDRIFT averages a channel,
    so the sign is +1 and the overhead is 1.
    """
    c = h.require_constant('qDRIFT sampling')
    if N < 1:
        raise BadArgument(f'N must be at least 1, got {N}')

    weights = np.abs(c)
    norm = float(weights.sum())
    if norm == 0:
        raise BadArgument('qDRIFT needs at least one non-zero coefficient')

    tau = T * norm / N
    rng = np.random.default_rng(seed)
    picks = rng.choice(h.L, size=N, p=weights / norm)

    strings = h.strings
    gates = tuple(
        SampledGate(strings[k], Variant.DELTA, math.copysign(2.0 * tau, c[k]), int(k), j)
        for j, k in enumerate(picks.tolist(), start=1)
    )
    return SampledCircuit(gates=gates, sign=1, overhead=1.0, delta=2.0 * tau, draw_seed=_as_seed_tuple(seed))
