from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, TYPE_CHECKING

import numpy as np
from scipy import optimize, stats

from app.core.helpers import AnglePreconditionError, BadArgument, NumericalFailure, ceil_tolerant
from app.features.sampler import ANGLE_TOLERANCE, gamma_arrays

if TYPE_CHECKING:
    from typing_extensions import Self
    from app.features.trotter import TrotterTemplate
    from app.util.types import FloatArray

__all__ = (
    'FiniteGateCount',
    'GateCountModel',
    'GateCountFit',
    'OverheadModel',
    'QTradeoff',
    'nu_infinity',
    'nu_lower_bound',
    'nu_expected_finite',
    'overhead_asymptotic',
    'shots_bound',
    'q_tradeoff',
    'gate_count_pdf',
    'gate_count_fit',
    'optimal_delta',
    'minimize_nu_numerically',
    'qdrift_rotation_count',
)


def _check_delta(delta: float) -> None:
    if not 0 < delta < math.pi:
        raise BadArgument(f'delta must lie in (0, pi), got {delta}')


def _check_norm(c_norm_avg_T: float) -> None:
    if c_norm_avg_T < 0:
        raise BadArgument(f'||c||_1 T must be non-negative, got {c_norm_avg_T}')


def nu_infinity(c_norm_avg_T: float, delta: float) -> float:
    """Asymptotic expected gate count ``csc(delta) (3 - cos(delta)) ||c||_1 T``."""
    _check_delta(delta)
    _check_norm(c_norm_avg_T)
    return (3.0 - math.cos(delta)) / math.sin(delta) * c_norm_avg_T


def nu_lower_bound(c_norm_avg_T: float) -> float:
    """The minimum of :func:`nu_infinity` over delta: ``2 sqrt(2) ||c||_1 T``."""
    return 2.0 * math.sqrt(2.0) * c_norm_avg_T


def overhead_asymptotic(c_norm_avg_T: float, delta: float) -> float:
    """``exp(2 ||c||_1 T tan(delta / 2))``."""
    _check_delta(delta)
    _check_norm(c_norm_avg_T)
    return math.exp(2.0 * c_norm_avg_T * math.tan(0.5 * delta))


def shots_bound(overhead: float, epsilon: float) -> int:
    """``N_s = ceil(||g||_1^2 / epsilon^2)``."""
    if epsilon <= 0:
        raise BadArgument(f'epsilon must be positive, got {epsilon}')
    return ceil_tolerant(overhead * overhead / (epsilon * epsilon))


class FiniteGateCount(NamedTuple):
    mean: float
    variance: float


def nu_expected_finite(template: TrotterTemplate, delta: float) -> FiniteGateCount:
    """Exact ``E[nu] = sum_{j,k} (1 - p1)`` and ``Var[nu] = sum_{j,k} p1 (1 - p1)`` for a finite template."""
    _check_delta(delta)
    if template.max_abs_angle > delta * (1 + ANGLE_TOLERANCE):
        raise AnglePreconditionError(template.max_abs_angle, delta)

    def moments(block: FloatArray) -> tuple[float, float]:
        _, g2, g3_abs, l1 = gamma_arrays(np.abs(block), delta)
        q = (g2 + g3_abs) / l1
        return math.fsum(q.ravel()), math.fsum((q * (1.0 - q)).ravel())

    if template.is_constant:
        mean, variance = moments(template.angles_at(1))
        return FiniteGateCount(template.N * mean, template.N * variance)

    parts = [moments(block) for _, block in template.iter_blocks()]
    return FiniteGateCount(math.fsum(m for m, _ in parts), math.fsum(v for _, v in parts))


def gate_count_pdf(nu_inf: float) -> stats.rv_continuous:
    """The limiting distribution ``N(nu_inf, nu_inf)`` as a frozen scipy distribution."""
    if nu_inf <= 0:
        raise BadArgument(f'nu_inf must be positive, got {nu_inf}')
    return stats.norm(loc=nu_inf, scale=math.sqrt(nu_inf))


@dataclass(frozen=True)
class GateCountModel:
    nu_expected_finite: float
    variance_finite: float
    nu_inf: float

    @property
    def variance_inf(self) -> float:
        return self.nu_inf

    @property
    def gaussian(self) -> stats.rv_continuous:
        return gate_count_pdf(self.nu_inf)

    @classmethod
    def from_template(cls, template: TrotterTemplate, delta: float, c_norm_avg_T: float | None = None) -> Self:
        if c_norm_avg_T is None:
            c_norm_avg_T = template.hamiltonian.l1_norm_avg(template.T) * template.T if template.T > 0 else 0.0

        finite = nu_expected_finite(template, delta)
        return cls(finite.mean, finite.variance, nu_infinity(c_norm_avg_T, delta))


@dataclass(frozen=True)
class OverheadModel:
    g_inf: float

    @classmethod
    def from_norm(cls, c_norm_avg_T: float, delta: float) -> Self:
        return cls(overhead_asymptotic(c_norm_avg_T, delta))

    def shots_bound(self, epsilon: float) -> int:
        return shots_bound(self.g_inf, epsilon)


class QTradeoff(NamedTuple):
    delta: float
    nu_inf: float
    overhead: float


def q_tradeoff(c_norm_avg_T: float, Q: float) -> QTradeoff:
    """Parametrizes delta by the log-overhead ``Q``: ``delta = 2 arctan(Q / (2 ||c||_1 T))``.

    The overhead is exactly ``e^Q`` and ``nu_inf = 2 (||c||_1 T)^2 / Q + Q``.
    """
    if c_norm_avg_T <= 0:
        raise BadArgument(f'||c||_1 T must be positive, got {c_norm_avg_T}')
    if not 0 < Q <= math.sqrt(2.0) * c_norm_avg_T * (1 + 1e-12):
        raise BadArgument(f'Q must lie in (0, sqrt(2) ||c||_1 T] = (0, {math.sqrt(2.0) * c_norm_avg_T:.6g}], got {Q}')

    delta = 2.0 * math.atan(Q / (2.0 * c_norm_avg_T))
    return QTradeoff(delta, 2.0 * c_norm_avg_T * c_norm_avg_T / Q + Q, math.exp(Q))


class GateCountFit(NamedTuple):
    mean: float
    variance: float
    statistic: float
    p_value: float


def gate_count_fit(
    samples: Iterable[int],
    nu_inf: float,
    *,
    variance: float | None = None,
    bins: int = 10,
) -> GateCountFit:
    """Pearson chi-square test of sampled gate counts against ``N(nu_inf, variance)``.

    Bins are equiprobable under the model, so every bin expects ``len(samples) / bins`` counts.
    The model is fixed in advance, so the statistic has ``bins - 1`` degrees of freedom.
    """
    data = np.asarray(list(samples), dtype=float)
    if data.size < 5 * bins:
        raise BadArgument(f'need at least {5 * bins} samples for {bins} bins, got {data.size}')

    model = stats.norm(loc=nu_inf, scale=math.sqrt(nu_inf if variance is None else variance))
    edges = model.ppf(np.linspace(0.0, 1.0, bins + 1)[1:-1])
    observed = np.bincount(np.searchsorted(edges, data, side='right'), minlength=bins)
    expected = np.full(bins, data.size / bins)

    result = stats.chisquare(observed, expected)
    return GateCountFit(float(data.mean()), float(data.var(ddof=1)), float(result.statistic), float(result.pvalue))


def optimal_delta() -> float:
    """The delta minimizing the gate count, ``2 arctan(1 / sqrt(2))`` (``cos(delta) = 1/3``)."""
    return 2.0 * math.atan(1.0 / math.sqrt(2.0))


def minimize_nu_numerically(c_norm_avg_T: float = 1.0) -> float:
    """Golden-section search for the argmin of :func:`nu_infinity`.

    The objective is flat to machine precision within ~1e-8 of the minimum, so the bracket found by the
    search is polished with a root solve of the derivative, which is proportional to ``1 - 3 cos(delta)``.
    """
    if c_norm_avg_T <= 0:
        raise BadArgument(f'||c||_1 T must be positive, got {c_norm_avg_T}')

    result = optimize.minimize_scalar(
        lambda d: nu_infinity(c_norm_avg_T, d),
        bracket=(0.1, 1.0, 3.0),
        method='golden',
    )
    if not result.success:
        raise NumericalFailure(f'golden-section search failed: {result.message}')

    x = float(result.x)
    low, high = max(1e-6, x - 1e-3), min(math.pi - 1e-6, x + 1e-3)
    return float(optimize.brentq(lambda d: 1.0 - 3.0 * math.cos(d), low, high, xtol=1e-15))


def qdrift_rotation_count(c_norm_T: float, epsilon: float) -> float:
    """Rotations qDRIFT needs for precision epsilon: ``2 (||c||_1 T)^2 / epsilon``."""
    if epsilon <= 0:
        raise BadArgument(f'epsilon must be positive, got {epsilon}')
    return 2.0 * c_norm_T * c_norm_T / epsilon

