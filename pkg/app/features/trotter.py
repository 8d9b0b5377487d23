from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from logging import getLogger
from typing import Iterator, Literal, NamedTuple, TYPE_CHECKING

import numpy as np

from app.core.hamiltonian import Hamiltonian, commutator_norm_sq, spin_ring_fields
from app.core.helpers import BadArgument, ceil_tolerant

if TYPE_CHECKING:
    from typing_extensions import Self
    from app.core.pauli import PauliString
    from app.util.types import FloatArray

__all__ = (
    'TrotterTemplate',
    'TrotterErrorBound',
    'Rotation',
    'make_template',
    'trotter_error_bound',
    'StepChoice',
    'step_choice',
    'choose_N',
    'classical_cost',
    'spin_ring_commutator_bound',
)

log = getLogger(__name__)

# Upper bound on the number of angles held in memory by one streamed block
BLOCK_ELEMENTS: int = 1 << 18


class Rotation(NamedTuple):
    k: int
    j: int
    generator: PauliString
    theta: float


@dataclass(frozen=True)
class TrotterTemplate:
    """First-order product formula ``prod_j prod_k R_k(theta_kj)``, ``theta_kj = 2 c_k(t_j) T / N``.

    ``t_j = j T / N`` for ``j = 1..N`` (right endpoints); angles are produced lazily in blocks of steps.
    Indices ``j`` are 1-based as in the product formula, ``k`` is 0-based into ``hamiltonian.terms``.
    """
    hamiltonian: Hamiltonian
    N: int
    T: float

    def __post_init__(self) -> None:
        if self.N < 1:
            raise BadArgument(f'N must be at least 1, got {self.N}')
        if self.T < 0:
            raise BadArgument(f'T must be non-negative, got {self.T}')

    @property
    def L(self) -> int:
        return self.hamiltonian.L

    @property
    def dt(self) -> float:
        return self.T / self.N

    @property
    def is_constant(self) -> bool:
        return not self.hamiltonian.is_time_dependent

    @property
    def rotation_count(self) -> int:
        return self.N * self.L

    @property
    def block_size(self) -> int:
        return max(1, min(self.N, BLOCK_ELEMENTS // max(1, self.L)))

    def time(self, j: int) -> float:
        return j * self.T / self.N

    @cached_property
    def _constant_row(self) -> FloatArray:
        row = 2.0 * self.hamiltonian.coefficients(0.0) * self.dt
        row.setflags(write=False)
        return row

    def angles_at(self, j: int) -> FloatArray:
        """Row ``theta_{.j}`` of length L."""
        if not 1 <= j <= self.N:
            raise BadArgument(f'step index {j} is outside 1..{self.N}')
        if self.is_constant:
            return self._constant_row
        return 2.0 * self.hamiltonian.coefficients(self.time(j)) * self.dt

    def angle(self, k: int, j: int) -> float:
        return float(self.angles_at(j)[k])

    def iter_blocks(self, block_size: int | None = None) -> Iterator[tuple[int, FloatArray]]:
        """Yields ``(j_start, angles)`` with ``angles`` of shape ``(B, L)`` covering steps ``j_start..j_start+B-1``."""
        block_size = block_size or self.block_size
        for start in range(1, self.N + 1, block_size):
            stop = min(self.N, start + block_size - 1)
            if self.is_constant:
                yield start, np.broadcast_to(self._constant_row, (stop - start + 1, self.L))
                continue

            times = np.arange(start, stop + 1, dtype=float) * self.T / self.N
            yield start, 2.0 * self.hamiltonian.coefficients(times) * self.dt

    def iter_rotations(self) -> Iterator[Rotation]:
        """Streams every rotation in circuit order (j outer, k inner)."""
        strings = self.hamiltonian.strings
        for start, block in self.iter_blocks():
            for offset, row in enumerate(block):
                for k, theta in enumerate(row):
                    yield Rotation(k, start + offset, strings[k], float(theta))

    def materialize(self) -> FloatArray:
        """The full ``(N, L)`` angle matrix. Only for small templates."""
        return np.concatenate([np.array(block) for _, block in self.iter_blocks()], axis=0)

    @cached_property
    def max_abs_angle(self) -> float:
        if self.is_constant:
            return float(np.abs(self._constant_row).max())
        return max(float(np.abs(block).max()) for _, block in self.iter_blocks())

    def abs_angle_sum(self) -> float:
        """``sum |theta_kj|``; a Riemann sum of ``2 T ||c||_1,avg``, exact for constant coefficients."""
        return math.fsum(float(np.abs(block).sum()) for _, block in self.iter_blocks())

    def __repr__(self) -> str:
        return f'<TrotterTemplate {self.hamiltonian.label!r} N={self.N} T={self.T} L={self.L}>'


def make_template(h: Hamiltonian, T: float, N: int) -> TrotterTemplate:
    return TrotterTemplate(h, N, T)


@dataclass(frozen=True)
class TrotterErrorBound:
    epsilon_T: float
    N: int
    commutator_norm_sq: float
    # T^2 / (2N) * (||c||_1^2 - ||c||_2^2)
    simple_bound: float | None = None

    @classmethod
    def from_norm(cls, T: float, N: int, norm_sq: float, *, simple_norm_sq: float | None = None) -> Self:
        factor = T * T / (2.0 * N)
        simple = None if simple_norm_sq is None else factor * simple_norm_sq
        return cls(factor * norm_sq, N, norm_sq, simple)


def trotter_error_bound(
    h: Hamiltonian,
    T: float,
    N: int,
    *,
    mode: Literal['auto', 'dense', 'bound'] = 'auto',
) -> TrotterErrorBound:
    """``epsilon_T <= T^2 / (2N) * ||c||_T^2`` for time-independent Hamiltonians."""
    c = h.require_constant('the Trotter error bound')
    if N < 1:
        raise BadArgument(f'N must be at least 1, got {N}')

    norm_sq = commutator_norm_sq(h, 0.0, mode=mode)
    simple = float(np.abs(c).sum() ** 2 - np.square(c).sum())
    return TrotterErrorBound.from_norm(T, N, norm_sq, simple_norm_sq=simple)


def spin_ring_commutator_bound(h: Hamiltonian) -> float:
    """``2 (4 sum_k |w_k| + 6n)``, at most ``20n``, for rings with ``|J(t)| <= 1``."""
    fields = spin_ring_fields(h)
    return 2.0 * (4.0 * float(np.abs(fields).sum()) + 6.0 * h.n_qubits)


class StepChoice(NamedTuple):
    N: int
    norm_sq: float
    # True when a time-dependent Hamiltonian was treated with its averaged l1 norm
    heuristic: bool


def step_choice(
    h: Hamiltonian,
    T: float,
    epsilon: float,
    kappa: float = 1.0,
    *,
    commutator_norm_sq: float | None = None,
) -> StepChoice:
    """Smallest N with ``T^2 ||c||^2 / (2N) <= epsilon / kappa``, and how ``||c||^2`` was obtained.

    ``||c||^2`` is ``||c||_1^2`` by default, or the supplied commutator norm. Time-dependent Hamiltonians
    substitute the time-averaged l1 norm, which is a heuristic.
    """
    if epsilon <= 0:
        raise BadArgument(f'epsilon must be positive, got {epsilon}')
    if kappa < 1:
        raise BadArgument(f'kappa must be at least 1, got {kappa}')

    heuristic = False
    if commutator_norm_sq is not None:
        norm_sq = commutator_norm_sq
    elif h.is_time_dependent:
        norm_sq = h.l1_norm_avg(T) ** 2 if T > 0 else h.l1_norm() ** 2
        heuristic = True
        log.warning('Choosing N for time-dependent %s from the averaged l1 norm (heuristic)', h.label)
    else:
        norm_sq = h.l1_norm() ** 2

    N = max(1, ceil_tolerant(kappa * T * T * norm_sq / (2.0 * epsilon)))
    return StepChoice(N, norm_sq, heuristic)


def choose_N(
    h: Hamiltonian,
    T: float,
    epsilon: float,
    kappa: float = 1.0,
    *,
    commutator_norm_sq: float | None = None,
) -> int:
    return step_choice(h, T, epsilon, kappa, commutator_norm_sq=commutator_norm_sq).N


def classical_cost(h: Hamiltonian, T: float, epsilon: float, kappa: float, overhead: float) -> int:
    """Number of classical angle draws ``N * L * N_s`` with ``N_s = ceil(overhead^2 / epsilon^2)``."""
    N = choose_N(h, T, epsilon, kappa)
    shots = ceil_tolerant(overhead * overhead / (epsilon * epsilon))
    return N * h.L * shots
