"""Statevector execution of sampled circuits.

Noise is simulated with Monte Carlo trajectories: each noisy gate maps a pure state to a pure state by
sampling one Pauli error, so ensemble statistics come from running more shots, never from density matrices.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from logging import getLogger
from typing import Any, Callable, Final, Iterable, Literal, NamedTuple, TYPE_CHECKING

import numpy as np
import psutil
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import expm_multiply

import config
from app.core.helpers import BadArgument, DimensionMismatch, NumericalFailure, ResourceLimitError
from app.core.pauli import PauliString, pauli_action
from app.features.sampler import PAISampler, Variant, sample_qdrift
from app.util.common import Streams, derive_seed, humanize_duration
from app.util.structures import ShotAccumulator, Timer

if TYPE_CHECKING:
    from typing_extensions import Self
    from app.core.hamiltonian import Hamiltonian
    from app.features.sampler import SampledCircuit
    from app.features.trotter import TrotterTemplate
    from app.util.types import ComplexArray, EstimatorMode

__all__ = (
    'StateVector',
    'NoiseModel',
    'ShotRecord',
    'EstimatorResult',
    'parse_initial_state',
    'apply_rotation',
    'apply_pauli',
    'expectation',
    'sample_eigenvalue',
    'apply_noise_trajectory',
    'run_circuit',
    'run_estimator',
    'run_trotter_reference',
    'run_qdrift_estimator',
    'exact_evolution',
)

log = getLogger(__name__)

ESTIMATOR_MODES: Final[tuple[str, ...]] = ('sampled_shot', 'per_circuit_expectation')
# Copies of the statevector a worker holds at once (state, Pauli image, measurement probabilities)
WORKSPACE_COPIES: Final[int] = 3

_HADAMARD: Final[np.ndarray] = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
# Maps each Pauli eigenbasis onto the computational basis, +1 eigenvector to |0>
_BASIS_CHANGE: Final[dict[str, np.ndarray]] = {
    'X': _HADAMARD,
    'Y': _HADAMARD @ np.diag([1, -1j]),
}
_NOISE_AXES: Final[str] = 'IXYZ'


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: ComplexArray

    def __post_init__(self) -> None:
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise DimensionMismatch(
                f'{self.n_qubits} qubits need {1 << self.n_qubits} amplitudes, got shape {self.amplitudes.shape}'
            )

    @classmethod
    def basis(cls, n_qubits: int, index: int = 0) -> Self:
        amplitudes = np.zeros(1 << n_qubits, dtype=complex)
        amplitudes[index] = 1.0
        return cls(n_qubits, amplitudes)

    @classmethod
    def from_bitstring(cls, bits: str) -> Self:
        """Character ``q`` of ``bits`` is the state of qubit ``q``."""
        if not bits or set(bits) - {'0', '1'}:
            raise BadArgument(f'invalid bitstring {bits!r}', field='initial_state')
        return cls.basis(len(bits), int(bits, 2))

    @classmethod
    def plus_all(cls, n_qubits: int) -> Self:
        dim = 1 << n_qubits
        return cls(n_qubits, np.full(dim, 1.0 / math.sqrt(dim), dtype=complex))

    def copy(self) -> Self:
        return type(self)(self.n_qubits, self.amplitudes.copy())

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __repr__(self) -> str:
        return f'<StateVector n={self.n_qubits}>'


def parse_initial_state(text: str, n_qubits: int) -> StateVector:
    """``"plus_all"``, ``"zero"`` or a bitstring literal such as ``"101001010101"``."""
    match text.strip().lower():
        case 'plus_all' | 'plus':
            return StateVector.plus_all(n_qubits)
        case 'zero' | '':
            return StateVector.basis(n_qubits)
        case bits:
            if len(bits) != n_qubits:
                raise DimensionMismatch(f'initial state {bits!r} has {len(bits)} qubits, the model has {n_qubits}')
            return StateVector.from_bitstring(bits)


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing noise after every gate, ``p1`` on single-qubit supports and ``p2`` on larger ones."""
    p1: float = 0.0
    p2: float = 0.0
    enabled: bool = False

    def __post_init__(self) -> None:
        for name in ('p1', 'p2'):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise BadArgument(f'must lie in [0, 1], got {value}', field=f'noise.{name}')

    @classmethod
    def disabled(cls) -> Self:
        return cls()

    @property
    def active(self) -> bool:
        return self.enabled and (self.p1 > 0 or self.p2 > 0)

    def probability(self, weight: int) -> float:
        return self.p1 if weight == 1 else self.p2

    def to_json(self) -> dict[str, Any]:
        return {'p1': self.p1, 'p2': self.p2, 'enabled': self.enabled}


def _check_fits(state: StateVector, p: PauliString) -> None:
    if p.n_qubits != state.n_qubits:
        raise DimensionMismatch(f'operator acts on {p.n_qubits} qubits, the state has {state.n_qubits}')


def apply_pauli(state: StateVector, p: PauliString) -> StateVector:
    _check_fits(state, p)
    if p.weight:
        source, phase = pauli_action(p)
        state.amplitudes[:] = phase * state.amplitudes[source]
    return state


def apply_rotation(state: StateVector, generator: PauliString, angle: float) -> StateVector:
    """``psi <- cos(angle/2) psi - i sin(angle/2) (P psi)``, in place."""
    _check_fits(state, generator)

    c, s = math.cos(0.5 * angle), math.sin(0.5 * angle)
    psi = state.amplitudes
    if generator.weight == 0:
        psi *= complex(c, -s)
        return state

    source, phase = pauli_action(generator)
    if generator.x_mask == 0:
        # diagonal generator: every amplitude only picks up a phase
        psi *= c - 1j * s * phase
    else:
        psi[:] = c * psi - 1j * s * phase * psi[source]
    return state


def expectation(state: StateVector, observable: PauliString) -> float:
    """``<psi|P|psi>``, real because P is Hermitian."""
    _check_fits(state, observable)
    if observable.weight == 0:
        return float(np.vdot(state.amplitudes, state.amplitudes).real)

    source, phase = pauli_action(observable)
    return float(np.vdot(state.amplitudes, phase * state.amplitudes[source]).real)


def _apply_single_qubit(amplitudes: ComplexArray, matrix: np.ndarray, qubit: int, n_qubits: int) -> ComplexArray:
    view = amplitudes.reshape(1 << qubit, 2, 1 << (n_qubits - qubit - 1))
    return np.einsum('ab,lbr->lar', matrix, view).reshape(-1)


def sample_eigenvalue(state: StateVector, observable: PauliString, rng: np.random.Generator) -> int:
    """One projective measurement of the observable, returning +1 or -1.

    The state is rotated into the observable's eigenbasis, one basis index is drawn from the Born
    distribution, and the eigenvalue is the parity of the bits on the observable's support.
    """
    _check_fits(state, observable)
    if observable.weight == 0:
        return 1

    amplitudes = state.amplitudes
    for qubit, axis in observable.factors:
        if axis != 'Z':
            amplitudes = _apply_single_qubit(amplitudes, _BASIS_CHANGE[axis], qubit, state.n_qubits)

    cdf = np.cumsum(np.abs(amplitudes) ** 2)
    index = int(np.searchsorted(cdf, rng.random() * cdf[-1], side='right'))
    index = min(index, cdf.size - 1)

    mask = sum(1 << (state.n_qubits - 1 - q) for q in observable.support)
    return -1 if (index & mask).bit_count() % 2 else 1


def apply_noise_trajectory(
    state: StateVector,
    support: Iterable[int],
    noise: NoiseModel,
    rng: np.random.Generator,
) -> StateVector:
    """With probability ``p`` applies one of the ``4^w - 1`` non-identity Paulis on ``support``, uniformly."""
    if not noise.active:
        return state

    support = tuple(support)
    if not support or rng.random() >= noise.probability(len(support)):
        return state

    code = int(rng.integers(1, 4 ** len(support)))
    mapping = {}
    for qubit in reversed(support):
        code, digit = divmod(code, 4)
        mapping[qubit] = _NOISE_AXES[digit]

    return apply_pauli(state, PauliString.from_mapping(state.n_qubits, mapping))


def run_circuit(
    circuit: SampledCircuit,
    initial_state: StateVector,
    noise: NoiseModel | None = None,
    rng: np.random.Generator | None = None,
) -> StateVector:
    """Simulates one sampled circuit on a copy of ``initial_state``."""
    state = initial_state.copy()
    noisy = noise is not None and noise.active
    if noisy and rng is None:
        raise BadArgument('noisy simulation needs a random generator')

    for gate in circuit.gates:
        if gate.variant is Variant.PI:
            # R(pi) = -i P; the global phase does not affect expectations
            apply_pauli(state, gate.generator)
        else:
            apply_rotation(state, gate.generator, gate.angle)

        if noisy:
            apply_noise_trajectory(state, gate.generator.support, noise, rng)

    return state


def _run_template(
    template: TrotterTemplate,
    initial_state: StateVector,
    noise: NoiseModel | None = None,
    rng: np.random.Generator | None = None,
) -> StateVector:
    state = initial_state.copy()
    noisy = noise is not None and noise.active

    for rotation in template.iter_rotations():
        apply_rotation(state, rotation.generator, rotation.theta)
        if noisy:
            apply_noise_trajectory(state, rotation.generator.support, noise, rng)
    return state


class ShotRecord(NamedTuple):
    index: int
    value: float
    sign: int
    nu: int
    draw_seed: tuple[int, ...]
    # ||g||_1 * sign of the sampled circuit; 1 for product-formula trajectories
    prefactor: float = 1.0
    gates: tuple[dict[str, str], ...] | None = None

    def to_json(self) -> dict[str, Any]:
        out = {
            'index': self.index,
            'value': self.value,
            'sign': self.sign,
            'nu': self.nu,
            'draw_seed': list(self.draw_seed),
            'prefactor': self.prefactor,
        }
        if self.gates is not None:
            out['gates'] = list(self.gates)
        return out


@dataclass(frozen=True)
class EstimatorResult:
    mean: float
    std_error: float
    shots: int
    mode: EstimatorMode
    records: tuple[ShotRecord, ...] = field(default=(), repr=False, compare=False)

    @classmethod
    def from_records(cls, records: Iterable[ShotRecord], mode: EstimatorMode) -> Self:
        records = tuple(sorted(records, key=lambda r: r.index))
        acc = ShotAccumulator(r.value for r in records)
        return cls(acc.mean, acc.std_error, acc.count, mode, records)

    @property
    def nu_mean(self) -> float:
        return math.fsum(r.nu for r in self.records) / len(self.records) if self.records else 0.0

    def to_json(self) -> dict[str, Any]:
        return {
            'mean': self.mean,
            'std_error': self.std_error,
            'shots': self.shots,
            'mode': self.mode,
        }


@dataclass(frozen=True)
class _ShotContext:
    """Everything a worker needs to reproduce shot ``i`` from the master seed alone."""
    kind: Literal['pai', 'trotter', 'qdrift']
    observable: PauliString
    initial_state: StateVector
    mode: EstimatorMode
    noise: NoiseModel
    master_seed: int
    template: TrotterTemplate
    delta: float = 0.0
    record_gates: bool = False

    @cached_property
    def sampler(self) -> PAISampler:
        return PAISampler(self.template, self.delta)

    def _readout(self, state: StateVector, rng: np.random.Generator) -> float:
        if self.mode == 'sampled_shot':
            return float(sample_eigenvalue(state, self.observable, rng))
        return expectation(state, self.observable)

    def run(self, index: int) -> ShotRecord:
        draw_seed = derive_seed(self.master_seed, Streams.sampling, index)

        if self.kind == 'trotter':
            rng = np.random.default_rng(derive_seed(self.master_seed, Streams.trotter, index))
            state = _run_template(self.template, self.initial_state, self.noise, rng)
            return ShotRecord(index, self._readout(state, rng), 1, self.template.rotation_count, draw_seed)

        rng = np.random.default_rng(derive_seed(self.master_seed, Streams.measurement, index))

        if self.kind == 'qdrift':
            circuit = sample_qdrift(self.template.hamiltonian, self.template.T, self.template.N, draw_seed)
        else:
            circuit = self.sampler.sample(draw_seed)

        state = run_circuit(circuit, self.initial_state, self.noise, rng)
        value = circuit.prefactor * self._readout(state, rng)
        gates = tuple(circuit.to_record()['gates']) if self.record_gates else None
        return ShotRecord(index, value, circuit.sign, circuit.nu, draw_seed, circuit.prefactor, gates)


_WORKER_CONTEXT: _ShotContext | None = None


def _init_worker(context: _ShotContext) -> None:
    global _WORKER_CONTEXT
    _WORKER_CONTEXT = context


def _run_chunk(indices: range) -> list[ShotRecord]:
    assert _WORKER_CONTEXT is not None
    return [_WORKER_CONTEXT.run(i) for i in indices]


def _check_resources(n_qubits: int, workers: int) -> None:
    if n_qubits > config.statevector_limit:
        raise ResourceLimitError(
            f'{n_qubits} qubits exceed the statevector limit of {config.statevector_limit} (TEPAI_STATEVECTOR_LIMIT)'
        )

    needed = (16 << n_qubits) * WORKSPACE_COPIES * workers
    available = psutil.virtual_memory().available
    if needed > available:
        raise ResourceLimitError(
            f'{workers} worker(s) need about {needed / 2 ** 30:.2f} GiB for {n_qubits}-qubit statevectors, '
            f'only {available / 2 ** 30:.2f} GiB is available'
        )


def _chunks(shots: int, workers: int) -> list[range]:
    size = max(1, math.ceil(shots / (4 * workers)))
    return [range(start, min(shots, start + size)) for start in range(0, shots, size)]


def _execute(context: _ShotContext, shots: int, workers: int | None) -> EstimatorResult:
    if shots < 1:
        raise BadArgument(f'the number of shots must be at least 1, got {shots}', field='shots')
    if context.mode not in ESTIMATOR_MODES:
        raise BadArgument(f'unknown estimator mode {context.mode!r}', field='estimator_mode')
    if context.observable.n_qubits != context.initial_state.n_qubits:
        raise DimensionMismatch(
            f'observable acts on {context.observable.n_qubits} qubits, the state has {context.initial_state.n_qubits}'
        )

    workers = max(1, min(workers or config.default_workers, shots))
    _check_resources(context.initial_state.n_qubits, workers)

    log.info(
        'Running %d %s shot(s) on %d qubit(s) with %d worker(s)',
        shots, context.kind, context.initial_state.n_qubits, workers,
    )
    with Timer() as timer:
        if workers == 1:
            records = [context.run(i) for i in range(shots)]
        else:
            with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(context,)) as pool:
                records = [record for chunk in pool.map(_run_chunk, _chunks(shots, workers)) for record in chunk]

    result = EstimatorResult.from_records(records, context.mode)
    log.info('Estimate %.6f +/- %.6f after %s', result.mean, result.std_error, humanize_duration(timer.time))
    return result


def run_estimator(
    template: TrotterTemplate,
    delta: float,
    observable: PauliString,
    initial_state: StateVector,
    shots: int,
    mode: EstimatorMode = 'sampled_shot',
    noise: NoiseModel | None = None,
    seed: int = 0,
    *,
    workers: int | None = None,
    record_gates: bool = False,
) -> EstimatorResult:
    """TE-PAI estimate of ``<O>`` from ``shots`` independently sampled circuits.

    Every shot contributes ``||g||_1 * sign * outcome``. Shot ``i`` draws its circuit from stream
    ``(seed, 0, i)`` and its noise and measurement from ``(seed, 1, i)``, so results do not depend on
    the number of workers.
    """
    PAISampler(template, delta)  # validates delta and the angle precondition up front
    context = _ShotContext(
        kind='pai',
        observable=observable,
        initial_state=initial_state,
        mode=mode,
        noise=noise or NoiseModel.disabled(),
        master_seed=seed,
        template=template,
        delta=delta,
        record_gates=record_gates,
    )
    return _execute(context, shots, workers)


def run_trotter_reference(
    template: TrotterTemplate,
    observable: PauliString,
    initial_state: StateVector,
    noise: NoiseModel | None = None,
    shots: int | None = None,
    *,
    mode: EstimatorMode = 'per_circuit_expectation',
    seed: int = 0,
    workers: int | None = None,
) -> EstimatorResult:
    """Runs the continuous-angle product formula itself.

    Without noise this is a single deterministic pass; with noise, ``shots`` independent trajectories.
    """
    noise = noise or NoiseModel.disabled()
    if not noise.active:
        _check_resources(initial_state.n_qubits, 1)
        state = _run_template(template, initial_state)
        value = expectation(state, observable)
        record = ShotRecord(0, value, 1, template.rotation_count, ())
        return EstimatorResult(value, 0.0, 1, 'per_circuit_expectation', (record,))

    if shots is None:
        raise BadArgument('a noisy Trotter reference needs a shot count', field='shots')

    context = _ShotContext(
        kind='trotter',
        observable=observable,
        initial_state=initial_state,
        mode=mode,
        noise=noise,
        master_seed=seed,
        template=template,
    )
    return _execute(context, shots, workers)


def run_qdrift_estimator(
    template: TrotterTemplate,
    observable: PauliString,
    initial_state: StateVector,
    shots: int,
    mode: EstimatorMode = 'sampled_shot',
    noise: NoiseModel | None = None,
    seed: int = 0,
    *,
    workers: int | None = None,
) -> EstimatorResult:
    """qDRIFT baseline: ``template.N`` random term exponentials per shot."""
    template.hamiltonian.require_constant('qDRIFT sampling')
    context = _ShotContext(
        kind='qdrift',
        observable=observable,
        initial_state=initial_state,
        mode=mode,
        noise=noise or NoiseModel.disabled(),
        master_seed=seed,
        template=template,
    )
    return _execute(context, shots, workers)


def _check_dense(h: Hamiltonian) -> None:
    if h.n_qubits > config.dense_limit:
        raise ResourceLimitError(
            f'exact evolution of {h.n_qubits} qubits exceeds the dense limit of {config.dense_limit} (TEPAI_DENSE_LIMIT)'
        )


def _schrodinger(h: Hamiltonian) -> Callable[[float, ComplexArray], ComplexArray]:
    actions = [pauli_action(p) for p in h.strings]

    def rhs(t: float, psi: ComplexArray) -> ComplexArray:
        out = np.zeros_like(psi)
        for coefficient, (source, phase) in zip(h.coefficients(t), actions):
            if coefficient:
                out += coefficient * phase * psi[source]
        return -1j * out

    return rhs


def exact_evolution(
    h: Hamiltonian,
    T: float,
    initial_state: StateVector,
    *,
    tolerance: float = 1e-8,
    max_refinements: int = 4,
) -> StateVector:
    """``exp(-i H T) |psi>`` for constant H; the time-ordered exponential otherwise.

    Time-dependent Hamiltonians integrate the Schrodinger equation with an adaptive 8th-order Runge-Kutta
    method, tightening its relative tolerance a hundredfold until two solutions agree within ``tolerance``.
    """
    _check_dense(h)
    if h.n_qubits != initial_state.n_qubits:
        raise DimensionMismatch(f'Hamiltonian acts on {h.n_qubits} qubits, the state has {initial_state.n_qubits}')
    if T < 0:
        raise BadArgument(f'T must be non-negative, got {T}')
    if T == 0:
        return initial_state.copy()

    psi0 = initial_state.amplitudes
    if not h.is_time_dependent:
        return StateVector(h.n_qubits, expm_multiply(-1j * T * h.to_sparse(), psi0))

    rhs = _schrodinger(h)

    def solve(rtol: float) -> ComplexArray:
        result = solve_ivp(rhs, (0.0, T), psi0, method='DOP853', rtol=rtol, atol=1e-3 * rtol)
        if not result.success:
            raise NumericalFailure(f'exact evolution failed: {result.message}')
        return result.y[:, -1]

    rtol = tolerance
    previous = solve(rtol)
    for _ in range(max_refinements):
        rtol *= 1e-2
        current = solve(rtol)
        change = float(np.max(np.abs(current - previous)))
        log.debug('Exact evolution at rtol=%.0e changed by %.3g', rtol, change)
        if change < tolerance:
            return StateVector(h.n_qubits, current)
        previous = current

    raise NumericalFailure(f'exact evolution did not converge to {tolerance:g} within {max_refinements} refinements')
