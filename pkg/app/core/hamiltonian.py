from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields
from functools import cached_property
from logging import getLogger
from typing import Any, ClassVar, Iterable, Literal, NamedTuple, TYPE_CHECKING

import numpy as np
import scipy.sparse as sp
from scipy import integrate
from scipy.sparse.linalg import eigsh

import config
from app.core.helpers import (
    BadArgument, DimensionMismatch, NumericalFailure, ResourceLimitError, TermFileError, UnsupportedConfiguration,
)
from app.core.pauli import PauliString, anticommutation_matrix, multiply, to_sparse

if TYPE_CHECKING:
    from typing_extensions import Self
    from app.util.types import FloatArray

__all__ = (
    'CoefficientSchedule',
    'Constant',
    'Harmonic',
    'Tabulated',
    'Term',
    'Hamiltonian',
    'l1_norm_avg',
    'commutator_norm_sq',
    'commutator_pair_bound',
    'build_spin_ring',
    'load_term_file',
    'schedule_from_json',
)

log = getLogger(__name__)

QUAD_RELATIVE_TOLERANCE: float = 1e-9
QUAD_LIMIT: int = 500
# Below this dimension the commutator norm is taken from a dense SVD rather than a Lanczos solve
DENSE_NORM_DIMENSION: int = 64


class CoefficientSchedule:
    """A real coefficient ``c_k(t)`` defined on ``[0, T]``."""

    kind: ClassVar[str]

    @property
    def is_constant(self) -> bool:
        return False

    def evaluate(self, t: float | FloatArray) -> float | FloatArray:
        raise NotImplementedError

    def breakpoints(self, start: float, stop: float) -> list[float]:
        """Points in ``(start, stop)`` where ``|c(t)|`` may be non-smooth."""
        return []

    def piece_integral(self, a: float, b: float) -> float:
        """``integral_a^b |c(t)| dt`` over a piece with no breakpoint inside."""
        value, error = integrate.quad(
            lambda t: abs(self(t)), a, b, epsabs=1e-14 * (b - a), epsrel=QUAD_RELATIVE_TOLERANCE, limit=QUAD_LIMIT,
        )
        if error > max(1e-12, 1e-6 * abs(value)):
            raise NumericalFailure(f'quadrature of |c(t)| on [{a}, {b}] did not converge (error {error:.3g})')
        return value

    def scaled(self, factor: float) -> CoefficientSchedule:
        raise NotImplementedError

    def to_json(self) -> dict[str, Any]:
        raise NotImplementedError

    def __call__(self, t: float | FloatArray) -> float | FloatArray:
        return self.evaluate(t)


@dataclass(frozen=True)
class Constant(CoefficientSchedule):
    value: float
    kind: ClassVar[str] = 'constant'

    @property
    def is_constant(self) -> bool:
        return True

    def evaluate(self, t: float | FloatArray) -> float | FloatArray:
        if np.ndim(t):
            return np.full(np.shape(t), self.value, dtype=float)
        return float(self.value)

    def scaled(self, factor: float) -> Constant:
        return Constant(self.value * factor)

    def to_json(self) -> dict[str, Any]:
        return {'kind': self.kind, 'value': self.value}


@dataclass(frozen=True)
class Harmonic(CoefficientSchedule):
    """``amplitude * cos(angular_frequency * t + phase)``."""
    amplitude: float
    angular_frequency: float
    phase: float = 0.0
    kind: ClassVar[str] = 'harmonic'

    def evaluate(self, t: float | FloatArray) -> float | FloatArray:
        return self.amplitude * np.cos(self.angular_frequency * np.asarray(t, dtype=float) + self.phase)

    def breakpoints(self, start: float, stop: float) -> list[float]:
        # zero crossings of cos(w t + phase): w t + phase = pi/2 + m pi
        w = self.angular_frequency
        if w == 0 or self.amplitude == 0:
            return []

        lo, hi = sorted((w * start + self.phase, w * stop + self.phase))
        first = math.ceil((lo - math.pi / 2) / math.pi)
        last = math.floor((hi - math.pi / 2) / math.pi)
        points = ((math.pi / 2 + m * math.pi - self.phase) / w for m in range(first, last + 1))
        return sorted(p for p in points if start < p < stop)

    def piece_integral(self, a: float, b: float) -> float:
        w, phase = self.angular_frequency, self.phase
        if w == 0:
            return abs(self(a)) * (b - a)
        # c keeps its sign on the piece
        return abs(self.amplitude * (math.sin(w * b + phase) - math.sin(w * a + phase)) / w)

    def scaled(self, factor: float) -> Harmonic:
        return Harmonic(self.amplitude * factor, self.angular_frequency, self.phase)

    def to_json(self) -> dict[str, Any]:
        return {
            'kind': self.kind,
            'amplitude': self.amplitude,
            'angular_frequency': self.angular_frequency,
            'phase': self.phase,
        }


@dataclass(frozen=True)
class Tabulated(CoefficientSchedule):
    """Piecewise-linear interpolation of ``values`` on a strictly increasing ``grid``."""
    grid: tuple[float, ...]
    values: tuple[float, ...]
    kind: ClassVar[str] = 'tabulated'

    def __post_init__(self) -> None:
        if len(self.grid) != len(self.values) or len(self.grid) < 2:
            raise BadArgument('tabulated schedule needs matching grid/values with at least two points')
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise BadArgument('tabulated schedule grid must be strictly increasing')

    def evaluate(self, t: float | FloatArray) -> float | FloatArray:
        lo, hi = self.grid[0], self.grid[-1]
        if np.any((np.asarray(t) < lo - 1e-12) | (np.asarray(t) > hi + 1e-12)):
            raise UnsupportedConfiguration(f'tabulated schedule is undefined outside [{lo}, {hi}]')

        out = np.interp(t, self.grid, self.values)
        return float(out) if not np.ndim(t) else out

    def breakpoints(self, start: float, stop: float) -> list[float]:
        points = [g for g in self.grid if start < g < stop]
        for (t0, v0), (t1, v1) in zip(zip(self.grid, self.values), zip(self.grid[1:], self.values[1:])):
            if v0 * v1 < 0:
                crossing = t0 + (t1 - t0) * v0 / (v0 - v1)
                if start < crossing < stop:
                    points.append(crossing)
        return sorted(points)

    def piece_integral(self, a: float, b: float) -> float:
        # linear and of one sign between breakpoints
        return abs(self(a) + self(b)) * (b - a) / 2

    def scaled(self, factor: float) -> Tabulated:
        return Tabulated(self.grid, tuple(v * factor for v in self.values))

    def to_json(self) -> dict[str, Any]:
        return {'kind': self.kind, 'grid': list(self.grid), 'values': list(self.values)}


def schedule_from_json(data: dict[str, Any] | float) -> CoefficientSchedule:
    """A bare number is a constant; objects carry a ``kind`` of constant, harmonic or tabulated."""
    if isinstance(data, (int, float)) and not isinstance(data, bool):
        data = {'kind': 'constant', 'value': data}
    if not isinstance(data, dict):
        raise BadArgument(f'expected a number or a schedule object, got {data!r}')

    try:
        match data.get('kind'):
            case 'constant':
                schedule = Constant(float(data['value']))
            case 'harmonic':
                schedule = Harmonic(
                    float(data['amplitude']), float(data['angular_frequency']), float(data.get('phase', 0.0)),
                )
            case 'tabulated':
                schedule = Tabulated(tuple(map(float, data['grid'])), tuple(map(float, data['values'])))
            case other:
                raise BadArgument(f'unknown coefficient schedule kind {other!r}')
    except KeyError as exc:
        raise BadArgument(f'{data.get("kind")} schedule is missing {exc.args[0]!r}') from None
    except (TypeError, ValueError) as exc:
        raise BadArgument(f'invalid schedule {data!r}: {exc}') from None

    if not all(np.isfinite(getattr(schedule, f.name)).all() for f in fields(schedule)):
        raise BadArgument(f'schedule {data!r} has non-finite parameters')
    return schedule


class Term(NamedTuple):
    string: PauliString
    schedule: CoefficientSchedule


@dataclass(frozen=True)
class Hamiltonian:
    """``H(t) = sum_k c_k(t) h_k``; immutable after construction."""
    n_qubits: int
    terms: tuple[Term, ...]
    label: str = field(default='hamiltonian', compare=False)

    def __post_init__(self) -> None:
        if not self.terms:
            raise BadArgument('a Hamiltonian needs at least one term')

        seen: set[PauliString] = set()
        for string, _ in self.terms:
            if string.n_qubits != self.n_qubits:
                raise DimensionMismatch(f'term {string} acts on {string.n_qubits} qubits, expected {self.n_qubits}')
            if string in seen:
                raise BadArgument(f'duplicate term {string}')
            seen.add(string)

    @classmethod
    def from_constants(cls, n_qubits: int, terms: Iterable[tuple[str | PauliString, float]], label: str = 'constant') -> Self:
        built = tuple(
            Term(s if isinstance(s, PauliString) else PauliString.from_text(s, n_qubits), Constant(float(c)))
            for s, c in terms
        )
        return cls(n_qubits, built, label)

    @property
    def L(self) -> int:
        return len(self.terms)

    @property
    def strings(self) -> tuple[PauliString, ...]:
        return tuple(term.string for term in self.terms)

    @cached_property
    def is_time_dependent(self) -> bool:
        return not all(term.schedule.is_constant for term in self.terms)

    def coefficients(self, t: float | FloatArray = 0.0) -> FloatArray:
        """Coefficient vector at ``t``; for an array of times the result has shape ``(len(t), L)``."""
        if np.ndim(t):
            return np.stack([np.broadcast_to(term.schedule(t), np.shape(t)) for term in self.terms], axis=-1)
        return np.array([term.schedule(t) for term in self.terms], dtype=float)

    def require_constant(self, operation: str) -> FloatArray:
        if self.is_time_dependent:
            raise UnsupportedConfiguration(f'{operation} requires a time-independent Hamiltonian ({self.label})')
        return self.coefficients(0.0)

    def l1_norm(self, t: float = 0.0) -> float:
        return float(np.abs(self.coefficients(t)).sum())

    def l2_norm_sq(self, t: float = 0.0) -> float:
        return float(np.square(self.coefficients(t)).sum())

    def l1_norm_avg(self, T: float) -> float:
        return l1_norm_avg(self, T)

    def scaled(self, factor: float) -> Hamiltonian:
        terms = tuple(Term(s, c.scaled(factor)) for s, c in self.terms)
        return Hamiltonian(self.n_qubits, terms, f'{self.label}*{factor:g}')

    def to_sparse(self, t: float = 0.0) -> sp.csr_matrix:
        dim = 1 << self.n_qubits
        out = sp.csr_matrix((dim, dim), dtype=complex)
        for c, string in zip(self.coefficients(t), self.strings):
            if c:
                out = out + c * to_sparse(string)
        return out

    def to_json(self) -> dict[str, Any]:
        return {
            'label': self.label,
            'n_qubits': self.n_qubits,
            'terms': [{'pauli': str(s), 'schedule': c.to_json()} for s, c in self.terms],
        }

    def __repr__(self) -> str:
        return f'<Hamiltonian {self.label!r} n={self.n_qubits} L={self.L}>'


def _integrate_abs(schedule: CoefficientSchedule, T: float) -> float:
    if schedule.is_constant:
        return abs(schedule(0.0)) * T

    edges = [0.0, *schedule.breakpoints(0.0, T), T]
    return math.fsum(schedule.piece_integral(a, b) for a, b in zip(edges, edges[1:]) if b > a)


def l1_norm_avg(h: Hamiltonian, T: float) -> float:
    """``(1/T) * integral_0^T sum_k |c_k(t)| dt``.

    Integration splits at the kinks of ``|c_k|`` (zero crossings and grid points). Harmonic and tabulated
    pieces integrate in closed form; other schedules fall back to adaptive quadrature. Identical schedules
    are integrated once.
    """
    if T <= 0:
        raise BadArgument(f'total time must be positive, got {T}')

    counts: dict[CoefficientSchedule, int] = {}
    for _, schedule in h.terms:
        counts[schedule] = counts.get(schedule, 0) + 1

    return math.fsum(n * _integrate_abs(schedule, T) for schedule, n in counts.items()) / T


def commutator_pair_bound(h: Hamiltonian, t: float = 0.0) -> float:
    """``2 * sum_{i<j} |c_i||c_j|`` over anticommuting pairs; an upper bound of the commutator norm."""
    if h.L > config.pair_limit:
        raise ResourceLimitError(f'{h.L} terms exceed the pair limit of {config.pair_limit}')

    c = np.abs(h.coefficients(t))
    anti = np.triu(anticommutation_matrix(h.strings, h.n_qubits), k=1)
    return float(2.0 * (np.outer(c, c) * anti).sum())


def _spectral_norm(matrix: sp.csr_matrix) -> float:
    # i[A, B] is Hermitian for Hermitian A and B
    hermitian = 1j * matrix
    if hermitian.shape[0] <= DENSE_NORM_DIMENSION:
        return float(np.linalg.norm(hermitian.toarray(), 2))

    eigenvalue = eigsh(hermitian, k=1, which='LM', return_eigenvectors=False, tol=1e-10)
    return float(abs(eigenvalue[0]))


def _commutator_norm_dense(h: Hamiltonian, t: float) -> float:
    c = h.coefficients(t)
    strings = h.strings
    anti = anticommutation_matrix(strings, h.n_qubits)

    total = []
    dim = 1 << h.n_qubits
    for first in range(h.L):
        partners = [second for second in range(first + 1, h.L) if anti[first, second] and c[second]]
        if not partners or not c[first]:
            continue

        # [h2, h1] = 2 h2 h1 for anticommuting strings
        matrix = sp.csr_matrix((dim, dim), dtype=complex)
        for second in partners:
            product = multiply(strings[second], strings[first])
            matrix = matrix + (2.0 * c[second] * c[first] * product.phase) * to_sparse(product.string)
        total.append(_spectral_norm(matrix))

    return math.fsum(total)


def commutator_norm_sq(
    h: Hamiltonian,
    t: float = 0.0,
    *,
    mode: Literal['auto', 'dense', 'bound'] = 'auto',
) -> float:
    """``sum_{g1} || [ sum_{g2 > g1} c_{g2} h_{g2}, c_{g1} h_{g1} ] ||``.

    Uses spectral norms of the sparse realization up to the dense limit, and the Pauli-pair bound above it.
    """
    if mode == 'auto':
        mode = 'dense' if h.n_qubits <= config.dense_limit else 'bound'

    if mode == 'bound':
        return commutator_pair_bound(h, t)

    if h.n_qubits > config.dense_limit:
        raise ResourceLimitError(f'{h.n_qubits} qubits exceed the dense limit of {config.dense_limit}')
    return _commutator_norm_dense(h, t)


def build_spin_ring(n: int, seed: int = 0, *, coupling: CoefficientSchedule | None = None) -> Hamiltonian:
    """Heisenberg ring ``sum_k w_k Z_k + J(t) (X_k X_{k+1} + Y_k Y_{k+1} + Z_k Z_{k+1})``.

    ``w_k`` is drawn uniformly from ``[-1, 1]`` with a dedicated generator seeded by ``seed``;
    ``J(t) = cos(99 pi t)`` unless overridden.
    """
    if n < 3:
        raise BadArgument(f'a spin ring needs at least 3 qubits, got {n}')

    coupling = coupling or Harmonic(1.0, 99 * math.pi)
    omegas = np.random.default_rng(seed).uniform(-1.0, 1.0, size=n)

    terms: list[Term] = []
    for k in range(n):
        nxt = (k + 1) % n
        terms.append(Term(PauliString(n, ((k, 'Z'),)), Constant(float(omegas[k]))))
        for axis in 'XYZ':
            terms.append(Term(PauliString(n, ((k, axis), (nxt, axis))), coupling))

    return Hamiltonian(n, tuple(terms), f'spin_ring(n={n}, seed={seed})')


def spin_ring_fields(h: Hamiltonian) -> FloatArray:
    """The on-site fields ``w_k`` of a Hamiltonian built by :func:`build_spin_ring`."""
    return np.array([c(0.0) for s, c in h.terms if s.weight == 1], dtype=float)


def load_term_file(path: str | os.PathLike[str], *, n_qubits: int | None = None) -> Hamiltonian:
    """Reads ``<coeff> <pauli string>`` lines; ``#`` starts a comment.

    The qubit count is the largest index + 1 unless ``n_qubits`` is given.
    """
    path = os.fspath(path)
    try:
        with open(path) as fp:
            lines = fp.readlines()
    except OSError as exc:
        raise TermFileError(f'cannot read term file ({exc.strerror})', path=path) from exc

    parsed: list[tuple[int, float, PauliString]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue

        coeff, *rest = line.split(maxsplit=1)
        try:
            value = float(coeff)
            string = PauliString.from_text(rest[0] if rest else 'I', n_qubits=n_qubits)
        except ValueError:
            raise TermFileError(f'invalid coefficient {coeff!r}', path=path, line=lineno) from None
        except (BadArgument, DimensionMismatch) as exc:
            raise TermFileError(str(exc), path=path, line=lineno) from None

        if not math.isfinite(value):
            raise TermFileError(f'coefficient {coeff!r} is not finite', path=path, line=lineno)
        parsed.append((lineno, value, string))

    if not parsed:
        raise TermFileError('term file contains no terms', path=path)

    size = n_qubits or max(s.n_qubits for _, _, s in parsed)
    seen: dict[PauliString, int] = {}
    terms: list[Term] = []
    for lineno, value, string in parsed:
        string = string.resized(size)
        if string in seen:
            raise TermFileError(f'duplicate term {string} (first seen on line {seen[string]})', path=path, line=lineno)
        seen[string] = lineno
        terms.append(Term(string, Constant(value)))

    log.debug('Loaded %d terms on %d qubits from %s', len(terms), size, path)
    return Hamiltonian(size, tuple(terms), os.path.basename(path))
