from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Final, Iterable, Literal, Mapping, TYPE_CHECKING, TypeAlias

import numpy as np
import scipy.sparse as sp

import config
from app.core.helpers import BadArgument, DimensionMismatch, ResourceLimitError

if TYPE_CHECKING:
    from typing_extensions import Self
    from app.util.types import BoolArray, ComplexArray, IntArray

__all__ = (
    'Axis',
    'PauliString',
    'PhasedPauli',
    'multiply',
    'commutes',
    'to_dense',
    'to_sparse',
    'pauli_action',
    'symplectic',
    'anticommutation_matrix',
)

Axis: TypeAlias = Literal['X', 'Y', 'Z']

AXES: Final[tuple[str, ...]] = ('X', 'Y', 'Z')
TOKEN_REGEX: re.Pattern[str] = re.compile(r'^([IXYZixyz])(\d+)$')

SINGLE_QUBIT: Final[dict[str, np.ndarray]] = {
    'I': np.array([[1, 0], [0, 1]], dtype=complex),
    'X': np.array([[0, 1], [1, 0]], dtype=complex),
    'Y': np.array([[0, -1j], [1j, 0]], dtype=complex),
    'Z': np.array([[1, 0], [0, -1]], dtype=complex),
}

# (a, b): (power of i, product axis); identity products are handled separately
_PRODUCTS: Final[dict[tuple[str, str], tuple[int, str | None]]] = {
    ('X', 'X'): (0, None),
    ('Y', 'Y'): (0, None),
    ('Z', 'Z'): (0, None),
    ('X', 'Y'): (1, 'Z'),
    ('Y', 'Z'): (1, 'X'),
    ('Z', 'X'): (1, 'Y'),
    ('Y', 'X'): (3, 'Z'),
    ('Z', 'Y'): (3, 'X'),
    ('X', 'Z'): (3, 'Y'),
}
_PHASES: Final[tuple[complex, ...]] = (1, 1j, -1, -1j)


@dataclass(frozen=True, order=True)
class PauliString:
    """A sparse tensor product of single-qubit Pauli operators.

    ``factors`` is a sorted tuple of ``(qubit, axis)`` pairs; qubits that do not appear carry the identity.
    Qubit 0 is the leftmost tensor factor (most significant bit of a basis index).
    """
    n_qubits: int
    factors: tuple[tuple[int, str], ...] = field(default=())

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise BadArgument(f'a Pauli string needs at least one qubit, got {self.n_qubits}')

        seen = set()
        for index, axis in self.factors:
            if axis not in AXES:
                raise BadArgument(f'unknown Pauli axis {axis!r}')
            if not 0 <= index < self.n_qubits:
                raise DimensionMismatch(f'qubit index {index} is out of range for {self.n_qubits} qubits')
            if index in seen:
                raise BadArgument(f'qubit {index} appears twice')
            seen.add(index)

        object.__setattr__(self, 'factors', tuple(sorted(self.factors)))

    @classmethod
    def identity(cls, n_qubits: int) -> Self:
        return cls(n_qubits)

    @classmethod
    def from_mapping(cls, n_qubits: int, mapping: Mapping[int, str]) -> Self:
        return cls(n_qubits, tuple((index, axis.upper()) for index, axis in mapping.items() if axis.upper() != 'I'))

    @classmethod
    def from_text(cls, text: str, n_qubits: int | None = None) -> Self:
        """Parses the canonical text form, e.g. ``"X0 Y3 Z7"``. An empty string or ``"I"`` is the identity.

        If ``n_qubits`` is omitted, the string is sized to its largest index.
        """
        mapping: dict[int, str] = {}
        for token in text.split():
            if token.upper() == 'I':
                continue
            if not (match := TOKEN_REGEX.match(token)):
                raise BadArgument(f'invalid Pauli token {token!r} (expected axis+index such as X0)')

            axis, index = match.group(1).upper(), int(match.group(2))
            if index in mapping:
                raise BadArgument(f'qubit {index} appears twice in {text!r}')
            mapping[index] = axis

        if n_qubits is None:
            n_qubits = max(mapping, default=0) + 1
        # explicit identity tokens only size the string
        return cls.from_mapping(n_qubits, mapping)

    @cached_property
    def mapping(self) -> dict[int, str]:
        return dict(self.factors)

    @property
    def weight(self) -> int:
        return len(self.factors)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(index for index, _ in self.factors)

    def axis(self, index: int) -> str:
        return self.mapping.get(index, 'I')

    def _bit(self, index: int) -> int:
        return 1 << (self.n_qubits - 1 - index)

    @cached_property
    def x_mask(self) -> int:
        return sum(self._bit(i) for i, a in self.factors if a in 'XY')

    @cached_property
    def z_mask(self) -> int:
        return sum(self._bit(i) for i, a in self.factors if a in 'YZ')

    @property
    def y_count(self) -> int:
        return sum(a == 'Y' for _, a in self.factors)

    def resized(self, n_qubits: int) -> Self:
        return type(self)(n_qubits, self.factors)

    def __str__(self) -> str:
        return ' '.join(f'{axis}{index}' for index, axis in self.factors) or 'I'

    def __repr__(self) -> str:
        return f'<PauliString {self} n={self.n_qubits}>'


@dataclass(frozen=True)
class PhasedPauli:
    """A Pauli string with a phase in {+1, +i, -1, -i}, stored as a power of i."""
    string: PauliString
    power: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, 'power', self.power % 4)

    @property
    def phase(self) -> complex:
        return _PHASES[self.power]

    def __mul__(self, other: PhasedPauli) -> PhasedPauli:
        product = multiply(self.string, other.string)
        return PhasedPauli(product.string, product.power + self.power + other.power)

    def __str__(self) -> str:
        return f"{('+', '+i', '-', '-i')[self.power]}{self.string}"


def _check_sizes(a: PauliString, b: PauliString) -> None:
    if a.n_qubits != b.n_qubits:
        raise DimensionMismatch(f'Pauli strings act on {a.n_qubits} and {b.n_qubits} qubits')


def multiply(a: PauliString, b: PauliString) -> PhasedPauli:
    """Returns the group product ``a * b`` with its phase."""
    _check_sizes(a, b)

    power = 0
    result = dict(a.mapping)
    for index, axis in b.factors:
        if (left := result.get(index)) is None:
            result[index] = axis
            continue

        p, product = _PRODUCTS[left, axis]
        power += p
        if product is None:
            del result[index]
        else:
            result[index] = product

    return PhasedPauli(PauliString.from_mapping(a.n_qubits, result), power)


def commutes(a: PauliString, b: PauliString) -> bool:
    """Two Pauli strings commute iff they differ on an even number of shared non-identity positions."""
    _check_sizes(a, b)

    other = b.mapping
    clashes = sum(1 for index, axis in a.factors if (o := other.get(index)) is not None and o != axis)
    return clashes % 2 == 0


def to_dense(p: PauliString, *, limit: int | None = None) -> ComplexArray:
    """Realizes the string as a dense ``2^n x 2^n`` matrix (Kronecker product, qubit 0 leftmost)."""
    limit = config.dense_limit if limit is None else limit
    if p.n_qubits > limit:
        raise ResourceLimitError(f'dense realization of {p.n_qubits} qubits exceeds the dense limit of {limit}')

    out = np.ones((1, 1), dtype=complex)
    for index in range(p.n_qubits):
        out = np.kron(out, SINGLE_QUBIT[p.axis(index)])
    return out


@lru_cache(maxsize=4096)
def pauli_action(p: PauliString) -> tuple[IntArray, ComplexArray]:
    """Returns ``(source, phase)`` such that ``(P psi)[c] = phase[c] * psi[source[c]]``.

    Writing ``P = i^{#Y} X^x Z^z``, the column feeding row ``c`` is ``c ^ x`` and picks up the sign
    ``(-1)^{popcount((c ^ x) & z)}``.
    """
    indices = np.arange(1 << p.n_qubits, dtype=np.int64)
    source = indices ^ p.x_mask

    parity = np.zeros_like(source)
    z = p.z_mask
    while z:
        low = z & -z
        parity ^= (source & low) != 0
        z ^= low

    phase = _PHASES[p.y_count % 4] * (1 - 2 * parity).astype(complex)
    source.setflags(write=False)
    phase.setflags(write=False)
    return source, phase


def to_sparse(p: PauliString) -> sp.csr_matrix:
    source, phase = pauli_action(p)
    dim = 1 << p.n_qubits
    return sp.csr_matrix((phase, (np.arange(dim), source)), shape=(dim, dim))


def symplectic(strings: Iterable[PauliString], n_qubits: int) -> tuple[BoolArray, BoolArray]:
    """Stacks strings into ``(x, z)`` boolean matrices of shape ``(L, n)``."""
    strings = list(strings)
    x = np.zeros((len(strings), n_qubits), dtype=bool)
    z = np.zeros_like(x)

    for row, string in enumerate(strings):
        for index, axis in string.factors:
            x[row, index] = axis in 'XY'
            z[row, index] = axis in 'YZ'
    return x, z


def anticommutation_matrix(strings: Iterable[PauliString], n_qubits: int) -> BoolArray:
    """``out[i, j]`` is True iff strings ``i`` and ``j`` anticommute (symplectic inner product is odd)."""
    x, z = symplectic(strings, n_qubits)
    xi, zi = x.astype(np.int64), z.astype(np.int64)
    return ((xi @ zi.T + zi @ xi.T) % 2).astype(bool)
