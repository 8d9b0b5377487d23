from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from functools import cached_property
from logging import getLogger
from pathlib import Path
from typing import Any, Callable, Literal, Mapping, Sequence, TYPE_CHECKING

import config
from app.core.hamiltonian import Hamiltonian, Term, build_spin_ring, load_term_file, schedule_from_json
from app.core.helpers import BadArgument, TepaiError
from app.core.pauli import PauliString
from app.features.analytics import q_tradeoff
from app.features.simulator import ESTIMATOR_MODES, NoiseModel, StateVector, parse_initial_state
from app.features.trotter import TrotterTemplate, make_template

if TYPE_CHECKING:
    from typing_extensions import Self
    from app.core.flags import FlagMeta, FlagNamespace
    from app.util.types import EstimatorMode

__all__ = (
    'Command',
    'ModelSpec',
    'RunConfig',
)

log = getLogger(__name__)

# A ring of two qubits would list the same coupling twice
MIN_RING_QUBITS: int = 3


@dataclass
class Command:
    name: str
    callback: Callable[[FlagNamespace[Any]], int]
    aliases: tuple[str, ...] = ()
    flags: FlagMeta | None = None

    @property
    def description(self) -> str:
        return (self.callback.__doc__ or '').strip().splitlines()[0] if self.callback.__doc__ else ''

    def invoke(self, argv: Sequence[str]) -> int:
        if self.flags is None:
            if argv:
                raise BadArgument(f'{self.name} takes no arguments, got {" ".join(argv)}')
            return self.callback(None)  # type: ignore

        return self.callback(self.flags.parse(argv))

    def __repr__(self) -> str:
        return f'<Command name={self.name!r}>'


def _require(data: Mapping[str, Any], key: str, path: str) -> Any:
    try:
        return data[key]
    except KeyError:
        raise BadArgument('is required', field=path) from None


def _number(value: Any, path: str, *, kind: type = float, minimum: float | None = None, strict: bool = False) -> Any:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        if kind is float and isinstance(value, str):
            from app.core.flags import angle

            try:
                value = angle(value)
            except BadArgument:
                raise BadArgument(f'expected a number, got {value!r}', field=path) from None
        else:
            raise BadArgument(f'expected {kind.__name__}, got {value!r}', field=path)

    if kind is int and value != int(value):
        raise BadArgument(f'expected an integer, got {value!r}', field=path)
    value = kind(value)

    if minimum is not None and (value <= minimum if strict else value < minimum):
        raise BadArgument(f'must be {">" if strict else ">="} {minimum}, got {value}', field=path)
    return value


@dataclass(frozen=True)
class ModelSpec:
    """Which Hamiltonian a run simulates."""
    kind: Literal['spin_ring', 'term_file', 'terms']
    n: int | None = None
    seed: int = 0
    path: str | None = None
    terms: tuple[Term, ...] = ()

    @classmethod
    def from_json(cls, data: Mapping[str, Any], *, base_dir: Path | None = None) -> Self:
        kind = _require(data, 'kind', 'model.kind')
        match kind:
            case 'spin_ring':
                n = _number(_require(data, 'n', 'model.n'), 'model.n', kind=int, minimum=MIN_RING_QUBITS)
                seed = _number(data.get('seed', 0), 'model.seed', kind=int)
                return cls(kind, n=n, seed=seed)

            case 'term_file':
                raw = _require(data, 'path', 'model.path')
                path = Path(raw)
                if not path.is_absolute() and base_dir is not None and not path.exists():
                    path = base_dir / path
                if not path.is_file():
                    raise BadArgument(f'term file {raw!r} does not exist', field='model.path')
                n = data.get('n')
                return cls(kind, n=None if n is None else _number(n, 'model.n', kind=int, minimum=1), path=str(path))

            case 'terms':
                n = _number(_require(data, 'n', 'model.n'), 'model.n', kind=int, minimum=1)
                terms = _parse_terms(_require(data, 'terms', 'model.terms'), n)
                try:
                    Hamiltonian(n, terms)
                except TepaiError as exc:
                    raise BadArgument(str(exc), field='model.terms') from exc
                return cls(kind, n=n, terms=terms)

            case _:
                raise BadArgument(f"must be 'spin_ring', 'term_file' or 'terms', got {kind!r}", field='model.kind')

    def build(self) -> Hamiltonian:
        match self.kind:
            case 'spin_ring':
                return build_spin_ring(self.n, self.seed)
            case 'term_file':
                return load_term_file(self.path, n_qubits=self.n)
            case _:
                return Hamiltonian(self.n, self.terms, f'terms(n={self.n})')

    def to_json(self) -> dict[str, Any]:
        match self.kind:
            case 'spin_ring':
                return {'kind': self.kind, 'n': self.n, 'seed': self.seed}
            case 'term_file':
                return {'kind': self.kind, 'path': self.path, 'n': self.n}
            case _:
                return {'kind': self.kind, 'n': self.n, 'terms': self.build().to_json()['terms']}


def _parse_terms(raw: Any, n: int) -> tuple[Term, ...]:
    if not isinstance(raw, list) or not raw:
        raise BadArgument('must be a non-empty list of {"pauli", "schedule"} objects', field='model.terms')

    terms = []
    for index, item in enumerate(raw):
        path = f'model.terms[{index}]'
        if not isinstance(item, Mapping):
            raise BadArgument(f'expected an object, got {item!r}', field=path)

        pauli = _require(item, 'pauli', f'{path}.pauli')
        schedule = _require(item, 'schedule', f'{path}.schedule')
        try:
            string = PauliString.from_text(str(pauli), n)
        except TepaiError as exc:
            raise BadArgument(str(exc), field=f'{path}.pauli') from exc
        try:
            terms.append(Term(string, schedule_from_json(schedule)))
        except TepaiError as exc:
            raise BadArgument(str(exc), field=f'{path}.schedule') from exc

    return tuple(terms)


@dataclass(frozen=True)
class RunConfig:
    """A validated experiment description; every field error names its dotted path."""
    model: ModelSpec
    T: float
    N: int
    delta: float | None = None
    Q: float | None = None
    shots: int = 1000
    observable: str = 'X0'
    initial_state: str = 'zero'
    mode: EstimatorMode = 'sampled_shot'
    noise: NoiseModel = field(default_factory=NoiseModel.disabled)
    seed: int = config.default_seed
    output: str | None = None
    workers: int | None = None
    record_gates: bool = False

    def __post_init__(self) -> None:
        if (self.delta is None) == (self.Q is None):
            raise BadArgument('exactly one of delta and Q must be set', field='delta')
        if self.delta is not None and not 0 < self.delta < math.pi:
            raise BadArgument(f'must lie in (0, pi), got {self.delta}', field='delta')
        if self.Q is not None and self.Q <= 0:
            raise BadArgument(f'must be positive, got {self.Q}', field='Q')
        if self.T < 0:
            raise BadArgument(f'must be non-negative, got {self.T}', field='T')
        if self.N < 1:
            raise BadArgument(f'must be at least 1, got {self.N}', field='N')
        if self.shots < 0:
            raise BadArgument(f'must be non-negative, got {self.shots}', field='shots')
        if self.mode not in ESTIMATOR_MODES:
            raise BadArgument(f'must be one of {", ".join(ESTIMATOR_MODES)}, got {self.mode!r}', field='mode')
        if self.workers is not None and self.workers < 1:
            raise BadArgument(f'must be at least 1, got {self.workers}', field='workers')

    @classmethod
    def from_json(cls, data: Mapping[str, Any], *, base_dir: Path | None = None) -> Self:
        known = {f.name for f in fields(cls)}
        if unknown := sorted(set(data) - known):
            raise BadArgument(f'unknown field(s): {", ".join(unknown)}', field=unknown[0])

        model = ModelSpec.from_json(_require(data, 'model', 'model'), base_dir=base_dir)
        noise_data = data.get('noise') or {}
        noise = NoiseModel(
            p1=_number(noise_data.get('p1', 0.0), 'noise.p1'),
            p2=_number(noise_data.get('p2', 0.0), 'noise.p2'),
            enabled=bool(noise_data.get('enabled', False)),
        )

        optional = lambda key, **kw: None if data.get(key) is None else _number(data[key], key, **kw)
        return cls(
            model=model,
            T=_number(_require(data, 'T', 'T'), 'T', minimum=0),
            N=_number(_require(data, 'N', 'N'), 'N', kind=int, minimum=1),
            delta=optional('delta'),
            Q=optional('Q'),
            shots=_number(data.get('shots', 1000), 'shots', kind=int, minimum=0),
            observable=str(data.get('observable', 'X0')),
            initial_state=str(data.get('initial_state', 'zero')),
            mode=data.get('mode', 'sampled_shot'),
            noise=noise,
            seed=_number(data.get('seed', config.default_seed), 'seed', kind=int),
            output=data.get('output'),
            workers=optional('workers', kind=int, minimum=1),
            record_gates=bool(data.get('record_gates', False)),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> Self:
        path = Path(path)
        if not path.is_file():
            raise BadArgument(f'config file {str(path)!r} does not exist', field='config')
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise BadArgument(f'{path}: invalid JSON at line {exc.lineno}: {exc.msg}', field='config') from exc

        return cls.from_json(data, base_dir=path.parent)

    def with_overrides(self, **overrides: Any) -> Self:
        """Applies flag overrides; ``None`` values are ignored. Setting delta clears Q and vice versa."""
        overrides = {k: v for k, v in overrides.items() if v is not None}
        if 'delta' in overrides:
            overrides.setdefault('Q', None)
        elif 'Q' in overrides:
            overrides['delta'] = None
        return replace(self, **overrides) if overrides else self

    @cached_property
    def hamiltonian(self) -> Hamiltonian:
        return self.model.build()

    def pauli_observable(self) -> PauliString:
        try:
            observable = PauliString.from_text(self.observable)
        except TepaiError as exc:
            raise BadArgument(str(exc), field='observable') from exc

        n = self.hamiltonian.n_qubits
        if observable.n_qubits > n:
            raise BadArgument(f'acts on {observable.n_qubits} qubits, the model has {n}', field='observable')
        return observable.resized(n)

    def state(self) -> StateVector:
        try:
            return parse_initial_state(self.initial_state, self.hamiltonian.n_qubits)
        except TepaiError as exc:
            raise BadArgument(str(exc).removeprefix('initial_state: '), field='initial_state') from exc

    def c_norm_avg(self) -> float:
        return self.hamiltonian.l1_norm_avg(self.T) if self.T > 0 else self.hamiltonian.l1_norm()

    def resolve_delta(self) -> float:
        if self.delta is not None:
            return self.delta
        if self.T == 0:
            raise BadArgument('Q cannot be converted to delta at T = 0', field='Q')
        return q_tradeoff(self.c_norm_avg() * self.T, self.Q).delta

    def template(self) -> TrotterTemplate:
        if self.T == 0:
            return TrotterTemplate(self.hamiltonian, self.N, 0.0)
        return make_template(self.hamiltonian, self.T, self.N)

    def to_json(self) -> dict[str, Any]:
        return {
            'model': self.model.to_json(),
            'T': self.T,
            'N': self.N,
            'delta': self.delta,
            'Q': self.Q,
            'shots': self.shots,
            'observable': self.observable,
            'initial_state': self.initial_state,
            'mode': self.mode,
            'noise': self.noise.to_json(),
            'seed': self.seed,
            'record_gates': self.record_gates,
        }
