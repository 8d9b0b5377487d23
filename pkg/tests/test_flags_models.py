import json
import math

import numpy as np
import pytest

from app.core.flags import Flags, angle, flag, store_true
from app.core.helpers import BadArgument
from app.core.models import ModelSpec, RunConfig
from app.data.presets import Presets
from app.features.analytics import q_tradeoff


class SampleFlags(Flags):
    count: int = flag(short='n', default=3)
    angles: list[float] = flag(converter=angle)
    verbose: bool = store_true(short='v')
    name: str


class ExtendedFlags(SampleFlags):
    extra: float = flag(default=0.5)


@pytest.mark.parametrize(
    'text, expected',
    [
        ('0.0245', 0.0245),
        ('1e-3', 1e-3),
        ('pi', math.pi),
        ('pi/128', math.pi / 128),
        ('3pi/4', 3 * math.pi / 4),
        ('2^-7*pi', math.pi / 128),
        ('π/2', math.pi / 2),
    ],
)
def test_angle_literals(text, expected):
    assert angle(text) == pytest.approx(expected)


@pytest.mark.parametrize('text', ['pie', 'x/4', '2^a', ''])
def test_invalid_angle_literals(text):
    with pytest.raises(BadArgument):
        angle(text)


def test_flags_parse():
    flags = SampleFlags.parse(['-n', '5', '--angles', 'pi/4', '0.1', '-v', '--name', 'ring'])
    assert flags.count == 5
    assert flags.angles == pytest.approx([math.pi / 4, 0.1])
    assert flags.verbose is True
    assert flags.name == 'ring'


def test_flag_defaults():
    flags = SampleFlags.parse([])
    assert flags.count == 3
    assert flags.angles is None
    assert flags.verbose is False
    assert SampleFlags.default.count == 3


def test_flags_are_inherited():
    assert set(ExtendedFlags.flags) == {'count', 'angles', 'verbose', 'name', 'extra'}
    assert 'extra' not in SampleFlags.flags

    flags = ExtendedFlags.parse(['--extra', '2', '-n', '1'])
    assert flags.extra == 2.0
    assert flags.count == 1


def test_bad_flag_values_name_the_flag():
    with pytest.raises(BadArgument) as info:
        SampleFlags.parse(['-n', 'many'])
    assert info.value.field == '--count'

    with pytest.raises(BadArgument):
        SampleFlags.parse(['--unknown'])


def base_config(**overrides):
    data = {'model': {'kind': 'spin_ring', 'n': 4, 'seed': 2}, 'T': 1.0, 'N': 10, 'delta': 'pi/16'}
    data.update(overrides)
    return {k: v for k, v in data.items() if v is not None}


def terms_model(n, *terms):
    return {'kind': 'terms', 'n': n, 'terms': list(terms)}


def test_minimal_config_defaults():
    cfg = RunConfig.from_json(base_config())
    assert cfg.delta == pytest.approx(math.pi / 16)
    assert cfg.Q is None
    assert cfg.shots == 1000
    assert cfg.mode == 'sampled_shot'
    assert not cfg.noise.active
    assert cfg.hamiltonian.n_qubits == 4


@pytest.mark.parametrize(
    'overrides, field',
    [
        ({'Q': 1.0}, 'delta'),
        ({'delta': None}, 'delta'),
        ({'delta': 4.0}, 'delta'),
        ({'N': 2.5}, 'N'),
        ({'N': 0}, 'N'),
        ({'T': -1}, 'T'),
        ({'shots': 'many'}, 'shots'),
        ({'shot': 10}, 'shot'),
        ({'mode': 'best'}, 'mode'),
        ({'model': {'kind': 'lattice'}}, 'model.kind'),
        ({'model': {'kind': 'spin_ring'}}, 'model.n'),
        ({'model': {'kind': 'spin_ring', 'n': 2}}, 'model.n'),
        ({'model': terms_model(2)}, 'model.terms'),
        ({'model': terms_model(2, {'pauli': 'X5', 'schedule': 1.0})}, 'model.terms[0].pauli'),
        ({'model': terms_model(2, {'pauli': 'X0'})}, 'model.terms[0].schedule'),
        ({'model': terms_model(1, {'pauli': 'Z0', 'schedule': {'kind': 'ramp'}})}, 'model.terms[0].schedule'),
        ({'model': terms_model(1, {'pauli': 'Z0', 'schedule': 1}, {'pauli': 'Z0', 'schedule': 2})}, 'model.terms'),
    ],
)
def test_config_errors_name_the_field(overrides, field):
    with pytest.raises(BadArgument) as info:
        RunConfig.from_json(base_config(**overrides))
    assert info.value.field == field


def test_noise_errors_name_the_field():
    with pytest.raises(BadArgument) as info:
        RunConfig.from_json(base_config(noise={'p1': 1.5, 'enabled': True}))
    assert 'noise.p1' in str(info.value)


def test_missing_term_file(tmp_path):
    with pytest.raises(BadArgument) as info:
        ModelSpec.from_json({'kind': 'term_file', 'path': 'nope.txt'}, base_dir=tmp_path)
    assert info.value.field == 'model.path'


def test_term_file_relative_to_config(tmp_path):
    (tmp_path / 'h.txt').write_text('1.0 Z0 Z1\n0.5 X2\n')
    path = tmp_path / 'cfg.json'
    path.write_text(json.dumps(base_config(model={'kind': 'term_file', 'path': 'h.txt'}, observable='Z1')))

    cfg = RunConfig.from_file(path)
    assert cfg.hamiltonian.n_qubits == 3
    assert cfg.pauli_observable().n_qubits == 3


def test_invalid_json_file(tmp_path):
    path = tmp_path / 'cfg.json'
    path.write_text('{"T": 1,')
    with pytest.raises(BadArgument) as info:
        RunConfig.from_file(path)
    assert info.value.field == 'config'

    with pytest.raises(BadArgument):
        RunConfig.from_file(tmp_path / 'missing.json')


def test_overrides_swap_delta_and_q():
    cfg = RunConfig.from_json(base_config())
    assert cfg.with_overrides(shots=None) is cfg

    with_q = cfg.with_overrides(Q=1.0)
    assert with_q.delta is None
    assert with_q.resolve_delta() == pytest.approx(q_tradeoff(with_q.c_norm_avg() * 1.0, 1.0).delta)

    back = with_q.with_overrides(delta=math.pi / 8)
    assert back.Q is None
    assert back.resolve_delta() == math.pi / 8


def test_observable_and_state_validation():
    cfg = RunConfig.from_json(base_config(observable='X7'))
    with pytest.raises(BadArgument) as info:
        cfg.pauli_observable()
    assert info.value.field == 'observable'

    cfg = RunConfig.from_json(base_config(initial_state='10'))
    with pytest.raises(BadArgument) as info:
        cfg.state()
    assert info.value.field == 'initial_state'


def test_presets():
    assert Presets.get('Chemistry') is Presets.chemistry
    with pytest.raises(BadArgument) as info:
        Presets.get('missing')
    assert info.value.field == 'preset'


@pytest.mark.parametrize('preset', Presets.all(), ids=lambda p: p.key)
def test_bundled_presets_load(preset):
    cfg = RunConfig.from_file(preset.path)
    assert cfg.delta is not None
    cfg.pauli_observable()
    assert cfg.state().n_qubits == cfg.hamiltonian.n_qubits


def test_inline_terms_model():
    model = {
        'kind': 'terms',
        'n': 2,
        'terms': [
            {'pauli': 'X0 X1', 'schedule': 0.5},
            {'pauli': 'Z0', 'schedule': {'kind': 'harmonic', 'amplitude': 1.0, 'angular_frequency': 2.0}},
            {'pauli': 'Y1', 'schedule': {'kind': 'tabulated', 'grid': [0, 0.5, 1], 'values': [1, -1, 0.5]}},
        ],
    }
    cfg = RunConfig.from_json(base_config(model=model, observable='Z0'))

    h = cfg.hamiltonian
    assert (h.n_qubits, h.L) == (2, 3)
    assert h.is_time_dependent
    np.testing.assert_allclose(h.coefficients(0.25), [0.5, math.cos(0.5), 0.0], atol=1e-12)
    # |cos 2t| changes sign at pi/4; the tabulated term integrates to 11/24
    expected = 0.5 + (0.5 + (1 - math.sin(2.0)) / 2) + 11 / 24
    assert cfg.c_norm_avg() == pytest.approx(expected)

    assert ModelSpec.from_json(cfg.model.to_json()) == cfg.model
