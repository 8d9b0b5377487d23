import itertools
import math
import warnings

import numpy as np
import pytest

from app.core.hamiltonian import (
    CoefficientSchedule,
    Constant,
    Hamiltonian,
    Harmonic,
    Tabulated,
    Term,
    build_spin_ring,
    commutator_norm_sq,
    commutator_pair_bound,
    load_term_file,
    schedule_from_json,
    spin_ring_fields,
)
from app.core.helpers import BadArgument, TermFileError, UnsupportedConfiguration
from app.core.pauli import PauliString
from app.data.presets import ASSETS


def test_spin_ring_structure(ring5):
    assert ring5.n_qubits == 5
    assert ring5.L == 20
    assert ring5.is_time_dependent

    fields = spin_ring_fields(ring5)
    assert fields.shape == (5,)
    assert np.all(np.abs(fields) <= 1)


def test_spin_ring_is_seeded():
    a, b = build_spin_ring(6, seed=4), build_spin_ring(6, seed=4)
    np.testing.assert_array_equal(spin_ring_fields(a), spin_ring_fields(b))
    assert not np.array_equal(spin_ring_fields(a), spin_ring_fields(build_spin_ring(6, seed=5)))


def test_spin_ring_needs_three_sites():
    with pytest.raises(BadArgument):
        build_spin_ring(2)


def test_spin_ring_average_norm(ring5):
    # |cos(99 pi t)| averages to 2/pi over whole periods
    expected = np.abs(spin_ring_fields(ring5)).sum() + 3 * 5 * 2 / math.pi
    assert ring5.l1_norm_avg(1.0) == pytest.approx(expected, rel=1e-6)


def test_constant_norms(two_qubit):
    assert not two_qubit.is_time_dependent
    assert two_qubit.l1_norm() == pytest.approx(1.6)
    assert two_qubit.l1_norm_avg(2.0) == pytest.approx(1.6)
    assert two_qubit.l2_norm_sq() == pytest.approx(0.64 + 0.25 + 0.09)


def test_require_constant(ring5):
    with pytest.raises(UnsupportedConfiguration):
        ring5.require_constant('qDRIFT sampling')


def test_to_sparse_is_hermitian(two_qubit):
    matrix = two_qubit.to_sparse().toarray()
    np.testing.assert_allclose(matrix, matrix.conj().T, atol=1e-12)


def test_duplicate_terms_rejected():
    with pytest.raises(BadArgument):
        Hamiltonian.from_constants(1, [('X0', 1.0), ('X0', 2.0)])


def test_commutator_norm_of_single_qubit_pair():
    h = Hamiltonian.from_constants(1, [('X0', 1.0), ('Z0', 1.0)])
    assert commutator_norm_sq(h, mode='dense') == pytest.approx(2.0)
    assert commutator_norm_sq(h, mode='bound') == pytest.approx(2.0)


def test_commuting_terms_have_zero_commutator():
    h = Hamiltonian.from_constants(2, [('Z0', 1.0), ('Z1', 0.5), ('Z0 Z1', 0.2)])
    assert commutator_norm_sq(h) == 0.0


def test_load_term_file(tmp_path):
    path = tmp_path / 'h.txt'
    path.write_text('# toy model\n0.5 X0 Z1\n\n-0.25 Y1  # trailing comment\n1.0 I\n')

    h = load_term_file(path)
    assert h.n_qubits == 2
    assert h.L == 3
    np.testing.assert_allclose(h.coefficients(), [0.5, -0.25, 1.0])
    assert h.label == 'h.txt'


def test_load_term_file_with_explicit_size(tmp_path):
    path = tmp_path / 'h.txt'
    path.write_text('1.0 Z0\n')
    assert load_term_file(path, n_qubits=4).n_qubits == 4


@pytest.mark.parametrize(
    'content, line',
    [
        ('1.0 X0\nabc Z0\n', 2),
        ('1.0 X0\n2.0 X0\n', 2),
        ('nan X0\n', 1),
        ('1.0 W0\n', 1),
    ],
)
def test_term_file_errors_name_the_line(tmp_path, content, line):
    path = tmp_path / 'bad.txt'
    path.write_text(content)
    with pytest.raises(TermFileError) as info:
        load_term_file(path)
    assert info.value.line == line
    assert f'bad.txt:{line}' in str(info.value)


def test_missing_term_file(tmp_path):
    with pytest.raises(TermFileError):
        load_term_file(tmp_path / 'missing.txt')


def test_empty_term_file(tmp_path):
    path = tmp_path / 'empty.txt'
    path.write_text('# nothing here\n')
    with pytest.raises(TermFileError):
        load_term_file(path)


def test_bundled_term_file():
    h = load_term_file(ASSETS / 'terms' / 'sample_12q.txt')
    assert h.n_qubits == 12
    assert not h.is_time_dependent


def test_tab_separated_term_file(tmp_path):
    path = tmp_path / 'h.txt'
    path.write_text('0.5\tX0 Z1\n-0.25\t\tY1\n1.0 \t Z0\tZ1\n')

    h = load_term_file(path)
    assert [str(s) for s in h.strings] == ['X0 Z1', 'Y1', 'Z0 Z1']
    np.testing.assert_allclose(h.coefficients(), [0.5, -0.25, 1.0])


def test_ring_norm_integrates_without_warnings(ring5):
    with warnings.catch_warnings():
        warnings.simplefilter('error')
        value = ring5.l1_norm_avg(0.5)

    # 0.5 spans 49.5 half-periods of cos(99 pi t), so |cos| still averages to 2/pi
    assert value == pytest.approx(np.abs(spin_ring_fields(ring5)).sum() + 15 * 2 / math.pi, rel=1e-9)


@pytest.mark.parametrize(
    'schedule',
    [Harmonic(0.8, 7.3, 0.4), Harmonic(-1.2, 99 * math.pi), Tabulated((0.0, 0.5, 1.0), (1.0, -1.0, 0.5))],
)
def test_closed_form_pieces_match_quadrature(schedule):
    edges = [0.0, *schedule.breakpoints(0.0, 1.0), 1.0]
    for a, b in zip(edges, edges[1:]):
        quadrature = CoefficientSchedule.piece_integral(schedule, a, b)
        assert schedule.piece_integral(a, b) == pytest.approx(quadrature, rel=1e-8)


def test_tabulated_norm():
    h = Hamiltonian(1, (Term(PauliString.from_text('X0'), Tabulated((0.0, 0.5, 1.0), (1.0, -1.0, 0.5))),))
    # two triangles on [0, 0.5] and two on [0.5, 1] split at 5/6
    assert h.l1_norm_avg(1.0) == pytest.approx(0.25 + 1 / 6 + 1 / 24)

    with pytest.raises(UnsupportedConfiguration):
        h.coefficients(1.5)


@pytest.mark.parametrize(
    'data, expected',
    [
        (0.5, Constant(0.5)),
        ({'kind': 'constant', 'value': -2}, Constant(-2.0)),
        ({'kind': 'harmonic', 'amplitude': 1, 'angular_frequency': 3}, Harmonic(1.0, 3.0, 0.0)),
        ({'kind': 'tabulated', 'grid': [0, 1], 'values': [1, 2]}, Tabulated((0.0, 1.0), (1.0, 2.0))),
    ],
)
def test_schedule_from_json(data, expected):
    assert schedule_from_json(data) == expected


@pytest.mark.parametrize(
    'data',
    [
        {'kind': 'square'},
        {'kind': 'harmonic', 'amplitude': 1.0},
        {'kind': 'tabulated', 'grid': [0, 1], 'values': [1]},
        {'kind': 'constant', 'value': 'big'},
        {'kind': 'constant', 'value': math.inf},
        True,
        'pi',
    ],
)
def test_invalid_schedules(data):
    with pytest.raises(BadArgument):
        schedule_from_json(data)


def test_scaling_is_linear_in_the_norm():
    h = Hamiltonian(2, (
        Term(PauliString.from_text('X0 X1'), Constant(0.6)),
        Term(PauliString.from_text('Z0'), Harmonic(1.0, 5.0, 0.3)),
        Term(PauliString.from_text('Y1'), Tabulated((0.0, 1.0, 2.0), (0.5, -1.5, 1.0))),
    ))
    scaled = h.scaled(-2.5)
    assert scaled.l1_norm_avg(2.0) == pytest.approx(2.5 * h.l1_norm_avg(2.0))
    np.testing.assert_allclose(scaled.coefficients(0.7), -2.5 * h.coefficients(0.7))

    rebuilt = tuple(
        Term(PauliString.from_text(term['pauli'], 2), schedule_from_json(term['schedule']))
        for term in scaled.to_json()['terms']
    )
    assert Hamiltonian(2, rebuilt) == scaled


@pytest.mark.parametrize('seed', range(20))
def test_dense_commutator_norm_is_below_pair_bound(seed):
    rng = np.random.default_rng(seed)
    everything = [
        PauliString.from_mapping(3, dict(enumerate(axes)))
        for axes in itertools.product('IXYZ', repeat=3)
        if set(axes) != {'I'}
    ]
    chosen = rng.choice(len(everything), size=6, replace=False)
    h = Hamiltonian(3, tuple(Term(everything[i], Constant(float(rng.normal()))) for i in chosen))

    assert commutator_norm_sq(h, mode='dense') <= commutator_pair_bound(h) + 1e-12
