import math

import numpy as np
import pytest
from scipy.linalg import expm

import config
from app.core.hamiltonian import Constant, Hamiltonian, Harmonic, Term, build_spin_ring
from app.core.helpers import BadArgument, DimensionMismatch, ResourceLimitError
from app.core.pauli import PauliString, to_dense
from app.features.simulator import (
    NoiseModel,
    StateVector,
    apply_noise_trajectory,
    apply_pauli,
    apply_rotation,
    exact_evolution,
    expectation,
    parse_initial_state,
    run_estimator,
    run_qdrift_estimator,
    run_trotter_reference,
    sample_eigenvalue,
)
from app.features.sampler import exact_overhead
from app.features.trotter import make_template


def random_state(n: int, seed: int = 0) -> StateVector:
    rng = np.random.default_rng(seed)
    amplitudes = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(n, amplitudes / np.linalg.norm(amplitudes))


def test_initial_states():
    assert parse_initial_state('zero', 3).amplitudes[0] == 1
    assert parse_initial_state('plus_all', 2).amplitudes == pytest.approx(np.full(4, 0.5))
    # qubit 0 is the leftmost character
    assert np.argmax(np.abs(parse_initial_state('100', 3).amplitudes)) == 0b100
    with pytest.raises(DimensionMismatch):
        parse_initial_state('10', 3)
    with pytest.raises(BadArgument):
        parse_initial_state('1x1', 3)


@pytest.mark.parametrize('text', ['X0 Y1', 'Z0 Z1', 'Y0', 'X0 X1 Z2', 'Z1'])
def test_rotation_matches_matrix_exponential(text):
    p = PauliString.from_text(text, 3)
    state = random_state(3, seed=4)
    expected = expm(-0.5j * 0.37 * to_dense(p)) @ state.amplitudes

    apply_rotation(state, p, 0.37)
    np.testing.assert_allclose(state.amplitudes, expected, atol=1e-12)
    assert state.norm == pytest.approx(1.0, abs=1e-10)


def test_pauli_and_expectation_match_dense():
    p = PauliString.from_text('Y0 Z2', 3)
    state = random_state(3, seed=8)
    dense = to_dense(p)

    assert expectation(state, p) == pytest.approx(np.vdot(state.amplitudes, dense @ state.amplitudes).real)
    expected = dense @ state.amplitudes
    np.testing.assert_allclose(apply_pauli(state, p).amplitudes, expected, atol=1e-12)


def test_identity_rotation_is_a_global_phase():
    state = random_state(2)
    before = state.amplitudes.copy()
    apply_rotation(state, PauliString.identity(2), 0.8)
    np.testing.assert_allclose(np.abs(state.amplitudes), np.abs(before))


def test_operator_size_must_match_state():
    with pytest.raises(DimensionMismatch):
        expectation(StateVector.basis(2), PauliString.from_text('X0', 3))


@pytest.mark.parametrize(
    'amplitudes, observable, eigenvalue',
    [
        ([1, 0], 'Z0', 1),
        ([0, 1], 'Z0', -1),
        ([1, 1], 'X0', 1),
        ([1, -1], 'X0', -1),
        ([1, 1j], 'Y0', 1),
        ([1, -1j], 'Y0', -1),
    ],
)
def test_eigenstates_measure_their_eigenvalue(amplitudes, observable, eigenvalue):
    vector = np.asarray(amplitudes, dtype=complex)
    state = StateVector(1, vector / np.linalg.norm(vector))
    rng = np.random.default_rng(0)
    assert all(sample_eigenvalue(state, PauliString.from_text(observable), rng) == eigenvalue for _ in range(20))


def test_sampled_eigenvalues_average_to_expectation():
    state = random_state(3, seed=2)
    observable = PauliString.from_text('X0 Y2', 3)
    rng = np.random.default_rng(3)
    samples = np.array([sample_eigenvalue(state, observable, rng) for _ in range(20_000)])
    assert samples.mean() == pytest.approx(expectation(state, observable), abs=4 / math.sqrt(samples.size))


def test_noise_model_validation():
    with pytest.raises(BadArgument) as info:
        NoiseModel(p1=1.5)
    assert 'noise.p1' in str(info.value)
    assert not NoiseModel(p1=0.1).active
    assert NoiseModel(p1=0.1, enabled=True).active


def test_certain_noise_applies_a_non_identity_pauli():
    noise = NoiseModel(p1=1.0, enabled=True)
    rng = np.random.default_rng(1)
    for _ in range(20):
        state = apply_noise_trajectory(StateVector.plus_all(2), (1,), noise, rng)
        x0 = expectation(state, PauliString.from_text('X0', 2))
        x1 = expectation(state, PauliString.from_text('X1', 2))
        assert x0 == pytest.approx(1.0)
        # X on qubit 1 keeps |+>, Y and Z flip it
        assert x1 == pytest.approx(1.0) or x1 == pytest.approx(-1.0)


def test_estimator_is_unbiased(two_qubit):
    template = make_template(two_qubit, 0.5, 20)
    observable = PauliString.from_text('Z0', 2)
    state = StateVector.basis(2)

    result = run_estimator(
        template, math.pi / 16, observable, state, 3000, 'per_circuit_expectation', seed=4, workers=1,
    )
    reference = run_trotter_reference(template, observable, state)
    assert result.shots == 3000
    assert abs(result.mean - reference.mean) <= 5 * result.std_error


def test_sampled_shots_are_signed_overheads(two_qubit):
    template = make_template(two_qubit, 0.5, 20)
    result = run_estimator(
        template, math.pi / 16, PauliString.from_text('X0', 2), StateVector.basis(2), 50, seed=1, workers=1,
    )
    overhead = exact_overhead(template, math.pi / 16)
    for record in result.records:
        assert record.prefactor == pytest.approx(record.sign * overhead)
        assert record.value == pytest.approx(record.prefactor) or record.value == pytest.approx(-record.prefactor)
    assert result.records[0].to_json()['prefactor'] == result.records[0].prefactor
    assert [r.index for r in result.records] == list(range(50))

    reference = run_trotter_reference(template, PauliString.from_text('X0', 2), StateVector.basis(2))
    assert reference.records[0].prefactor == 1.0


@pytest.mark.parametrize('workers', [4, 8])
def test_results_do_not_depend_on_worker_count(two_qubit, workers):
    template = make_template(two_qubit, 0.5, 20)
    args = (template, math.pi / 16, PauliString.from_text('Z0', 2), StateVector.plus_all(2), 24)
    noise = NoiseModel(p1=0.01, p2=0.02, enabled=True)

    serial = run_estimator(*args, 'sampled_shot', noise, 9, workers=1)
    parallel = run_estimator(*args, 'sampled_shot', noise, 9, workers=workers)
    assert serial.to_json() == parallel.to_json()
    assert serial.records == parallel.records


def test_noisy_trotter_reference_needs_shots(two_qubit):
    template = make_template(two_qubit, 0.5, 10)
    noise = NoiseModel(p1=0.01, enabled=True)
    with pytest.raises(BadArgument):
        run_trotter_reference(template, PauliString.from_text('Z0', 2), StateVector.basis(2), noise)

    result = run_trotter_reference(
        template, PauliString.from_text('Z0', 2), StateVector.basis(2), noise, 10, workers=1,
    )
    assert result.shots == 10


def test_statevector_limit(two_qubit, monkeypatch):
    monkeypatch.setattr(config, 'statevector_limit', 1)
    template = make_template(two_qubit, 0.5, 10)
    with pytest.raises(ResourceLimitError):
        run_estimator(template, math.pi / 8, PauliString.from_text('Z0', 2), StateVector.basis(2), 5, workers=1)


def test_shots_must_be_positive(two_qubit):
    template = make_template(two_qubit, 0.5, 10)
    with pytest.raises(BadArgument):
        run_estimator(template, math.pi / 8, PauliString.from_text('Z0', 2), StateVector.basis(2), 0, workers=1)


def test_qdrift_estimator(two_qubit):
    template = make_template(two_qubit, 0.3, 400)
    observable, state = PauliString.from_text('Z0', 2), StateVector.basis(2)
    result = run_qdrift_estimator(template, observable, state, 200, 'per_circuit_expectation', seed=2, workers=1)
    exact = expectation(exact_evolution(two_qubit, 0.3, state), observable)
    assert result.mean == pytest.approx(exact, abs=0.03)


@pytest.mark.parametrize('N', [50, 200])
def test_qdrift_bias_bound(N):
    h = Hamiltonian.from_constants(1, [('X0', 1.0), ('Z0', 1.0)])
    observable, state = PauliString.from_text('Z0'), StateVector.basis(1)
    exact = expectation(exact_evolution(h, 0.5, state), observable)

    result = run_qdrift_estimator(
        make_template(h, 0.5, N), observable, state, 2000, 'per_circuit_expectation', seed=3, workers=1,
    )
    # 2 ||c||_1^2 T^2 / N
    bound = 2 * h.l1_norm() ** 2 * 0.5 ** 2 / N
    assert abs(result.mean - exact) <= bound + 3 * result.std_error


@pytest.mark.slow
def test_noisy_randomized_estimate_beats_shallow_trotter():
    ring = build_spin_ring(7, seed=0)
    observable, state = PauliString.from_text('Y0', 7), StateVector.plus_all(7)
    noise = NoiseModel(p1=1e-4, p2=1e-3, enabled=True)
    reference = expectation(exact_evolution(ring, 2.0, state), observable)

    randomized = run_estimator(
        make_template(ring, 2.0, 1000), math.pi / 64, observable, state, 400, 'per_circuit_expectation', noise, 0,
    )
    trotter = run_trotter_reference(make_template(ring, 2.0, 200), observable, state, noise, 400, seed=0)

    randomized_bias, trotter_bias = abs(randomized.mean - reference), abs(trotter.mean - reference)
    sigma = math.hypot(randomized.std_error, trotter.std_error)
    if abs(trotter_bias - randomized_bias) < 3 * sigma:
        pytest.skip(f'inconclusive: biases {randomized_bias:.4f} and {trotter_bias:.4f} within 3 sigma ({sigma:.4f})')
    assert randomized_bias < trotter_bias


def test_exact_evolution_of_constant_hamiltonian(two_qubit):
    state = random_state(2, seed=6)
    expected = expm(-1j * 0.7 * two_qubit.to_sparse().toarray()) @ state.amplitudes
    np.testing.assert_allclose(exact_evolution(two_qubit, 0.7, state).amplitudes, expected, atol=1e-10)
    assert exact_evolution(two_qubit, 0.0, state).amplitudes == pytest.approx(state.amplitudes)


def test_exact_evolution_of_time_dependent_hamiltonian():
    h = Hamiltonian(1, (
        Term(PauliString.from_text('X0'), Harmonic(1.0, 2.0)),
        Term(PauliString.from_text('Z0'), Constant(0.5)),
    ))
    observable, state = PauliString.from_text('Z0'), StateVector.basis(1)

    exact = expectation(exact_evolution(h, 1.0, state), observable)
    trotter = run_trotter_reference(make_template(h, 1.0, 4000), observable, state).mean
    assert exact == pytest.approx(trotter, abs=2e-3)


def test_exact_evolution_respects_dense_limit():
    h = Hamiltonian.from_constants(config.dense_limit + 1, [(f'Z{config.dense_limit}', 1.0)])
    with pytest.raises(ResourceLimitError):
        exact_evolution(h, 1.0, StateVector.basis(h.n_qubits))


def test_larmor_precession():
    h = Hamiltonian.from_constants(1, [('Z0', 0.7)])
    state = exact_evolution(h, 1.3, StateVector.plus_all(1))
    assert expectation(state, PauliString.from_text('X0')) == pytest.approx(math.cos(2 * 0.7 * 1.3))


@pytest.mark.parametrize('omega, T', [(2.0, 1.0), (99 * math.pi, 0.25)])
def test_driven_precession(omega, T):
    # H = cos(omega t) Z accumulates the phase 2 sin(omega T) / omega
    h = Hamiltonian(1, (Term(PauliString.from_text('Z0'), Harmonic(1.0, omega)),))
    state = exact_evolution(h, T, StateVector.plus_all(1))
    expected = math.cos(2 * math.sin(omega * T) / omega)
    assert expectation(state, PauliString.from_text('X0')) == pytest.approx(expected, abs=1e-7)
