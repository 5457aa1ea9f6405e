from io import StringIO
from math import factorial
import itertools

import numpy as np
import pytest
import scipy.linalg

from pfqpe.formulas import (DeterministicExp, PauliApply, PauliRotation, SampledCircuit,
                            enumerate_rte_segment, normalized_operator, partial_mean_apply,
                            partial_normalization, partial_plan, partial_random_sample,
                            partial_split, qdrift_expectation, qdrift_sample, rte_mean_apply,
                            rte_normalization, rte_sample, rte_truncation_bound, suzuki_schedule)
from pfqpe.pauli_core import PauliHamiltonian, normalize
from pfqpe.simulator import (apply_pauli, apply_pauli_rotation, hamiltonian_fragments,
                             hamiltonian_matrix, product_formula_unitary, replay)
from pfqpe.utils import ConfigError, ParseError


def gate_matrix(gates, n_qubits):
    """Dense product of gates given in application order."""
    U = np.eye(1 << n_qubits, dtype=complex)
    for g in gates:
        if isinstance(g, PauliApply):
            U = apply_pauli(U, g.pauli)
        else:
            U = apply_pauli_rotation(U, g.pauli, g.angle)
    return U


@pytest.mark.parametrize('p', [1, 2, 4, 6])
def test_schedule_fractions_sum_to_one(p):
    schedule = suzuki_schedule(p, 3)
    np.testing.assert_allclose(schedule.fraction_sums(), np.ones(3), atol=1e-13)
    assert len(schedule.entries) == (3 if p == 1 else 2 * 3 * 5 ** (p // 2 - 1))
    if p > 1:
        assert schedule.is_palindromic()


def test_schedule_stage_counts():
    assert [suzuki_schedule(p, 1).n_stages for p in (1, 2, 4, 6)] == [1, 2, 10, 50]


def test_schedule_rejects_odd_orders():
    for p in (0, 3, 5):
        with pytest.raises(ConfigError):
            suzuki_schedule(p, 2)


def test_schedule_hr_slot():
    schedule = suzuki_schedule(2, 2, include_HR_slot=True)
    assert schedule.n_terms == 3 and schedule.hr_slot == 2
    assert [i for i, _ in schedule.entries] == [0, 1, 2, 2, 1, 0]


@pytest.mark.parametrize('p', [2, 4])
def test_symmetric_formula_is_time_reversible(p, rng, make_hamiltonian):
    H = make_hamiltonian(2, 4, rng)
    fragments = hamiltonian_fragments(H)
    schedule = suzuki_schedule(p, len(fragments))
    S = product_formula_unitary(fragments, schedule, 0.2)
    np.testing.assert_allclose(S @ S.conj().T, np.eye(4), atol=1e-10)
    np.testing.assert_allclose(product_formula_unitary(fragments, schedule, -0.2), S.conj().T, atol=1e-10)


def test_qdrift_index_frequencies(rng):
    H = PauliHamiltonian.from_labels([(0.5, 'XI'), (-0.3, 'IZ'), (0.2, 'YY')])
    circuit = qdrift_sample(H, 0.1, 100000, rng)
    norm = normalize(H)
    counts = np.array([sum(1 for g in circuit.gates if g.pauli == P) for P in norm.paulis])
    sigma = np.sqrt(100000 * norm.probabilities * (1 - norm.probabilities))
    assert np.all(np.abs(counts - 100000 * norm.probabilities) < 4 * sigma)
    assert all(abs(g.angle - np.arctan(0.1)) < 1e-15 for g in circuit.gates)


def test_qdrift_enumeration_matches_closed_form(rng, make_hamiltonian, make_state):
    for instance in range(50):
        n = 1 + instance % 4
        L = min(1 + instance % 4, 4 ** n - 1)
        r = 1 + (instance // 4) % 4
        tau = (0.1, 0.3)[instance % 2]
        H = make_hamiltonian(n, L, rng)
        psi = make_state(n, rng)
        norm = normalize(H)
        phi = np.arctan(tau)
        total = 0j
        for seq in itertools.product(range(L), repeat=r):
            weight = np.prod(norm.probabilities[list(seq)])
            v = psi.amplitudes
            for k in seq:
                v = apply_pauli_rotation(v, norm.paulis[k], phi)
            total += weight * np.vdot(psi.amplitudes, v)
        assert abs(total - qdrift_expectation(H, psi, tau, r)) < 1e-10


def test_qdrift_three_terms_two_steps(rng, make_state):
    H = PauliHamiltonian.from_labels([(0.6, 'XZ'), (-0.3, 'ZI'), (0.1, 'YY')])
    psi = make_state(2, rng)
    expected = np.vdot(psi.amplitudes, np.linalg.matrix_power(
        np.eye(4) - 0.2j * hamiltonian_matrix(normalized_operator(H)), 2) @ psi.amplitudes) / (1 + 0.04)
    assert abs(qdrift_expectation(H, psi, 0.2, 2) - expected) < 1e-12


def test_qdrift_monte_carlo(rng, make_state):
    H = PauliHamiltonian.from_labels([(0.6, 'XZ'), (-0.3, 'ZI'), (0.4, 'YY')])
    psi = make_state(2, rng)
    values = np.array([np.vdot(psi.amplitudes, replay(qdrift_sample(H, 0.25, 4, rng), psi).amplitudes)
                       for _ in range(4000)])
    mean = values.mean()
    sigma = np.sqrt(np.var(values.real) + np.var(values.imag)) / np.sqrt(values.size)
    assert abs(mean - qdrift_expectation(H, psi, 0.25, 4)) < 5 * sigma + 1e-12


def test_rte_normalization():
    assert rte_normalization(0.0, 8) == 1.0
    for tau in (0.05, 0.3, 1.0):
        assert 1.0 <= rte_normalization(tau, 8) <= np.exp(tau ** 2)
    expected = sum(0.1 ** n / factorial(n) * np.sqrt(1 + (0.1 / (n + 1)) ** 2) for n in range(0, 64, 2))
    assert abs(rte_normalization(0.1, 8) - expected) < 1e-14
    with pytest.raises(ConfigError):
        rte_normalization(0.1, 3)


def segment_mean(H, tau, n_max):
    segments, B_seg = enumerate_rte_segment(H, tau, n_max)
    n = H.n_qubits
    return B_seg * sum(q * gate_matrix(gates, n) for q, gates in segments)


def test_rte_enumeration_single_segment(rng, make_state):
    H = PauliHamiltonian.from_labels([(0.7, 'XZ'), (-0.3, 'ZY')])
    psi = make_state(2, rng)
    tau = 0.2
    mean = segment_mean(H, tau, 2)
    exact = scipy.linalg.expm(-1j * tau * hamiltonian_matrix(normalized_operator(H)))
    value = np.vdot(psi.amplitudes, mean @ psi.amplitudes)
    target = np.vdot(psi.amplitudes, exact @ psi.amplitudes)
    assert abs(value - target) <= rte_truncation_bound(tau, 2) + 1e-14


@pytest.mark.parametrize('tau', [0.1, 0.3, -0.3])
@pytest.mark.parametrize('r', [1, 2])
def test_rte_enumeration_is_unbiased(tau, r, rng, make_state):
    H = PauliHamiltonian.from_labels([(0.8, 'XY'), (0.5, 'ZI')])
    psi = make_state(2, rng)
    mean = np.linalg.matrix_power(segment_mean(H, tau, 6), r)
    exact = scipy.linalg.expm(-1j * tau * r * hamiltonian_matrix(normalized_operator(H)))
    value = np.vdot(psi.amplitudes, mean @ psi.amplitudes)
    target = np.vdot(psi.amplitudes, exact @ psi.amplitudes)
    assert abs(value - target) <= 2 * r * rte_truncation_bound(abs(tau), 6)
    np.testing.assert_allclose(mean @ psi.amplitudes,
                               rte_mean_apply(H, tau, r, psi.amplitudes, 6), atol=1e-12)


def test_rte_sample_structure(rng):
    H = PauliHamiltonian.from_labels([(0.8, 'XY'), (0.5, 'ZI'), (-0.2, 'YY')])
    circuit = rte_sample(H, 0.4, 7, 8, rng)
    assert circuit.rotation_count == 7
    assert abs(circuit.normalization - rte_normalization(0.4, 8) ** 7) < 1e-12
    assert circuit.pauli_count % 2 == 0
    for n_max in (3, -2):
        with pytest.raises(ConfigError):
            rte_sample(H, 0.4, 1, n_max, rng)


def test_partial_split_ranks_by_weight():
    H = PauliHamiltonian.from_labels([(0.1, 'ZI'), (-0.9, 'XX'), (0.5, 'IZ'), (0.5, 'IX')])
    split = partial_split(H, 2)
    assert [P.letters for P in split.deterministic.paulis] == ['XX', 'IX']
    assert [P.letters for P in split.randomized.paulis] == ['IZ', 'ZI']
    assert abs(split.lam_D - 1.4) < 1e-15 and abs(split.lam_R - 0.6) < 1e-15
    assert split.L_D == 2
    with pytest.raises(ConfigError):
        partial_split(H, 5)


def test_partial_plan_merges_randomized_slot():
    H = PauliHamiltonian.from_labels([(0.9, 'XX'), (0.1, 'ZI'), (0.05, 'IZ')])
    split = partial_split(H, 1)
    plan = partial_plan(split, 2, 0.5, 3, 2.0)
    assert [(i, f) for i, f, _ in plan] == [(0, 0.5), (1, 1.0), (0, 0.5)]
    expected = int(np.ceil(2.0 * split.lam_R ** 2 * 0.5 * 0.5 * 3))
    assert plan[1][2] == max(1, expected)
    assert plan[0][2] is None
    for p in (1, 3):
        with pytest.raises(ConfigError):
            partial_plan(split, p, 0.5, 1, 2.0)


def test_partial_single_slot_enumeration(rng, make_state):
    H = PauliHamiltonian.from_labels([(0.9, 'XZ'), (0.4, 'ZY')])
    split = partial_split(H, 1)
    psi = make_state(2, rng)
    delta, n_max = 0.3, 2
    plan = partial_plan(split, 2, delta, 1, 2.0)
    assert [r for _, _, r in plan] == [None, 1, None]
    h, P = split.deterministic.terms[0]
    D = scipy.linalg.expm(-0.5j * delta * h * P.to_matrix())
    R = segment_mean(split.randomized, split.lam_R * delta, n_max)
    expected = np.vdot(psi.amplitudes, D @ R @ D @ psi.amplitudes)
    value = np.vdot(psi.amplitudes, partial_mean_apply(split, 2, delta, 1, 2.0, psi.amplitudes, n_max))
    assert abs(value - expected) < 1e-12


def partial_dense_mean(split, delta, s, kappa, n_max):
    """B E[W] by enumerating every RTE slot exhaustively."""
    n = split.deterministic.n_qubits
    U = np.eye(1 << n, dtype=complex)
    for _ in range(s):
        for index, fraction, r_i in partial_plan(split, 2, delta, s, kappa):
            if r_i is None:
                h, P = split.deterministic.terms[index]
                U = scipy.linalg.expm(-1j * fraction * delta * h * P.to_matrix()) @ U
            else:
                tau = split.lam_R * fraction * delta / r_i
                U = np.linalg.matrix_power(segment_mean(split.randomized, tau, n_max), r_i) @ U
    return U


@pytest.mark.parametrize('s', [1, 2])
def test_partial_enumeration_matches_split_formula(s, rng, make_hamiltonian, make_state):
    H = make_hamiltonian(3, 4, rng)
    split = partial_split(H, 2)
    psi = make_state(3, rng)
    delta, kappa, n_max = 0.2, 2.0, 4
    value = np.vdot(psi.amplitudes, partial_dense_mean(split, delta, s, kappa, n_max) @ psi.amplitudes)
    fragments = hamiltonian_fragments(split.deterministic) + [split.randomized]
    S = product_formula_unitary(fragments, suzuki_schedule(2, 2, include_HR_slot=True), delta)
    target = np.vdot(psi.amplitudes, np.linalg.matrix_power(S, s) @ psi.amplitudes)
    bound = 0.0
    for _ in range(s):
        for _, fraction, r_i in partial_plan(split, 2, delta, s, kappa):
            if r_i is not None:
                bound += 2 * r_i * rte_truncation_bound(split.lam_R * fraction * delta / r_i, n_max)
    assert abs(value - target) <= bound + 1e-12
    mean = partial_mean_apply(split, 2, delta, s, kappa, psi.amplitudes, n_max)
    assert abs(np.vdot(psi.amplitudes, mean) - value) < 1e-12


def test_partial_sample_normalization_and_gates(rng, make_hamiltonian):
    H = make_hamiltonian(3, 5, rng)
    split = partial_split(H, 2)
    circuit = partial_random_sample(split, 2, 0.3, 2, 2.0, rng)
    assert abs(circuit.normalization - partial_normalization(split, 2, 0.3, 2, 2.0)) < 1e-12
    det = [g for g in circuit.gates if isinstance(g, DeterministicExp)]
    assert len(det) == 2 * 2 * 2
    assert {g.index for g in det} == {0, 1}


def test_partial_monte_carlo_mean(rng, make_hamiltonian, make_state):
    H = make_hamiltonian(2, 4, rng)
    split = partial_split(H, 2)
    psi = make_state(2, rng)
    values = np.array([np.vdot(psi.amplitudes, replay(
        partial_random_sample(split, 2, 0.25, 1, 2.0, rng), psi).amplitudes) for _ in range(3000)])
    B = partial_normalization(split, 2, 0.25, 1, 2.0)
    expected = np.vdot(psi.amplitudes, partial_mean_apply(split, 2, 0.25, 1, 2.0, psi.amplitudes)) / B
    sigma = np.sqrt(np.var(values.real) + np.var(values.imag)) / np.sqrt(values.size)
    assert abs(values.mean() - expected) < 5 * sigma + 1e-12


def test_fully_deterministic_split_has_no_random_gates(rng, make_hamiltonian):
    H = make_hamiltonian(2, 3, rng)
    split = partial_split(H, 3)
    circuit = partial_random_sample(split, 2, 0.1, 1, 2.0, rng)
    assert all(isinstance(g, DeterministicExp) for g in circuit.gates)
    assert circuit.normalization == 1.0


def test_circuit_text_round_trip(rng):
    H = PauliHamiltonian.from_labels([(0.8, 'XY'), (-0.5, 'ZI')])
    split = partial_split(H, 1)
    circuit = partial_random_sample(split, 2, 0.3, 1, 2.0, 11)
    buffer = StringIO()
    circuit.write(buffer)
    buffer.seek(0)
    assert SampledCircuit.read(buffer) == circuit


def test_circuit_read_errors():
    with pytest.raises(ParseError):
        SampledCircuit.read(StringIO('R XY 0.1\n'))
    with pytest.raises(ParseError):
        SampledCircuit.read(StringIO('# circuit n_qubits=2 normalization=1.0 seed=None\nQ XY\n'))
    with pytest.raises(ParseError):
        SampledCircuit.read(StringIO('# circuit n_qubits=2 normalization=1.0 seed=None\nP XYZ\n'))


def test_circuit_inverse_reverses_rotations():
    gates = (PauliRotation(normalize(PauliHamiltonian.from_labels([(1.0, 'XX')])).paulis[0], 0.4),)
    inverse = SampledCircuit(2, gates).inverse()
    assert inverse.gates[0].angle == -0.4
