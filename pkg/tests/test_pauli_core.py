import numpy as np
import pytest

from pfqpe.pauli_core import (PauliHamiltonian, PauliString, combine_terms, commutes,
                              lexicographic_sort, normalize, pauli_mul, symplectic_arrays,
                              truncate, weight_lambda)
from pfqpe.simulator import hamiltonian_matrix

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


def test_label_round_trip():
    for label in ['I', 'XYZ', '-ZZI', 'IYXZ']:
        P = PauliString.from_label(label)
        assert P.label == label
    assert PauliString.from_label('+XY').label == 'XY'
    with pytest.raises(ValueError):
        PauliString.from_label('XQ')


def test_to_matrix_follows_label_order():
    np.testing.assert_allclose(PauliString.from_label('XZ').to_matrix(), np.kron(X, Z))
    np.testing.assert_allclose(PauliString.from_label('-YI').to_matrix(), -np.kron(Y, np.eye(2)))


def test_support_and_y_count():
    P = PauliString.from_label('XIYZ')
    assert P.support == 3
    assert P.y_count == 1
    assert PauliString.identity(4).is_identity()


def test_single_qubit_products():
    phase, R = pauli_mul(PauliString.from_label('X'), PauliString.from_label('Y'))
    assert phase == 1j and R.letters == 'Z'
    phase, R = pauli_mul(PauliString.from_label('Z'), PauliString.from_label('X'))
    assert phase == 1j and R.letters == 'Y'


def test_xz_zx_product_matches_dense():
    P, Q = PauliString.from_label('XZ'), PauliString.from_label('ZX')
    phase, R = pauli_mul(P, Q)
    np.testing.assert_allclose(phase * R.to_matrix(), P.to_matrix() @ Q.to_matrix(), atol=1e-14)


def test_products_match_dense(rng, make_hamiltonian):
    for _ in range(200):
        H = make_hamiltonian(3, 2, rng)
        (_, P), (_, Q) = H.terms
        if rng.random() < 0.5:
            P = P.negate()
        phase, R = pauli_mul(P, Q)
        assert R.sign == 1
        np.testing.assert_allclose(phase * R.to_matrix(), P.to_matrix() @ Q.to_matrix(), atol=1e-14)


def test_square_is_identity(rng, make_hamiltonian):
    for _, P in make_hamiltonian(4, 20, rng).terms:
        phase, R = pauli_mul(P, P)
        assert phase == 1 and R.is_identity()


def test_commutes_matches_dense_commutator(rng, make_hamiltonian):
    for k in range(100):
        (_, P), (_, Q) = make_hamiltonian(6 if k % 10 == 0 else 3, 2, rng).terms
        A, B = P.to_matrix(), Q.to_matrix()
        norm = np.linalg.norm(A @ B - B @ A, ord=2)
        assert commutes(P, Q) == (norm < 1e-12)
        assert np.isclose(norm, 0.0) or np.isclose(norm, 2.0)


def test_mismatched_sizes_rejected():
    with pytest.raises(ValueError):
        pauli_mul(PauliString.from_label('X'), PauliString.from_label('XX'))
    with pytest.raises(ValueError):
        PauliHamiltonian(2, ((1.0, PauliString.from_label('XXX')),))


def test_weight_lambda_ignores_constant():
    H = PauliHamiltonian.from_labels([(0.5, 'XI'), (-0.25, 'ZZ')], constant=3.0)
    assert weight_lambda(H) == 0.75


def test_normalize_small_example():
    H = PauliHamiltonian.from_labels([(0.5, 'X'), (-0.25, 'Z')])
    norm = normalize(H)
    assert norm.lam == 0.75
    np.testing.assert_allclose(norm.probabilities, [2 / 3, 1 / 3])
    assert [P.label for P in norm.paulis] == ['X', '-Z']


def test_normalize_reconstructs_hamiltonian(rng, make_hamiltonian):
    H = make_hamiltonian(3, 6, rng, constant=0.7)
    norm = normalize(H)
    assert abs(norm.probabilities.sum() - 1.0) < 1e-12
    rebuilt = norm.lam * sum(p * P.to_matrix() for p, P in zip(norm.probabilities, norm.paulis))
    np.testing.assert_allclose(rebuilt + 0.7 * np.eye(8), hamiltonian_matrix(H), atol=1e-12)


def test_normalize_zero_hamiltonian():
    with pytest.raises(ValueError):
        normalize(PauliHamiltonian(2, (), 1.0))


def test_truncate_drops_smallest_first():
    H = PauliHamiltonian.from_labels([(1.0, 'XX'), (0.01, 'ZI'), (-0.5, 'YY'), (0.02, 'IZ')])
    assert truncate(H, 0.0) is H
    assert [P.letters for P in truncate(H, 0.025).paulis] == ['XX', 'YY', 'IZ']
    assert [P.letters for P in truncate(H, 0.035).paulis] == ['XX', 'YY']
    with pytest.raises(ValueError):
        truncate(H, -1.0)


def test_truncate_operator_norm_within_budget(rng, make_hamiltonian):
    for budget in (0.1, 0.5, 1.5):
        H = make_hamiltonian(3, 8, rng)
        T = truncate(H, budget)
        diff = np.linalg.norm(hamiltonian_matrix(H) - hamiltonian_matrix(T), ord=2)
        assert diff <= budget + 1e-12


def test_lexicographic_sort():
    H = PauliHamiltonian.from_labels([(1.0, 'ZI'), (2.0, 'XY'), (3.0, 'IZ'), (4.0, 'YX')])
    assert [P.letters for P in lexicographic_sort(H).paulis] == ['IZ', 'XY', 'YX', 'ZI']


def test_combine_terms():
    H = PauliHamiltonian.from_labels([(1.0, 'XZ'), (0.5, '-XZ'), (0.25, 'II'), (0.3, 'ZZ'), (-0.3, 'ZZ')],
                                     constant=1.0)
    C = combine_terms(H)
    assert C.constant == 1.25
    assert [(h, P.label) for h, P in C.terms] == [(0.5, 'XZ')]


def test_symplectic_arrays():
    H = PauliHamiltonian.from_labels([(1.0, 'XYZ'), (-2.0, '-IZX')])
    xs, zs = symplectic_arrays(H)
    np.testing.assert_array_equal(xs, [[1, 1, 0], [0, 0, 1]])
    np.testing.assert_array_equal(zs, [[0, 1, 1], [0, 1, 0]])
