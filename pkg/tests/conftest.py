import os

import numpy as np
import pytest

from pfqpe.pauli_core import PauliHamiltonian, PauliString
from pfqpe.simulator import StateVector

DATA_DIR = os.path.join(os.path.dirname(__file__), os.pardir, 'pfqpe', 'data')


def random_pauli(n_qubits, rng, allow_identity=False):
    while True:
        x = int(rng.integers(0, 1 << n_qubits))
        z = int(rng.integers(0, 1 << n_qubits))
        if allow_identity or x or z:
            return PauliString(n_qubits, x, z)


def random_hamiltonian(n_qubits, n_terms, rng, constant=0.0):
    """Distinct random non-identity Pauli terms with coefficients in [-1, 1]."""
    seen = set()
    terms = []
    while len(terms) < n_terms:
        P = random_pauli(n_qubits, rng)
        if (P.x, P.z) in seen:
            continue
        seen.add((P.x, P.z))
        h = rng.uniform(-1.0, 1.0)
        terms.append((h if abs(h) > 0.05 else 0.5, P))
    return PauliHamiltonian(n_qubits, tuple(terms), constant)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def make_hamiltonian():
    return random_hamiltonian


@pytest.fixture
def make_state():
    return StateVector.random


@pytest.fixture
def data_path():
    return lambda name: os.path.join(DATA_DIR, name)
