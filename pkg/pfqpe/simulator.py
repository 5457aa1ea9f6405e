"""
Dense state-vector engine used as ground truth for every other module.

Basis index b carries qubit q (q = 0 is the leftmost label letter) on bit
n-1-q, matching PauliString and numpy.kron ordering.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from pfqpe.pauli_core import PauliHamiltonian, PauliString, popcount
from pfqpe.utils import DimensionError, InfeasibleError

DENSE_LIMIT = 14


class BranchAmbiguityError(InfeasibleError):
    pass


def check_dense(n_qubits, limit=None):
    limit = DENSE_LIMIT if limit is None else limit
    if n_qubits > limit:
        raise DimensionError("{} qubits exceed the dense limit of {}".format(n_qubits, limit))


class StateVector():
    """Normalized state of n qubits. Operations return new states."""

    def __init__(self, amplitudes, n_qubits=None, atol=1e-10):
        amplitudes = np.asarray(amplitudes, dtype=complex)
        if n_qubits is None:
            n_qubits = int(round(np.log2(amplitudes.size)))
        if amplitudes.shape != (1 << n_qubits,):
            raise ValueError("amplitude vector of shape {} does not hold {} qubits".format(
                amplitudes.shape, n_qubits))
        norm = np.linalg.norm(amplitudes)
        if abs(norm - 1.0) > atol:
            raise ValueError("state is not normalized (norm {})".format(norm))
        self.amplitudes = amplitudes
        self.n_qubits = n_qubits

    @classmethod
    def basis(cls, n_qubits, index=0):
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(amps, n_qubits)

    @classmethod
    def normalized(cls, amplitudes):
        amplitudes = np.asarray(amplitudes, dtype=complex)
        return cls(amplitudes / np.linalg.norm(amplitudes))

    @classmethod
    def random(cls, n_qubits, rng):
        amps = rng.normal(size=1 << n_qubits) + 1j * rng.normal(size=1 << n_qubits)
        return cls.normalized(amps)

    def inner(self, other):
        """<self|other>"""
        return complex(np.vdot(self.amplitudes, _amps(other)))

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def __repr__(self):
        return 'StateVector(n_qubits={})'.format(self.n_qubits)


def _amps(psi):
    return psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi, dtype=complex)


@dataclass
class SpectralData():
    energies: np.ndarray
    vectors: np.ndarray

    def weights(self, psi):
        """c_k = |<psi_k|psi>|^2"""
        return np.abs(self.vectors.conj().T @ _amps(psi)) ** 2


_PARITY_CACHE = {}


def _basis_parity(n_qubits, z):
    key = (n_qubits, z)
    if key not in _PARITY_CACHE:
        idx = np.arange(1 << n_qubits, dtype=np.int64)
        parity = np.zeros(idx.size, dtype=np.int64)
        zz, k = z, 0
        while zz:
            if zz & 1:
                parity ^= (idx >> k) & 1
            zz >>= 1
            k += 1
        if len(_PARITY_CACHE) > 4096:
            _PARITY_CACHE.clear()
        _PARITY_CACHE[key] = parity
    return _PARITY_CACHE[key]


def pauli_action(P):
    """
    Permutation and phases of P on the computational basis:
    P|b> = phase[b] |b ^ P.x>.
    """
    n = P.n_qubits
    phase = P.sign * (1, 1j, -1, -1j)[P.y_count % 4] * (1 - 2 * _basis_parity(n, P.z))
    target = np.arange(1 << n, dtype=np.int64) ^ P.x
    return target, phase


def apply_pauli(psi, P):
    """
    P applied to a state, a vector or the columns of a matrix.
    """
    arr = _amps(psi)
    target, phase = pauli_action(P)
    out = np.empty_like(arr)
    if arr.ndim == 1:
        out[target] = phase * arr
    else:
        out[target] = phase[:, None] * arr
    return StateVector(out, P.n_qubits) if isinstance(psi, StateVector) else out


def apply_pauli_rotation(psi, P, phi):
    """exp(-i phi P) psi, without building P."""
    arr = _amps(psi)
    if arr.shape[0] != 1 << P.n_qubits:
        raise ValueError("state dimension {} does not match {} qubits".format(arr.shape[0], P.n_qubits))
    out = np.cos(phi) * arr - 1j * np.sin(phi) * apply_pauli(arr, P)
    return StateVector(out, P.n_qubits) if isinstance(psi, StateVector) else out


def hamiltonian_apply(H, psi):
    """H psi as an array."""
    arr = _amps(psi)
    out = H.constant * arr
    for h, P in H.terms:
        out = out + h * apply_pauli(arr, P)
    return out


def hamiltonian_matrix(H, limit=None):
    check_dense(H.n_qubits, limit)
    d = 1 << H.n_qubits
    M = np.zeros((d, d), dtype=complex)
    cols = np.arange(d)
    for h, P in H.terms:
        target, phase = pauli_action(P)
        M[target, cols] += h * phase
    M[cols, cols] += H.constant
    return M


def spectrum(H, limit=None):
    energies, vectors = scipy.linalg.eigh(hamiltonian_matrix(H, limit))
    return SpectralData(energies, vectors)


def ground_state(H, limit=None):
    """
    :return:  (E0, StateVector) for the lowest eigenvalue of H
    """
    data = spectrum(H, limit)
    return float(data.energies[0]), StateVector(data.vectors[:, 0], H.n_qubits)


def exact_evolve(H, t, psi, limit=None, spectral=None):
    """exp(-i t H) psi by eigendecomposition."""
    data = spectral if spectral is not None else spectrum(H, limit)
    coeffs = data.vectors.conj().T @ _amps(psi)
    out = data.vectors @ (np.exp(-1j * t * data.energies) * coeffs)
    return StateVector(out, H.n_qubits)


def signal_g(H, psi, t, limit=None, spectral=None):
    """g(t) = <psi| exp(-i t H) |psi> = sum_k c_k exp(-i E_k t)"""
    data = spectral if spectral is not None else spectrum(H, limit)
    weights = data.weights(psi)
    return complex(np.sum(weights * np.exp(-1j * t * data.energies)))


def _fragment_exponential(fragment, theta, cache):
    """
    Matrix-free action of exp(-i theta F) where F is either a (h, P) term or
    a PauliHamiltonian treated as one lumped piece.
    """
    if isinstance(fragment, PauliHamiltonian):
        key = id(fragment)
        if key not in cache:
            cache[key] = spectrum(fragment)
        data = cache[key]
        phases = np.exp(-1j * theta * data.energies)
        return lambda arr: data.vectors @ (phases[:, None] * (data.vectors.conj().T @ arr))
    h, P = fragment
    return lambda arr: apply_pauli_rotation(arr, P, theta * h)


def hamiltonian_fragments(H):
    return [(h, P) for h, P in H.terms]


def product_formula_unitary(fragments, schedule, delta, limit=None):
    """
    Dense S_p(delta).  Schedule entries are taken in application order:
    the first entry acts first on the state.

    :param fragments:  list of (h, PauliString) terms or PauliHamiltonian pieces
    :param schedule:  ProductFormulaSchedule whose term indices refer to fragments
    :param delta:  step size
    """
    if not fragments:
        raise ValueError("product formula needs at least one fragment")
    first = fragments[0]
    n = first.n_qubits if isinstance(first, PauliHamiltonian) else first[1].n_qubits
    check_dense(n, limit)
    U = np.eye(1 << n, dtype=complex)
    cache = {}
    for index, fraction in schedule.entries:
        U = _fragment_exponential(fragments[index], fraction * delta, cache)(U)
    return U


def formula_ground_energy(H, schedule, delta, fragments=None, limit=None, spectral=None):
    """
    Effective ground energy of S_p(delta) = exp(-i delta H_eff).

    The eigenvalue mu of S_p(delta) whose eigenvector overlaps most with the
    exact ground state gives E_eff = -arg(mu)/delta.
    """
    data = spectral if spectral is not None else spectrum(H.with_terms(H.terms, 0.0), limit)
    radius = float(np.max(np.abs(data.energies)))
    if abs(delta) * radius >= np.pi:
        raise BranchAmbiguityError(
            "delta={} with spectral radius {} wraps the phase past pi".format(delta, radius))
    fragments = hamiltonian_fragments(H) if fragments is None else fragments
    S = product_formula_unitary(fragments, schedule, delta, limit)
    T, Z = scipy.linalg.schur(S, output='complex')
    ground = data.vectors[:, 0]
    overlaps = np.abs(Z.conj().T @ ground) ** 2
    mu = T[np.argmax(overlaps), np.argmax(overlaps)]
    return float(-np.angle(mu) / delta) + H.constant


def formula_operator_error(H, schedule, delta, fragments=None, limit=None, spectral=None):
    """Spectral norm of exp(-i delta H) - S_p(delta), constant excluded."""
    data = spectral if spectral is not None else spectrum(H.with_terms(H.terms, 0.0), limit)
    fragments = hamiltonian_fragments(H) if fragments is None else fragments
    S = product_formula_unitary(fragments, schedule, delta, limit)
    U = (data.vectors * np.exp(-1j * delta * data.energies)) @ data.vectors.conj().T
    return float(np.linalg.norm(U - S, ord=2))


def sector_indices(n_qubits, n_electrons):
    """Basis indices with exactly n_electrons occupied modes."""
    return np.array([b for b in range(1 << n_qubits) if popcount(b) == n_electrons], dtype=np.int64)


def sector_spectrum(H, n_electrons, limit=None):
    """Eigenvalues of a number-conserving H restricted to a fixed particle number."""
    M = hamiltonian_matrix(H, limit)
    idx = sector_indices(H.n_qubits, n_electrons)
    return scipy.linalg.eigvalsh(M[np.ix_(idx, idx)])


def sector_ground_state(H, n_electrons, limit=None):
    """
    Lowest eigenpair within the n_electrons sector, embedded in the full space.
    """
    M = hamiltonian_matrix(H, limit)
    idx = sector_indices(H.n_qubits, n_electrons)
    if idx.size == 0:
        raise ValueError("no basis states with {} electrons on {} qubits".format(n_electrons, H.n_qubits))
    energies, vectors = scipy.linalg.eigh(M[np.ix_(idx, idx)])
    amps = np.zeros(1 << H.n_qubits, dtype=complex)
    amps[idx] = vectors[:, 0]
    return float(energies[0]), StateVector(amps, H.n_qubits)


def replay(circuit, psi):
    """
    Apply the gates of a SampledCircuit to a state, first gate first.
    The normalization B is not applied.
    """
    arr = _amps(psi)
    for gate in circuit.gates:
        angle = getattr(gate, 'angle', None)
        if angle is None:
            arr = apply_pauli(arr, gate.pauli)
        else:
            arr = apply_pauli_rotation(arr, gate.pauli, angle)
    return StateVector(arr, len(arr).bit_length() - 1)
