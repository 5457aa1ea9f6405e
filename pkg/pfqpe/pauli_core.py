"""
Pauli-string algebra and the weighted Pauli Hamiltonian.

A Pauli string is stored in symplectic form: two integer bitmasks (X part and
Z part) plus a sign.  Letter q of the label (q = 0 is the leftmost letter)
lives on bit n_qubits-1-q, so that dense matrices built with Kronecker
products follow the order of the label.

    P = sign * i^{popcount(x & z)} * X^x Z^z
"""
from dataclasses import dataclass, field
from typing import NamedTuple, Tuple
from functools import reduce

import numpy as np

_SINGLE = {
    'I': np.eye(2, dtype=complex),
    'X': np.array([[0, 1], [1, 0]], dtype=complex),
    'Y': np.array([[0, -1j], [1j, 0]], dtype=complex),
    'Z': np.array([[1, 0], [0, -1]], dtype=complex),
}
_PHASES = (1, 1j, -1, -1j)


def popcount(value):
    return bin(value).count('1')


@dataclass(frozen=True)
class PauliString():
    n_qubits: int
    x: int = 0
    z: int = 0
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("Pauli sign must be +1 or -1, got {}".format(self.sign))
        limit = 1 << self.n_qubits
        if self.x >= limit or self.z >= limit or self.x < 0 or self.z < 0:
            raise ValueError("Pauli masks do not fit in {} qubits".format(self.n_qubits))

    @classmethod
    def from_label(cls, label):
        """
        Build a Pauli string from a label such as 'XIZ' or '-YY'.
        :param label:  letters over {I,X,Y,Z}, optionally prefixed by + or -
        :return:  PauliString
        """
        sign = 1
        if label.startswith(('+', '-')):
            sign = -1 if label[0] == '-' else 1
            label = label[1:]
        n = len(label)
        x, z = 0, 0
        for q, letter in enumerate(label.upper()):
            bit = 1 << (n - 1 - q)
            if letter == 'X':
                x |= bit
            elif letter == 'Y':
                x |= bit
                z |= bit
            elif letter == 'Z':
                z |= bit
            elif letter != 'I':
                raise ValueError("Invalid Pauli letter {!r} in {!r}".format(letter, label))
        return cls(n, x, z, sign)

    @classmethod
    def identity(cls, n_qubits):
        return cls(n_qubits)

    @property
    def letters(self):
        out = []
        for q in range(self.n_qubits):
            bit = 1 << (self.n_qubits - 1 - q)
            out.append('IXZY'[bool(self.x & bit) + 2 * bool(self.z & bit)])
        return ''.join(out)

    @property
    def label(self):
        return ('-' if self.sign < 0 else '') + self.letters

    @property
    def support(self):
        return popcount(self.x | self.z)

    @property
    def y_count(self):
        return popcount(self.x & self.z)

    def negate(self):
        return PauliString(self.n_qubits, self.x, self.z, -self.sign)

    def is_identity(self):
        return self.x == 0 and self.z == 0

    def to_matrix(self):
        """Dense 2^n x 2^n matrix; only for small n."""
        mats = [_SINGLE[c] for c in self.letters] or [np.ones((1, 1), dtype=complex)]
        return self.sign * reduce(np.kron, mats)

    def __str__(self):
        return self.label


def _check_sizes(P, Q):
    if P.n_qubits != Q.n_qubits:
        raise ValueError("Pauli strings act on {} and {} qubits".format(P.n_qubits, Q.n_qubits))


def pauli_mul(P, Q):
    """
    Product of two Pauli strings.

    :param P:  left factor
    :param Q:  right factor
    :return:  (phase, R) with phase in {1, -1, 1j, -1j} and R an unsigned
              Pauli string such that P @ Q == phase * R
    """
    _check_sizes(P, Q)
    x3, z3 = P.x ^ Q.x, P.z ^ Q.z
    power = (popcount(P.x & P.z) + popcount(Q.x & Q.z)
             + 2 * popcount(P.z & Q.x) - popcount(x3 & z3)) % 4
    phase = _PHASES[power] * P.sign * Q.sign
    return phase, PauliString(P.n_qubits, x3, z3, 1)


def commutes(P, Q):
    _check_sizes(P, Q)
    return popcount((P.x & Q.z) ^ (P.z & Q.x)) % 2 == 0


@dataclass(frozen=True)
class PauliHamiltonian():
    """
    H = constant * I + sum_l h_l P_l

    The identity offset is kept apart from the terms and does not count
    towards the weight.
    """
    n_qubits: int
    terms: Tuple[Tuple[float, PauliString], ...] = field(default_factory=tuple)
    constant: float = 0.0

    def __post_init__(self):
        terms = tuple((float(h), P) for h, P in self.terms)
        for _, P in terms:
            if P.n_qubits != self.n_qubits:
                raise ValueError("Term {} does not act on {} qubits".format(P.label, self.n_qubits))
        object.__setattr__(self, 'terms', terms)

    @classmethod
    def from_labels(cls, pairs, n_qubits=None, constant=0.0):
        """
        :param pairs:  iterable of (coefficient, label)
        """
        terms = tuple((h, PauliString.from_label(s)) for h, s in pairs)
        if n_qubits is None:
            if not terms:
                raise ValueError("n_qubits is required for an empty Hamiltonian")
            n_qubits = terms[0][1].n_qubits
        return cls(n_qubits, terms, constant)

    def __len__(self):
        return len(self.terms)

    @property
    def coefficients(self):
        return np.array([h for h, _ in self.terms], dtype=float)

    @property
    def paulis(self):
        return [P for _, P in self.terms]

    def with_terms(self, terms, constant=None):
        return PauliHamiltonian(self.n_qubits, tuple(terms),
                                self.constant if constant is None else constant)

    def scaled(self, factor):
        return self.with_terms([(factor * h, P) for h, P in self.terms], self.constant * factor)


def weight_lambda(H):
    return float(sum(abs(h) for h, _ in H.terms))


class NormalizedHamiltonian(NamedTuple):
    lam: float
    probabilities: np.ndarray
    paulis: Tuple[PauliString, ...]


def normalize(H):
    """
    Absorb coefficient signs into the Pauli strings.

    :param H:  PauliHamiltonian with nonzero weight
    :return:  NormalizedHamiltonian(lam, probabilities, paulis), lam * sum p_l P_l == H - constant
    """
    terms = [(h, P) for h, P in H.terms if h != 0.0]
    lam = float(sum(abs(h) for h, _ in terms))
    if lam <= 0.0:
        raise ValueError("Cannot normalize a Hamiltonian with zero weight")
    probabilities = np.array([abs(h) for h, _ in terms]) / lam
    paulis = tuple(P if h > 0 else P.negate() for h, P in terms)
    return NormalizedHamiltonian(lam, probabilities, paulis)


def truncate(H, weight_budget):
    """
    Drop the smallest terms while the dropped weight stays within budget.
    Surviving terms keep their order.
    """
    if weight_budget < 0:
        raise ValueError("weight_budget must be non-negative")
    if weight_budget == 0:
        return H
    order = sorted(range(len(H.terms)), key=lambda k: abs(H.terms[k][0]))
    dropped = set()
    total = 0.0
    for k in order:
        h = abs(H.terms[k][0])
        if total + h > weight_budget:
            break
        total += h
        dropped.add(k)
    return H.with_terms([t for k, t in enumerate(H.terms) if k not in dropped])


def lexicographic_sort(H):
    # I < X < Y < Z coincides with the character order
    return H.with_terms(sorted(H.terms, key=lambda t: t[1].letters))


def combine_terms(H, tol=0.0):
    """
    Merge repeated Pauli strings and fold identity terms into the constant.
    Terms with |h| <= tol after merging are discarded.
    """
    merged = {}
    constant = H.constant
    for h, P in H.terms:
        if P.is_identity():
            constant += P.sign * h
            continue
        key = (P.x, P.z)
        merged[key] = merged.get(key, 0.0) + P.sign * h
    terms = [(h, PauliString(H.n_qubits, x, z)) for (x, z), h in merged.items() if abs(h) > tol]
    return PauliHamiltonian(H.n_qubits, tuple(terms), constant)


def symplectic_arrays(H):
    """
    Boolean X and Z matrices of shape (L, n_qubits), columns in label order.
    """
    n = H.n_qubits
    L = len(H.terms)
    xs = np.zeros((L, n), dtype=bool)
    zs = np.zeros((L, n), dtype=bool)
    for k, (_, P) in enumerate(H.terms):
        for q in range(n):
            bit = 1 << (n - 1 - q)
            xs[k, q] = bool(P.x & bit)
            zs[k, q] = bool(P.z & bit)
    return xs, zs
