"""
Electronic-structure input and Hamiltonian representation transforms.

Tensors follow the chemists' convention

    H = core + sum_{pq,s} h_pq a+_ps a_qs
             + 1/2 sum_{pqrs,st} h_pqrs a+_ps a+_rt a_st a_qs

and are mapped to qubits with Jordan-Wigner on interleaved spin orbitals
(orbital p, spin s at mode 2p+s), a_j = (g_j0 + i g_j1)/2 with
g_j0 = Z..Z X_j and g_j1 = Z..Z Y_j.
"""
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import List, Optional
import warnings

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse

from pfqpe.pauli_core import PauliHamiltonian, PauliString, pauli_mul
from pfqpe.utils import (ConfigError, ConvergenceWarning, InfeasibleError, ParseError,
                         iter_data_lines)

TENSOR_FORMAT = 'pfqpe-tensors'
TENSOR_VERSION = 1


class FactorizationError(InfeasibleError):
    pass


@dataclass(frozen=True)
class FermionTensors():
    one_body: np.ndarray
    two_body: np.ndarray
    n_electrons: int
    core_energy: float = 0.0

    def __post_init__(self):
        h1 = np.asarray(self.one_body, dtype=float)
        h2 = np.asarray(self.two_body, dtype=float)
        N = h1.shape[0]
        if h1.shape != (N, N) or h2.shape != (N, N, N, N):
            raise ConfigError("tensor shapes {} and {} do not match".format(h1.shape, h2.shape))
        object.__setattr__(self, 'one_body', h1)
        object.__setattr__(self, 'two_body', h2)

    @property
    def n_orbitals(self):
        return self.one_body.shape[0]

    @property
    def n_qubits(self):
        return 2 * self.n_orbitals

    def pair_matrix(self):
        N = self.n_orbitals
        return self.two_body.reshape(N * N, N * N)

    def symmetry_error(self):
        """Largest violation of the one-body and eight-fold two-body symmetries."""
        h1, h2 = self.one_body, self.two_body
        errs = [np.max(np.abs(h1 - h1.T), initial=0.0)]
        for perm in ('qprs', 'pqsr', 'rspq'):
            errs.append(np.max(np.abs(h2 - np.einsum('pqrs->' + perm, h2)), initial=0.0))
        return float(max(errs))


def random_tensors(n_orbitals, n_electrons, rng, rank=None, scale=1.0):
    """Random symmetric one-body and PSD eight-fold symmetric two-body tensors."""
    N = n_orbitals
    a = rng.normal(size=(N, N))
    h1 = scale * (a + a.T) / 2
    rank = N * (N + 1) // 2 if rank is None else rank
    h2 = np.zeros((N, N, N, N))
    for _ in range(rank):
        b = rng.normal(size=(N, N))
        b = (b + b.T) / 2
        h2 += scale * 0.5 * np.einsum('pq,rs->pqrs', b, b)
    return FermionTensors(h1, h2, n_electrons, 0.0)


def _mode_mask(n_qubits, q):
    return 1 << (n_qubits - 1 - q)


def majorana(n_qubits, mode, kind):
    """g_{mode,kind} under Jordan-Wigner."""
    z = 0
    for q in range(mode):
        z |= _mode_mask(n_qubits, q)
    x = _mode_mask(n_qubits, mode)
    if kind == 1:
        z |= x
    return PauliString(n_qubits, x, z)


@lru_cache(maxsize=8)
def _majorana_design(N):
    """
    Sparse maps from vec(T') and vec(h_pqrs) to Pauli coefficients of
    (i/2) sum T'_pq g_p0 g_q1 - 1/8 sum h_pqrs g_p0 g_q1 g_r0 g_s1,
    spins summed.
    """
    n = 2 * N
    gam = [[majorana(n, j, b) for b in (0, 1)] for j in range(n)]
    rows = {}

    def row(P):
        key = (P.x, P.z)
        if key not in rows:
            rows[key] = len(rows)
        return rows[key]

    row(PauliString(n))
    pairs = {}
    one_r, one_c, one_v = [], [], []
    for p in range(N):
        for q in range(N):
            for s in (0, 1):
                phase, P = pauli_mul(gam[2 * p + s][0], gam[2 * q + s][1])
                pairs[p, q, s] = (phase, P)
                one_r.append(row(P))
                one_c.append(p * N + q)
                one_v.append(0.5j * phase)
    two_r, two_c, two_v = [], [], []
    for (p, q, _), (ph1, P1) in pairs.items():
        for (r, s, _), (ph2, P2) in pairs.items():
            ph3, P = pauli_mul(P1, P2)
            two_r.append(row(P))
            two_c.append(((p * N + q) * N + r) * N + s)
            two_v.append(-0.125 * ph1 * ph2 * ph3)
    n_rows = len(rows)
    A1 = scipy.sparse.coo_matrix((one_v, (one_r, one_c)), shape=(n_rows, N * N)).tocsr()
    A2 = scipy.sparse.coo_matrix((two_v, (two_r, two_c)), shape=(n_rows, N ** 4)).tocsr()
    paulis = [None] * n_rows
    for (x, z), k in rows.items():
        paulis[k] = PauliString(n, x, z)
    return paulis, A1, A2


def majorana_one_body(t):
    """T'_pq = h_pq + sum_r h_pqrr - 1/2 sum_r h_prrq"""
    h2 = t.two_body
    return t.one_body + np.einsum('pqrr->pq', h2) - 0.5 * np.einsum('prrq->pq', h2)


def _pauli_coefficients(t):
    paulis, A1, A2 = _majorana_design(t.n_orbitals)
    coeffs = A1 @ majorana_one_body(t).ravel() + A2 @ t.two_body.ravel()
    return paulis, coeffs.real


def pauli_weight(t):
    """lambda of the Pauli representation, identity excluded."""
    _, coeffs = _pauli_coefficients(t)
    return float(np.sum(np.abs(coeffs[1:])))


def majorana_pauli_decompose(t, tol=1e-12):
    """
    Pauli Hamiltonian on 2N qubits; the identity part goes to `constant`.

    :param t:  FermionTensors
    :param tol:  coefficients with |h| <= tol are dropped
    :return:  PauliHamiltonian
    """
    h1, h2 = t.one_body, t.two_body
    paulis, coeffs = _pauli_coefficients(t)
    constant = (t.core_energy + np.trace(h1) + 0.5 * np.einsum('pprr->', h2)
                - 0.5 * np.einsum('prrp->', h2) + coeffs[0])
    terms = [(c, P) for c, P in zip(coeffs[1:], paulis[1:]) if abs(c) > tol]
    return PauliHamiltonian(t.n_qubits, tuple(terms), float(constant))


def hartree_fock_state_index(n_qubits, n_electrons):
    """Basis index with the n lowest spin orbitals occupied."""
    return sum(_mode_mask(n_qubits, j) for j in range(n_electrons))


@dataclass(frozen=True)
class FactorizedHamiltonian():
    """
    Two-body tensor as sum_j L_j (x) L_j with L_j = u_j^T diag(eigenvalues_j) u_j.
    """
    one_body_modified: np.ndarray
    eigenvalues: List[np.ndarray]
    rotations: List[np.ndarray]
    first_eigenvalues: np.ndarray
    dropped_weight: float = 0.0
    n_electrons: int = 0
    core_energy: float = 0.0

    @property
    def rank(self):
        return len(self.eigenvalues)

    @property
    def ranks(self):
        return [len(e) for e in self.eigenvalues]

    @property
    def n_orbitals(self):
        return self.one_body_modified.shape[0]

    def factor_matrices(self):
        N = self.n_orbitals
        if not self.eigenvalues:
            return np.zeros((0, N, N))
        return np.array([u.T @ np.diag(lam) @ u for lam, u in zip(self.eigenvalues, self.rotations)])

    def reconstruct_two_body(self):
        L = self.factor_matrices()
        return np.einsum('jpq,jrs->pqrs', L, L, optimize=True)

    def reconstruct(self):
        """FermionTensors with the factorized two-body part."""
        h2 = self.reconstruct_two_body()
        h1 = self.one_body_modified + 0.5 * np.einsum('prrq->pq', h2)
        return FermionTensors(h1, h2, self.n_electrons, self.core_energy)


def double_factorize(t, first_tol=0.0, psd_tol=1e-8):
    """
    First factorization by symmetric eigendecomposition of the pair matrix,
    second factorization by eigendecomposition of every retained L_j.

    :param t:  FermionTensors with PSD two-body pair matrix
    :param first_tol:  eigenvalues at or below this are dropped
    :return:  FactorizedHamiltonian
    """
    N = t.n_orbitals
    V = t.pair_matrix()
    w, v = scipy.linalg.eigh((V + V.T) / 2)
    if w.size and w[0] < -psd_tol:
        raise FactorizationError(
            "two-body pair matrix has eigenvalue {:.3e} below -{:g}".format(w[0], psd_tol))
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    keep = w > first_tol
    dropped = float(np.sum(np.abs(w[~keep])))
    eigenvalues, rotations = [], []
    for wj, vj in zip(w[keep], v[:, keep].T):
        L = np.sqrt(wj) * vj.reshape(N, N)
        L = (L + L.T) / 2
        lam, vecs = scipy.linalg.eigh(L)
        idx = np.argsort(-np.abs(lam), kind='stable')
        eigenvalues.append(lam[idx])
        rotations.append(vecs[:, idx].T)
    h1 = t.one_body - 0.5 * np.einsum('prrq->pq', t.two_body)
    return FactorizedHamiltonian(h1, eigenvalues, rotations, w[keep], dropped,
                                 t.n_electrons, t.core_energy)


def truncate_second_factorization(f, eps_prime):
    """
    Per factor, drop the smallest |lambda_p| while their absolute sum stays
    within eps_prime.
    """
    if eps_prime <= 0:
        return f
    eigenvalues, rotations = [], []
    for lam, u in zip(f.eigenvalues, f.rotations):
        order = np.argsort(np.abs(lam), kind='stable')
        cumulative = np.cumsum(np.abs(lam[order]))
        n_drop = int(np.searchsorted(cumulative, eps_prime, side='right'))
        keep = np.sort(order[n_drop:])
        eigenvalues.append(lam[keep])
        rotations.append(u[keep])
    return replace(f, eigenvalues=eigenvalues, rotations=rotations)


def df_weight(t, f):
    """
    Weight of the double-factorized form: sum |eig(T')| plus
    1/4 (sum_k |lambda_k|)^2 for every factor.
    """
    one = np.sum(np.abs(scipy.linalg.eigvalsh(majorana_one_body(t))))
    two = sum(0.25 * np.sum(np.abs(lam)) ** 2 for lam in f.eigenvalues)
    return float(one + two)


def _contract_k(h2):
    """K(h)_ps = sum_q h_pqqs"""
    return np.einsum('pqqs->ps', h2)


def symmetry_shift(t, f_params, factorization=None):
    """
    Replace every factor L_j by L_j + f_j I and compensate with one-body and
    constant terms, leaving the n-electron spectrum unchanged.

    :param t:  FermionTensors
    :param f_params:  one shift per factor of the first factorization
    :param factorization:  FactorizedHamiltonian of t, computed when omitted
    """
    f_params = np.asarray(f_params, dtype=float)
    if not np.any(f_params):
        return t
    fact = double_factorize(t) if factorization is None else factorization
    if f_params.shape != (fact.rank,):
        raise ConfigError("{} shift parameters given for {} factors".format(f_params.size, fact.rank))
    N = t.n_orbitals
    n = t.n_electrons
    eye = np.eye(N)
    L = fact.factor_matrices()
    shifted = L + f_params[:, None, None] * eye
    h2 = t.two_body - np.einsum('jpq,jrs->pqrs', L, L, optimize=True) \
        + np.einsum('jpq,jrs->pqrs', shifted, shifted, optimize=True)
    h1 = (t.one_body + 0.5 * (_contract_k(h2) - _contract_k(t.two_body))
          - n * np.einsum('j,jpq->pq', f_params, shifted))
    core = t.core_energy + 0.5 * n ** 2 * float(np.sum(f_params ** 2))
    return FermionTensors(h1, h2, n, core)


def check_orthogonal(u, tol=1e-10):
    u = np.asarray(u, dtype=float)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ConfigError("orbital rotation must be square, got shape {}".format(u.shape))
    err = np.max(np.abs(u.T @ u - np.eye(u.shape[0])))
    if err > tol:
        raise ConfigError("orbital rotation is not orthogonal (|u^T u - I| = {:.2e})".format(err))
    return u


def orbital_rotate(t, u):
    """New orbitals phi'_a = sum_p u_ap phi_p."""
    u = check_orthogonal(u)
    if u.shape[0] != t.n_orbitals:
        raise ConfigError("rotation of size {} for {} orbitals".format(u.shape[0], t.n_orbitals))
    h1 = u @ t.one_body @ u.T
    h2 = np.einsum('ap,bq,cr,ds,pqrs->abcd', u, u, u, u, t.two_body, optimize=True)
    return FermionTensors(h1, h2, t.n_electrons, t.core_energy)


def _antisymmetric(params, N):
    A = np.zeros((N, N))
    A[np.triu_indices(N, 1)] = params
    return A - A.T


def cholesky_initial_rotation(t):
    """
    Eigenbasis of the leading modified-Cholesky vector (pivot on the largest
    diagonal of the pair matrix).
    """
    N = t.n_orbitals
    V = t.pair_matrix()
    pivot = int(np.argmax(np.diag(V)))
    if V[pivot, pivot] <= 0:
        return np.eye(N)
    L = (V[:, pivot] / np.sqrt(V[pivot, pivot])).reshape(N, N)
    _, vecs = scipy.linalg.eigh((L + L.T) / 2)
    return vecs.T


@dataclass
class LambdaOptConfig():
    max_iter: int = 200
    fd_step: float = 1e-5
    rel_tol: float = 1e-6
    init: str = 'cholesky'
    optimize_shift: bool = False
    n_blocks: int = 3
    armijo: float = 1e-4
    initial_step: float = 1.0
    min_step: float = 1e-10
    seed: Optional[int] = None


def _rotation_descent(t, config, history):
    """Gradient descent on u = expm(A); returns (tensors, converged)."""
    N = t.n_orbitals
    n_params = N * (N - 1) // 2
    if n_params == 0:
        return t, True
    current = pauli_weight(t)

    def weight_at(params, base):
        return pauli_weight(orbital_rotate(base, scipy.linalg.expm(_antisymmetric(params, N))))

    step = config.initial_step
    for _ in range(config.max_iter):
        grad = np.zeros(n_params)
        for k in range(n_params):
            e = np.zeros(n_params)
            e[k] = config.fd_step
            grad[k] = (weight_at(e, t) - weight_at(-e, t)) / (2 * config.fd_step)
        gnorm2 = float(grad @ grad)
        if gnorm2 == 0.0:
            return t, True
        step = min(2.0 * step, config.initial_step)
        accepted = None
        while step >= config.min_step:
            trial = weight_at(-step * grad, t)
            if trial <= current - config.armijo * step * gnorm2:
                accepted = trial
                break
            step *= 0.5
        if accepted is None:
            return t, True
        t = orbital_rotate(t, scipy.linalg.expm(_antisymmetric(-step * grad, N)))
        improvement = (current - accepted) / current if current > 0 else 0.0
        current = accepted
        history.append(current)
        if improvement < config.rel_tol:
            return t, True
    return t, False


def _shift_block(t, history):
    fact = double_factorize(t)
    if fact.rank == 0:
        return t
    start = pauli_weight(t)
    result = scipy.optimize.minimize(
        lambda f: pauli_weight(symmetry_shift(t, f, fact)),
        np.zeros(fact.rank), method='L-BFGS-B')
    if result.fun < start:
        t = symmetry_shift(t, result.x, fact)
        history.append(pauli_weight(t))
    return t


def optimize_lambda(t, config=None):
    """
    Lower the Pauli weight by orbital rotations, optionally alternating with
    symmetry shifts.  Only improving steps are accepted.

    :param t:  FermionTensors
    :param config:  LambdaOptConfig
    :return:  (FermionTensors, history of accepted weights starting at the input weight)
    """
    config = LambdaOptConfig() if config is None else config
    start = pauli_weight(t)
    history = [start]
    best = t
    if config.init == 'cholesky':
        candidate = orbital_rotate(t, cholesky_initial_rotation(t))
    elif config.init == 'random':
        rng = np.random.default_rng(config.seed)
        q, _ = np.linalg.qr(rng.normal(size=(t.n_orbitals, t.n_orbitals)))
        candidate = orbital_rotate(t, q)
    elif config.init == 'identity':
        candidate = t
    else:
        raise ConfigError("unknown initialization {!r}".format(config.init))
    if candidate is not t and pauli_weight(candidate) < start:
        best = candidate
        history.append(pauli_weight(best))

    converged = True
    for _ in range(config.n_blocks if config.optimize_shift else 1):
        before = history[-1]
        best, ok = _rotation_descent(best, config, history)
        converged = converged and ok
        if config.optimize_shift:
            best = _shift_block(best, history)
        if before - history[-1] <= config.rel_tol * before:
            break
    if not converged:
        warnings.warn("lambda optimization stopped after {} iterations without converging".format(
            config.max_iter), ConvergenceWarning)
    return best, history


def hydrogen_chain_tensors(n_atoms, spacing=1.4, basis='localized', n_grid=256,
                           softening=1.0, exponent=1.0, padding=6.0):
    """
    One-dimensional soft-Coulomb hydrogen chain with one Gaussian orbital per
    atom on a uniform grid.

    :param basis:  'localized' (Lowdin-orthonormalized Gaussians) or
                   'canonical' (eigenvectors of the one-body matrix)
    :return:  FermionTensors with n_electrons = n_atoms
    """
    if basis not in ('localized', 'canonical'):
        raise ConfigError("unknown basis {!r}".format(basis))
    centers = spacing * np.arange(n_atoms)
    x = np.linspace(centers[0] - padding, centers[-1] + padding, n_grid)
    dx = x[1] - x[0]
    offset = x[:, None] - centers[None, :]
    G = np.exp(-exponent * offset ** 2)
    dG = -2.0 * exponent * offset * G
    S = G.T @ G * dx
    w, v = scipy.linalg.eigh(S)
    C = v @ np.diag(w ** -0.5) @ v.T
    phi, dphi = G @ C, dG @ C

    kinetic = 0.5 * dphi.T @ dphi * dx
    potential = -np.sum(1.0 / np.sqrt(offset ** 2 + softening ** 2), axis=1)
    h1 = kinetic + (phi * potential[:, None]).T @ phi * dx

    kernel = 1.0 / np.sqrt((x[:, None] - x[None, :]) ** 2 + softening ** 2)
    pairs = np.einsum('xp,xq->xpq', phi, phi).reshape(n_grid, -1)
    h2 = (pairs.T @ kernel @ pairs * dx * dx).reshape(n_atoms, n_atoms, n_atoms, n_atoms)
    h2 = (h2 + np.einsum('pqrs->rspq', h2)) / 2

    gaps = np.abs(centers[:, None] - centers[None, :])
    iu = np.triu_indices(n_atoms, 1)
    core = float(np.sum(1.0 / np.sqrt(gaps[iu] ** 2 + softening ** 2)))
    t = FermionTensors((h1 + h1.T) / 2, h2, n_atoms, core)
    if basis == 'canonical':
        _, vecs = scipy.linalg.eigh(t.one_body)
        t = orbital_rotate(t, vecs.T)
    return t


def load_pauli_file(path):
    """
    Read a Pauli Hamiltonian.  Header `qubits <n>`, optional `constant <c>`,
    then one `<coefficient> <string>` per line; '#' starts a comment.
    """
    n_qubits = None
    constant = 0.0
    terms = []
    with open(path) as handle:
        for number, line in iter_data_lines(handle):
            parts = line.split()
            if n_qubits is None:
                if len(parts) != 2 or parts[0] != 'qubits':
                    raise ParseError("expected header 'qubits <n>'", number, path)
                try:
                    n_qubits = int(parts[1])
                except ValueError:
                    raise ParseError("bad qubit count {!r}".format(parts[1]), number, path)
                continue
            if parts[0] == 'constant' and len(parts) == 2:
                try:
                    constant = float(parts[1])
                except ValueError:
                    raise ParseError("bad constant {!r}".format(parts[1]), number, path)
                continue
            if len(parts) != 2:
                raise ParseError("expected '<coefficient> <pauli string>'", number, path)
            try:
                coeff = float(parts[0])
                P = PauliString.from_label(parts[1])
            except ValueError as err:
                raise ParseError(str(err), number, path)
            if P.n_qubits != n_qubits:
                raise ParseError("string {} has {} letters, header says {} qubits".format(
                    parts[1], P.n_qubits, n_qubits), number, path)
            terms.append((coeff, P))
    if n_qubits is None:
        raise ParseError("missing 'qubits <n>' header", None, path)
    return PauliHamiltonian(n_qubits, tuple(terms), constant)


def save_pauli_file(H, path, comment=None):
    with open(path, 'w') as handle:
        if comment:
            for line in comment.splitlines():
                handle.write('# {}\n'.format(line))
        handle.write('qubits {}\n'.format(H.n_qubits))
        if H.constant != 0.0:
            handle.write('constant {!r}\n'.format(H.constant))
        for h, P in H.terms:
            handle.write('{!r} {}\n'.format(h, P.label))


def _canonical_index(p, q, r, s):
    pq = (max(p, q), min(p, q))
    rs = (max(r, s), min(r, s))
    return max(pq, rs) + min(pq, rs)


def _symmetry_orbit(p, q, r, s):
    return {(p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
            (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p)}


def save_tensor_file(t, path, tol=0.0):
    """Tensor file with one two-body entry per symmetry class."""
    N = t.n_orbitals
    with open(path, 'w') as handle:
        handle.write('{} {}\n'.format(TENSOR_FORMAT, TENSOR_VERSION))
        handle.write('n_orbitals {}\n'.format(N))
        handle.write('n_electrons {}\n'.format(t.n_electrons))
        handle.write('core_energy {!r}\n'.format(float(t.core_energy)))
        handle.write('one_body\n')
        for row in t.one_body:
            handle.write(' '.join(repr(float(v)) for v in row) + '\n')
        handle.write('two_body\n')
        for p in range(N):
            for q in range(p + 1):
                for r in range(p + 1):
                    for s in range(r + 1):
                        if (r, s) > (p, q):
                            continue
                        value = float(t.two_body[p, q, r, s])
                        if abs(value) > tol:
                            handle.write('{} {} {} {} {!r}\n'.format(p, q, r, s, value))
        handle.write('end\n')


def load_tensor_file(path):
    """Inverse of save_tensor_file; two-body entries are expanded eight-fold."""
    with open(path) as handle:
        lines = list(iter_data_lines(handle))
    if not lines:
        raise ParseError("empty tensor file", None, path)
    try:
        return _parse_tensor_lines(lines, path)
    except IndexError:
        raise ParseError("unexpected end of tensor file", None, path)


def _parse_tensor_lines(lines, path):
    number, first = lines[0]
    parts = first.split()
    if len(parts) != 2 or parts[0] != TENSOR_FORMAT:
        raise ParseError("expected version line '{} <version>'".format(TENSOR_FORMAT), number, path)
    if parts[1] != str(TENSOR_VERSION):
        raise ParseError("unsupported tensor file version {}".format(parts[1]), number, path)

    header = {}
    pos = 1
    for key in ('n_orbitals', 'n_electrons', 'core_energy'):
        number, line = lines[pos]
        parts = line.split()
        if len(parts) != 2 or parts[0] != key:
            raise ParseError("expected '{} <value>'".format(key), number, path)
        try:
            header[key] = float(parts[1]) if key == 'core_energy' else int(parts[1])
        except ValueError:
            raise ParseError("bad value for {}".format(key), number, path)
        pos += 1
    N = header['n_orbitals']

    number, line = lines[pos]
    if line != 'one_body':
        raise ParseError("expected 'one_body'", number, path)
    h1 = np.zeros((N, N))
    for i in range(N):
        number, line = lines[pos + 1 + i]
        try:
            row = [float(v) for v in line.split()]
        except ValueError:
            raise ParseError("bad one-body row", number, path)
        if len(row) != N:
            raise ParseError("one-body row has {} entries, expected {}".format(len(row), N), number, path)
        h1[i] = row
    pos += N + 1
    if np.max(np.abs(h1 - h1.T), initial=0.0) > 1e-12:
        raise ParseError("one-body matrix is not symmetric", None, path)

    number, line = lines[pos]
    if line != 'two_body':
        raise ParseError("expected 'two_body'", number, path)
    h2 = np.zeros((N, N, N, N))
    seen = set()
    closed = False
    for number, line in lines[pos + 1:]:
        if line == 'end':
            closed = True
            break
        parts = line.split()
        try:
            p, q, r, s = (int(v) for v in parts[:4])
            value = float(parts[4])
        except (ValueError, IndexError):
            raise ParseError("expected 'p q r s value'", number, path)
        if len(parts) != 5 or not all(0 <= i < N for i in (p, q, r, s)):
            raise ParseError("bad two-body entry", number, path)
        key = _canonical_index(p, q, r, s)
        if key in seen:
            raise ParseError("duplicate entry for symmetry class {}".format(key), number, path)
        seen.add(key)
        for idx in _symmetry_orbit(p, q, r, s):
            h2[idx] = value
    if not closed:
        raise ParseError("missing 'end' line", None, path)
    return FermionTensors(h1, h2, header['n_electrons'], header['core_energy'])
