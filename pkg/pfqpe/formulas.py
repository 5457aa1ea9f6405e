"""
Deterministic Suzuki-Trotter schedules and the randomized samplers
(qDRIFT, randomized Taylor expansion, partially randomized formulas).

All samplers emit a SampledCircuit whose gates are listed in application
order.  Rotations follow V(phi) = exp(-i phi P).
"""
from dataclasses import dataclass
from math import factorial, ceil
from typing import Optional, Tuple, Union
import itertools

import numpy as np

from pfqpe.pauli_core import (PauliHamiltonian, PauliString, NormalizedHamiltonian,
                              normalize, weight_lambda)
from pfqpe.simulator import hamiltonian_apply, apply_pauli_rotation, _amps
from pfqpe.utils import ConfigError, ParseError, iter_data_lines, make_rng


@dataclass(frozen=True)
class ProductFormulaSchedule():
    """
    Entries are (term index, fraction of delta) in application order.  When
    hr_slot is not None it is the index of the lumped randomized fragment,
    always n_terms - 1.
    """
    order: int
    n_terms: int
    entries: Tuple[Tuple[int, float], ...]
    n_stages: int
    hr_slot: Optional[int] = None

    def fraction_sums(self):
        sums = np.zeros(self.n_terms)
        for index, fraction in self.entries:
            sums[index] += fraction
        return sums

    def is_palindromic(self, tol=1e-14):
        flipped = self.entries[::-1]
        return all(a == b and abs(f - g) <= tol for (a, f), (b, g) in zip(self.entries, flipped))


def suzuki_coefficient(k):
    """u_k = 1/(4 - 4^{1/(2k-1)})"""
    return 1.0 / (4.0 - 4.0 ** (1.0 / (2 * k - 1)))


def _suzuki_entries(p, n):
    if p == 1:
        return [(j, 1.0) for j in range(n)]
    if p == 2:
        forward = [(j, 0.5) for j in range(n)]
        return forward + forward[::-1]
    k = p // 2
    u = suzuki_coefficient(k)
    inner = _suzuki_entries(p - 2, n)
    outer = [(j, u * f) for j, f in inner]
    middle = [(j, (1.0 - 4.0 * u) * f) for j, f in inner]
    return outer + outer + middle + outer + outer


def suzuki_schedule(p, n_terms, include_HR_slot=False):
    """
    Order-p product formula over n_terms fragments.

    :param p:  1 or an even order
    :param n_terms:  number of deterministic fragments
    :param include_HR_slot:  append one extra fragment, index n_terms, for the
                             randomized remainder
    :return:  ProductFormulaSchedule with N_stage * n_slots entries
    """
    if p != 1 and (p < 2 or p % 2):
        raise ConfigError("product formula order must be 1 or even, got {}".format(p))
    n = n_terms + (1 if include_HR_slot else 0)
    if n < 1:
        raise ConfigError("product formula needs at least one fragment")
    n_stages = 1 if p == 1 else 2 * 5 ** (p // 2 - 1)
    entries = tuple(_suzuki_entries(p, n))
    return ProductFormulaSchedule(p, n, entries, n_stages,
                                  n_terms if include_HR_slot else None)


@dataclass(frozen=True)
class PauliRotation():
    pauli: PauliString
    angle: float


@dataclass(frozen=True)
class PauliApply():
    pauli: PauliString


@dataclass(frozen=True)
class DeterministicExp():
    """exp(-i angle P) standing for the schedule entry (index, fraction)."""
    index: int
    fraction: float
    pauli: PauliString
    angle: float


Gate = Union[PauliRotation, PauliApply, DeterministicExp]


@dataclass(frozen=True)
class SampledCircuit():
    n_qubits: int
    gates: Tuple[Gate, ...]
    normalization: float = 1.0
    seed: Optional[int] = None

    @property
    def rotation_count(self):
        return sum(1 for g in self.gates if not isinstance(g, PauliApply))

    @property
    def pauli_count(self):
        return sum(1 for g in self.gates if isinstance(g, PauliApply))

    def inverse(self):
        """Gates of W^dagger in application order."""
        gates = []
        for g in reversed(self.gates):
            if isinstance(g, PauliApply):
                gates.append(g)
            elif isinstance(g, DeterministicExp):
                gates.append(DeterministicExp(g.index, -g.fraction, g.pauli, -g.angle))
            else:
                gates.append(PauliRotation(g.pauli, -g.angle))
        return SampledCircuit(self.n_qubits, tuple(gates), self.normalization, self.seed)

    def write(self, handle):
        """Line-oriented text form, one gate per line."""
        handle.write('# circuit n_qubits={} normalization={!r} seed={}\n'.format(
            self.n_qubits, self.normalization, self.seed))
        for g in self.gates:
            if isinstance(g, PauliRotation):
                handle.write('R {} {!r}\n'.format(g.pauli.label, g.angle))
            elif isinstance(g, PauliApply):
                handle.write('P {}\n'.format(g.pauli.label))
            else:
                handle.write('D {} {!r} {} {!r}\n'.format(g.index, g.fraction, g.pauli.label, g.angle))

    @classmethod
    def read(cls, handle):
        header = handle.readline()
        if not header.startswith('# circuit'):
            raise ParseError("missing circuit header", line=1)
        fields = dict(item.split('=') for item in header.split()[2:])
        n_qubits = int(fields['n_qubits'])
        seed = None if fields['seed'] == 'None' else int(fields['seed'])
        gates = []
        for number, line in iter_data_lines(handle):
            parts = line.split()
            try:
                if parts[0] == 'R':
                    gates.append(PauliRotation(PauliString.from_label(parts[1]), float(parts[2])))
                elif parts[0] == 'P':
                    gates.append(PauliApply(PauliString.from_label(parts[1])))
                elif parts[0] == 'D':
                    gates.append(DeterministicExp(int(parts[1]), float(parts[2]),
                                                  PauliString.from_label(parts[3]), float(parts[4])))
                else:
                    raise ValueError("unknown gate tag {!r}".format(parts[0]))
            except (IndexError, ValueError) as err:
                raise ParseError(str(err), line=number + 1)
        for g in gates:
            if g.pauli.n_qubits != n_qubits:
                raise ParseError("gate {} does not act on {} qubits".format(g.pauli.label, n_qubits))
        return cls(n_qubits, tuple(gates), float(fields['normalization']), seed)


def as_normalized(H):
    if isinstance(H, NormalizedHamiltonian):
        return H
    return normalize(H)


def normalized_operator(H):
    """H_bar = sum_l p_l P_l as a PauliHamiltonian."""
    norm = as_normalized(H)
    n = norm.paulis[0].n_qubits
    return PauliHamiltonian(n, tuple(zip(norm.probabilities, norm.paulis)))


def _seed_record(rng):
    return rng if isinstance(rng, (int, np.integer)) else None


def qdrift_sample(H, tau, r, rng=None):
    """
    qDRIFT circuit V_{l_r}(phi) ... V_{l_1}(phi), phi = arctan(tau), indices
    drawn i.i.d. from p_l.
    """
    norm = as_normalized(H)
    seed = _seed_record(rng)
    rng = make_rng(rng)
    indices = rng.choice(len(norm.paulis), size=r, p=norm.probabilities)
    phi = float(np.arctan(tau))
    gates = tuple(PauliRotation(norm.paulis[k], phi) for k in indices)
    return SampledCircuit(norm.paulis[0].n_qubits, gates, 1.0, seed)


def qdrift_expectation(H, psi, tau, r):
    """(1 + tau^2)^{-r/2} <psi| (I - i tau H_bar)^r |psi>"""
    Hbar = normalized_operator(H)
    start = _amps(psi)
    v = start.copy()
    for _ in range(r):
        v = v - 1j * tau * hamiltonian_apply(Hbar, v)
    return complex(np.vdot(start, v)) * (1.0 + tau ** 2) ** (-r / 2.0)


def _rte_order_weights(tau, n_max):
    orders = np.arange(0, n_max + 1, 2)
    weights = np.array([abs(tau) ** n / factorial(n) * np.sqrt(1.0 + (tau / (n + 1)) ** 2)
                        for n in orders])
    return orders, weights


def rte_normalization(tau, n_max=8):
    """
    Per-segment normalization sum over even n <= n_max of
    |tau|^n/n! * sqrt(1 + tau^2/(n+1)^2); lies in [1, exp(tau^2)].
    """
    if n_max < 0 or n_max % 2:
        raise ConfigError("n_max must be even and non-negative, got {}".format(n_max))
    _, weights = _rte_order_weights(tau, n_max)
    return float(np.sum(weights))


def rte_truncation_bound(tau, n_max):
    """sum_{n > n_max} |tau|^n / n!"""
    total, term = 0.0, abs(tau) ** (n_max + 1) / factorial(n_max + 1)
    n = n_max + 1
    while term > 0 and n < n_max + 200:
        total += term
        n += 1
        term *= abs(tau) / n
    return total


def rte_series(x, n_max):
    """Taylor polynomial of exp(-i x) kept through order n_max + 1."""
    return sum((-1j * x) ** n / factorial(n) for n in range(n_max + 2))


def _rte_segment_gates(norm, tau, order, indices, rot_index):
    gates = []
    for j, k in enumerate(indices):
        P = norm.paulis[k]
        if j == 0 and (order // 2) % 2:
            P = P.negate()
        gates.append(PauliApply(P))
    phi = float(np.arctan(tau / (order + 1)))
    gates.append(PauliRotation(norm.paulis[rot_index], phi))
    return gates


def rte_sample(H, tau, r, n_max=8, rng=None):
    """
    Randomized Taylor expansion circuit of r segments.  Each segment draws an
    even order n with probability proportional to the order weight, then
    applies (-1)^{n/2} V_l(arctan(tau/(n+1))) P_{l_n} ... P_{l_1}.
    A negative tau samples exp(+i|tau| H_bar) segments.

    :return:  SampledCircuit with normalization rte_normalization(tau, n_max)^r
    """
    if n_max < 0 or n_max % 2:
        raise ConfigError("n_max must be even and non-negative, got {}".format(n_max))
    norm = as_normalized(H)
    seed = _seed_record(rng)
    rng = make_rng(rng)
    orders, weights = _rte_order_weights(tau, n_max)
    B_seg = float(np.sum(weights))
    L = len(norm.paulis)
    gates = []
    for order in rng.choice(orders, size=r, p=weights / B_seg):
        order = int(order)
        indices = rng.choice(L, size=order, p=norm.probabilities)
        rot_index = rng.choice(L, p=norm.probabilities)
        gates.extend(_rte_segment_gates(norm, tau, order, indices, rot_index))
    return SampledCircuit(norm.paulis[0].n_qubits, tuple(gates), B_seg ** r, seed)


def enumerate_rte_segment(H, tau, n_max):
    """
    Every gate sequence one RTE segment can produce, with its probability.
    Exponential in n_max; for exhaustive checks on tiny inputs.
    """
    norm = as_normalized(H)
    orders, weights = _rte_order_weights(tau, n_max)
    B_seg = float(np.sum(weights))
    L = len(norm.paulis)
    out = []
    for order, w in zip(orders, weights):
        order = int(order)
        for indices in itertools.product(range(L), repeat=order):
            p_idx = np.prod([norm.probabilities[k] for k in indices]) if order else 1.0
            for rot in range(L):
                q = w / B_seg * p_idx * norm.probabilities[rot]
                out.append((q, _rte_segment_gates(norm, tau, order, indices, rot)))
    return out, B_seg


@dataclass(frozen=True)
class PartialSplit():
    deterministic: PauliHamiltonian
    randomized: PauliHamiltonian
    lam_D: float
    lam_R: float

    @property
    def L_D(self):
        return len(self.deterministic)


def partial_split(H, L_D):
    """
    The L_D largest |h_l| terms go to H_D, ties broken by lexicographic
    Pauli order; the rest form H_R.
    """
    L = len(H.terms)
    if not 0 <= L_D <= L:
        raise ConfigError("L_D={} outside [0, {}]".format(L_D, L))
    ranked = sorted(H.terms, key=lambda t: (-abs(t[0]), t[1].letters))
    det = H.with_terms(ranked[:L_D])
    rand = H.with_terms(ranked[L_D:], 0.0)
    return PartialSplit(det, rand, weight_lambda(det), weight_lambda(rand))


def _merge_slot_entries(entries, slot):
    """Adjacent entries of the randomized slot collapse into one."""
    merged = []
    for index, fraction in entries:
        if index == slot and merged and merged[-1][0] == slot:
            merged[-1] = (slot, merged[-1][1] + fraction)
        else:
            merged.append((index, fraction))
    return merged


def partial_plan(split, p, delta, s, kappa):
    """
    Per-repetition layout of a partially randomized S_p(delta):
    list of (index, fraction, r_i) where r_i is None for deterministic
    entries and the RTE segment count for merged H_R slots.
    """
    if p < 2 or p % 2:
        raise ConfigError("partial randomization needs a symmetric formula, got p={}".format(p))
    if s < 1 or kappa <= 0:
        raise ConfigError("need s >= 1 and kappa > 0")
    has_slot = split.lam_R > 0
    schedule = suzuki_schedule(p, split.L_D, include_HR_slot=has_slot)
    entries = list(schedule.entries)
    if has_slot:
        entries = _merge_slot_entries(entries, schedule.hr_slot)
    slot = schedule.hr_slot
    delta_tilde = sum(abs(f * delta) for i, f in entries if i == slot)
    plan = []
    for index, fraction in entries:
        if index == slot:
            r_i = max(1, int(ceil(kappa * split.lam_R ** 2 * abs(fraction * delta) * delta_tilde * s)))
            plan.append((index, fraction, r_i))
        else:
            plan.append((index, fraction, None))
    return plan


def partial_random_sample(split, p, delta, s, kappa, rng=None, n_max=8):
    """
    s repetitions of S_p(delta) over (H_1 .. H_{L_D}, H_R) where every H_R
    slot of time delta_i is an RTE sample with
    r_i = ceil(kappa * lam_R^2 * |delta_i| * delta_tilde * s) segments.
    """
    seed = _seed_record(rng)
    rng = make_rng(rng)
    plan = partial_plan(split, p, delta, s, kappa)
    det_terms = split.deterministic.terms
    n_qubits = split.deterministic.n_qubits
    norm_R = normalize(split.randomized) if split.lam_R > 0 else None
    gates = []
    B = 1.0
    for _ in range(s):
        for index, fraction, r_i in plan:
            if r_i is None:
                h, P = det_terms[index]
                P = P if h >= 0 else P.negate()
                gates.append(DeterministicExp(index, fraction, P, fraction * delta * abs(h)))
            else:
                tau_i = split.lam_R * fraction * delta / r_i
                sample = rte_sample(norm_R, tau_i, r_i, n_max, rng)
                gates.extend(sample.gates)
                B *= sample.normalization
    return SampledCircuit(n_qubits, tuple(gates), B, seed)


def partial_normalization(split, p, delta, s, kappa, n_max=8):
    """B of any circuit from partial_random_sample with these parameters."""
    B = 1.0
    for index, fraction, r_i in partial_plan(split, p, delta, s, kappa):
        if r_i is not None:
            B *= rte_normalization(split.lam_R * fraction * delta / r_i, n_max) ** r_i
    return B ** s


def rte_mean_apply(H, tau, r, v, n_max=8):
    """
    B * E[W] v for an r-segment RTE circuit: the Taylor polynomial of
    exp(-i tau H_bar), kept through order n_max + 1, applied r times.
    """
    Hbar = normalized_operator(H)
    out = _amps(v)
    for _ in range(r):
        term, acc = out, out.copy()
        for n in range(1, n_max + 2):
            term = (-1j * tau / n) * hamiltonian_apply(Hbar, term)
            acc = acc + term
        out = acc
    return out


def partial_mean_apply(split, p, delta, s, kappa, v, n_max=8):
    """B * E[W] v for partial_random_sample with the same parameters."""
    plan = partial_plan(split, p, delta, s, kappa)
    out = _amps(v)
    for _ in range(s):
        for index, fraction, r_i in plan:
            if r_i is None:
                h, P = split.deterministic.terms[index]
                out = apply_pauli_rotation(out, P, fraction * delta * h)
            else:
                out = rte_mean_apply(split.randomized, split.lam_R * fraction * delta / r_i,
                                     r_i, out, n_max)
    return out
