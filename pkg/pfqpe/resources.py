"""
Gate, rotation, circuit and qubit counts for phase estimation with
deterministic, randomized and partially randomized product formulas.

Error budgets follow two conventions: Toffoli reports use eps = 1.5 mH plus
eps_synth = 0.1 mH for rotation synthesis, two-qubit reports use eps = 1.6 mH
and ignore synthesis.
"""
from dataclasses import dataclass, field, asdict
from fractions import Fraction
from math import ceil, comb, exp, isinf, log2, pi, sqrt
from typing import List, NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from pfqpe.estimation import RPEConfig
from pfqpe.formulas import suzuki_schedule
from pfqpe.utils import ConfigError, InfeasibleError

EPS_TWO_QUBIT = 1.6e-3
EPS_TOFFOLI = 1.5e-3
EPS_SYNTH = 1.0e-4

# empirical r_tot = C * lam^2 / eps^2
RTE_ROTATION_CONSTANT = 16.3
QDRIFT_ROTATION_CONSTANT = RTE_ROTATION_CONSTANT / 2

# RPE time constants: t_tot ~ 5 pi / eps, t_max ~ 0.08 pi / eps
C_TOT = 5.0
C_MAX = 0.08
N_M = 11
D = 4.11
DEFAULT_K = 12
# deterministic part of a partial formula: t_tot = C_TOT pi / eps, halved by controlled +-S
PARTIAL_DET_CONSTANT = C_TOT / 0.1 / 2
PARTIAL_RAND_CONSTANT = 280.0 / 9.0
KAPPA_BRACKET = (0.05, 100.0)


@dataclass
class CostModelInputs():
    lam: float
    L: int
    C_gs: Optional[float] = None
    p: int = 2
    epsilon: float = EPS_TOFFOLI
    eps_synth: float = EPS_SYNTH
    xi: float = 1.0
    lam_R: float = 0.0
    L_D: Optional[int] = None
    avg_support: Optional[float] = None
    n_rot: Optional[int] = None
    ranks: Optional[List[int]] = None
    n_qubits: int = 0
    K: int = DEFAULT_K

    def __post_init__(self):
        if not self.epsilon > self.eps_synth >= 0:
            raise ConfigError("need eps > eps_synth >= 0, got eps={} eps_synth={}".format(
                self.epsilon, self.eps_synth))
        if not 0 < self.xi <= 1:
            raise ConfigError("xi must lie in (0, 1]")
        if self.lam <= 0 or self.L < 0:
            raise ConfigError("lambda must be positive and L non-negative")
        if self.L_D is None:
            self.L_D = self.L
        if self.n_rot is None:
            self.n_rot = self.L

    @classmethod
    def for_metric(cls, metric, lam, L, **kwargs):
        """Inputs with the error budget of the given metric."""
        if metric == 'toffoli':
            kwargs.setdefault('epsilon', EPS_TOFFOLI)
            kwargs.setdefault('eps_synth', EPS_SYNTH)
        elif metric == 'two-qubit':
            kwargs.setdefault('epsilon', EPS_TWO_QUBIT)
            kwargs.setdefault('eps_synth', 0.0)
        else:
            raise ConfigError("unknown metric {!r}".format(metric))
        return cls(lam=lam, L=L, **kwargs)


@dataclass
class ResourceReport():
    method: str
    toffoli_total: float = 0.0
    toffoli_max: float = 0.0
    two_qubit_total: float = 0.0
    rotations_total: float = 0.0
    rotations_max: float = 0.0
    circuits: int = 0
    logical_qubits: int = 0
    ancilla_qubits: int = 0
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        counts = (self.toffoli_total, self.toffoli_max, self.two_qubit_total,
                  self.rotations_total, self.rotations_max, self.circuits)
        if any(c < 0 for c in counts):
            raise InfeasibleError("negative count in {} report".format(self.method))

    def cost(self, metric='toffoli'):
        return self.toffoli_total if metric == 'toffoli' else self.two_qubit_total

    def as_record(self):
        record = asdict(self)
        params = record.pop('parameters')
        record.update(params)
        return record


def n_stages(p):
    return suzuki_schedule(p, 1).n_stages


def synthesis_t_count(eps_prime):
    """T gates per arbitrary-angle rotation at synthesis accuracy eps_prime."""
    if not 0 < eps_prime < 1:
        raise ConfigError("synthesis accuracy must lie in (0, 1)")
    return 1.14 * log2(1.0 / eps_prime) + 9.2


def synthesis_toffoli(eps_prime):
    # 2 T gates per Toffoli
    return synthesis_t_count(eps_prime) / 2.0


def hwp_rate(K, J):
    """
    Hamming-weight phasing in groups of K commuting rotations of J-bit angles.

    :return:  (Toffoli per rotation as a Fraction, ancilla qubits)
    """
    if K < 1 or J < 2:
        raise ConfigError("hwp_rate needs K >= 1 and J >= 2, got K={} J={}".format(K, J))
    return 1 + Fraction(J - 2, K), K + 2 * J - 2


def catalyst_qubits(J):
    return J


def angle_bits(lam, epsilon):
    """J = ceil(log2(lam / (pi eps))), at least 2."""
    return max(2, int(ceil(log2(lam / (pi * epsilon)))))


def gate_models(metric, eps_prime=None, K=DEFAULT_K, J=None, avg_support=None):
    """
    Per-rotation gate costs (G_det, G_rand).

    toffoli:    synthesis of arbitrary angles / Hamming-weight phasing at J bits
    two-qubit:  2|P| - 3 CNOTs per rotation for both parts
    """
    if metric == 'toffoli':
        if eps_prime is None or J is None:
            raise ConfigError("the toffoli model needs eps_prime and J")
        return synthesis_toffoli(eps_prime), float(hwp_rate(K, J)[0])
    if metric == 'two-qubit':
        if avg_support is None:
            raise ConfigError("the two-qubit model needs the average Pauli support")
        g = max(2.0 * avg_support - 3.0, 0.0)
        return g, g
    raise ConfigError("unknown metric {!r}".format(metric))


def pauli_two_qubit_cost(H):
    """Mean over terms of max(2|P| - 3, 0)."""
    if not H.terms:
        return 0.0
    return float(np.mean([max(2 * P.support - 3, 0) for _, P in H.terms]))


def average_support(H):
    return float(np.mean([P.support for _, P in H.terms])) if H.terms else 0.0


def _schedule_circuits(M, overhead=1.0, last_factor=1):
    counts = [int(ceil(overhead * (N_M + D * (M - m)))) for m in range(M + 1)]
    counts[-1] *= last_factor
    return 2 * sum(counts)


def _rounds(t_max):
    return max(0, int(ceil(log2(max(t_max, 1.0)))))


def deterministic_step(C_gs, p, epsilon, step_rule='optimal'):
    """
    'optimal':    delta = (eps / (C_gs sqrt(p+1)))^(1/p), Trotter error eps/sqrt(p+1)
    'displayed':  delta = (eps / C_gs)^(1/p) (p/(p+1))^(1/2p)
    """
    if step_rule == 'optimal':
        return (epsilon / (C_gs * sqrt(p + 1))) ** (1.0 / p)
    if step_rule == 'displayed':
        return (epsilon / C_gs) ** (1.0 / p) * (p / (p + 1.0)) ** (1.0 / (2 * p))
    raise ConfigError("unknown step rule {!r}".format(step_rule))


def deterministic_cost(inputs, step_rule='optimal', time_halving=True, G_det=None):
    """
    Deterministic Trotter QPE: G = 5 pi N_stage L G_det / (eps_qpe delta), halved
    with controlled +-S evolution.

    :param inputs:  CostModelInputs with C_gs
    :param G_det:  Toffoli per rotation; default from synthesis at eps'
    """
    C, p, eps = inputs.C_gs, inputs.p, inputs.epsilon
    if C is None or C <= 0:
        raise ConfigError("deterministic cost needs C_gs > 0")
    eps_qpe = eps * sqrt(p / (p + 1.0))
    delta = deterministic_step(C, p, eps, step_rule)
    if C * delta ** p >= eps:
        raise InfeasibleError("Trotter error C_gs delta^p exceeds the budget")
    stages = n_stages(p)
    halving = 0.5 if time_halving else 1.0
    M = _rounds(C_MAX * pi / (eps_qpe * delta))
    steps_total = halving * C_TOT * pi / (eps_qpe * delta)
    steps_max = halving * 2 ** M
    rotations_total = steps_total * stages * inputs.n_rot
    rotations_max = steps_max * stages * inputs.n_rot

    eps_prime = inputs.eps_synth * delta / (stages * inputs.n_rot) if inputs.eps_synth > 0 else None
    if G_det is None and eps_prime is not None:
        G_det = synthesis_toffoli(eps_prime)
    G_det = 0.0 if G_det is None else G_det
    G = steps_total * stages * inputs.L * G_det
    two_qubit = 0.0
    if inputs.avg_support is not None:
        two_qubit = rotations_total * max(2.0 * inputs.avg_support - 3.0, 0.0)
    return ResourceReport(
        'deterministic', G, steps_max * stages * inputs.L * G_det, two_qubit,
        rotations_total, rotations_max, _schedule_circuits(M),
        inputs.n_qubits + 1, 1,
        {'delta': delta, 'M': M, 'p': p, 'N_stage': stages, 'eps_qpe': eps_qpe,
         'eps_trotter': C * delta ** p, 'eps_prime': eps_prime, 'G_det': G_det,
         'step_rule': step_rule, 'time_halving': time_halving})


def randomized_cost(lam, epsilon, xi=1.0, method='rte', K=DEFAULT_K, n_qubits=0, avg_support=None):
    """
    Randomized QPE with qDRIFT or RTE circuits compiled by Hamming-weight phasing.

    r_tot uses the empirical constants (16.3 RTE, 8.15 qDRIFT) times
    lam^2/eps^2; the schedule sum sum_m 2 N_m r_m is reported as r_tot_schedule.
    """
    if method not in ('rte', 'qdrift'):
        raise ConfigError("randomized method must be rte or qdrift, got {!r}".format(method))
    if not 0 < epsilon < lam:
        raise ConfigError("need 0 < eps < lambda")
    config = RPEConfig.from_target(lam, epsilon, xi, method=method)
    counts, depths = config.sample_counts(), config.depths()
    r_tot_schedule = float(sum(2 * n * r for n, r in zip(counts, depths)))
    constant = RTE_ROTATION_CONSTANT if method == 'rte' else QDRIFT_ROTATION_CONSTANT
    rotations_total = constant * lam ** 2 / epsilon ** 2
    rotations_max = float(depths[-1])
    J = angle_bits(lam, epsilon)
    rate, hwp_ancillas = hwp_rate(K, J)
    ancillas = hwp_ancillas + catalyst_qubits(J) + 1
    two_qubit = 0.0
    if avg_support is not None:
        two_qubit = rotations_total * max(2.0 * avg_support - 3.0, 0.0)
    return ResourceReport(
        method, float(rotations_total * rate), float(rotations_max * rate), two_qubit,
        rotations_total, rotations_max, int(2 * sum(counts)),
        n_qubits + ancillas, ancillas,
        {'M': config.M, 'K_M': config.K_M, 'xi': xi, 'J': J, 'K': K,
         'toffoli_per_rotation': float(rate), 'r_tot_schedule': r_tot_schedule,
         'sample_counts': counts})


def optimal_kappa(a, b):
    """
    Minimizer of e^(2/kappa) (a + b kappa): the root of
    b kappa^2 - 2 b kappa - 2 a = 0 in the bracket, clamped to its ends.
    """
    if b <= 0:
        return float('inf')
    lo, hi = KAPPA_BRACKET
    g = lambda k: b * k * k - 2 * b * k - 2 * a
    if g(hi) <= 0:
        return hi
    return brentq(g, lo, hi)


def _partial_terms(inputs, delta, G_det, G_rand, kappa, constants, time_halving=True):
    C, p, eps = inputs.C_gs or 0.0, inputs.p, inputs.epsilon
    if inputs.L_D == 0:
        C = 0.0
    eps_qpe_sq = eps ** 2 - (C * delta ** p) ** 2
    if eps_qpe_sq <= 0:
        raise InfeasibleError("Trotter error C_gs delta^p={} exhausts eps={}".format(C * delta ** p, eps))
    eps_qpe = sqrt(eps_qpe_sq)
    if constants == 'empirical':
        c_det = PARTIAL_DET_CONSTANT * (1.0 if time_halving else 2.0)
        c_rand = PARTIAL_RAND_CONSTANT
    elif constants == 'schedule':
        c_det, c_rand = 2 * (N_M + D), 8 * (N_M / 3.0 + D / 9.0)
    else:
        raise ConfigError("unknown constants {!r}".format(constants))
    a = c_det * G_det * n_stages(p) * inputs.L_D * 0.1 * pi / (delta * eps_qpe)
    b = c_rand * G_rand * (0.1 * pi * inputs.lam_R) ** 2 / eps_qpe ** 2
    if kappa is None:
        kappa = optimal_kappa(a, b)
    boost = 1.0 if isinf(kappa) else exp(2.0 / kappa)
    det_term = a * boost
    rand_term = 0.0 if b == 0 else b * kappa * boost
    return det_term, rand_term, kappa, eps_qpe


def partial_cost(inputs, G_det, G_rand, delta=None, kappa=None, constants='empirical', metric='toffoli',
                 time_halving=True):
    """
    Partially randomized QPE:
    G = c_det G_det N_stage L_D e^(2/kappa) 0.1 pi / (delta eps_qpe)
        + (280/9) G_rand kappa e^(2/kappa) (0.1 pi lam_R)^2 / eps_qpe^2
    with eps_qpe = sqrt(eps^2 - C_gs^2 delta^(2p)), minimized over kappa and delta.
    With lam_R = 0 the total equals deterministic_cost at the same time_halving.

    :param delta:  fixed step size; InfeasibleError when it exhausts the budget
    :param constants:  'empirical' (c_det = 25, or 50 without time halving; 280/9)
                       or 'schedule' (2(N_M + D), 8(N_M/3 + D/9))
    :param metric:  column receiving the gate total, 'toffoli' or 'two-qubit'
    """
    C, p, eps = inputs.C_gs or 0.0, inputs.p, inputs.epsilon
    if inputs.L_D > 0 and delta is None:
        upper = (eps / C) ** (1.0 / p) if C > 0 else pi / inputs.lam
        upper *= 1.0 - 1e-9

        def total(d):
            det_term, rand_term, _, _ = _partial_terms(inputs, d, G_det, G_rand, kappa, constants,
                                                         time_halving)
            return det_term + rand_term

        result = minimize_scalar(total, bounds=(upper * 1e-6, upper), method='bounded',
                                 options={'xatol': upper * 1e-9})
        delta = float(result.x)
    elif delta is None:
        # no deterministic part: the step only sets the RTE slot length
        delta = pi / inputs.lam
    det_term, rand_term, kappa, eps_qpe = _partial_terms(inputs, delta, G_det, G_rand, kappa, constants,
                                                        time_halving)
    other = 'schedule' if constants == 'empirical' else 'empirical'
    alt_det, alt_rand, _, _ = _partial_terms(inputs, delta, G_det, G_rand, kappa, other, time_halving)

    boost = 1.0 if isinf(kappa) else exp(2.0 / kappa)
    stages = n_stages(p)
    t_max = 0.1 * pi / eps_qpe
    M = _rounds(t_max / delta) if inputs.L_D > 0 else _rounds(t_max * inputs.lam)
    det_max = (t_max / delta) * stages * inputs.L_D
    rand_max = 0.0 if isinf(kappa) else kappa * (inputs.lam_R * t_max) ** 2
    rotations_total = (det_term / G_det if G_det else 0.0) + (rand_term / G_rand if G_rand else 0.0)
    J = angle_bits(inputs.lam, eps)
    _, hwp_ancillas = hwp_rate(inputs.K, J)
    ancillas = 1 + (hwp_ancillas + catalyst_qubits(J) if inputs.lam_R > 0 else 0)
    gates, gates_max = det_term + rand_term, det_max * G_det + rand_max * G_rand
    toffoli, two_qubit = (gates, 0.0) if metric == 'toffoli' else (0.0, gates)
    return ResourceReport(
        'partial', toffoli, gates_max if metric == 'toffoli' else 0.0, two_qubit,
        rotations_total, det_max + rand_max, _schedule_circuits(M, boost),
        inputs.n_qubits + ancillas, ancillas,
        {'delta': delta, 'kappa': kappa, 'eps_qpe': eps_qpe, 'M': M, 'L_D': inputs.L_D,
         'lam_R': inputs.lam_R, 'deterministic_term': det_term, 'randomized_term': rand_term,
         'constants': constants, 'total_' + other: alt_det + alt_rand,
         'G_det': G_det, 'G_rand': G_rand, 'time_halving': time_halving})


def sweep_partition(H, C_gs, epsilon, G_det=None, G_rand=None, metric='toffoli',
                    eps_synth=None, K=DEFAULT_K, p=2, return_all=False):
    """
    Cost of every split L_D = 0 .. L of the terms sorted by |h_l|.  The
    endpoints use the RTE-randomized and deterministic models.

    :param C_gs:  Trotter constant, or a callable L_D -> C_gs
    :return:  (best L_D, ResourceReport), plus the list of all reports when return_all
    """
    weights = np.sort(np.abs(H.coefficients))[::-1]
    lam = float(weights.sum())
    L = len(weights)
    # lam_R(L_D) = lam - prefix weight, non-increasing in L_D
    lam_R = np.concatenate([[lam], lam - np.cumsum(weights)])
    lam_R = np.maximum(lam_R, 0.0)
    lam_R[-1] = 0.0
    support = average_support(H)
    if eps_synth is None:
        eps_synth = EPS_SYNTH if metric == 'toffoli' else 0.0
    c_of = C_gs if callable(C_gs) else (lambda _: C_gs)

    det_inputs = CostModelInputs(lam, L, c_of(L), p, epsilon, eps_synth, avg_support=support,
                                 n_qubits=H.n_qubits, K=K)
    det_report = deterministic_cost(det_inputs)
    J = angle_bits(lam, epsilon)
    if metric == 'toffoli':
        model = gate_models('toffoli', det_report.parameters['eps_prime'], K, J)
    else:
        model = gate_models('two-qubit', avg_support=support)
    G_det = model[0] if G_det is None else G_det
    G_rand = model[1] if G_rand is None else G_rand
    if metric == 'toffoli':
        det_report = deterministic_cost(det_inputs, G_det=G_det)

    reports = []
    for L_D in range(L + 1):
        if L_D == 0:
            report = randomized_cost(lam, epsilon, 1.0, 'rte', K, H.n_qubits, support)
        elif L_D == L:
            report = det_report
        else:
            inputs = CostModelInputs(lam, L, c_of(L_D), p, epsilon, eps_synth,
                                     lam_R=float(lam_R[L_D]), L_D=L_D, avg_support=support,
                                     n_qubits=H.n_qubits, K=K)
            report = partial_cost(inputs, G_det, G_rand, metric=metric)
        report.parameters['L_D'] = L_D
        report.parameters['metric'] = metric
        reports.append(report)
    best = int(np.argmin([r.cost(metric) for r in reports]))
    if return_all:
        return best, reports[best], reports
    return best, reports[best]


class DFStageCost(NamedTuple):
    givens: int
    diagonal_two_qubit: int
    rotations: int


def df_cost(N, ranks, L=None):
    """
    Per-stage counts of a double-factorized Trotter step over N orbitals:
    Givens rotations for every factor's basis change plus one for the one-body
    part, two-qubit gates of the diagonal exponentials, and single rotations.
    """
    ranks = [int(r) for r in ranks]
    if L is not None and L != len(ranks):
        raise ConfigError("got {} ranks for {} factors".format(len(ranks), L))
    if any(r < 0 or r > N for r in ranks):
        raise ConfigError("factor rank outside [0, {}]".format(N))
    pairs = comb(N, 2)
    givens = sum(2 * (pairs - comb(N - r, 2)) for r in ranks) + 2 * pairs
    diagonal = sum(2 * comb(r, 2) for r in ranks)
    rotations = sum(r * max(N - 4, 0) for r in ranks)
    return DFStageCost(givens, diagonal, rotations)


class BitwiseReport(NamedTuple):
    bit_counts: List[int]
    bits: np.ndarray
    residuals: np.ndarray
    residual_weight: float
    toffoli_per_step: float


def bitwise_decompose_report(H_D, n_bit, delta, K=DEFAULT_K):
    """
    Expand |h_l| delta / pi = sum_J x_lJ 2^-J + r_l for J = 1 .. n_bit and
    group rotations of equal significance.

    :return:  BitwiseReport; residual_weight = sum r_l pi / delta moves to H_R
    """
    if delta <= 0 or n_bit < 0:
        raise ConfigError("need delta > 0 and n_bit >= 0")
    frac = np.abs(H_D.coefficients) * delta / pi
    if np.any(frac >= 1.0):
        raise ConfigError("|h| delta / pi = {:.6g} is a half turn or more; reduce delta".format(
            float(frac.max())))
    bits = np.zeros((frac.size, n_bit), dtype=np.int64)
    for J in range(1, n_bit + 1):
        bits[:, J - 1] = np.floor(frac * 2.0 ** J).astype(np.int64) % 2
    scale = 2.0 ** -np.arange(1, n_bit + 1)
    residuals = frac - bits @ scale
    counts = [int(c) for c in bits.sum(axis=0)]
    toffoli = 0.0
    for J, count in enumerate(counts, start=1):
        # pi/2 and pi/4 rotations are Clifford
        if J >= 3 and count:
            toffoli += count * float(hwp_rate(K, J)[0])
    return BitwiseReport(counts, bits, residuals, float(residuals.sum() * pi / delta), toffoli)


def fit_cost_scaling(Ns, epsilons, costs):
    """
    Least-squares fit of cost = C N^a eps^-b in log space.

    :return:  (C, a, b); b is nan when all eps coincide
    """
    Ns, epsilons, costs = (np.asarray(v, dtype=float) for v in (Ns, epsilons, costs))
    if np.any(Ns <= 0) or np.any(epsilons <= 0) or np.any(costs <= 0):
        raise ConfigError("scaling fit needs positive data")
    columns = [np.ones_like(Ns), np.log(Ns)]
    vary_eps = np.ptp(np.log(epsilons)) > 0
    if vary_eps:
        columns.append(-np.log(epsilons))
    A = np.column_stack(columns)
    coef, *_ = np.linalg.lstsq(A, np.log(costs), rcond=None)
    b = float(coef[2]) if vary_eps else float('nan')
    return float(exp(coef[0])), float(coef[1]), b
