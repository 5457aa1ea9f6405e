"""
Hadamard-test sampling and robust phase estimation.

A channel stands for the unitary under the controlled evolution: exact
evolution, a deterministic product formula, or one of the randomized
formulas.  Every channel can draw a concrete circuit (circuit mode) or give
its mean amplitude directly (exact mode); outcome statistics are the same
in both modes because the random circuit and the Hadamard outcome are
drawn together.
"""
from dataclasses import dataclass, field
from math import ceil, e as EULER, log2
from typing import List, Optional

import numpy as np

from pfqpe.formulas import (as_normalized, normalized_operator, partial_mean_apply,
                            partial_plan, partial_random_sample, partial_split,
                            qdrift_sample, rte_mean_apply, rte_normalization, rte_sample,
                            rte_series, suzuki_schedule, partial_normalization)
from pfqpe.pauli_core import normalize
from pfqpe.simulator import (_amps, apply_pauli_rotation, exact_evolve, hamiltonian_apply,
                             replay, spectrum)
from pfqpe.utils import ConfigError, make_rng

METHODS = ('exact', 'qdrift', 'rte', 'trotter', 'partial')
RANDOMIZED = ('qdrift', 'rte', 'partial')


class Channel():
    """Base class: subclasses provide apply, apply_mean and normalization."""
    normalization = 1.0

    def apply(self, psi, rng=None, inverse=False):
        raise NotImplementedError

    def apply_mean(self, psi):
        raise NotImplementedError

    def sample_amplitude(self, psi, rng, doubled=False):
        """<psi|W|psi> for one sampled W, or <W_b psi|W_f psi> when doubled."""
        start = _amps(psi)
        forward = self.apply(start, rng)
        if not doubled:
            return complex(np.vdot(start, forward))
        backward = self.apply(start, rng, inverse=True)
        return complex(np.vdot(backward, forward))

    def mean_amplitude(self, psi, doubled=False):
        """E<psi|W|psi>, or E<psi|W W|psi> when doubled; B not applied."""
        start = _amps(psi)
        v = self.apply_mean(start)
        if doubled:
            v = self.apply_mean(v)
        return complex(np.vdot(start, v))


class ExactEvolution(Channel):
    def __init__(self, H, t, spectral=None):
        self.H = H
        self.t = t
        self.spectral = spectral if spectral is not None else spectrum(H)

    def apply(self, psi, rng=None, inverse=False):
        t = -self.t if inverse else self.t
        return exact_evolve(self.H, t, psi, spectral=self.spectral).amplitudes

    def apply_mean(self, psi):
        return self.apply(psi)


class FormulaChannel(Channel):
    """S_p(delta)^s over the Pauli terms of H."""

    def __init__(self, H, schedule, delta, s=1):
        self.H = H
        self.schedule = schedule
        self.delta = delta
        self.s = s

    def apply(self, psi, rng=None, inverse=False):
        delta = -self.delta if inverse else self.delta
        entries = self.schedule.entries[::-1] if inverse else self.schedule.entries
        v = _amps(psi)
        for _ in range(self.s):
            for index, fraction in entries:
                h, P = self.H.terms[index]
                v = apply_pauli_rotation(v, P, fraction * delta * h)
        return v

    def apply_mean(self, psi):
        return self.apply(psi)


class QDriftChannel(Channel):
    def __init__(self, H, tau, r):
        self.norm = as_normalized(H)
        self.Hbar = normalized_operator(self.norm)
        self.tau = tau
        self.r = r

    def sample(self, rng, inverse=False):
        return qdrift_sample(self.norm, -self.tau if inverse else self.tau, self.r, rng)

    def apply(self, psi, rng=None, inverse=False):
        return replay(self.sample(make_rng(rng), inverse), _amps(psi)).amplitudes

    def apply_mean(self, psi):
        v = _amps(psi)
        scale = 1.0 / np.sqrt(1.0 + self.tau ** 2)
        for _ in range(self.r):
            v = scale * (v - 1j * self.tau * hamiltonian_apply(self.Hbar, v))
        return v


class RTEChannel(Channel):
    def __init__(self, H, tau, r, n_max=8):
        self.norm = as_normalized(H)
        self.tau = tau
        self.r = r
        self.n_max = n_max
        self.normalization = rte_normalization(tau, n_max) ** r

    def sample(self, rng, inverse=False):
        return rte_sample(self.norm, -self.tau if inverse else self.tau, self.r, self.n_max, rng)

    def apply(self, psi, rng=None, inverse=False):
        return replay(self.sample(make_rng(rng), inverse), _amps(psi)).amplitudes

    def apply_mean(self, psi):
        return rte_mean_apply(self.norm, self.tau, self.r, _amps(psi), self.n_max) / self.normalization


class PartialChannel(Channel):
    def __init__(self, split, p, delta, s, kappa=2.0, n_max=8):
        self.split = split
        self.p = p
        self.delta = delta
        self.s = s
        self.kappa = kappa
        self.n_max = n_max
        self.normalization = partial_normalization(split, p, delta, s, kappa, n_max)

    def sample(self, rng, inverse=False):
        delta = -self.delta if inverse else self.delta
        return partial_random_sample(self.split, self.p, delta, self.s, self.kappa, rng, self.n_max)

    def apply(self, psi, rng=None, inverse=False):
        return replay(self.sample(make_rng(rng), inverse), _amps(psi)).amplitudes

    def apply_mean(self, psi):
        v = partial_mean_apply(self.split, self.p, self.delta, self.s, self.kappa, _amps(psi), self.n_max)
        return v / self.normalization


class SignalModel():
    """
    Spectral shortcut: mean amplitudes from the energies of H_bar and the
    guiding-state weights c_k, without a state vector.
    """

    def __init__(self, energies, weights):
        self.energies = np.asarray(energies, dtype=float)
        self.weights = np.asarray(weights, dtype=float)

    @classmethod
    def from_state(cls, H, psi):
        data = spectrum(normalized_operator(H))
        return cls(data.energies, data.weights(psi))

    def channel(self, method, t, r=None, n_max=8):
        return SignalChannel(self, method, t, r, n_max)

    def amplitude(self, method, t, r=None, n_max=8):
        E, c = self.energies, self.weights
        if method == 'exact':
            values = np.exp(-1j * t * E)
        elif method == 'qdrift':
            tau = t / r
            values = ((1.0 - 1j * tau * E) / np.sqrt(1.0 + tau ** 2)) ** r
        elif method == 'rte':
            tau = t / r
            values = (rte_series(tau * E, n_max) / rte_normalization(tau, n_max)) ** r
        else:
            raise ConfigError("no spectral model for method {!r}".format(method))
        return complex(np.sum(c * values))


class SignalChannel(Channel):
    def __init__(self, model, method, t, r=None, n_max=8):
        self.model = model
        self.method = method
        self.t = t
        self.r = r
        self.n_max = n_max

    def mean_amplitude(self, psi=None, doubled=False):
        if doubled:
            r = None if self.r is None else 2 * self.r
            return self.model.amplitude(self.method, 2 * self.t, r, self.n_max)
        return self.model.amplitude(self.method, self.t, self.r, self.n_max)

    def sample_amplitude(self, psi, rng, doubled=False):
        raise ConfigError("the spectral model has no circuit mode")


@dataclass(frozen=True)
class HadamardOutcome():
    """x from the theta basis, y from theta - pi/2; E[x + iy] = e^{i theta} <psi|U|psi>."""
    x: int
    y: int
    theta: float = 0.0

    @property
    def z(self):
        return complex(self.x, self.y)


def hadamard_sample(psi, channel, theta=0.0, controlled_sign_mode=False, rng=None, mode='exact'):
    """
    One complex Hadamard-test sample (two ancilla measurements).

    :param channel:  Channel for U
    :param controlled_sign_mode:  control +U / -U evolution, so the signal is <psi|U^2|psi>
    :param mode:  'exact' uses the channel mean, 'circuit' draws a circuit per measurement
    """
    rng = make_rng(rng)
    amps = []
    for _ in range(2):
        if mode == 'circuit':
            amps.append(channel.sample_amplitude(psi, rng, controlled_sign_mode))
        elif mode == 'exact':
            amps.append(channel.mean_amplitude(psi, controlled_sign_mode))
        else:
            raise ConfigError("unknown sampling mode {!r}".format(mode))
    a_x = np.exp(1j * theta) * amps[0]
    a_y = np.exp(1j * theta) * amps[1]
    x = 1 if rng.random() < (1.0 + a_x.real) / 2.0 else -1
    y = 1 if rng.random() < (1.0 + a_y.imag) / 2.0 else -1
    return HadamardOutcome(x, y, theta)


def estimate_Z(psi, channel, N, rng=None, theta=0.0, controlled_sign_mode=False, mode='exact'):
    """
    Mean of N complex Hadamard samples; fresh circuits per draw in circuit mode.
    """
    if N < 1:
        raise ConfigError("need at least one sample")
    rng = make_rng(rng)
    if mode == 'exact':
        a = np.exp(1j * theta) * channel.mean_amplitude(psi, controlled_sign_mode)
        px = min(max((1.0 + a.real) / 2.0, 0.0), 1.0)
        py = min(max((1.0 + a.imag) / 2.0, 0.0), 1.0)
        x = 2 * rng.binomial(N, px) - N
        y = 2 * rng.binomial(N, py) - N
        return complex(x, y) / N
    total = 0j
    for _ in range(N):
        total += hadamard_sample(psi, channel, theta, controlled_sign_mode, rng, mode).z
    return total / N


def angle_distance(a, b):
    """min over k of |a - b + 2 pi k|"""
    return abs((a - b + np.pi) % (2 * np.pi) - np.pi)


def wrap_angle(a):
    """Representative in (-pi, pi]."""
    w = (a + np.pi) % (2 * np.pi) - np.pi
    return np.pi if w == -np.pi else w


def rpe_core(angles, times=None):
    """
    Robust phase estimation from per-round angles phi_m ~ t_m * theta.

    :param angles:  phi_0 .. phi_M in (-pi, pi]
    :param times:  t_m, default 2^m
    :return:  theta in (-pi, pi]
    """
    times = [2 ** m for m in range(len(angles))] if times is None else list(times)
    theta = wrap_angle(angles[0] / times[0])
    for phi, t in zip(angles[1:], times[1:]):
        k0 = round((t * theta - phi) / (2 * np.pi))
        candidates = [(phi + 2 * np.pi * k) / t for k in (k0 - 1, k0, k0 + 1)]
        theta = wrap_angle(min(candidates, key=lambda c: angle_distance(c, theta)))
    return theta


@dataclass
class RPEConfig():
    M: int
    xi: float = 1.0
    N_M: float = 11
    D: float = 4.11
    method: str = 'exact'
    K_M: Optional[int] = None
    seed: Optional[int] = None
    overhead: Optional[float] = None
    c0: float = 1.0
    n_max: int = 8
    kappa: float = 2.0
    qdrift_depth: str = 'quadratic'
    p: int = 2
    delta: Optional[float] = None
    L_D: Optional[int] = None
    time_halving: bool = False
    mode: Optional[str] = None

    def __post_init__(self):
        if self.method == 'exact-evolution':
            self.method = 'exact'
        if self.method not in METHODS:
            raise ConfigError("unknown method {!r}".format(self.method))
        if self.M < 0:
            raise ConfigError("M must be non-negative")
        if not 0 < self.xi <= 1:
            raise ConfigError("xi must lie in (0, 1]")
        if self.K_M is None:
            self.K_M = 2 ** self.M
        if not (2 ** self.M) / 2 < self.K_M <= 2 ** self.M:
            raise ConfigError("K_M={} outside (2^(M-1), 2^M] for M={}".format(self.K_M, self.M))
        if self.qdrift_depth not in ('quadratic', 'constant-tau'):
            raise ConfigError("unknown qDRIFT depth rule {!r}".format(self.qdrift_depth))
        if self.method in ('trotter', 'partial') and self.delta is None:
            raise ConfigError("method {} needs a step size delta".format(self.method))

    @classmethod
    def from_target(cls, lam, epsilon, xi=1.0, **kwargs):
        """M = ceil(log2(xi lam / eps)), K_M = ceil(xi lam / eps)."""
        if not 0 < epsilon:
            raise ConfigError("epsilon must be positive")
        ratio = xi * lam / epsilon
        K_M = max(1, int(ceil(ratio)))
        M = max(0, int(ceil(log2(K_M))))
        return cls(M=M, xi=xi, K_M=K_M, **kwargs)

    @property
    def sample_overhead(self):
        if self.overhead is not None:
            return self.overhead
        if self.method == 'partial':
            return float(np.exp(2.0 / self.kappa))
        return EULER if self.method in RANDOMIZED else 1.0

    def times(self):
        return [2 ** m for m in range(self.M)] + [self.K_M]

    def sample_counts(self):
        counts = []
        for m in range(self.M + 1):
            n = int(ceil(self.sample_overhead * (self.N_M + self.D * (self.M - m))))
            if m == self.M and self.xi < 1:
                n *= int(ceil(self.c0 / self.xi ** 2))
            counts.append(max(1, n))
        return counts

    def depths(self):
        """Pauli rotations per circuit for the randomized methods."""
        out = []
        for t in self.times():
            if self.method == 'qdrift':
                out.append(t * t if self.qdrift_depth == 'quadratic' else t * 2 ** self.M)
            elif self.method == 'rte':
                out.append(int(ceil(self.kappa * t * t)))
            else:
                out.append(None)
        return out


@dataclass
class RPEResult():
    estimate: float
    theta: float
    angles: List[float]
    sample_counts: List[int]
    times: List[int]
    depths: List[Optional[int]]
    rotations_total: float
    rotations_max: float
    time_total: float
    time_max: float
    circuits: int
    lam: float
    method: str
    extras: dict = field(default_factory=dict)


def _steps(t, halving):
    """(steps per circuit, doubled) under the time-halving trick."""
    if halving and t % 2 == 0:
        return t // 2, True
    return t, False


def _round_channel(config, t, r, H, norm, split, model, spectral):
    if model is not None:
        return model.channel(config.method, t, r, config.n_max), False
    steps, doubled = _steps(t, config.time_halving)
    if config.method == 'exact':
        return ExactEvolution(normalized_operator(norm), steps, spectral), doubled
    if config.method == 'qdrift':
        return QDriftChannel(norm, t / r, r), False
    if config.method == 'rte':
        return RTEChannel(norm, t / r, r, config.n_max), False
    if config.method == 'trotter':
        schedule = suzuki_schedule(config.p, len(H.terms))
        return FormulaChannel(H, schedule, config.delta, steps), doubled
    return PartialChannel(split, config.p, config.delta, steps, config.kappa, config.n_max), doubled


def _rotations_per_circuit(config, t, r, H, split):
    if r is not None:
        return r
    steps, _ = _steps(t, config.time_halving)
    if config.method == 'trotter':
        return steps * len(suzuki_schedule(config.p, len(H.terms)).entries)
    if config.method == 'partial':
        plan = partial_plan(split, config.p, config.delta, steps, config.kappa)
        # RTE segments: one rotation each
        return steps * sum(1 if r_i is None else r_i for _, _, r_i in plan)
    return 0


def rpe_run(H, psi, config):
    """
    Robust phase estimation of the ground energy of H.

    Simulated methods run on H_bar = H/lambda with integer times t_m; the
    product-formula methods use s_m = t_m steps of size delta.

    :param H:  PauliHamiltonian
    :param psi:  guiding state (ground-state overlap >= 0.54 advised)
    :param config:  RPEConfig
    :return:  RPEResult with the energy estimate (constant included)
    """
    norm = normalize(H)
    lam = norm.lam
    mode = config.mode
    if mode is None:
        mode = 'signal' if config.method in ('exact', 'qdrift', 'rte') else 'exact'
    model = SignalModel.from_state(H, psi) if mode == 'signal' else None
    spectral = spectrum(normalized_operator(norm)) if mode != 'signal' and config.method == 'exact' else None
    split = partial_split(H, config.L_D if config.L_D is not None else len(H.terms)) \
        if config.method == 'partial' else None
    rng = make_rng(config.seed)
    counts, times, depths = config.sample_counts(), config.times(), config.depths()

    angles = []
    rotations_total, time_total, rotations_max = 0.0, 0.0, 0.0
    steps = 0
    for N, t, r in zip(counts, times, depths):
        channel, doubled = _round_channel(config, t, r, H, norm, split, model, spectral)
        Z = estimate_Z(psi, channel, N, rng, controlled_sign_mode=doubled,
                       mode='exact' if mode == 'signal' else mode)
        angles.append(float(-np.angle(Z)))
        steps, _ = _steps(t, config.time_halving and model is None)
        per_circuit = _rotations_per_circuit(config, t, r, H, split)
        rotations_total += 2 * N * per_circuit
        rotations_max = max(rotations_max, per_circuit)
        time_total += 2 * N * steps
    theta = rpe_core(angles, times)

    tau_M = None
    if config.method in ('exact', 'rte'):
        energy = lam * theta
    elif config.method == 'qdrift':
        tau_M = times[-1] / depths[-1]
        energy = lam * np.tan(tau_M * theta) / tau_M
    else:
        energy = theta / config.delta
    return RPEResult(float(energy + H.constant), float(theta), angles, counts, times, depths,
                     rotations_total, rotations_max, time_total,
                     float(steps), int(2 * sum(counts)),
                     lam, config.method, {'tau_M': tau_M})


def rpe_signal_run(energies, weights, config, lam=1.0):
    """
    RPE on a spectral signal model: energies of H_bar and guiding weights c_k.
    Returns the estimate in units of lam.
    """
    if config.method not in ('exact', 'qdrift', 'rte'):
        raise ConfigError("spectral RPE supports exact, qdrift and rte, not {!r}".format(config.method))
    model = SignalModel(energies, weights)
    rng = make_rng(config.seed)
    counts, times, depths = config.sample_counts(), config.times(), config.depths()
    angles = []
    for N, t, r in zip(counts, times, depths):
        Z = estimate_Z(None, model.channel(config.method, t, r, config.n_max), N, rng)
        angles.append(float(-np.angle(Z)))
    theta = rpe_core(angles, times)
    tau_M = None
    if config.method == 'qdrift':
        tau_M = times[-1] / depths[-1]
        energy = lam * np.tan(tau_M * theta) / tau_M
    else:
        energy = lam * theta
    per_circuit = [r if r is not None else 0 for r in depths]
    return RPEResult(float(energy), float(theta), angles, counts, times, depths,
                     float(sum(2 * N * r for N, r in zip(counts, per_circuit))),
                     float(max(per_circuit)),
                     float(sum(2 * N * t for N, t in zip(counts, times))), float(times[-1]),
                     int(2 * sum(counts)), lam, config.method, {'tau_M': tau_M})
