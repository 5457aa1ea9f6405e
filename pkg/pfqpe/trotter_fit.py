"""
Trotter error constants from dense simulation.

Ground-state error |E0 - E0(delta)| <= C_gs delta^p and operator error
||U(delta) - S_p(delta)|| <= C_op delta^(p+1) are measured on a grid of step
sizes and fitted in log-log space.
"""
from dataclasses import dataclass
import warnings

import numpy as np
import pandas as pd

from pfqpe.formulas import partial_split, suzuki_schedule
from pfqpe.pauli_core import symplectic_arrays, weight_lambda
from pfqpe.simulator import (formula_ground_energy, formula_operator_error,
                             hamiltonian_fragments, spectrum)
from pfqpe.utils import ConfigError, FitQualityWarning

R2_THRESHOLD = 0.99
# errors at or below this are treated as exact
ERROR_FLOOR = 1e-12


@dataclass
class ErrorCurve():
    deltas: np.ndarray
    gs_errors: np.ndarray
    op_errors: np.ndarray
    p: int

    def __post_init__(self):
        self.deltas = np.asarray(self.deltas, dtype=float)
        self.gs_errors = np.asarray(self.gs_errors, dtype=float)
        self.op_errors = np.asarray(self.op_errors, dtype=float)
        if np.any(np.diff(self.deltas) <= 0):
            raise ConfigError("step sizes must be strictly increasing")
        if np.any(self.gs_errors < 0) or np.any(self.op_errors < 0):
            raise ConfigError("errors must be non-negative")

    def to_frame(self):
        return pd.DataFrame({'delta': self.deltas, 'gs_err': self.gs_errors,
                             'op_err': self.op_errors})


@dataclass(frozen=True)
class PowerLawFit():
    constant: float
    exponent: float
    r2: float

    @property
    def flagged(self):
        return self.r2 < R2_THRESHOLD

    def __call__(self, x):
        return self.constant * np.asarray(x, dtype=float) ** self.exponent


def default_delta_grid(lam, per_decade=12, low=-2.5, high=-0.5):
    """Log-spaced step sizes over [10^low, 10^high] / lam."""
    if lam <= 0:
        raise ConfigError("lambda must be positive")
    count = int(round(per_decade * (high - low))) + 1
    return np.logspace(low, high, count) / lam


def measure_error_curve(H, p, delta_grid, fragments=None, spectral=None):
    """
    Ground-state and operator errors of S_p(delta) for every delta on the grid.

    :param H:  PauliHamiltonian within the dense limit
    :param p:  formula order
    :param delta_grid:  increasing step sizes
    :param fragments:  optional fragment list; default is one fragment per term
    :return:  ErrorCurve
    """
    fragments = hamiltonian_fragments(H) if fragments is None else fragments
    bare = H.with_terms(H.terms, 0.0)
    spectral = spectrum(bare) if spectral is None else spectral
    E0 = float(spectral.energies[0]) + H.constant
    schedule = suzuki_schedule(p, len(fragments))
    deltas = np.sort(np.asarray(delta_grid, dtype=float))
    gs, op = [], []
    for delta in deltas:
        gs.append(abs(formula_ground_energy(H, schedule, delta, fragments, spectral=spectral) - E0))
        op.append(formula_operator_error(H, schedule, delta, fragments, spectral=spectral))
    return ErrorCurve(deltas, gs, op, p)


def fit_power_law(xs, ys, threshold=R2_THRESHOLD):
    """
    Unweighted least squares of log y against log x.

    :return:  PowerLawFit(constant, exponent, r2); warns with FitQualityWarning when r2 < threshold
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 3 or xs.size != ys.size:
        raise ConfigError("a power-law fit needs at least 3 paired points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ConfigError("power-law data must be positive")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = ly - (slope * lx + intercept)
    total = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(residual ** 2) / total if total > 0 else 1.0
    if r2 < threshold:
        warnings.warn("power-law fit has r^2 = {:.4f} below {}".format(r2, threshold), FitQualityWarning)
    return PowerLawFit(float(np.exp(intercept)), float(slope), float(r2))


def _fixed_exponent_constant(deltas, errors, exponent):
    keep = errors > ERROR_FLOOR
    if not np.any(keep):
        return 0.0
    return float(np.exp(np.mean(np.log(errors[keep]) - exponent * np.log(deltas[keep]))))


def trotter_constants(curve, p=None):
    """
    (C_gs, C_op) with exponents fixed at p and p+1.  Curves with every error
    below the floor give zero constants.
    """
    p = curve.p if p is None else p
    return (_fixed_exponent_constant(curve.deltas, curve.gs_errors, p),
            _fixed_exponent_constant(curve.deltas, curve.op_errors, p + 1))


def alpha_commutator(H):
    """
    sum over ordered pairs of ||[H_l1, H_l2]|| = 2 * sum |h_l1 h_l2| over
    anticommuting ordered pairs.
    """
    if not H.terms:
        return 0.0
    xs, zs = symplectic_arrays(H)
    xi, zi = xs.astype(np.int64), zs.astype(np.int64)
    anti = (xi @ zi.T + zi @ xi.T) % 2
    w = np.abs(np.asarray(H.coefficients, dtype=float))
    return float(2.0 * w @ anti @ w)


def order_cost_factor(C_gs, p, epsilon):
    """N_stage * C_gs^(1/p) * eps^(-1/p); smaller is cheaper."""
    n_stages = suzuki_schedule(p, 1).n_stages
    return n_stages * C_gs ** (1.0 / p) * epsilon ** (-1.0 / p)


def partial_error_sweep(H, p, L_D_values, delta_grid=None):
    """
    C_gs of the split formula over (H_1 .. H_{L_D}, H_R), H_R exponentiated
    as a single fragment.

    :return:  DataFrame with columns L_D, lam_R_fraction, C_gs
    """
    lam = weight_lambda(H)
    delta_grid = default_delta_grid(lam) if delta_grid is None else delta_grid
    spectral = spectrum(H.with_terms(H.terms, 0.0))
    rows = []
    for L_D in L_D_values:
        split = partial_split(H, L_D)
        fragments = hamiltonian_fragments(split.deterministic)
        if split.lam_R > 0:
            fragments.append(split.randomized)
        curve = measure_error_curve(H, p, delta_grid, fragments, spectral)
        C_gs, _ = trotter_constants(curve, p)
        rows.append({'L_D': L_D, 'lam_R_fraction': split.lam_R / lam, 'C_gs': C_gs})
    return pd.DataFrame(rows, columns=['L_D', 'lam_R_fraction', 'C_gs'])
