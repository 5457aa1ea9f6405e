from itertools import permutations

import numpy as np
import pytest

from pfqpe.pauli_core import PauliHamiltonian, weight_lambda
from pfqpe.trotter_fit import (ErrorCurve, alpha_commutator, default_delta_grid, fit_power_law,
                               measure_error_curve, order_cost_factor, partial_error_sweep,
                               trotter_constants)
from pfqpe.utils import ConfigError, FitQualityWarning


def scaled(H, c):
    return PauliHamiltonian(H.n_qubits, tuple((c * h, P) for h, P in H.terms), H.constant)


def test_exact_power_law():
    xs = np.logspace(-3, -1, 10)
    fit = fit_power_law(xs, 2.0 * xs ** 3)
    assert abs(fit.constant - 2.0) < 1e-9
    assert abs(fit.exponent - 3.0) < 1e-9
    assert fit.r2 > 1 - 1e-12 and not fit.flagged
    np.testing.assert_allclose(fit(xs), 2.0 * xs ** 3)


def test_outlier_flags_fit():
    xs = np.logspace(-3, -1, 10)
    ys = 2.0 * xs ** 3
    ys[4] *= 100.0
    with pytest.warns(FitQualityWarning):
        fit = fit_power_law(xs, ys)
    assert fit.flagged


def test_noisy_exponent_recovery(rng):
    xs = np.logspace(-2.5, -0.5, 25)
    ys = 0.7 * xs ** 2 * np.exp(rng.normal(0.0, 0.05, size=xs.size))
    fit = fit_power_law(xs, ys)
    assert abs(fit.exponent - 2.0) < 0.05


def test_fit_rejects_bad_input():
    with pytest.raises(ConfigError):
        fit_power_law([0.1, 0.2], [1.0, 2.0])
    with pytest.raises(ConfigError):
        fit_power_law([0.1, 0.2, 0.3], [1.0, 0.0, 2.0])


def test_default_grid():
    grid = default_delta_grid(1.0)
    assert grid.size == 25
    assert abs(grid[0] - 10 ** -2.5) < 1e-15 and abs(grid[-1] - 10 ** -0.5) < 1e-15
    np.testing.assert_allclose(default_delta_grid(4.0), grid / 4.0)
    with pytest.raises(ConfigError):
        default_delta_grid(0.0)


def test_two_term_exponents():
    H = PauliHamiltonian.from_labels([(1.0, 'X'), (1.0, 'Z')])
    curve = measure_error_curve(H, 2, default_delta_grid(2.0))
    gs = fit_power_law(curve.deltas, curve.gs_errors)
    op = fit_power_law(curve.deltas, curve.op_errors)
    assert abs(gs.exponent - 2.0) < 0.1
    assert abs(op.exponent - 3.0) < 0.1
    C_gs, C_op = trotter_constants(curve)
    assert C_gs > 0 and C_op > 0
    frame = curve.to_frame()
    assert list(frame.columns) == ['delta', 'gs_err', 'op_err'] and len(frame) == 25


def test_commuting_curve_is_flat():
    H = PauliHamiltonian.from_labels([(0.5, 'ZI'), (-0.3, 'IZ'), (0.7, 'ZZ')], constant=0.4)
    curve = measure_error_curve(H, 2, np.logspace(-2, -1, 6))
    assert curve.gs_errors.max() <= 1e-10
    assert curve.op_errors.max() <= 1e-10


def test_zero_curve_gives_zero_constants():
    curve = ErrorCurve([0.01, 0.02, 0.04], [0.0, 0.0, 0.0], [0.0, 1e-14, 0.0], 2)
    assert trotter_constants(curve) == (0.0, 0.0)


def test_error_curve_validation():
    with pytest.raises(ConfigError):
        ErrorCurve([0.02, 0.01], [1.0, 1.0], [1.0, 1.0], 2)
    with pytest.raises(ConfigError):
        ErrorCurve([0.01, 0.02], [1.0, -1.0], [1.0, 1.0], 2)


def test_alpha_single_qubit_pair():
    H = PauliHamiltonian.from_labels([(0.3, 'X'), (-1.5, 'Z')])
    assert abs(alpha_commutator(H) - 4 * 0.3 * 1.5) < 1e-12
    assert alpha_commutator(PauliHamiltonian(2, ())) == 0.0


def test_alpha_matches_dense_commutators(rng, make_hamiltonian):
    H = make_hamiltonian(3, 6, rng)
    mats = [h * P.to_matrix() for h, P in H.terms]
    expected = sum(np.linalg.norm(A @ B - B @ A, ord=2) for A, B in permutations(mats, 2))
    assert abs(alpha_commutator(H) - expected) < 1e-10
    assert abs(alpha_commutator(scaled(H, 3.0)) - 9.0 * alpha_commutator(H)) < 1e-9


def test_order_cost_factor():
    assert abs(order_cost_factor(4.0, 2, 0.01) - 2 * 20.0) < 1e-9
    assert order_cost_factor(4.0, 4, 0.01) > 0


def test_partial_sweep_endpoints():
    H = PauliHamiltonian.from_labels([(0.9, 'XI'), (0.7, 'ZZ'), (-0.5, 'IY'), (0.3, 'YX')])
    frame = partial_error_sweep(H, 2, [0, 2, 4], np.logspace(-2, -1, 6))
    assert list(frame.columns) == ['L_D', 'lam_R_fraction', 'C_gs']
    first, last = frame.iloc[0], frame.iloc[-1]
    assert abs(first.lam_R_fraction - 1.0) < 1e-12 and first.C_gs < 1e-6
    assert last.lam_R_fraction == 0.0 and last.C_gs > 0
    assert np.all(np.diff(frame.lam_R_fraction) < 0)


@pytest.mark.slow
@pytest.mark.parametrize('p, low, high', [(1, -2.5, -1.0), (2, -2.5, -1.0), (4, -1.5, -0.7)])
def test_random_instance_exponents(make_hamiltonian, p, low, high):
    rng = np.random.default_rng(11)
    gs_exponents, op_exponents = [], []
    for _ in range(20):
        H = make_hamiltonian(3, 6, rng)
        grid = np.logspace(low, high, 12) / weight_lambda(H)
        curve = measure_error_curve(H, p, grid)
        op_exponents.append(fit_power_law(curve.deltas, curve.op_errors, threshold=0.0).exponent)
        gs_exponents.append(fit_power_law(curve.deltas, curve.gs_errors, threshold=0.0).exponent)
    op_exponents, gs_exponents = np.array(op_exponents), np.array(gs_exponents)
    np.testing.assert_allclose(op_exponents, p + 1, atol=0.1)
    if p == 1:
        # first-order gs error is linear, or quadratic when the linear shift vanishes
        near = np.minimum(np.abs(gs_exponents - 1), np.abs(gs_exponents - 2))
        assert np.mean(near < 0.15) >= 0.9
    elif p == 2:
        assert np.mean(np.abs(gs_exponents - p) < 0.15) >= 0.9
        assert abs(np.median(gs_exponents) - p) < 0.1
    else:
        np.testing.assert_allclose(gs_exponents, p, atol=0.1)
