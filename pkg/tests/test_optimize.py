import math
import warnings

import numpy as np
import pytest

from rggentropy.exact_small import exact_entropy
from rggentropy.geometry import Geometry, Kind, Uniform
from rggentropy.mc_entropy import entropy_at
from rggentropy.optimize import (
    BoundaryWarning, coarse_scan, delta_method_errors, fit_quadratic, jacobians, optimize_r0, sigma2_bound,
)
from rggentropy.sampling import EnsembleSpec, Hard


def test_exact_parabola():
    x = np.linspace(0, 4, 10)
    fit = fit_quadratic(np.column_stack([x, -(x - 2) ** 2 + 5]))
    assert fit.x_max == pytest.approx(2.0, abs=1e-10)
    assert fit.y_max == pytest.approx(5.0, abs=1e-10)
    assert fit.unscaled() == pytest.approx((-1.0, 4.0, 1.0), abs=1e-10)
    assert fit.predict(3.0) == pytest.approx(4.0)


def test_condition_number_on_refinement_grid():
    x = np.linspace(0.2, 0.36, 100)
    fit = fit_quadratic(np.column_stack([x, -(x - 0.28) ** 2]))
    assert fit.condition_number < 1e3
    raw = np.column_stack([x**2, x, np.ones_like(x)])
    assert np.linalg.cond(raw.T @ raw) > 1e5  # unstandardised is far worse


def test_fit_rejections():
    x = np.linspace(0, 1, 5)
    with pytest.raises(ValueError):
        fit_quadratic(np.column_stack([x, x**2]))
    with pytest.raises(ValueError):
        fit_quadratic([[1, 1], [1, 2], [1, 3]])
    with pytest.raises(ValueError):
        fit_quadratic([[0, 1], [1, 2]])


def test_jacobians_numerically():
    x = np.linspace(-1, 3, 20)
    fit = fit_quadratic(np.column_stack([x, -0.7 * x**2 + 0.9 * x + 2]))
    jx, jy = jacobians(fit)
    a, b, c, m, s = fit.a_tilde, fit.b_tilde, fit.c_tilde, fit.mu_x, fit.sigma_x
    xmax = lambda a, b, c: m - s * b / (2 * a)
    ymax = lambda a, b, c: c - b * b / (4 * a)
    h = 1e-6
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        assert jx[i] == pytest.approx((xmax(*(np.array([a, b, c]) + e)) - xmax(*(np.array([a, b, c]) - e))) / (2 * h),
                                      rel=1e-6, abs=1e-9)
        assert jy[i] == pytest.approx((ymax(*(np.array([a, b, c]) + e)) - ymax(*(np.array([a, b, c]) - e))) / (2 * h),
                                      rel=1e-6, abs=1e-9)


def test_sigma2_bound():
    assert sigma2_bound(3, 10**8, 100) == pytest.approx(1.28e-4)
    x = np.linspace(0.2, 0.3, 100)
    fit = fit_quadratic(np.column_stack([x, -(x - 0.25) ** 2]))
    se_x, se_y = delta_method_errors(fit, 3, 10**8, 100)
    assert se_x > 0 and se_y > 0
    with pytest.raises(ValueError):
        delta_method_errors(fit)


def test_noisy_coefficients_within_three_standard_errors():
    rng = np.random.default_rng(12)
    x = np.linspace(0.2, 0.36, 50)
    truth_x, truth_y, sigma = 0.28, 2.8, 1e-3
    y0 = truth_y - 40 * (x - truth_x) ** 2
    u = (x - x.mean()) / x.std()
    true_coef = np.polyfit(u, y0, 2)
    hits = 0
    for _ in range(100):
        fit = fit_quadratic(np.column_stack([x, y0 + sigma * rng.standard_normal(x.size)]))
        se = sigma * np.sqrt(np.diag(fit.normal_inverse))
        est = np.array([fit.a_tilde, fit.b_tilde, fit.c_tilde])
        hits += np.all(np.abs(est - true_coef) < 3 * se)
    assert hits >= 95


def test_coarse_scan_brackets_exact_maxima():
    b = coarse_scan(lambda r: exact_entropy("torus", r), 0.0, 0.5)
    assert 0.25 in b
    b = coarse_scan(lambda r: exact_entropy("line", r), 0.0, 1.0)
    assert 0.283 in b


def test_coarse_scan_boundary_warning():
    with pytest.warns(BoundaryWarning):
        b = coarse_scan(lambda r: r, 0.0, 1.0)
    assert b.widened and b.hi > 1.0
    with pytest.warns(BoundaryWarning):
        coarse_scan(lambda r: -r, 0.0, 1.0)


def test_optimize_torus_line():
    spec = EnsembleSpec(Geometry(Kind.TORUS, 1), 3, Uniform(), Hard(0.1))
    with warnings.catch_warnings():
        warnings.simplefilter("error", BoundaryWarning)
        res = optimize_r0(spec, L=10**6, N=60, seed=3)
    assert res.r0_hat == pytest.approx(0.25, abs=0.005)
    assert res.H_max == pytest.approx(2.8113, abs=0.005)
    assert res.p_bar_max == pytest.approx(0.5, abs=0.01)
    assert 0.3 < res.chi2_ratio < 3
    js = res.to_json()
    assert set(js) >= {"r0_hat", "se_r0", "H_max", "se_H", "p_bar_max", "fit", "condition_number"}


def test_refinement_covers_analytic_maximiser():
    """|r0_hat - 1/4| < 3 se in at least 95 of 100 independent refinements."""
    spec = EnsembleSpec(Geometry(Kind.TORUS, 1), 3, Uniform(), Hard(0.1))
    L, N = 50_000, 20
    grid = np.linspace(0.2, 0.3, N)
    hits = 0
    for run in range(100):
        ys = [entropy_at(spec, r, L, seed=10_000 * run + i).corrected_bits for i, r in enumerate(grid)]
        fit = fit_quadratic(np.column_stack([grid, ys]))
        se_x, _ = delta_method_errors(fit, 3, L, N)
        hits += abs(fit.x_max - 0.25) < 3 * se_x
    assert hits >= 95
    assert math.isfinite(se_x)
