import numpy as np
import pytest
from scipy import integrate

from rggentropy.geometry import Kind, TruncatedGaussian, Uniform, coordinate_sq_distance, kinks
from rggentropy.quadrature import panel_rule, split_rule


def test_panel_rule_integrates_polynomials_exactly():
    x, w = panel_rule(0.2, 0.9, panels=3, order=10)
    for k in range(20):
        assert w @ x**k == pytest.approx((0.9 ** (k + 1) - 0.2 ** (k + 1)) / (k + 1), rel=1e-13)


def test_split_rule_ignores_nan_and_out_of_range_breaks():
    x, w = split_rule(np.array([[np.nan, -0.3, 1.7], [0.4, 0.6, np.nan]]))
    assert w.sum(axis=1) == pytest.approx([1.0, 1.0], abs=1e-14)
    assert np.all((x >= 0) & (x <= 1))


@pytest.mark.parametrize("anchor", [0.0, 0.13, 0.5, 0.77, 1.0])
def test_kinked_torus_integral_matches_adaptive_quadrature(anchor):
    f = lambda y: np.exp(-coordinate_sq_distance(Kind.TORUS, anchor, y)) ** 3
    x, w = split_rule(kinks(Kind.TORUS, np.array([anchor])))
    ref, _ = integrate.quad(f, 0, 1, points=[p for p in (anchor - .5, anchor + .5, anchor) if 0 < p < 1],
                            epsabs=1e-14, epsrel=1e-14)
    assert w[0] @ f(x[0]) == pytest.approx(ref, abs=1e-13)


def test_distribution_rule_folds_in_the_density():
    tg = TruncatedGaussian()
    y, w = tg.rule()
    ref, _ = integrate.quad(lambda t: t**2 * tg.pdf(t), 0, 1, epsabs=1e-14)
    assert w @ y**2 == pytest.approx(ref, abs=1e-13)
    y, w = Uniform().rule(np.array([[0.3, 0.8]]))
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
