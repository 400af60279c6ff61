import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from rggentropy import streams
from rggentropy.geometry import Bernoulli, Geometry, Kind, TruncatedGaussian, Uniform
from rggentropy.graphs import complement_permutation, num_slots
from rggentropy.limit import (
    NotPositiveDefinite, converges_to_er, covariance_matrix, covariance_model, edge_probability,
    gaussian_limit_distribution, ghk_log_probability, k_for_edge_probability, kurtosis,
    normalised_range, orthant_entropy, r0_for_t, soft_limit_probability,
)
from rggentropy.sampling import EnsembleSpec, Rayleigh, estimate_average_connection_probability


def sampled_constants(kind, dist, size=2_000_000, seed=0):
    """mu, alpha, beta from simulated node triples (independent of the quadrature)."""
    rng = np.random.default_rng(seed)
    x, y, z = dist.sample(rng, (3, size))

    def sq(a, b):
        d = np.abs(a - b)
        if kind is Kind.TORUS:
            d = np.minimum(d, 1 - d)
        return d * d

    q1, q2 = sq(x, y), sq(x, z)
    return q1.mean(), q1.var(), np.cov(q1, q2)[0, 1], size


def test_bernoulli_cube_closed_forms():
    for p in (0.2, 0.5, 0.7):
        m = covariance_model(Kind.CUBE, Bernoulli(p))
        s = 2 * p * (1 - p)
        assert m.mu == pytest.approx(s, abs=1e-14)
        assert m.alpha == pytest.approx(s * (1 - s), abs=1e-14)
        assert m.beta == pytest.approx(m.diagnostics["beta_quadrature"], abs=1e-14)


@pytest.mark.parametrize("kind,dist", [(Kind.CUBE, Uniform()), (Kind.TORUS, TruncatedGaussian()),
                                       (Kind.CUBE, TruncatedGaussian(sign=1)), (Kind.TORUS, Bernoulli(0.3))])
def test_constants_against_sampling(kind, dist):
    m = covariance_model(kind, dist)
    mu, alpha, beta, size = sampled_constants(kind, dist)
    assert m.mu == pytest.approx(mu, abs=5 * math.sqrt(max(alpha, 1e-12) / size) + 1e-12)
    assert m.alpha == pytest.approx(alpha, rel=0.01, abs=1e-12)
    assert m.beta == pytest.approx(beta, abs=5 * alpha / math.sqrt(size) + 1e-12)


def test_cube_beta_two_routes_agree():
    for dist in (Uniform(), TruncatedGaussian(), TruncatedGaussian(sign=1)):
        m = covariance_model(Kind.CUBE, dist)
        assert m.beta == pytest.approx(m.diagnostics["beta_quadrature"], abs=1e-12)


def test_torus_bernoulli_is_degenerate():
    m = covariance_model(Kind.TORUS, Bernoulli(0.5))
    assert m.alpha == 0.0
    with pytest.raises(NotPositiveDefinite):
        gaussian_limit_distribution(m, 3, 0.0)


def test_kurtosis():
    assert kurtosis(Uniform()) == pytest.approx(1.8, abs=1e-12)
    assert kurtosis(Bernoulli(0.5)) == 1.0
    assert kurtosis(Bernoulli(0.2)) > 1.0
    with pytest.raises(ValueError):
        kurtosis(Bernoulli(0.0))


def test_er_classifier_and_kurtosis_link():
    assert converges_to_er(Kind.TORUS, Uniform())[0]
    assert not converges_to_er(Kind.TORUS, TruncatedGaussian())[0]
    assert converges_to_er(Kind.CUBE, Bernoulli(0.5))[0]
    assert not converges_to_er(Kind.CUBE, Bernoulli(0.3))[0]
    assert not converges_to_er(Kind.CUBE, Uniform())[0]


@given(st.floats(-3, 3), st.integers(1, 10_000))
def test_normalised_range_round_trip(t, d):
    m = covariance_model(Kind.CUBE, Uniform())
    if m.mu * d + t * math.sqrt(d) < 0:
        with pytest.raises(ValueError):
            r0_for_t(m, t, d)
        return
    assert normalised_range(m, r0_for_t(m, t, d), d).t == pytest.approx(t, abs=1e-9)


def test_covariance_matrix_structure():
    m = covariance_model(Kind.CUBE, Uniform())
    S = covariance_matrix(m, 4)
    assert S.shape == (6, 6)
    assert S[0, 0] == m.alpha and S[0, 1] == m.beta and S[0, 5] == 0.0  # (0,1) vs (2,3)
    assert np.all(np.linalg.eigvalsh(S) > 0)


@pytest.mark.parametrize("t", [-0.1, 0.0, 0.05])
def test_torus_product_form_matches_sampling(t):
    m = covariance_model(Kind.TORUS, Uniform())
    exact = gaussian_limit_distribution(m, 3, t)
    mc = gaussian_limit_distribution(m, 3, t, M=400_000, seed=2, method="mc")
    se = np.sqrt(exact.probs * (1 - exact.probs) / 400_000)
    assert np.all(np.abs(mc.probs - exact.probs) < 5 * se)
    assert exact.entropy_bits == pytest.approx(3 * (lambda p: -p * math.log2(p) - (1 - p) * math.log2(1 - p))(
        edge_probability(m, t)), abs=1e-12)


def test_ghk_matches_sampling():
    m = covariance_model(Kind.CUBE, Uniform())
    mc = gaussian_limit_distribution(m, 4, 0.02, M=2_000_000, seed=5)
    lp = ghk_log_probability(covariance_matrix(m, 4), 0.02, np.arange(64), 20_000, streams.generator(1, 2))
    p = np.exp(lp)
    se = np.sqrt(mc.probs * (1 - mc.probs) / 2_000_000)
    assert np.all(np.abs(p - mc.probs) < 5 * se + 2e-4)


def test_orthant_entropy_matches_full_distribution():
    m = covariance_model(Kind.CUBE, Uniform())
    full = gaussian_limit_distribution(m, 4, 0.0, M=2_000_000, seed=5)
    h, se = orthant_entropy(m, 4, 0.0, graphs=800, replicates=4000, seed=3)
    assert h == pytest.approx(full.entropy_bits, abs=4 * se + 0.01)


def test_large_n_product_form():
    m = covariance_model(Kind.TORUS, Uniform())
    d = gaussian_limit_distribution(m, 11, 0.0)
    assert d.probs is None and d.entropy_bits == pytest.approx(55.0)
    assert d.edge_counts.sum() == pytest.approx(1.0)


def test_large_n_cube_runs():
    m = covariance_model(Kind.CUBE, Uniform())
    d = gaussian_limit_distribution(m, 8, 0.0, M=50_000, seed=1)
    assert d.probs is None and 20 < d.entropy_bits < 28
    assert d.edge_counts.sum() == pytest.approx(1.0)


def test_complement_symmetry_cube():
    m = covariance_model(Kind.CUBE, Uniform())
    d = gaussian_limit_distribution(m, 3, 0.0, M=1_000_000, seed=9)
    perm = complement_permutation(3)
    se = np.sqrt(d.probs * (1 - d.probs) / 1_000_000)
    assert np.all(np.abs(d.probs - d.probs[perm]) < 4 * np.sqrt(2) * se)


def test_soft_limit_half():
    m = covariance_model(Kind.TORUS, Uniform())
    k = k_for_edge_probability(2.0, m)
    assert k == pytest.approx(m.mu / math.log(2))
    assert soft_limit_probability(Rayleigh(1.0, 2.0), k, m) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        soft_limit_probability(Rayleigh(1.0, 2.0), 0.0, m)


def test_soft_limit_against_high_dimension_sampling():
    m = covariance_model(Kind.TORUS, Uniform())
    k, d = k_for_edge_probability(2.0, m), 200
    spec = EnsembleSpec(Geometry(Kind.TORUS, d), 3, Uniform(), Rayleigh(math.sqrt(k * d), 2.0))
    mean, _ = estimate_average_connection_probability(spec, 200_000, 1)
    assert mean == pytest.approx(0.5, abs=0.01)


def test_edge_probability_is_phi():
    m = covariance_model(Kind.CUBE, Uniform())
    assert edge_probability(m, 0.1) == pytest.approx(stats.norm.cdf(0.1 / math.sqrt(7 / 180)))
    assert num_slots(3) == 3
