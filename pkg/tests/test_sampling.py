import math

import numpy as np
import pytest

from rggentropy.geometry import Bernoulli, Geometry, Kind, TruncatedGaussian, Uniform
from rggentropy.sampling import (
    EnsembleSpec, Hard, Rayleigh, average_connection_probability, connection_from_dict, edge_masks,
    estimate_average_connection_probability, sample_counts, sample_edge_counts, sample_graph, sample_masks,
)


def spec(kind="cube", d=2, n=3, dist=None, conn=None):
    return EnsembleSpec(Geometry(Kind(kind), d), n, dist or Uniform(), conn or Hard(0.3))


def test_connection_validation():
    with pytest.raises(ValueError):
        Hard(-0.1)
    with pytest.raises(ValueError):
        Rayleigh(0.0, 2.0)
    with pytest.raises(ValueError):
        Rayleigh(1.0, 0.0)
    with pytest.raises(ValueError):
        connection_from_dict({"kind": "step"})
    assert connection_from_dict({"kind": "rayleigh", "r0": 1, "eta": 2}) == Rayleigh(1.0, 2.0)


def test_spec_round_trip():
    s = spec("torus", 3, 4, TruncatedGaussian(), Rayleigh(0.4, 3.0))
    assert EnsembleSpec.from_dict(s.to_dict()) == s
    with pytest.raises(ValueError):
        spec(n=12)


def test_hard_extremes():
    s = spec(conn=Hard(0.0))
    assert np.all(sample_masks(s, 1000, 1) == 0)
    s = spec(conn=Hard(math.sqrt(2)))
    assert np.all(sample_masks(s, 1000, 1) == 7)


def test_rayleigh_huge_range_is_complete():
    s = spec(conn=Rayleigh(1e9, 2.0))
    assert np.all(sample_masks(s, 1000, 1) == 7)


def test_edge_masks_match_direct_distances():
    s = spec("torus", 2, 4, conn=Hard(0.35))
    rng = np.random.default_rng(0)
    pts = rng.random((50, 4, 2))
    masks = edge_masks(s, pts)
    for row, m in zip(pts, masks):
        k = 0
        for i in range(4):
            for j in range(i + 1, 4):
                delta = np.abs(row[i] - row[j])
                delta = np.minimum(delta, 1 - delta)
                assert bool(m >> k & 1) == (np.sqrt((delta**2).sum()) <= 0.35)
                k += 1


def test_sample_graph():
    g = sample_graph(spec(), np.random.default_rng(2))
    assert g.n == 3


def test_counts_limits_and_totals():
    s = spec()
    c = sample_counts(s, 5000, 3)
    assert c.sum() == 5000 and c.size == 8
    assert sample_edge_counts(s, 5000, 3).sum() == 5000
    with pytest.raises(ValueError):
        sample_counts(spec(n=8), 10, 0)
    assert sample_edge_counts(spec(n=8), 100, 0).size == 29


def test_counts_thread_independent():
    s = spec("torus", 3, 4, conn=Rayleigh(0.5, 2.0))
    a = sample_counts(s, 150_000, 11, threads=1)
    b = sample_counts(s, 150_000, 11, threads=6)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("r", [0.1, 0.3, 0.5])
def test_pbar_torus_disk_area(r):
    assert average_connection_probability(spec("torus", 2, conn=Hard(r))) == pytest.approx(math.pi * r * r, abs=1e-9)


@pytest.mark.parametrize("r", [0.2, 0.6, 0.95])
def test_pbar_square_closed_form(r):
    exact = math.pi * r * r - 8 * r**3 / 3 + r**4 / 2
    assert average_connection_probability(spec("cube", 2, conn=Hard(r))) == pytest.approx(exact, abs=1e-9)


def test_pbar_line():
    assert average_connection_probability(spec("cube", 1, conn=Hard(0.283))) == pytest.approx(2 * .283 - .283**2)


@pytest.mark.parametrize("s", [
    spec("cube", 2, dist=TruncatedGaussian(), conn=Hard(0.4)),
    spec("torus", 3, conn=Rayleigh(0.5, 3.0)),
    spec("cube", 3, dist=Bernoulli(0.3), conn=Hard(1.2)),
    spec("torus", 2, dist=TruncatedGaussian(sign=1), conn=Rayleigh(0.3, 1.0)),
])
def test_pbar_quadrature_against_sampling(s):
    mean, se = estimate_average_connection_probability(s, 400_000, 4)
    # edges within a sample are correlated, so widen the i.i.d. standard error
    assert average_connection_probability(s) == pytest.approx(mean, abs=6 * se + 1e-4)


def test_pbar_dimension_limit():
    with pytest.raises(ValueError):
        average_connection_probability(spec("cube", 5))
