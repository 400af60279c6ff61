import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rggentropy.geometry import Geometry, Kind, Uniform
from rggentropy.mc_entropy import entropy_at, entropy_curve, estimate_entropy, systematic_error_nats
from rggentropy.sampling import EnsembleSpec, Hard


def test_systematic_error_formula():
    assert systematic_error_nats(8, 10**6) == pytest.approx(7 / 2e6)


def test_estimate_matches_hand_computation():
    counts = np.array([10, 30, 60, 0])
    est = estimate_entropy(counts)
    p = np.array([0.1, 0.3, 0.6])
    h = -(p * np.log(p)).sum()
    sigma = math.sqrt(((np.log(p) + h) ** 2 * p * (1 - p)).sum() / 100)
    assert est.entropy_bits == pytest.approx(h / math.log(2))
    assert est.standard_error == pytest.approx(sigma / math.log(2))
    assert est.systematic_error == pytest.approx(3 / 200 / math.log(2))
    assert est.corrected_bits == pytest.approx(est.entropy_bits + est.systematic_error)


def test_estimate_errors():
    with pytest.raises(ValueError):
        estimate_entropy(np.zeros(4))
    with pytest.raises(ValueError):
        estimate_entropy(np.array([1, 2]), L=5)


@given(st.lists(st.integers(0, 1000), min_size=2, max_size=16).filter(lambda c: sum(c) > 0))
def test_estimate_bounds(counts):
    est = estimate_entropy(np.array(counts))
    assert -1e-12 <= est.entropy_bits <= math.log2(len(counts)) + 1e-9
    assert est.standard_error >= 0


def test_degenerate_counts_have_zero_entropy():
    est = estimate_entropy(np.array([0, 500, 0, 0]))
    assert est.entropy_bits == 0 and est.standard_error == 0


def test_curve_seeds_and_zero_range():
    spec = EnsembleSpec(Geometry(Kind.TORUS, 1), 3, Uniform(), Hard(0.25))
    assert entropy_at(spec, 0.0, 1000, 0).entropy_bits == 0.0
    c1 = entropy_curve(spec, [0.1, 0.2], 20_000, 5)
    c2 = entropy_curve(spec, [0.1, 0.2], 20_000, 5, threads=4)
    assert [e for _, e in c1] == [e for _, e in c2]
    with pytest.raises(ValueError):
        entropy_curve(spec, [], 10, 0)
