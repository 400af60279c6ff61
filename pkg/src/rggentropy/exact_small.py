"""Closed-form graph probabilities for 3-node hard RGGs on the 1-D torus and line.

p_k is the probability of one specific labelled graph with k edges, so
p0 + 3 p1 + 3 p2 + p3 = 1.  Uniform nodes throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import optimize

from .graphs import GraphDistribution, Method, _mask_edge_counts


class ExactGeometry(str, Enum):
    TORUS1D = "torus"
    LINE1D = "line"


# Coefficients, highest degree first (Horner).
_TORUS_LOW = {3: (3, 0, 0), 2: (1, 0, 0), 1: (-5, 2, 0), 0: (9, -6, 1)}
_TORUS_HIGH = {3: (12, -6, 1), 2: (-8, 6, -1), 1: (4, -4, 1), 0: (0,)}
_LINE_LOW = {3: (-2, 3, 0, 0), 2: (-4 / 3, 1, 0, 0), 1: (14 / 3, -6, 2, 0), 0: (-8, 12, -6, 1)}
_LINE_HIGH = {3: (-2, 3, 0, 0), 2: (4 / 3, -3, 2, -1 / 3), 1: (-2 / 3, 2, -2, 2 / 3), 0: (0,)}


def _horner(coeffs, x: float) -> float:
    acc = 0.0
    for c in coeffs:
        acc = acc * x + c
    return acc


@dataclass(frozen=True)
class ExactPieces:
    geometry: ExactGeometry
    r0: float
    p0: float
    p1: float
    p2: float
    p3: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return self.p0, self.p1, self.p2, self.p3

    def total(self) -> float:
        return self.p0 + 3 * self.p1 + 3 * self.p2 + self.p3

    def distribution(self) -> GraphDistribution:
        per_k = np.array(self.as_tuple())
        return GraphDistribution(3, per_k[_mask_edge_counts(3)], Method.EXACT)


def diameter(geometry) -> float:
    return 0.5 if ExactGeometry(geometry) is ExactGeometry.TORUS1D else 1.0


def exact_probabilities(geometry, r0: float) -> ExactPieces:
    geometry = ExactGeometry(geometry)
    if r0 < 0:
        raise ValueError(f"r0 must be non-negative, got {r0}")
    if r0 == 0:
        return ExactPieces(geometry, r0, 1.0, 0.0, 0.0, 0.0)
    if r0 >= diameter(geometry):
        return ExactPieces(geometry, r0, 0.0, 0.0, 0.0, 1.0)
    if geometry is ExactGeometry.TORUS1D:
        table = _TORUS_LOW if r0 < 1.0 / 3.0 else _TORUS_HIGH
    else:
        table = _LINE_LOW if r0 < 0.5 else _LINE_HIGH
    p = {k: max(_horner(c, r0), 0.0) for k, c in table.items()}
    return ExactPieces(geometry, r0, p[0], p[1], p[2], p[3])


def _xlog2x(p: float) -> float:
    return p * math.log2(p) if p > 0 else 0.0


def exact_entropy(geometry, r0: float) -> float:
    pk = exact_probabilities(geometry, r0)
    return 0.0 - (_xlog2x(pk.p0) + 3 * _xlog2x(pk.p1) + 3 * _xlog2x(pk.p2) + _xlog2x(pk.p3))


def exact_pbar(geometry, r0: float) -> float:
    """Pair connection probability; pair-distance density 2 (torus) or 2(1 - r) (line)."""
    r = min(max(r0, 0.0), diameter(geometry))
    if ExactGeometry(geometry) is ExactGeometry.TORUS1D:
        return 2.0 * r
    return 2.0 * r - r * r


def exact_maximizer(geometry) -> tuple[float, float, float]:
    """(r0_hat, maximum entropy, p-bar at r0_hat)."""
    geometry = ExactGeometry(geometry)
    if geometry is ExactGeometry.TORUS1D:
        r0 = 0.25
    else:
        res = optimize.minimize_scalar(lambda r: -exact_entropy(geometry, r),
                                       bracket=(0.2, 0.28, 0.4), method="golden",
                                       options={"xtol": 1e-10})
        r0 = float(res.x)
    return r0, exact_entropy(geometry, r0), exact_pbar(geometry, r0)
