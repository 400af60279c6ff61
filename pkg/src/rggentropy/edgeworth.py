"""Third-order Edgeworth correction to the Gaussian limit.

For finite d the rescaled squared distances q have third cumulants
kappa_abc / sqrt(d), where kappa_abc is the third moment of the per-coordinate
centred squared distances.  The corrected density is

    phi_Sigma(q) * (1 + 1/(6 sqrt(d)) * sum_{a,b,c} kappa_abc h_abc(q)),

    h_abc(q) = z_a z_b z_c - z_a P_bc - z_b P_ac - z_c P_ab,   z = P q,  P = Sigma^-1,

with the sum over ordered slot triples.  kappa_abc only depends on how the
three node pairs overlap, which leaves eight configurations e1..e8.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from . import streams
from .geometry import CoordinateDistribution, Kind, coordinate_sq_distance, kinks
from .graphs import MAX_FULL_NODES, GraphDistribution, Method, clamp_negative, num_slots, pair_slots
from .limit import (
    MC_BLOCK, CovarianceModel, cholesky, covariance_matrix, covariance_model, gaussian_block,
    orthant_masks, pair_moment_arrays, _hashable,
)
from .mc_entropy import LN2

CHUNK = 4096


@dataclass(frozen=True)
class ThirdMoments:
    e1: float  # same pair three times
    e2: float  # ij, ij, ik
    e3: float  # triangle
    e4: float  # star
    e5: float = 0.0  # ij, ij, kl
    e6: float = 0.0  # ij, kl, kl-disjoint pair
    e7: float = 0.0  # wedge plus disjoint pair
    e8: float = 0.0  # path

    def as_dict(self) -> dict:
        return asdict(self)


def _rows(kind: Kind, anchors: np.ndarray) -> np.ndarray:
    b = kinks(kind, anchors)
    return np.full((np.size(anchors), 1), np.nan) if b is None else b


def _conditional_mean_at(kind, dist, mu, points) -> np.ndarray:
    points = np.ravel(points)
    out = np.empty(points.size)
    for s in range(0, points.size, CHUNK):
        p = points[s:s + CHUNK]
        y, wy = dist.rule(_rows(kind, p))
        out[s:s + CHUNK] = (wy * (coordinate_sq_distance(kind, p[:, None], y) - mu)).sum(axis=1)
    return out


def _kernel(kind, dist, mu, a, b) -> np.ndarray:
    """K(a, b) = E_z[c(a, z) c(b, z)] for paired anchor arrays."""
    out = np.empty(a.size)
    for s in range(0, a.size, CHUNK):
        pa, pb = a[s:s + CHUNK], b[s:s + CHUNK]
        breaks = np.concatenate([_rows(kind, pa), _rows(kind, pb)], axis=1)
        z, wz = dist.rule(breaks)
        ca = coordinate_sq_distance(kind, pa[:, None], z) - mu
        cb = coordinate_sq_distance(kind, pb[:, None], z) - mu
        out[s:s + CHUNK] = (wz * ca * cb).sum(axis=1)
    return out


_MOMENT_CACHE: dict = {}


def third_moments(geometry_kind, dist: CoordinateDistribution) -> ThirdMoments:
    """e1..e4 and the vanishing check e8 by composite Gauss-Legendre quadrature."""
    kind = Kind(geometry_kind)
    key = (kind, dist if _hashable(dist) else id(dist))
    if key in _MOMENT_CACHE:
        return _MOMENT_CACHE[key]
    x, wx, wy, C, mu = pair_moment_arrays(kind, dist)
    y, _ = dist.rule(_rows(kind, x))
    m = (wy * C).sum(axis=1)
    s2 = (wy * C * C).sum(axis=1)
    e1 = float(wx @ (wy * C**3).sum(axis=1))
    e2 = float(wx @ (s2 * m))
    e4 = float(wx @ m**3)
    xa = np.broadcast_to(x[:, None], y.shape).ravel()
    K = _kernel(kind, dist, mu, xa, np.ravel(y)).reshape(y.shape)
    e3 = float(wx @ (wy * C * K).sum(axis=1))
    m_y = _conditional_mean_at(kind, dist, mu, y).reshape(y.shape)
    e8 = float(wx @ (m * (wy * C * m_y).sum(axis=1)))
    out = ThirdMoments(e1, e2, e3, e4, 0.0, 0.0, 0.0, e8)
    _MOMENT_CACHE[key] = out
    return out


# -- slot-triple configurations ---------------------------------------------


class Config(str, Enum):
    H1 = "H1"  # a = b = c
    H2 = "H2"  # two equal, third sharing a node
    H3 = "H3"  # triangle
    H4 = "H4"  # star


def classify(pairs) -> str:
    """Name of the overlap configuration of three node pairs: e1..e8."""
    a, b, c = (tuple(p) for p in pairs)
    distinct = {a, b, c}
    if len(distinct) == 1:
        return "e1"
    if len(distinct) == 2:
        same = a if (a == b or a == c) else b
        other = (distinct - {same}).pop()
        return "e2" if set(same) & set(other) else "e5"
    nodes = set(a) | set(b) | set(c)
    if len(nodes) == 3:
        return "e3"
    if len(nodes) == 4:
        return "e4" if set(a) & set(b) & set(c) else "e8"
    if len(nodes) == 5:
        return "e7"
    return "e6"


_CONFIG_OF = {"e1": Config.H1, "e2": Config.H2, "e3": Config.H3, "e4": Config.H4}


@lru_cache(maxsize=16)
def _pattern_table(n: int) -> np.ndarray:
    pairs = pair_slots(n)
    E = len(pairs)
    idx = np.empty((E, E, E), dtype=np.int8)
    for a in range(E):
        for b in range(E):
            for c in range(E):
                idx[a, b, c] = int(classify((pairs[a], pairs[b], pairs[c]))[1]) - 1
    idx.setflags(write=False)
    return idx


def moment_tensor(moments: ThirdMoments, n: int) -> np.ndarray:
    """kappa_abc over ordered slot triples."""
    values = np.array([getattr(moments, f"e{k}") for k in range(1, 9)])
    return values[_pattern_table(n)]


@dataclass
class EdgeworthModel:
    base: CovarianceModel
    moments: ThirdMoments
    n: int
    precision_inverse: np.ndarray = None
    kappa: np.ndarray = None

    def __post_init__(self):
        sigma = covariance_matrix(self.base, self.n)
        if self.precision_inverse is None:
            self.precision_inverse = np.linalg.inv(sigma)
        if self.kappa is None:
            self.kappa = moment_tensor(self.moments, self.n)
        self._contracted = np.einsum("abc,bc->a", self.kappa, self.precision_inverse)

    @property
    def covariance(self) -> np.ndarray:
        return covariance_matrix(self.base, self.n)

    def correction(self, q: np.ndarray) -> np.ndarray:
        """sum_abc kappa_abc h_abc(q) for a batch of q (rows)."""
        z = np.atleast_2d(q) @ self.precision_inverse
        cubic = np.einsum("abc,na,nb,nc->n", self.kappa, z, z, z, optimize=True)
        return cubic - 3.0 * z @ self._contracted


def edgeworth_model(geometry_kind, dist: CoordinateDistribution, n: int) -> EdgeworthModel:
    return EdgeworthModel(covariance_model(geometry_kind, dist), third_moments(geometry_kind, dist), n)


def hermite_value(model: EdgeworthModel, config, q, slots) -> float:
    """h_abc(q) for the slot triple ``slots``, checked against ``config``."""
    q = np.asarray(q, dtype=float)
    E = num_slots(model.n)
    if q.shape != (E,):
        raise ValueError(f"q must have length {E}, got shape {q.shape}")
    a, b, c = (int(s) for s in slots)
    if not all(0 <= s < E for s in (a, b, c)):
        raise ValueError("slot index out of range")
    pairs = pair_slots(model.n)
    kind = classify((pairs[a], pairs[b], pairs[c]))
    if _CONFIG_OF.get(kind) is not Config(config):
        raise ValueError(f"slots {slots} form configuration {kind}, not {Config(config).value}")
    P = model.precision_inverse
    z = P @ q
    return float(z[a] * z[b] * z[c] - z[a] * P[b, c] - z[b] * P[a, c] - z[c] * P[a, b])


# -- Monte Carlo over the Gaussian limit --------------------------------------


def _accumulate(model: EdgeworthModel, t: float, M: int, seed: int, threads):
    """Per-graph draw counts and summed corrections from one pass."""
    if model.n > MAX_FULL_NODES:
        raise ValueError(f"Edgeworth distributions are limited to n <= {MAX_FULL_NODES}")
    chol = cholesky(model.covariance)
    size = 1 << num_slots(model.n)

    def work(b, s):
        q = gaussian_block(chol, seed, b, s)
        masks = orthant_masks(q, t)
        corr = model.correction(q)
        return np.stack([np.bincount(masks, minlength=size).astype(float),
                         np.bincount(masks, weights=corr, minlength=size),
                         np.bincount(masks, weights=corr * corr, minlength=size)])

    parts = streams.map_blocks(work, M, MC_BLOCK, threads)
    return streams.ordered_sum(parts, np.zeros((3, size)))


def _distribution(model, acc, d: int, M: int) -> GraphDistribution:
    scale = 1.0 / (6.0 * math.sqrt(d))
    raw = (acc[0] + scale * acc[1]) / M
    deficit = 1.0 - float(raw.sum())
    probs, clamped = clamp_negative(raw)
    probs = probs / probs.sum()
    # per-graph variance of the weighted indicator, then the usual delta method
    second = (acc[0] + 2 * scale * acc[1] + scale**2 * acc[2]) / M
    var_p = np.maximum(second - raw**2, 0.0) / M
    nz = probs > 0
    h_nats = -float((probs[nz] * np.log(probs[nz])).sum())
    se = math.sqrt(float(((np.log(probs[nz]) + h_nats) ** 2 * var_p[nz]).sum())) / LN2
    dist = GraphDistribution(model.n, probs, Method.EDGEWORTH,
                             error={"systematic": (probs.size - 1) / (2.0 * M) / LN2, "standard": se},
                             clamped_mass=clamped)
    dist.meta.update({"d": d, "deficit": deficit})
    return dist


def edgeworth_distribution(model: EdgeworthModel, n: int, t: float, d: int, M: int = 10**6,
                           seed: int = 0, threads: int | None = None) -> GraphDistribution:
    """Corrected graph probabilities at dimension d and normalised range t.

    Negative corrected masses are clamped to zero and the rest renormalised;
    ``clamped_mass`` and ``meta['deficit']`` (1 minus the raw total) record
    what was changed.
    """
    if n != model.n:
        raise ValueError(f"model built for n={model.n}, got n={n}")
    if d < 1:
        raise ValueError("d must be at least 1")
    return _distribution(model, _accumulate(model, t, M, seed, threads), int(d), M)


@dataclass(frozen=True)
class DimensionFit:
    a: float
    b: float
    c: float
    se_a: float
    se_b: float
    residual_rms: float


def fit_dimension_curve(d_values, entropies) -> DimensionFit:
    """Least-squares fit of H = a - b (d^-1/2 + c).

    Only a - b c is identifiable from data, so c is held at 0 and a is the
    d -> infinity asymptote.
    """
    d = np.asarray(d_values, dtype=float)
    h = np.asarray(entropies, dtype=float)
    if d.size < 3:
        raise ValueError("need at least 3 points to fit the dimension curve")
    X = np.column_stack([np.ones_like(d), -d**-0.5])
    coef, *_ = np.linalg.lstsq(X, h, rcond=None)
    resid = h - X @ coef
    dof = max(d.size - 2, 1)
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    return DimensionFit(float(coef[0]), float(coef[1]), 0.0, math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1]),
                        math.sqrt(float(resid @ resid) / d.size))


def entropy_vs_dimension(geometry_kind, dist: CoordinateDistribution, n: int, t: float, d_grid,
                         M: int = 10**6, seed: int = 0, threads: int | None = None):
    """Edgeworth entropy over a d grid from a single pass of Gaussian draws, plus the fit."""
    model = edgeworth_model(geometry_kind, dist, n)
    acc = _accumulate(model, t, M, seed, threads)
    rows = []
    for d in d_grid:
        g = _distribution(model, acc, int(d), M)
        rows.append({"d": int(d), "entropy_bits": g.entropy_bits, "clamped_mass": g.clamped_mass,
                     "standard_error": g.error["standard"], "distribution": g})
    fit = fit_dimension_curve([r["d"] for r in rows], [r["entropy_bits"] for r in rows])
    return rows, fit
