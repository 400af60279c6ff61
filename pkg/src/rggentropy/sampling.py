"""Hard and soft random geometric graph samplers."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, stats
from scipy.interpolate import PchipInterpolator

from . import streams
from .geometry import (
    QUAD_TOL, Bernoulli, CoordinateDistribution, Geometry, Kind, Uniform,
    coordinate_sq_distance, distribution_from_dict,
)
from .graphs import MAX_FULL_NODES, MAX_NODES, LabeledGraph, num_slots, pair_slots, popcount


@dataclass(frozen=True)
class Hard:
    r0: float

    def __post_init__(self):
        if not self.r0 >= 0:
            raise ValueError(f"r0 must be non-negative, got {self.r0}")

    def prob(self, r):
        return (np.asarray(r) <= self.r0).astype(float)

    def to_dict(self):
        return {"kind": "hard", "r0": self.r0}


@dataclass(frozen=True)
class Rayleigh:
    """Rayleigh-fading connection function exp(-(r / r0)**eta)."""

    r0: float
    eta: float

    def __post_init__(self):
        if not self.r0 > 0:
            raise ValueError(f"r0 must be positive, got {self.r0}")
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")

    def prob(self, r):
        return np.exp(-((np.asarray(r, dtype=float) / self.r0) ** self.eta))

    def to_dict(self):
        return {"kind": "rayleigh", "r0": self.r0, "eta": self.eta}


ConnectionModel = Hard | Rayleigh


def connection_from_dict(spec: dict) -> ConnectionModel:
    kind = str(spec.get("kind", "hard")).lower()
    if kind == "hard":
        return Hard(float(spec["r0"]))
    if kind == "rayleigh":
        return Rayleigh(float(spec["r0"]), float(spec["eta"]))
    raise ValueError(f"unknown connection kind {kind!r}")


@dataclass(frozen=True)
class EnsembleSpec:
    geometry: Geometry
    n: int
    dist: CoordinateDistribution
    connection: ConnectionModel

    def __post_init__(self):
        if not 2 <= self.n <= MAX_NODES:
            raise ValueError(f"n must lie in [2, {MAX_NODES}], got {self.n}")

    def with_r0(self, r0: float) -> "EnsembleSpec":
        return replace(self, connection=replace(self.connection, r0=float(r0)))

    def to_dict(self) -> dict:
        return {
            "geometry": self.geometry.kind.value,
            "dimension": self.geometry.dimension,
            "n": self.n,
            "distribution": self.dist.to_dict(),
            "connection": self.connection.to_dict(),
        }

    @classmethod
    def from_dict(cls, spec: dict, base_dir=None) -> "EnsembleSpec":
        geometry = Geometry(Kind(spec["geometry"]), int(spec.get("dimension", 1)))
        dist = distribution_from_dict(spec.get("distribution", {"kind": "uniform"}), base_dir)
        return cls(geometry, int(spec["n"]), dist, connection_from_dict(spec["connection"]))


def _block_size(spec: EnsembleSpec) -> int:
    per_sample = spec.n * spec.geometry.dimension
    return int(max(1024, min(1 << 16, (1 << 22) // per_sample)))


def sample_points(spec: EnsembleSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """Array of shape (size, n, d) of i.i.d. node positions."""
    return spec.dist.sample(rng, (size, spec.n, spec.geometry.dimension))


def edge_masks(spec: EnsembleSpec, points: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
    """Edge bitmasks for a batch of point configurations."""
    size = points.shape[0]
    kind = spec.geometry.kind
    conn = spec.connection
    uniforms = None
    if isinstance(conn, Rayleigh):
        uniforms = rng.random((size, num_slots(spec.n)))
    masks = np.zeros(size, dtype=np.int64)
    r0_sq = conn.r0 * conn.r0
    for e, (i, j) in enumerate(pair_slots(spec.n)):
        sq = coordinate_sq_distance(kind, points[:, i], points[:, j]).sum(axis=-1)
        if isinstance(conn, Hard):
            on = sq <= r0_sq
        else:
            on = uniforms[:, e] < conn.prob(np.sqrt(sq))
        masks |= on.astype(np.int64) << e
    return masks


def sample_graph(spec: EnsembleSpec, rng: np.random.Generator) -> LabeledGraph:
    pts = sample_points(spec, rng, 1)
    return LabeledGraph(spec.n, int(edge_masks(spec, pts, rng)[0]))


def _block_masks(spec: EnsembleSpec, seed: int, key: tuple, b: int, size: int) -> np.ndarray:
    rng = streams.generator(seed, *key, b)
    return edge_masks(spec, sample_points(spec, rng, size), rng)


def sample_masks(spec: EnsembleSpec, L: int, seed: int, threads: int | None = None,
                 key: tuple = ()) -> np.ndarray:
    parts = streams.map_blocks(lambda b, s: _block_masks(spec, seed, key, b, s),
                               L, _block_size(spec), threads)
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


def sample_counts(spec: EnsembleSpec, L: int, seed: int, threads: int | None = None,
                  key: tuple = ()) -> np.ndarray:
    """Counts of each labelled graph (indexed by mask) among L samples."""
    if spec.n > MAX_FULL_NODES:
        raise ValueError(
            f"n={spec.n} has 2^{num_slots(spec.n)} graphs; use sample_edge_counts for n > {MAX_FULL_NODES}")
    size = 1 << num_slots(spec.n)

    def work(b, s):
        return np.bincount(_block_masks(spec, seed, key, b, s), minlength=size).astype(np.int64)

    parts = streams.map_blocks(work, L, _block_size(spec), threads)
    return streams.ordered_sum(parts, np.zeros(size, dtype=np.int64))


def sample_edge_counts(spec: EnsembleSpec, L: int, seed: int, threads: int | None = None,
                       key: tuple = ()) -> np.ndarray:
    """Histogram of edge counts 0..C(n,2) among L samples; any n."""
    m = num_slots(spec.n)

    def work(b, s):
        return np.bincount(popcount(_block_masks(spec, seed, key, b, s)), minlength=m + 1)

    parts = streams.map_blocks(work, L, _block_size(spec), threads)
    return streams.ordered_sum(parts, np.zeros(m + 1, dtype=np.int64))


# -- average connection probability ----------------------------------------


class _CoordinateGap:
    """Law of the per-coordinate distance U = rho(X, Y) for X, Y ~ pi."""

    TABLE = 2049

    def __init__(self, kind: Kind, dist: CoordinateDistribution):
        self.kind, self.dist = kind, dist
        self.umax = 1.0 if kind is Kind.CUBE else 0.5
        self._tables = None
        if not isinstance(dist, Uniform):
            grid = np.linspace(0.0, self.umax, self.TABLE)
            g = np.array([self._density(u) for u in grid])
            G = np.array([self._cdf(u) for u in grid])
            self._tables = (PchipInterpolator(grid, g), PchipInterpolator(grid, G))

    def density(self, u: float) -> float:
        if isinstance(self.dist, Uniform):
            return 2.0 * (1.0 - u) if self.kind is Kind.CUBE else 2.0
        return float(self._tables[0](u))

    def cdf(self, u: float) -> float:
        u = min(max(u, 0.0), self.umax)
        if isinstance(self.dist, Uniform):
            return 2.0 * u - u * u if self.kind is Kind.CUBE else 2.0 * u
        return float(self._tables[1](u))

    def _density(self, u: float) -> float:
        x, w = self.dist.rule(np.array([[1.0 - u, u]]))
        x, w = x[0], w[0]
        pdf = self.dist.pdf
        if self.kind is Kind.CUBE:
            return float(w @ (pdf(x + u) + pdf(x - u)))
        return float(w @ (pdf((x + u) % 1.0) + pdf((x - u) % 1.0)))

    def _cdf(self, u: float) -> float:
        x, w = self.dist.rule(np.array([[u, 1.0 - u]]))
        x, w = x[0], w[0]
        F = self.dist.cdf
        if self.kind is Kind.CUBE:
            return float(w @ (F(np.minimum(x + u, 1.0)) - F(np.maximum(x - u, 0.0))))
        hi, lo = x + u, x - u
        mass = F(np.minimum(hi, 1.0)) - F(np.maximum(lo, 0.0))
        mass += np.where(hi > 1.0, F(hi - 1.0), 0.0)
        mass += np.where(lo < 0.0, 1.0 - F(lo + 1.0), 0.0)
        return float(w @ mass)


def _discrete_gap_pmf(kind: Kind, dist: Bernoulli) -> tuple[np.ndarray, np.ndarray]:
    if kind is Kind.TORUS:
        return np.array([0.0]), np.array([1.0])
    q = 2.0 * dist.p * (1.0 - dist.p)
    return np.array([0.0, 1.0]), np.array([1.0 - q, q])


def average_connection_probability(spec: EnsembleSpec) -> float:
    """Marginal probability that a given pair is connected, by quadrature.

    Nested adaptive Gauss-Kronrod over the per-coordinate distances; the
    innermost hard-threshold integral is replaced by the exact CDF of one
    coordinate distance.  Limited to d <= 4.
    """
    d = spec.geometry.dimension
    conn = spec.connection
    if isinstance(spec.dist, Bernoulli):
        _, pmf = _discrete_gap_pmf(spec.geometry.kind, spec.dist)
        q = pmf[1] if pmf.size > 1 else 0.0
        k = np.arange(d + 1)
        return float(stats.binom.pmf(k, d, q) @ conn.prob(np.sqrt(k)))
    if d > 4:
        raise ValueError("quadrature for the connection probability is limited to d <= 4")
    gap = _CoordinateGap(spec.geometry.kind, spec.dist)
    opts = dict(epsabs=QUAD_TOL, epsrel=1e-10, limit=200)

    if isinstance(conn, Hard):
        def F(s: float, level: int) -> float:
            if s <= 0:
                return 0.0
            top = min(math.sqrt(s), gap.umax)
            if level == 1:
                return gap.cdf(top)
            val, _ = integrate.quad(lambda u: gap.density(u) * F(s - u * u, level - 1), 0.0, top, **opts)
            return val

        return float(min(max(F(conn.r0**2, d), 0.0), 1.0))

    def E(s: float, level: int) -> float:
        if level == 0:
            return float(conn.prob(math.sqrt(s)))
        val, _ = integrate.quad(lambda u: gap.density(u) * E(s + u * u, level - 1), 0.0, gap.umax, **opts)
        return val

    return float(E(0.0, d))


def estimate_average_connection_probability(spec: EnsembleSpec, L: int, seed: int) -> tuple[float, float]:
    """Monte-Carlo p-bar and its standard error."""
    counts = sample_edge_counts(spec, L, seed)
    frac = np.arange(counts.size) / num_slots(spec.n)
    mean = float(frac @ counts / L)
    var = float(((frac - mean) ** 2) @ counts / L)
    return mean, math.sqrt(var / L)
