"""Points, node-coordinate laws and distances on the unit cube and torus."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .quadrature import DEFAULT_ORDER, _legendre, panel_rule, split_rule

TABLE_POINTS = 4097
QUAD_TOL = 1e-12


class Kind(str, Enum):
    CUBE = "cube"
    TORUS = "torus"


@dataclass(frozen=True)
class Geometry:
    kind: Kind
    dimension: int

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if int(self.dimension) < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        object.__setattr__(self, "dimension", int(self.dimension))

    @property
    def diameter(self) -> float:
        if self.kind is Kind.CUBE:
            return math.sqrt(self.dimension)
        return math.sqrt(self.dimension) / 2.0


@dataclass(frozen=True)
class Point:
    coords: tuple[float, ...]

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        if not coords:
            raise ValueError("a point needs at least one coordinate")
        if any(not (0.0 <= c <= 1.0) for c in coords):
            raise ValueError(f"coordinates must lie in [0, 1]: {coords}")
        object.__setattr__(self, "coords", coords)

    @property
    def dimension(self) -> int:
        return len(self.coords)


def torus_coordinate_distance(x: float, y: float) -> float:
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise ValueError(f"torus coordinates must lie in [0, 1], got ({x}, {y})")
    a = abs(x - y)
    return min(a, 1.0 - a)


def coordinate_sq_distance(kind: Kind, x, y):
    """Squared per-coordinate distance, broadcasting over arrays."""
    a = np.abs(np.asarray(x) - np.asarray(y))
    if kind is Kind.TORUS:
        a = np.minimum(a, 1.0 - a)
    return a * a


def distance(g: Geometry, a: Point, b: Point) -> float:
    if a.dimension != g.dimension or b.dimension != g.dimension:
        raise ValueError(
            f"dimension mismatch: geometry {g.dimension}, points {a.dimension} and {b.dimension}")
    sq = coordinate_sq_distance(g.kind, np.array(a.coords), np.array(b.coords))
    return math.sqrt(float(sq.sum()))


def kinks(kind: Kind, anchors: np.ndarray) -> np.ndarray | None:
    """Breakpoints in y of y -> sq distance(anchor, y); None when smooth."""
    if kind is Kind.CUBE:
        return None
    a = np.asarray(anchors, dtype=float)[..., None]
    return np.concatenate([a, a - 0.5, a + 0.5], axis=-1)


# -- coordinate distributions ----------------------------------------------


class CoordinateDistribution:
    """Law pi of a single coordinate on [0, 1]; coordinates are i.i.d."""

    discrete = False
    name = "distribution"

    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        raise NotImplementedError

    def rule(self, breaks=None, panels: int = 4, order: int = DEFAULT_ORDER):
        """Nodes and weights for the integral of f(y) pi(y) dy over [0, 1].

        Without ``breaks`` a 1-D global rule is returned; with ``breaks`` of
        shape (N, B) the result is (N, K), split row-wise at the breakpoints.
        """
        if breaks is None:
            y, w = panel_rule(0.0, 1.0, panels=4 * panels, order=order)
        else:
            y, w = split_rule(breaks, panels=panels, order=order)
        return y, w * self.pdf(y)

    def to_dict(self) -> dict:
        return {"kind": self.name}

    def central_moments(self) -> tuple[float, float, float]:
        """(mean, variance, fourth central moment)."""
        y, w = self.rule()
        mean = float(w @ y)
        c = y - mean
        return mean, float(w @ c**2), float(w @ c**4)


class _TableSampler:
    """Inverse-CDF sampler over a 4097-point grid with PCHIP interpolation."""

    def __init__(self, x: np.ndarray, cdf: np.ndarray):
        cdf = np.asarray(cdf, dtype=float)
        cdf = cdf / cdf[-1]
        keep = np.concatenate([[True], np.diff(cdf) > 0])
        self.x = x[keep]
        self.cdf = cdf[keep]
        self._inverse = PchipInterpolator(self.cdf, self.x, extrapolate=False)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return np.clip(self._inverse(u), 0.0, 1.0)


class Uniform(CoordinateDistribution):
    name = "uniform"

    def pdf(self, x):
        return np.ones_like(np.asarray(x, dtype=float))

    def cdf(self, x):
        return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)

    def sample(self, rng, size):
        return rng.random(size)

    def central_moments(self):
        return 0.5, 1.0 / 12.0, 1.0 / 80.0

    def __eq__(self, other):
        return isinstance(other, Uniform)

    def __hash__(self):
        return hash("uniform")

    def __repr__(self):
        return "Uniform()"


class TruncatedGaussian(CoordinateDistribution):
    """Density proportional to exp(sign * (x - 1/2)**2) on [0, 1].

    ``sign=-1`` is the ordinary Gaussian bump restricted to the unit
    interval; ``sign=+1`` is the inverted variant that places more mass near
    the endpoints.
    """

    name = "truncated_gaussian"

    def __init__(self, sign: float = -1.0):
        if sign not in (-1, 1, -1.0, 1.0):
            raise ValueError("sign must be +1 or -1")
        self.sign = float(sign)
        self.Z, _ = integrate.quad(self._unnormalised, 0.0, 1.0, epsabs=QUAD_TOL, epsrel=QUAD_TOL)
        self._sampler = _TableSampler(*self._cdf_table())

    def _unnormalised(self, x):
        return np.exp(self.sign * (np.asarray(x, dtype=float) - 0.5) ** 2)

    def _cdf_table(self):
        x = np.linspace(0.0, 1.0, TABLE_POINTS)
        gx, gw = _legendre(12)
        h = np.diff(x)
        nodes = x[:-1, None] + h[:, None] * gx
        cell = (h[:, None] * gw * self._unnormalised(nodes)).sum(axis=1)
        return x, np.concatenate([[0.0], np.cumsum(cell)]) / self.Z

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0.0) & (x <= 1.0)
        return np.where(inside, self._unnormalised(x) / self.Z, 0.0)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        xs, table = self._sampler.x, self._sampler.cdf
        return PchipInterpolator(xs, table)(x)

    def sample(self, rng, size):
        return self._sampler(rng.random(size))

    def to_dict(self):
        return {"kind": self.name, "sign": int(self.sign)}

    def __eq__(self, other):
        return isinstance(other, TruncatedGaussian) and other.sign == self.sign

    def __hash__(self):
        return hash((self.name, self.sign))

    def __repr__(self):
        return f"TruncatedGaussian(sign={int(self.sign)})"


class Bernoulli(CoordinateDistribution):
    """Coordinates in {0, 1}; P(1) = p."""

    discrete = True
    name = "bernoulli"

    def __init__(self, p: float = 0.5):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {p}")
        self.p = float(p)

    def rule(self, breaks=None, panels=4, order=DEFAULT_ORDER):
        y = np.array([0.0, 1.0])
        w = np.array([1.0 - self.p, self.p])
        if breaks is None:
            return y, w
        rows = np.atleast_2d(breaks).shape[0]
        return np.broadcast_to(y, (rows, 2)), np.broadcast_to(w, (rows, 2))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 0.0, np.where(x < 1, 1.0 - self.p, 1.0))

    def sample(self, rng, size):
        return (rng.random(size) < self.p).astype(float)

    def central_moments(self):
        p, q = self.p, 1.0 - self.p
        return p, p * q, p * q * (p**3 + q**3)

    def to_dict(self):
        return {"kind": self.name, "p": self.p}

    def __eq__(self, other):
        return isinstance(other, Bernoulli) and other.p == self.p

    def __hash__(self):
        return hash((self.name, self.p))

    def __repr__(self):
        return f"Bernoulli(p={self.p})"


class Tabulated(CoordinateDistribution):
    """Density given by samples on a grid covering [0, 1].

    The samples are joined by a shape-preserving cubic and normalised; the
    sampler inverts the exact CDF of that interpolant on a 4097-point grid.
    """

    name = "tabulated"

    def __init__(self, x: Sequence[float], density: Sequence[float], source: str | None = None):
        x = np.asarray(x, dtype=float)
        density = np.asarray(density, dtype=float)
        if x.ndim != 1 or x.shape != density.shape or x.size < 2:
            raise ValueError("x and density must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(x) <= 0):
            raise ValueError("x must be strictly increasing")
        if x[0] != 0.0 or x[-1] != 1.0:
            raise ValueError("tabulated grid must start at 0 and end at 1")
        if np.any(density < 0):
            raise ValueError("density samples must be non-negative")
        self.x, self.density, self.source = x, density, source
        self._interp = PchipInterpolator(x, density)
        anti = self._interp.antiderivative()
        self.Z = float(anti(1.0) - anti(0.0))
        if self.Z <= 0:
            raise ValueError("density integrates to zero")
        self._anti = anti
        grid = np.linspace(0.0, 1.0, TABLE_POINTS)
        self._sampler = _TableSampler(grid, (anti(grid) - anti(0.0)) / self.Z)

    @classmethod
    def from_csv(cls, path: str | Path) -> "Tabulated":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            if header != ["x", "density"]:
                raise ValueError(f"expected header 'x,density', got {','.join(header)!r}")
            rows = [(float(a), float(b)) for a, b in reader if a.strip()]
        xs, ds = zip(*rows)
        return cls(xs, ds, source=str(path))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0.0) & (x <= 1.0)
        return np.where(inside, np.maximum(self._interp(np.clip(x, 0, 1)), 0.0) / self.Z, 0.0)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return (self._anti(x) - self._anti(0.0)) / self.Z

    def sample(self, rng, size):
        return self._sampler(rng.random(size))

    def to_dict(self):
        if self.source:
            return {"kind": self.name, "path": self.source}
        return {"kind": self.name, "x": self.x.tolist(), "density": self.density.tolist()}

    def __repr__(self):
        return f"Tabulated({self.x.size} points)"


def normalisation_error(dist: CoordinateDistribution) -> float:
    _, w = dist.rule()
    return abs(float(w.sum()) - 1.0)


def distribution_from_dict(spec: dict, base_dir: Path | None = None) -> CoordinateDistribution:
    kind = str(spec.get("kind", "uniform")).lower()
    if kind == "uniform":
        return Uniform()
    if kind in ("truncated_gaussian", "gaussian"):
        return TruncatedGaussian(sign=spec.get("sign", -1))
    if kind == "bernoulli":
        return Bernoulli(spec.get("p", 0.5))
    if kind == "tabulated":
        if "path" in spec:
            path = Path(spec["path"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return Tabulated.from_csv(path)
        return Tabulated(spec["x"], spec["density"])
    raise ValueError(f"unknown distribution kind {kind!r}")


def sample_point(g: Geometry, dist: CoordinateDistribution, rng: np.random.Generator) -> Point:
    return Point(tuple(dist.sample(rng, g.dimension)))
