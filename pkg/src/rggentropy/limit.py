"""High-dimensional Gaussian limit of hard RGG ensembles.

With i.i.d. coordinates the rescaled squared pair distances

    q_ij = d**-0.5 * sum_k (rho(X_i^k, X_j^k)**2 - mu)

converge jointly to N(0, Sigma) where Sigma has alpha on the diagonal, beta
between pairs sharing one node and 0 between disjoint pairs.  With
r0(d)**2 = mu*d + t*sqrt(d) an edge is present iff q_ij <= t, so the limiting
probability of a graph g is the Gaussian mass of an orthant-like region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from . import streams
from .geometry import CoordinateDistribution, Kind, coordinate_sq_distance, kinks
from .graphs import (
    MAX_FULL_NODES, GraphDistribution, Method, binary_entropy, erdos_renyi, num_slots, pair_slots, popcount,
)
from .mc_entropy import estimate_entropy
from .sampling import Rayleigh

BETA_ZERO_TOL = 1e-9
MC_BLOCK = 1 << 16


class NotPositiveDefinite(ValueError):
    """The assembled covariance matrix admits no Cholesky factor."""

    def __init__(self, matrix: np.ndarray):
        self.eigenvalues = np.linalg.eigvalsh(matrix)
        super().__init__(
            f"covariance matrix is not positive definite (smallest eigenvalue {self.eigenvalues.min():.3e})")


@dataclass(frozen=True)
class CovarianceModel:
    geometry_kind: Kind
    mu: float
    alpha: float
    beta: float
    gamma: float = 0.0
    third_moments: object | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    def matrix(self, n: int) -> np.ndarray:
        return covariance_matrix(self, n)


def _shared_node_overlap(n: int) -> np.ndarray:
    pairs = pair_slots(n)
    return np.array([[len(set(a) & set(b)) for b in pairs] for a in pairs])


def covariance_matrix(model: CovarianceModel, n: int) -> np.ndarray:
    overlap = _shared_node_overlap(n)
    return np.choose(overlap, [model.gamma, model.beta, model.alpha]).astype(float)


def pair_moment_arrays(kind: Kind, dist: CoordinateDistribution):
    """Outer nodes/weights, inner nodes/weights and centred q on the grid.

    Returns (x, wx, wy, C, mu) with C[i, k] = rho(x_i, y_ik)**2 - mu, so that
    sum_i wx_i sum_k wy_ik f(C_ik) is E[f(q)] for one coordinate.
    """
    x, wx = dist.rule()
    breaks = kinks(kind, x)
    if breaks is None:
        breaks = np.full((x.size, 1), np.nan)
    y, wy = dist.rule(breaks)
    Q = coordinate_sq_distance(kind, x[:, None], y)
    mu = float(wx @ (wy * Q).sum(axis=1))
    return x, wx, wy, Q - mu, mu


def conditional_mean(kind: Kind, dist: CoordinateDistribution, mu: float, points) -> np.ndarray:
    """m(x) = E[rho(x, Y)**2] - mu for Y ~ pi, at arbitrary points."""
    points = np.asarray(points, dtype=float)
    breaks = kinks(kind, points)
    if breaks is None:
        breaks = np.full((points.size, 1), np.nan)
    y, wy = dist.rule(breaks)
    return (wy * (coordinate_sq_distance(kind, points[:, None], y) - mu)).sum(axis=1)


_MODEL_CACHE: dict = {}


def covariance_model(geometry_kind, dist: CoordinateDistribution) -> CovarianceModel:
    """mu, alpha, beta for one coordinate law (gamma = 0 by independence)."""
    kind = Kind(geometry_kind)
    key = (kind, dist if _hashable(dist) else id(dist))
    if key in _MODEL_CACHE:
        return _MODEL_CACHE[key]
    x, wx, wy, C, mu = pair_moment_arrays(kind, dist)
    m = (wy * C).sum(axis=1)
    alpha = float(wx @ (wy * C * C).sum(axis=1))
    beta_quad = float(wx @ (m * m))
    mean_c = float(wx @ m)
    if kind is Kind.CUBE:
        _, var, c4 = dist.central_moments()
        beta = c4 - var * var
    else:
        beta = beta_quad
    model = CovarianceModel(kind, mu, alpha, beta, 0.0, diagnostics={
        "beta_quadrature": beta_quad, "mean_centred": mean_c, "gamma_quadrature": mean_c * mean_c,
    })
    _MODEL_CACHE[key] = model
    return model


def _hashable(obj) -> bool:
    try:
        hash(obj)
    except TypeError:
        return False
    return type(obj).__hash__ is not object.__hash__


def kurtosis(dist: CoordinateDistribution) -> float:
    """Fourth central moment over squared variance of one coordinate."""
    _, var, c4 = dist.central_moments()
    if var <= 1e-15:
        raise ValueError("coordinate is almost surely constant; kurtosis undefined")
    return c4 / (var * var)


def converges_to_er(geometry_kind, dist: CoordinateDistribution) -> tuple[bool, dict]:
    """Whether the hard-RGG ensemble tends to an Erdos-Renyi ensemble as d grows.

    True iff adjacent squared distances decorrelate (beta = 0).  On the torus
    this singles out the uniform law, on the cube kurtosis 1.
    """
    model = covariance_model(geometry_kind, dist)
    try:
        kurt = kurtosis(dist)
    except ValueError:
        kurt = float("nan")
    return abs(model.beta) < BETA_ZERO_TOL, {"beta": model.beta, "kurtosis": kurt}


# -- normalised connection range --------------------------------------------


@dataclass(frozen=True)
class NormalisedRange:
    t: float


def normalised_range(model: CovarianceModel, r0: float, d: int) -> NormalisedRange:
    if r0 < 0 or d < 1:
        raise ValueError("need r0 >= 0 and d >= 1")
    return NormalisedRange(r0 * r0 / math.sqrt(d) - model.mu * math.sqrt(d))


def r0_for_t(model: CovarianceModel, t: float, d: int) -> float:
    sq = model.mu * d + t * math.sqrt(d)
    if sq < 0:
        raise ValueError(f"no valid radius: mu*d + t*sqrt(d) = {sq} < 0")
    return math.sqrt(sq)


def edge_probability(model: CovarianceModel, t: float) -> float:
    """Limiting per-edge probability Phi(t / sqrt(alpha))."""
    return float(stats.norm.cdf(t / math.sqrt(model.alpha)))


# -- Gaussian-limit graph distribution --------------------------------------


def cholesky(sigma: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(sigma) from None


def gaussian_block(chol: np.ndarray, seed: int, b: int, size: int, key=(0,)) -> np.ndarray:
    rng = streams.generator(seed, *key, b)
    return rng.standard_normal((size, chol.shape[0])) @ chol.T


def orthant_masks(Z: np.ndarray, t: float) -> np.ndarray:
    bits = (Z <= t).astype(np.int64)
    return bits @ (np.int64(1) << np.arange(Z.shape[1], dtype=np.int64))


def gaussian_limit_counts(model: CovarianceModel, n: int, t: float, M: int, seed: int,
                          threads: int | None = None) -> np.ndarray:
    chol = cholesky(covariance_matrix(model, n))
    size = 1 << num_slots(n)

    def work(b, s):
        return np.bincount(orthant_masks(gaussian_block(chol, seed, b, s), t), minlength=size)

    parts = streams.map_blocks(work, M, MC_BLOCK, threads)
    return streams.ordered_sum(parts, np.zeros(size, dtype=np.int64))


def gaussian_limit_distribution(model: CovarianceModel, n: int, t: float, M: int = 10**6,
                                seed: int = 0, threads: int | None = None,
                                method: str = "auto") -> GraphDistribution:
    """Limiting distribution at normalised range t.

    ``method="auto"`` uses the exact product form when beta = 0 and Monte
    Carlo over Cholesky draws otherwise; "mc" forces sampling.  For n > 7 the
    edge-count marginals come from sampling and the entropy from
    ``orthant_entropy``.
    """
    cholesky(covariance_matrix(model, n))  # diagnostic for degenerate laws, e.g. alpha = 0
    product_form = method == "auto" and abs(model.beta) < BETA_ZERO_TOL and model.gamma == 0.0
    if n > MAX_FULL_NODES:
        if product_form:
            p, m = edge_probability(model, t), num_slots(n)
            return GraphDistribution(n, None, Method.GAUSSIAN_LIMIT, entropy_bits=m * binary_entropy(p),
                                     error={"systematic": 0.0, "standard": 0.0},
                                     edge_counts=stats.binom.pmf(np.arange(m + 1), m, p))
        return _large_n_distribution(model, n, t, M, seed, threads)
    if product_form:
        dist = erdos_renyi(n, edge_probability(model, t))
        dist.method = Method.GAUSSIAN_LIMIT
        dist.error = {"systematic": 0.0, "standard": 0.0}
        return dist
    counts = gaussian_limit_counts(model, n, t, M, seed, threads)
    est = estimate_entropy(counts, M)
    dist = GraphDistribution(n, counts / M, Method.GAUSSIAN_LIMIT, entropy_bits=est.entropy_bits,
                             error={"systematic": est.systematic_error, "standard": est.standard_error})
    dist.meta["counts"] = counts
    return dist


def _large_n_distribution(model, n, t, M, seed, threads) -> GraphDistribution:
    chol = cholesky(covariance_matrix(model, n))
    m = num_slots(n)

    def work(b, s):
        return np.bincount(popcount(orthant_masks(gaussian_block(chol, seed, b, s), t)), minlength=m + 1)

    parts = streams.map_blocks(work, M, MC_BLOCK, threads)
    hist = streams.ordered_sum(parts, np.zeros(m + 1, dtype=np.int64))
    h, se = orthant_entropy(model, n, t, seed=streams.derive_seed(seed, 7))
    return GraphDistribution(n, None, Method.GAUSSIAN_LIMIT, entropy_bits=h,
                             error={"systematic": 0.0, "standard": se}, edge_counts=hist / M)


def ghk_log_probability(sigma: np.ndarray, t: float, masks: np.ndarray, replicates: int,
                        rng: np.random.Generator) -> np.ndarray:
    """log P(Z in A_g) for Z ~ N(0, sigma), by the GHK simulator.

    Each graph's region is {Z_e <= t} on its edges and {Z_e > t} elsewhere.
    Flipping the sign of the non-edge coordinates turns it into a lower
    orthant of N(0, S sigma S), sampled sequentially through the Cholesky
    factor S L S.
    """
    masks = np.asarray(masks, dtype=np.int64)
    m = sigma.shape[0]
    L = cholesky(sigma)
    signs = np.where((masks[:, None] >> np.arange(m)) & 1, 1.0, -1.0)
    G = masks.size
    eta = np.zeros((G, replicates, m))
    logp = np.zeros((G, replicates))
    for i in range(m):
        s_i = signs[:, i][:, None]
        lij = signs[:, :i][:, None, :] * L[i, :i] * s_i[..., None]
        shift = (lij * eta[:, :, :i]).sum(axis=-1)
        upper = (s_i * t - shift) / L[i, i]
        log_cdf = special.log_ndtr(upper)
        logp += log_cdf
        u = rng.random((G, replicates))
        eta[:, :, i] = special.ndtri(np.clip(u * np.exp(log_cdf), 1e-300, 1 - 1e-16))
    return special.logsumexp(logp, axis=1) - math.log(replicates)


def orthant_entropy(model: CovarianceModel, n: int, t: float, graphs: int = 400,
                    replicates: int = 2000, seed: int = 0) -> tuple[float, float]:
    """Entropy -E[log2 P(G)] over graphs drawn from the limit, with its standard error."""
    sigma = covariance_matrix(model, n)
    chol = cholesky(sigma)
    rng = streams.generator(seed, 0)
    Z = rng.standard_normal((graphs, sigma.shape[0])) @ chol.T
    masks = orthant_masks(Z, t)
    out = []
    for start in range(0, graphs, 50):
        out.append(ghk_log_probability(sigma, t, masks[start:start + 50], replicates,
                                       streams.generator(seed, 1, start)))
    log2p = np.concatenate(out) / math.log(2.0)
    return float(-log2p.mean()), float(log2p.std(ddof=1) / math.sqrt(graphs))


def limit_entropy_curve(model: CovarianceModel, n: int, t_grid, M: int = 10**6, seed: int = 0,
                        threads: int | None = None, method: str = "auto") -> list[dict]:
    """Entropy of the limit distribution over a t grid (shared draws across t)."""
    rows = []
    for t in t_grid:
        dist = gaussian_limit_distribution(model, n, float(t), M, seed, threads, method)
        rows.append({"t": float(t), "entropy_bits": dist.entropy_bits,
                     "standard_error": (dist.error or {}).get("standard", 0.0),
                     "p_bar": edge_probability(model, float(t)), "distribution": dist})
    return rows


# -- soft connection functions ------------------------------------------------


def soft_limit_probability(connection: Rayleigh, k_scale: float, model: CovarianceModel) -> float:
    """Limiting edge probability p(sqrt(mu / k)) when r0(d) = sqrt(k d)."""
    if k_scale <= 0:
        raise ValueError("k must be positive")
    x = math.sqrt(model.mu / k_scale)
    return float(math.exp(-(x ** connection.eta)))


def k_for_edge_probability(eta: float, model: CovarianceModel, p: float = 0.5) -> float:
    """Solve exp(-(mu / k)**(eta / 2)) = p for k."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    return model.mu / (-math.log(p)) ** (2.0 / eta)
