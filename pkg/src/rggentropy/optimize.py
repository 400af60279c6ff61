"""Entropy-maximising connection range: coarse scan, refined grid, quadratic fit.

The refined curve is fitted with y = a x~^2 + b x~ + c on standardised
x~ = (x - mu_x) / sigma_x, which keeps the normal matrix well conditioned, and
the maximiser's uncertainty is propagated with the delta method.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import streams
from .graphs import num_slots
from .mc_entropy import entropy_at
from .sampling import EnsembleSpec, Hard, average_connection_probability, estimate_average_connection_probability

log = logging.getLogger(__name__)

COARSE_STEPS = 50


class NumericFailure(RuntimeError):
    pass


class BoundaryWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    grid: np.ndarray = field(repr=False, compare=False)
    values: np.ndarray = field(repr=False, compare=False)
    widened: bool = False

    def __contains__(self, x: float) -> bool:
        return self.lo <= x <= self.hi


def coarse_scan(evaluate: Callable[[float], float], lo: float, hi: float,
                steps: int = COARSE_STEPS) -> Bracket:
    """Evaluate on steps+1 points of [lo, hi]; return the cells around the argmax.

    If the argmax sits on the last grid point the range is extended by its own
    width once (and a BoundaryWarning raised); at the first point the bracket
    is just clipped to lo.
    """
    if not hi > lo:
        raise ValueError("need hi > lo")
    h = (hi - lo) / steps
    grid = lo + h * np.arange(steps + 1)
    values = np.array([evaluate(float(x)) for x in grid])
    k = int(np.argmax(values))
    widened = False
    if k == steps:
        warnings.warn(f"entropy maximum at the scan boundary r0={hi:g}; widening the scan", BoundaryWarning,
                      stacklevel=2)
        more = hi + h * np.arange(1, steps + 1)
        grid = np.concatenate([grid, more])
        values = np.concatenate([values, [evaluate(float(x)) for x in more]])
        k = int(np.argmax(values))
        widened = True
        if k == grid.size - 1:
            warnings.warn("entropy maximum still at the widened boundary", BoundaryWarning, stacklevel=2)
    elif k == 0:
        warnings.warn(f"entropy maximum at the scan boundary r0={lo:g}", BoundaryWarning, stacklevel=2)
    return Bracket(max(lo, grid[k] - h), grid[k] + 2 * h, grid, values, widened)


@dataclass(frozen=True)
class QuadraticFit:
    a_tilde: float
    b_tilde: float
    c_tilde: float
    mu_x: float
    sigma_x: float
    x_max: float
    y_max: float
    condition_number: float
    rss: float
    n_points: int
    normal_inverse: np.ndarray = field(repr=False, compare=False)
    var_x_max: float = float("nan")
    var_y_max: float = float("nan")

    def unscaled(self) -> tuple[float, float, float]:
        """Coefficients (a, b, c) of y = a x^2 + b x + c in the original x."""
        a, b, c, m, s = self.a_tilde, self.b_tilde, self.c_tilde, self.mu_x, self.sigma_x
        return a / s**2, b / s - 2 * a * m / s**2, c - b * m / s + a * m**2 / s**2

    def predict(self, x) -> np.ndarray:
        u = (np.asarray(x, dtype=float) - self.mu_x) / self.sigma_x
        return self.a_tilde * u**2 + self.b_tilde * u + self.c_tilde


def fit_quadratic(points) -> QuadraticFit:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("need at least 3 (x, y) points")
    x, y = pts[:, 0], pts[:, 1]
    mu, sd = float(x.mean()), float(x.std())
    if sd == 0 or np.unique(x).size < 3:
        raise ValueError("x values must take at least 3 distinct values")
    u = (x - mu) / sd
    S = [float((u**k).sum()) for k in range(5)]
    XtX = np.array([[S[4], S[3], S[2]], [S[3], S[2], S[1]], [S[2], S[1], S[0]]])
    Xty = np.array([(u**2 * y).sum(), (u * y).sum(), y.sum()])
    cond = float(np.linalg.cond(XtX))
    if not np.isfinite(cond) or cond > 1e12:
        raise ValueError(f"normal matrix is singular (condition number {cond:.3g})")
    inv = np.linalg.inv(XtX)
    a, b, c = inv @ Xty
    if a >= 0:
        raise ValueError(f"fit is not concave (a~ = {a:.3g}); no interior maximum")
    resid = y - (a * u**2 + b * u + c)
    return QuadraticFit(float(a), float(b), float(c), mu, sd,
                        mu - sd * b / (2 * a), c - b * b / (4 * a), cond, float(resid @ resid), x.size, inv)


def sigma2_bound(n: int, L: int, N: int) -> float:
    """Crude per-fit noise bound 2^m (1 + m)^2 N / L with m = C(n, 2); 128 N / L for n = 3."""
    m = num_slots(n)
    return (2**m) * (1 + m) ** 2 * N / L


def jacobians(fit: QuadraticFit) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of x_max and y_max with respect to (a~, b~, c~)."""
    a, b, s = fit.a_tilde, fit.b_tilde, fit.sigma_x
    jx = np.array([s * b / (2 * a * a), -s / (2 * a), 0.0])
    jy = np.array([b * b / (4 * a * a), -b / (2 * a), 1.0])
    return jx, jy


def delta_method_errors(fit: QuadraticFit, n: int | None = None, L: int | None = None,
                        N: int | None = None, sigma2: float | None = None) -> tuple[float, float]:
    """(se_x_max, se_y_max) from sigma^2 J (X~^T X~)^-1 J^T.

    sigma2 defaults to the crude bound for (n, L, N); pass it directly when
    the noise variance is known.
    """
    if sigma2 is None:
        if None in (n, L, N):
            raise ValueError("give either sigma2 or all of n, L, N")
        sigma2 = sigma2_bound(n, L, N)
    jx, jy = jacobians(fit)
    var_x = float(sigma2 * jx @ fit.normal_inverse @ jx)
    var_y = float(sigma2 * jy @ fit.normal_inverse @ jy)
    return math.sqrt(max(var_x, 0.0)), math.sqrt(max(var_y, 0.0))


@dataclass
class OptimumResult:
    r0_hat: float
    se_r0: float
    H_max: float
    se_H: float
    p_bar_max: float
    fit: QuadraticFit
    bracket: Bracket
    grid: list = field(default_factory=list)
    chi2_ratio: float = float("nan")
    rebracketed: bool = False

    def to_json(self) -> dict:
        a, b, c = self.fit.a_tilde, self.fit.b_tilde, self.fit.c_tilde
        return {
            "r0_hat": self.r0_hat, "se_r0": self.se_r0, "H_max": self.H_max, "se_H": self.se_H,
            "p_bar_max": self.p_bar_max,
            "fit": {"a": a, "b": b, "c": c, "mu_x": self.fit.mu_x, "sigma_x": self.fit.sigma_x},
            "condition_number": self.fit.condition_number,
            "bracket": [self.bracket.lo, self.bracket.hi],
            "chi2_ratio": self.chi2_ratio, "rebracketed": self.rebracketed,
        }


def p_bar_at(spec: EnsembleSpec, r0: float, L: int = 10**6, seed: int = 0) -> float:
    s = spec.with_r0(r0)
    try:
        return average_connection_probability(s)
    except ValueError:
        return estimate_average_connection_probability(s, L, seed)[0]


def optimize_r0(spec: EnsembleSpec, L: int = 10**6, N: int = 100, seed: int = 0,
                L0: int | None = None, threads: int | None = None) -> OptimumResult:
    """Locate the entropy-maximising r0 of an ensemble template by simulation."""
    L0 = L if L0 is None else L0
    D = spec.geometry.diameter
    scan_seed = streams.derive_seed(seed, 0)

    def coarse(r0):
        return entropy_at(spec, r0, L0, streams.derive_seed(scan_seed, round(r0 / D * COARSE_STEPS * 1000)),
                          threads).corrected_bits

    lo = 0.0 if isinstance(spec.connection, Hard) else D / COARSE_STEPS / 10
    bracket = coarse_scan(coarse, lo, D)
    rebracketed = False
    for attempt in range(2):
        grid = np.linspace(bracket.lo, bracket.hi, N)
        ests = [entropy_at(spec, float(r), L, streams.derive_seed(seed, 1 + attempt, i), threads)
                for i, r in enumerate(grid)]
        ys = np.array([e.corrected_bits for e in ests])
        try:
            fit = fit_quadratic(np.column_stack([grid, ys]))
        except ValueError as exc:
            raise NumericFailure(f"quadratic refinement failed: {exc}") from exc
        if fit.x_max in bracket:
            break
        if attempt == 1:
            raise NumericFailure(f"fitted maximiser {fit.x_max:.6g} left the bracket twice")
        width = bracket.hi - bracket.lo
        log.warning("fitted maximiser %.6g outside [%.6g, %.6g]; re-bracketing", fit.x_max, bracket.lo, bracket.hi)
        bracket = Bracket(max(lo, fit.x_max - width / 2), fit.x_max + width / 2, bracket.grid, bracket.values, True)
        rebracketed = True
    se_x, se_y = delta_method_errors(fit, spec.n, L, N)
    per_point = np.array([e.standard_error for e in ests])
    chi2 = fit.rss / float((per_point**2).sum()) if per_point.any() else float("nan")
    rows = [{"r0": float(r), "entropy_bits": e.entropy_bits, "systematic_error": e.systematic_error,
             "standard_error": e.standard_error} for r, e in zip(grid, ests)]
    return OptimumResult(fit.x_max, se_x, fit.y_max, se_y, p_bar_at(spec, fit.x_max, L, seed), fit, bracket,
                         rows, chi2, rebracketed)


__all__ = [
    "Bracket", "BoundaryWarning", "NumericFailure", "OptimumResult", "QuadraticFit", "coarse_scan",
    "delta_method_errors", "fit_quadratic", "jacobians", "optimize_r0", "p_bar_at", "sigma2_bound",
]
