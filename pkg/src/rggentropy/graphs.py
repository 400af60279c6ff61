"""Labelled graphs as edge bitmasks and distributions over them.

Edge slots are ordered lexicographically by (i, j) with i < j, so for n = 3
slot 0 is (0, 1), slot 1 is (0, 2) and slot 2 is (1, 2).  Bit k of a mask is
set iff the edge in slot k is present.  This ordering is also the serialised
form used by every CSV the CLI writes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

MAX_NODES = 11
MAX_FULL_NODES = 7


def num_slots(n: int) -> int:
    return n * (n - 1) // 2


@lru_cache(maxsize=None)
def pair_slots(n: int) -> tuple[tuple[int, int], ...]:
    return tuple(itertools.combinations(range(n), 2))


def slot_index(n: int, i: int, j: int) -> int:
    if i > j:
        i, j = j, i
    if not 0 <= i < j < n:
        raise ValueError(f"invalid pair ({i}, {j}) for n={n}")
    return pair_slots(n).index((i, j))


def _check_n(n: int) -> None:
    if not 2 <= n <= MAX_NODES:
        raise ValueError(f"n must lie in [2, {MAX_NODES}], got {n}")


@dataclass(frozen=True)
class LabeledGraph:
    n: int
    mask: int = 0

    def __post_init__(self):
        _check_n(self.n)
        if self.mask < 0 or self.mask >> num_slots(self.n):
            raise ValueError(f"mask {self.mask:#b} has bits outside the {num_slots(self.n)} edge slots")

    @classmethod
    def from_edges(cls, n: int, edges) -> "LabeledGraph":
        mask = 0
        for i, j in edges:
            mask |= 1 << slot_index(n, i, j)
        return cls(n, mask)

    @classmethod
    def complete(cls, n: int) -> "LabeledGraph":
        return cls(n, (1 << num_slots(n)) - 1)

    def edges(self) -> list[tuple[int, int]]:
        return [p for k, p in enumerate(pair_slots(self.n)) if self.mask >> k & 1]

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.mask >> slot_index(self.n, i, j) & 1)

    def relabel(self, perm) -> "LabeledGraph":
        return LabeledGraph.from_edges(self.n, [(perm[i], perm[j]) for i, j in self.edges()])


def complement(g: LabeledGraph) -> LabeledGraph:
    return LabeledGraph(g.n, g.mask ^ ((1 << num_slots(g.n)) - 1))


def edge_count(g: LabeledGraph) -> int:
    return bin(g.mask).count("1")


def popcount(masks: np.ndarray) -> np.ndarray:
    return np.bitwise_count(np.asarray(masks, dtype=np.uint64)).astype(np.int64)


@lru_cache(maxsize=None)
def _mask_edge_counts(n: int) -> np.ndarray:
    counts = popcount(np.arange(1 << num_slots(n), dtype=np.uint64))
    counts.flags.writeable = False
    return counts


def complement_permutation(n: int) -> np.ndarray:
    full = (1 << num_slots(n)) - 1
    return np.arange(1 << num_slots(n), dtype=np.int64) ^ full


class Method(str, Enum):
    EXACT = "exact"
    MONTE_CARLO = "monte_carlo"
    GAUSSIAN_LIMIT = "gaussian_limit"
    EDGEWORTH = "edgeworth"


@dataclass
class GraphDistribution:
    """Probabilities of all labelled graphs on n nodes, indexed by mask.

    For n > 7 the full vector is not materialised; ``probs`` is then None and
    the edge-count marginals and entropy are carried directly.
    """

    n: int
    probs: np.ndarray | None
    method: Method
    entropy_bits: float = float("nan")
    error: dict | None = None
    clamped_mass: float = 0.0
    edge_counts: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_n(self.n)
        self.method = Method(self.method)
        if self.probs is not None:
            self.probs = np.asarray(self.probs, dtype=float)
            if self.probs.shape != (1 << num_slots(self.n),):
                raise ValueError("probability vector has the wrong length")
            if math.isnan(self.entropy_bits):
                self.entropy_bits = entropy(self)
        if self.edge_counts is None and self.probs is not None:
            self.edge_counts = edge_count_marginals(self)[0]

    def to_json(self) -> dict:
        unnorm = np.asarray(self.edge_counts, dtype=float)
        norm = unnorm / binomials(num_slots(self.n))
        out = {
            "n": self.n,
            "method": self.method.value,
            "edge_count_unnormalised": unnorm.tolist(),
            "edge_count_normalised": norm.tolist(),
            "entropy_bits": float(self.entropy_bits),
            "error": self.error,
        }
        if self.probs is not None and self.n <= MAX_FULL_NODES:
            out["probs"] = self.probs.tolist()
        if self.clamped_mass:
            out["clamped_mass"] = self.clamped_mass
        return out


def binomials(m: int) -> np.ndarray:
    return np.array([math.comb(m, k) for k in range(m + 1)], dtype=float)


def clamp_negative(probs: np.ndarray) -> tuple[np.ndarray, float]:
    """Zero out negative entries and renormalise; returns the clamped mass."""
    probs = np.asarray(probs, dtype=float)
    neg = probs < 0
    clamped = float(-probs[neg].sum())
    if clamped == 0.0:
        return probs, 0.0
    fixed = np.where(neg, 0.0, probs)
    return fixed / fixed.sum(), clamped


def entropy_of(probs: np.ndarray) -> float:
    """-sum p log2 p with 0 log 0 = 0; negative entries are clamped first."""
    p, _ = clamp_negative(probs)
    p = p[p > 0]
    return 0.0 - float((p * np.log2(p)).sum())


def entropy(dist: GraphDistribution) -> float:
    if dist.probs is None:
        return float(dist.entropy_bits)
    return entropy_of(dist.probs)


def edge_count_marginals(dist: GraphDistribution) -> tuple[np.ndarray, np.ndarray]:
    m = num_slots(dist.n)
    if dist.probs is None:
        unnorm = np.asarray(dist.edge_counts, dtype=float)
    else:
        unnorm = np.bincount(_mask_edge_counts(dist.n), weights=dist.probs, minlength=m + 1)
    return unnorm, unnorm / binomials(m)


def edge_probability(dist: GraphDistribution) -> float:
    """Average connection probability sum_g |E(g)| P(g) / C(n, 2)."""
    unnorm, _ = edge_count_marginals(dist)
    return float(np.arange(unnorm.size) @ unnorm / num_slots(dist.n))


def slot_marginal(dist: GraphDistribution, slot: int) -> float:
    masks = np.arange(dist.probs.size)
    return float(dist.probs[(masks >> slot) & 1 == 1].sum())


def erdos_renyi(n: int, p: float) -> GraphDistribution:
    """Product distribution G(n, p) over labelled graphs (n <= 7)."""
    m = num_slots(n)
    k = _mask_edge_counts(n)
    probs = p**k * (1.0 - p) ** (m - k)
    return GraphDistribution(n, probs, Method.EXACT)


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * math.log2(p) - (1 - p) * math.log2(1 - p))
