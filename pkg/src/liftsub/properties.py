"""Testable pseudorandomness predicates for sampled lifts.

Covers joinedness (every two disjoint m-sets see a crossing edge), expansion
into a fixed vertex set, greedy cross-matchings between transversal families,
and Monte Carlo estimation of matching-avoidance probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

from .lifts import LiftGraph, VertexId, derive_rng

__all__ = [
    "AvoidanceEstimate",
    "BudgetExceededError",
    "CrossMatching",
    "ExpansionReport",
    "JoinedVerdict",
    "check_expansion_into",
    "check_joined",
    "estimate_avoidance_probability",
    "find_cross_matching",
]

EXHAUSTIVE_PAIR_BUDGET = 10_000_000


class BudgetExceededError(RuntimeError):
    """An exhaustive check would exceed its enumeration budget."""


@dataclass(frozen=True)
class JoinedVerdict:
    holds: bool
    witness: Optional[tuple[frozenset[VertexId], frozenset[VertexId]]]
    mode: str  # "exhaustive" | "sampled"
    trials: int


def _adjacency_masks(G: LiftGraph) -> list[int]:
    masks = [0] * G.num_vertices
    for u, nbrs in enumerate(G.flat_adjacency):
        m = 0
        for w in nbrs:
            m |= 1 << w
        masks[u] = m
    return masks


def check_joined(
    G: LiftGraph,
    m: int,
    mode: str = "exhaustive",
    trials: int = 1000,
    seed: int = 0,
    budget: int = EXHAUSTIVE_PAIR_BUDGET,
) -> JoinedVerdict:
    """Decide whether every two disjoint m-sets have a crossing edge.

    Exhaustive mode enumerates all unordered pairs of disjoint m-sets and is
    exact; it refuses (rather than silently sampling) when the enumeration
    exceeds `budget`.  Sampled mode draws random disjoint pairs: a verdict of
    False comes with a concrete witness, True proves nothing.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    N = G.num_vertices
    masks = _adjacency_masks(G)

    def crossing(A: Sequence[int], mask_B: int) -> bool:
        return any(masks[a] & mask_B for a in A)

    if mode == "exhaustive":
        if 2 * m > N:
            return JoinedVerdict(holds=True, witness=None, mode="exhaustive", trials=0)
        total = math.comb(N, m) * math.comb(N - m, m) // 2
        if total > budget:
            raise BudgetExceededError(
                f"exhaustive joinedness needs {total} set pairs, budget is {budget}")
        vertices = list(range(N))
        for A in combinations(vertices, m):
            rest = [v for v in vertices if v not in set(A)]
            for B in combinations(rest, m):
                if B[0] < A[0]:
                    continue  # unordered pairs: enumerate each {A,B} once
                mask_B = 0
                for x in B:
                    mask_B |= 1 << x
                if not crossing(A, mask_B):
                    wa = frozenset(G.vertex_at(a) for a in A)
                    wb = frozenset(G.vertex_at(b) for b in B)
                    return JoinedVerdict(holds=False, witness=(wa, wb), mode="exhaustive", trials=0)
        return JoinedVerdict(holds=True, witness=None, mode="exhaustive", trials=0)

    if mode != "sampled":
        raise ValueError(f"unknown mode '{mode}'")
    if 2 * m > N:
        return JoinedVerdict(holds=True, witness=None, mode="sampled", trials=0)
    rng = derive_rng(seed)
    for _ in range(trials):
        pick = rng.choice(N, size=2 * m, replace=False)
        A, B = pick[:m].tolist(), pick[m:].tolist()
        mask_B = 0
        for x in B:
            mask_B |= 1 << x
        if not crossing(A, mask_B):
            wa = frozenset(G.vertex_at(a) for a in A)
            wb = frozenset(G.vertex_at(b) for b in B)
            return JoinedVerdict(holds=False, witness=(wa, wb), mode="sampled", trials=trials)
    return JoinedVerdict(holds=True, witness=None, mode="sampled", trials=trials)


@dataclass(frozen=True)
class ExpansionReport:
    epsilon: float
    tested_sets: int
    worst_ratio: float
    violating_set: Optional[frozenset[VertexId]]


def check_expansion_into(
    G: LiftGraph,
    V: Iterable[VertexId],
    epsilon: float,
    set_sizes: Sequence[int] = (1,),
    trials: int = 1000,
    seed: int = 0,
) -> ExpansionReport:
    """Probe |N(U) cap V| >= min(eps*n*|U|, eps^6*ell*n) over sampled U.

    N(U) here is the closed neighborhood (U together with its neighbors).
    Singletons are checked exhaustively; larger requested sizes are sampled.
    V must contain at least max(9*eps*ell, ell-n) vertices of every fiber,
    mirroring the hypothesis under which the bound is meaningful.
    """
    if not (0 < epsilon <= 0.5):
        raise ValueError("epsilon must lie in (0, 1/2]")
    n, ell = G.base.num_vertices, G.ell
    v_flags = np.zeros(G.num_vertices, dtype=bool)
    per_fiber = [0] * n
    for v in V:
        f = G.flat_id(G._check_vertex(v))
        if not v_flags[f]:
            v_flags[f] = True
            per_fiber[f // ell] += 1
    need = max(9.0 * epsilon * ell, float(ell - n))
    for f, count in enumerate(per_fiber):
        if count < need:
            raise ValueError(
                f"fiber {f} contributes {count} vertices to V, hypothesis needs at least {need:g}")

    adj = G.flat_adjacency
    cap = epsilon ** 6 * ell * n

    def measure(U: Sequence[int]) -> tuple[float, float]:
        hit = set(u for u in U if v_flags[u])
        for u in U:
            for w in adj[u]:
                if v_flags[w]:
                    hit.add(w)
        bound = min(epsilon * n * len(U), cap)
        return len(hit), bound

    worst = math.inf
    violator: Optional[frozenset[VertexId]] = None
    tested = 0
    rng = derive_rng(seed)
    for size in set_sizes:
        if not (1 <= size <= G.num_vertices):
            raise ValueError(f"set size {size} out of range")
        if size == 1:
            candidates: Iterable[Sequence[int]] = ([u] for u in range(G.num_vertices))
        else:
            candidates = (rng.choice(G.num_vertices, size=size, replace=False).tolist()
                          for _ in range(trials))
        for U in candidates:
            got, bound = measure(U)
            ratio = got / bound
            tested += 1
            if ratio < worst:
                worst = ratio
                if got < bound:
                    violator = frozenset(G.vertex_at(u) for u in U)
    return ExpansionReport(epsilon=epsilon, tested_sets=tested,
                           worst_ratio=worst, violating_set=violator)


@dataclass(frozen=True)
class CrossMatching:
    """A lift matching covering at most one edge per transversal pair."""

    edges: frozenset[tuple[VertexId, VertexId]]
    covered_pairs: frozenset[tuple[int, int]]
    by_pair: dict[tuple[int, int], tuple[VertexId, VertexId]] = field(compare=False, default_factory=dict)


def find_cross_matching(G: LiftGraph, transversals: Sequence[Sequence[VertexId]]) -> CrossMatching:
    """Greedy maximal matching with at most one edge per transversal pair.

    Pairs (i, j) are processed in lexicographic order; within a pair the scan
    walks fibers in increasing index and takes the first vertex-disjoint lift
    edge.  A final sweep re-checks that no further edge covering an uncovered
    pair can be added.
    """
    ell = G.ell
    fiber_sets = []
    by_fiber: list[dict[int, int]] = []  # fiber -> flat id, per transversal
    seen: set[int] = set()
    for t_idx, T in enumerate(transversals):
        mapping: dict[int, int] = {}
        for v in T:
            v = G._check_vertex(v)
            flat = G.flat_id(v)
            if flat in seen:
                raise ValueError(f"transversals are not pairwise disjoint at {tuple(v)}")
            seen.add(flat)
            if v.fiber in mapping:
                raise ValueError(f"transversal {t_idx} has two vertices in fiber {v.fiber}")
            mapping[v.fiber] = flat
        by_fiber.append(mapping)
        fiber_sets.append(frozenset(mapping))
    if fiber_sets and any(fs != fiber_sets[0] for fs in fiber_sets):
        raise ValueError("all transversals must cover the same set of fibers")

    adj = G.flat_adjacency
    fibers = sorted(fiber_sets[0]) if fiber_sets else []
    used: set[int] = set()
    by_pair: dict[tuple[int, int], tuple[VertexId, VertexId]] = {}

    def try_cover(i: int, j: int) -> bool:
        for f in fibers:
            u = by_fiber[i][f]
            if u in used:
                continue
            tj = by_fiber[j]
            for w in adj[u]:  # sorted: ascending fiber, then layer
                if w in used:
                    continue
                if tj.get(w // ell) == w:
                    used.add(u)
                    used.add(w)
                    by_pair[(i, j)] = (G.vertex_at(u), G.vertex_at(w))
                    return True
        return False

    k = len(transversals)
    for i, j in combinations(range(k), 2):
        try_cover(i, j)
    # Maximality sweep: with monotone consumption this finds nothing new, but
    # it is cheap and certifies the contract directly.
    changed = True
    while changed:
        changed = False
        for i, j in combinations(range(k), 2):
            if (i, j) not in by_pair and try_cover(i, j):
                changed = True

    edges = frozenset(tuple(sorted(e)) for e in by_pair.values())
    return CrossMatching(edges=edges, covered_pairs=frozenset(by_pair), by_pair=dict(by_pair))


@dataclass(frozen=True)
class AvoidanceEstimate:
    estimate: float
    lower: float
    upper: float
    trials: int
    successes: int

    @property
    def interval(self) -> tuple[float, float]:
        return (self.lower, self.upper)


_Z99 = 2.5758293035489004  # two-sided 99% normal quantile


def _wilson(successes: int, trials: int, z: float = _Z99) -> tuple[float, float]:
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def estimate_avoidance_probability(
    F: Iterable[tuple[int, int]],
    ell: int,
    trials: int = 10000,
    seed: int = 0,
) -> AvoidanceEstimate:
    """Monte Carlo estimate that a uniform perfect matching avoids all of F.

    F is a set of (left layer, right layer) pairs on [0, ell) x [0, ell).
    Returns the point estimate with a two-sided 99% Wilson interval.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    pairs = set()
    for a, b in F:
        a, b = int(a), int(b)
        if not (0 <= a < ell and 0 <= b < ell):
            raise ValueError(f"pair ({a},{b}) out of range for ell={ell}")
        pairs.add((a, b))
    forbidden = np.zeros((ell, ell), dtype=bool)
    for a, b in pairs:
        forbidden[a, b] = True
    rng = derive_rng(seed)
    base = np.tile(np.arange(ell), (trials, 1))
    perms = rng.permuted(base, axis=1)
    hits = forbidden[np.arange(ell)[None, :], perms]
    successes = int((~hits.any(axis=1)).sum())
    lower, upper = _wilson(successes, trials)
    return AvoidanceEstimate(estimate=successes / trials, lower=lower, upper=upper,
                             trials=trials, successes=successes)
