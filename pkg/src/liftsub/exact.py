"""Exact brute-force references at tiny scale.

Everything here is a ground-truth oracle: exact largest clique-subdivision
order, exact matching-avoidance probabilities via the permanent, the
edge-count nonexistence criterion, and the common-neighbor property used to
rule out full-order subdivisions.  All searches are budget-bounded and report
partial answers explicitly instead of silently degrading.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Iterable, Optional, Sequence

from .lifts import LiftGraph, derive_rng

__all__ = [
    "HajosResult",
    "MaxEdgesResult",
    "NonexistenceVerdict",
    "OracleBudget",
    "PropertySearchResult",
    "SimpleGraph",
    "check_property_P",
    "exact_avoidance_probability",
    "exact_hajos_number",
    "lift_to_simple",
    "load_edge_list",
    "max_edges_on_b_subset",
    "search_property_P_violator",
    "subdivision_nonexistence_by_counting",
]


@dataclass(frozen=True)
class OracleBudget:
    max_nodes: int = 24
    max_states: int = 100_000_000
    time_limit: float = 60.0

    def __post_init__(self):
        if self.max_nodes < 1 or self.max_states < 1 or self.time_limit <= 0:
            raise ValueError("budget components must be positive")


class _BudgetExhausted(Exception):
    pass


class _Tracker:
    def __init__(self, budget: OracleBudget, deadline: Optional[float] = None):
        self.max_states = budget.max_states
        self.deadline = deadline if deadline is not None else time.monotonic() + budget.time_limit
        self.states = 0

    def charge(self, k: int = 1) -> None:
        self.states += k
        if self.states > self.max_states:
            raise _BudgetExhausted("state budget exhausted")
        if self.states % 4096 == 0 and time.monotonic() > self.deadline:
            raise _BudgetExhausted("time budget exhausted")


@dataclass(frozen=True)
class SimpleGraph:
    """Plain simple graph on [0, n) with bitmask adjacency."""

    num_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        norm = []
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError("loops are not allowed")
            if i > j:
                i, j = j, i
            if not (0 <= i < self.num_vertices and j < self.num_vertices):
                raise ValueError(f"edge ({i},{j}) out of range")
            norm.append((i, j))
        object.__setattr__(self, "edges", tuple(sorted(set(norm))))

    @cached_property
    def adj(self) -> tuple[int, ...]:
        masks = [0] * self.num_vertices
        for i, j in self.edges:
            masks[i] |= 1 << j
            masks[j] |= 1 << i
        return tuple(masks)

    def degree(self, v: int) -> int:
        return self.adj[v].bit_count()

    def max_degree(self) -> int:
        return max((self.degree(v) for v in range(self.num_vertices)), default=0)

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.adj[u] >> v & 1)

    def with_edge(self, u: int, v: int) -> "SimpleGraph":
        return SimpleGraph(self.num_vertices, self.edges + ((u, v),))


def lift_to_simple(G: LiftGraph) -> SimpleGraph:
    edges = []
    for u, nbrs in enumerate(G.flat_adjacency):
        for w in nbrs:
            if u < w:
                edges.append((u, w))
    return SimpleGraph(G.num_vertices, tuple(edges))


def load_edge_list(text: str) -> SimpleGraph:
    """Parse a plain edge list, one '"u v"' pair per line, 0-indexed."""
    edges = []
    top = -1
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise ValueError(f"line {lineno}: expected 'u v' with non-negative integers")
        u, v = int(parts[0]), int(parts[1])
        top = max(top, u, v)
        edges.append((u, v))
    return SimpleGraph(top + 1 if top >= 0 else 1, tuple(edges))


# --- largest clique subdivision ----------------------------------------------


@dataclass(frozen=True)
class HajosResult:
    best: int
    upper: int
    exact: bool
    witness_branch: tuple[int, ...] = ()
    witness_paths: dict[tuple[int, int], tuple[int, ...]] = field(default_factory=dict, compare=False)
    states: int = 0

    @property
    def value(self) -> int:
        return self.best


def _count_edges_within(H: SimpleGraph, B: Sequence[int]) -> int:
    mask = 0
    for v in B:
        mask |= 1 << v
    return sum((H.adj[v] & mask).bit_count() for v in B) // 2


def _iter_bits(mask: int) -> Iterable[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _reachable(H: SimpleGraph, u: int, v: int, free_mask: int, memo: dict) -> bool:
    key = (u, v, free_mask)
    cached = memo.get(key)
    if cached is not None:
        return cached
    if H.adj[u] >> v & 1:
        memo[key] = True
        return True
    seen = 1 << u
    frontier = H.adj[u] & (free_mask | 1 << v)
    while frontier:
        if frontier >> v & 1:
            memo[key] = True
            return True
        seen |= frontier
        nxt = 0
        for x in _iter_bits(frontier & free_mask):
            nxt |= H.adj[x]
        frontier = nxt & (free_mask | 1 << v) & ~seen
    memo[key] = False
    return False


def _paths_for_pair(H: SimpleGraph, u: int, v: int, free_mask: int,
                    tracker: _Tracker) -> Iterable[tuple[int, ...]]:
    """Yield internal-vertex tuples of simple u-v paths, shortest first."""
    if H.adj[u] >> v & 1:
        yield ()
    max_internal = free_mask.bit_count()

    def exact_depth(last: int, chosen: tuple[int, ...], remaining_mask: int, left: int):
        # enumerate paths with exactly `left` more internal vertices
        tracker.charge()
        for x in _iter_bits(H.adj[last] & remaining_mask):
            nxt = chosen + (x,)
            if left == 1:
                if H.adj[x] >> v & 1:
                    yield nxt
            else:
                yield from exact_depth(x, nxt, remaining_mask & ~(1 << x), left - 1)

    for k in range(1, max_internal + 1):
        yield from exact_depth(u, (), free_mask, k)


def _connect_all(H: SimpleGraph, branch: Sequence[int],
                 tracker: _Tracker) -> Optional[dict[tuple[int, int], tuple[int, ...]]]:
    b = len(branch)
    branch_mask = 0
    for v in branch:
        branch_mask |= 1 << v
    all_free = ((1 << H.num_vertices) - 1) & ~branch_mask
    pairs = list(combinations(range(b), 2))

    def common_free(i: int, j: int) -> int:
        return (H.adj[branch[i]] & H.adj[branch[j]] & all_free).bit_count()

    pairs.sort(key=lambda p: (common_free(*p), p))
    memo: dict = {}
    assignment: dict[tuple[int, int], tuple[int, ...]] = {}

    def backtrack(k: int, free_mask: int) -> bool:
        tracker.charge()
        if k == len(pairs):
            return True
        # feasibility prune: every remaining pair must stay connectable and
        # the non-adjacent ones need at least one free internal vertex each
        needed = 0
        for i, j in pairs[k:]:
            u, v = branch[i], branch[j]
            if not H.adj[u] >> v & 1:
                needed += 1
            if not _reachable(H, u, v, free_mask, memo):
                return False
        if needed > free_mask.bit_count():
            return False
        i, j = pairs[k]
        u, v = branch[i], branch[j]
        for internal in _paths_for_pair(H, u, v, free_mask, tracker):
            used = 0
            for x in internal:
                used |= 1 << x
            assignment[(i, j)] = (u,) + internal + (v,)
            if backtrack(k + 1, free_mask & ~used):
                return True
            del assignment[(i, j)]
        return False

    if backtrack(0, all_free):
        return dict(assignment)
    return None


def _find_subdivision(H: SimpleGraph, b: int, tracker: _Tracker
                      ) -> Optional[tuple[tuple[int, ...], dict]]:
    N = H.num_vertices
    if b < 1 or b > N:
        return None
    if b == 1:
        return (0,), {}
    candidates = [v for v in range(N) if H.degree(v) >= b - 1]
    if len(candidates) < b:
        return None
    edge_floor = math.comb(b, 2) - (N - b)
    for B in combinations(candidates, b):
        tracker.charge()
        if _count_edges_within(H, B) < edge_floor:
            continue
        paths = _connect_all(H, B, tracker)
        if paths is not None:
            return B, paths
    return None


def exact_hajos_number(H: SimpleGraph, budget: Optional[OracleBudget] = None) -> HajosResult:
    """Largest b such that H contains a K_b subdivision, by descending search.

    Starts at min(max degree + 1, |V|) and walks down; each level either finds
    a witness, proves nonexistence, or runs out of budget.  Budget exhaustion
    yields a partial answer: `best` is the largest certified order and
    `exact` is False when some higher order was left undecided.
    """
    if budget is None:
        budget = OracleBudget()
    if H.num_vertices > budget.max_nodes:
        raise ValueError(f"graph has {H.num_vertices} vertices, budget allows {budget.max_nodes}")
    deadline = time.monotonic() + budget.time_limit
    tracker = _Tracker(budget, deadline)
    upper = min(H.max_degree() + 1, H.num_vertices)
    unknown_top = 0
    for b in range(upper, 0, -1):
        try:
            found = _find_subdivision(H, b, tracker)
        except _BudgetExhausted:
            unknown_top = max(unknown_top, b)
            # lower levels get a fresh state counter but share the deadline
            tracker = _Tracker(budget, deadline)
            continue
        if found is not None:
            branch, paths = found
            return HajosResult(best=b, upper=max(unknown_top, b),
                               exact=unknown_top <= b,
                               witness_branch=tuple(branch), witness_paths=paths,
                               states=tracker.states)
    return HajosResult(best=0, upper=unknown_top, exact=unknown_top == 0, states=tracker.states)


# --- edge-count nonexistence criterion ----------------------------------------


@dataclass(frozen=True)
class MaxEdgesResult:
    max_edges: int
    exact: bool
    subset: tuple[int, ...]
    states: int = 0


def max_edges_on_b_subset(H: SimpleGraph, b: int,
                          budget: Optional[OracleBudget] = None) -> MaxEdgesResult:
    """Exact max of e(H[B]) over b-subsets, branch and bound on degree sums.

    If the budget runs out the returned value is a lower bound, flagged via
    exact=False.
    """
    if budget is None:
        budget = OracleBudget()
    N = H.num_vertices
    if not (1 <= b <= N):
        raise ValueError(f"b must lie in [1, {N}]")
    tracker = _Tracker(budget)
    order = sorted(range(N), key=lambda v: -H.degree(v))
    degs = [H.degree(v) for v in order]
    best = {"edges": -1, "subset": ()}

    def bound(idx: int, need: int) -> int:
        # degs is sorted descending, so the first `need` entries dominate
        return sum(degs[idx:idx + need])

    def extend(idx: int, chosen: list[int], chosen_mask: int, e_cur: int) -> None:
        tracker.charge()
        if len(chosen) == b:
            if e_cur > best["edges"]:
                best["edges"] = e_cur
                best["subset"] = tuple(sorted(chosen))
            return
        need = b - len(chosen)
        if N - idx < need:
            return
        if e_cur + bound(idx, need) <= best["edges"]:
            return
        v = order[idx]
        gain = (H.adj[v] & chosen_mask).bit_count()
        chosen.append(v)
        extend(idx + 1, chosen, chosen_mask | 1 << v, e_cur + gain)
        chosen.pop()
        extend(idx + 1, chosen, chosen_mask, e_cur)

    exact = True
    try:
        extend(0, [], 0, 0)
    except _BudgetExhausted:
        exact = False
    return MaxEdgesResult(max_edges=max(best["edges"], 0), exact=exact,
                          subset=best["subset"], states=tracker.states)


@dataclass(frozen=True)
class NonexistenceVerdict:
    no_subdivision: bool
    b: int
    threshold: int
    max_edges: int
    exact: bool
    note: str = ""


def subdivision_nonexistence_by_counting(
    G: LiftGraph | SimpleGraph, b: int,
    budget: Optional[OracleBudget] = None,
) -> NonexistenceVerdict:
    """Certify 'no K_b subdivision' when every b-set spans too few edges.

    The branch vertices of a K_b subdivision in an N-vertex graph must span
    at least C(b,2) + b - N edges; when even the best b-set falls short, no
    subdivision exists.  A non-positive threshold makes the criterion vacuous.
    """
    H = lift_to_simple(G) if isinstance(G, LiftGraph) else G
    N = H.num_vertices
    threshold = math.comb(b, 2) + b - N
    if threshold <= 0:
        return NonexistenceVerdict(no_subdivision=False, b=b, threshold=threshold,
                                   max_edges=-1, exact=True, note="criterion vacuous")
    res = max_edges_on_b_subset(H, b, budget)
    if res.exact and res.max_edges < threshold:
        return NonexistenceVerdict(no_subdivision=True, b=b, threshold=threshold,
                                   max_edges=res.max_edges, exact=True)
    note = "" if res.exact else "budget exhausted: max_edges is only a lower bound"
    return NonexistenceVerdict(no_subdivision=False, b=b, threshold=threshold,
                               max_edges=res.max_edges, exact=res.exact, note=note)


# --- common-neighbor property --------------------------------------------------


def check_property_P(G: LiftGraph, X: Iterable) -> bool:
    """True iff some two vertices of X have >= 2 common neighbors outside X.

    X must have exactly n vertices (n = number of fibers), the branch-set
    size the property constrains.
    """
    n = G.base.num_vertices
    flat_x = []
    for v in X:
        flat_x.append(G.flat_id(G._check_vertex(v)))
    if len(set(flat_x)) != len(flat_x):
        raise ValueError("X contains repeated vertices")
    if len(flat_x) != n:
        raise ValueError(f"X must have exactly n={n} vertices, got {len(flat_x)}")
    adj = G.flat_adjacency
    x_set = set(flat_x)
    nbr_sets = {u: set(adj[u]) - x_set for u in flat_x}
    for u, v in combinations(flat_x, 2):
        if len(nbr_sets[u] & nbr_sets[v]) >= 2:
            return True
    return False


@dataclass(frozen=True)
class PropertySearchResult:
    violator: Optional[tuple]
    exhaustive: bool
    examined: int


def search_property_P_violator(
    G: LiftGraph,
    budget: Optional[OracleBudget] = None,
    seed: int = 0,
) -> PropertySearchResult:
    """Look for an n-set X in which no two vertices share 2 outside neighbors.

    Enumerates all n-subsets when that fits the state budget, otherwise
    samples random n-subsets until the budget runs out.
    """
    if budget is None:
        budget = OracleBudget()
    n = G.base.num_vertices
    N = G.num_vertices
    total = math.comb(N, n)
    examined = 0
    if total <= budget.max_states:
        for X in combinations(range(N), n):
            examined += 1
            vx = [G.vertex_at(u) for u in X]
            if not check_property_P(G, vx):
                return PropertySearchResult(violator=tuple(vx), exhaustive=True, examined=examined)
        return PropertySearchResult(violator=None, exhaustive=True, examined=examined)
    rng = derive_rng(seed)
    deadline = time.monotonic() + budget.time_limit
    while examined < budget.max_states and time.monotonic() < deadline:
        X = rng.choice(N, size=n, replace=False).tolist()
        examined += 1
        vx = [G.vertex_at(u) for u in X]
        if not check_property_P(G, vx):
            return PropertySearchResult(violator=tuple(vx), exhaustive=False, examined=examined)
    return PropertySearchResult(violator=None, exhaustive=False, examined=examined)


# --- exact avoidance probability ------------------------------------------------

MAX_PERMANENT_ELL = 12


def exact_avoidance_probability(F: Iterable[tuple[int, int]], ell: int) -> Fraction:
    """Exact probability that a uniform perfect matching avoids every pair in F.

    Equals permanent(J - A_F) / ell!, with the permanent of the 0/1 allowed
    matrix computed by inclusion-exclusion over column subsets (Ryser).
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if ell > MAX_PERMANENT_ELL:
        raise ValueError(f"ell={ell} exceeds the permanent cap {MAX_PERMANENT_ELL}")
    allowed = [[1] * ell for _ in range(ell)]
    for a, b in F:
        a, b = int(a), int(b)
        if not (0 <= a < ell and 0 <= b < ell):
            raise ValueError(f"pair ({a},{b}) out of range for ell={ell}")
        allowed[a][b] = 0
    total = 0
    for subset in range(1, 1 << ell):
        cols = [j for j in range(ell) if subset >> j & 1]
        prod = 1
        for i in range(ell):
            row_sum = 0
            for j in cols:
                row_sum += allowed[i][j]
            prod *= row_sum
            if prod == 0:
                break
        if (ell - len(cols)) % 2 == 0:
            total += prod
        else:
            total -= prod
    return Fraction(total, math.factorial(ell))
