"""Constructive clique-subdivision pipelines for lifts of complete graphs.

Two regimes:

* `build_large_ell` targets a full K_n subdivision when the lift is tall
  enough (ell at least about n): branch vertices sit in one fiber, their
  neighborhoods form disjoint transversals, a greedy cross-matching covers
  most transversal pairs with single edges, and BFS routing connects the
  rest.

* `build_small_ell` targets order about sqrt(2*n*ell/(1-1/ell)) for short
  lifts: branch vertices form a partial transversal, most pairs are joined by
  direct edges or length-2 paths through fresh common neighbors, stragglers
  are pruned, and the few remaining connections run through a reserved block
  of fibers via vertex-disjoint stars.

A build never returns an unverified certificate: every success is checked by
the verifier before it is reported.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .connect import (EmbeddingState, ExtendabilityParams, NoPathWithinBudget,
                      connect_between_sets, default_max_len)
from .lifts import LiftGraph, VertexId, derive_rng
from .properties import CrossMatching, find_cross_matching
from .verify import SubdivisionCertificate, certificate_vertex_count, verify_certificate

__all__ = [
    "BuildConfig",
    "BuildFailure",
    "BuildOutcome",
    "BuildStats",
    "build_large_ell",
    "build_small_ell",
    "default_extendability_params",
    "target_order",
]


def target_order(n: int, ell: int) -> float:
    """The aimed-for clique-subdivision order sqrt(2*n*ell / (1 - 1/ell))."""
    if ell < 2:
        raise ValueError("target_order needs ell >= 2 (formula singular at ell=1)")
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.sqrt(2.0 * n * ell / (1.0 - 1.0 / ell))


def default_extendability_params(n: int, ell: int) -> ExtendabilityParams:
    """(D, m) defaults: D = n^0.99, m = 5*ell*log(n), clamped to valid ranges."""
    D = max(3, math.ceil(n ** 0.99))
    m = max(1, math.ceil(5 * ell * math.log(max(n, 2))))
    return ExtendabilityParams(D=D, m=m)


@dataclass(frozen=True)
class BuildConfig:
    """Knobs for both pipelines.

    The conservative constants from the original asymptotic analysis (prune
    threshold eps*b/40, star size eps*b/40, cross-matching reserved for
    ell <= gamma^3*n^2/48) are unusable at experiment scale; the practical
    defaults divide by 4 instead of 40 and always take the cross-matching.
    `paper_constants=True` restores the conservative set.
    """

    epsilon: float = 0.1
    gamma: Optional[float] = None  # defaults to epsilon / 11
    params: Optional[ExtendabilityParams] = None  # defaults per instance
    seed: int = 0
    attempts: int = 3
    max_len: Optional[int] = None
    paper_constants: bool = False
    prune_divisor: float = 4.0
    star_divisor: float = 4.0
    min_branch_fraction: float = 0.5

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.attempts < 1:
            raise ValueError("attempts must be >= 1")
        if not (0 <= self.min_branch_fraction <= 1):
            raise ValueError("min_branch_fraction must lie in [0, 1]")

    @property
    def effective_gamma(self) -> float:
        return self.gamma if self.gamma is not None else self.epsilon / 11.0

    @property
    def effective_prune_divisor(self) -> float:
        return 40.0 if self.paper_constants else self.prune_divisor

    @property
    def effective_star_divisor(self) -> float:
        return 40.0 if self.paper_constants else self.star_divisor

    def resolve_params(self, n: int, ell: int) -> ExtendabilityParams:
        return self.params if self.params is not None else default_extendability_params(n, ell)


@dataclass
class BuildStats:
    builder: str
    direct_edges: int = 0
    length2_paths: int = 0
    connector_paths: int = 0
    pruned_branch: int = 0
    vertices_used: int = 0
    attempts_used: int = 0
    max_connector_len: int = 0
    target: float = 0.0
    achieved: int = 0


@dataclass(frozen=True)
class BuildFailure:
    stage: str
    reason: str


@dataclass
class BuildOutcome:
    certificate: Optional[SubdivisionCertificate]
    stats: BuildStats
    failure: Optional[BuildFailure] = None

    @property
    def ok(self) -> bool:
        return self.certificate is not None

    def __post_init__(self):
        if (self.certificate is None) == (self.failure is None):
            raise ValueError("exactly one of certificate and failure must be present")


def _require_complete(G: LiftGraph) -> None:
    if not G.base.is_complete:
        raise ValueError("builder requires a lift of a complete base graph")


def _self_verified(G: LiftGraph, cert: SubdivisionCertificate,
                   stats: BuildStats) -> BuildOutcome:
    verdict = verify_certificate(G, cert)
    if not verdict.ok:
        head = "; ".join(str(v) for v in verdict.violations[:3])
        return BuildOutcome(certificate=None, stats=stats,
                            failure=BuildFailure("self-verify", head))
    stats.vertices_used = certificate_vertex_count(cert)
    stats.achieved = len(cert.branch)
    return BuildOutcome(certificate=cert, stats=stats)


# --- large-ell pipeline -------------------------------------------------------


def build_large_ell(G: LiftGraph, cfg: BuildConfig = BuildConfig()) -> BuildOutcome:
    """Build a K_n subdivision with all branch vertices in a single fiber.

    Stages: pick n branch vertices in one fiber; their neighborhoods
    V_1..V_n are disjoint transversals of the remaining fibers; a greedy
    cross-matching covers pairs by single edges; every uncovered pair is
    routed by BFS between the still-unused vertices of its two transversals,
    keeping internal vertices off everything built so far.  Below the
    ell >= (1+eps)n threshold the run proceeds as an experiment with a
    warning.
    """
    _require_complete(G)
    n, ell = G.base.num_vertices, G.ell
    if ell < (1 + cfg.epsilon) * n:
        warnings.warn(
            f"ell={ell} is below (1+eps)*n = {(1 + cfg.epsilon) * n:g}; "
            "running as an off-regime experiment", RuntimeWarning, stacklevel=2)
    params = cfg.resolve_params(n, ell)
    max_len = cfg.max_len if cfg.max_len is not None else default_max_len(params)
    stats = BuildStats(builder="large", target=float(n))
    if ell < n:
        return BuildOutcome(certificate=None, stats=stats,
                            failure=BuildFailure("branch", f"fiber holds {ell} < n = {n} vertices"))
    if n == 1:
        cert = SubdivisionCertificate(branch=(VertexId(0, 0),), paths={})
        stats.attempts_used = 1
        return _self_verified(G, cert, stats)

    last_failure = BuildFailure("connector", "unreached")
    for attempt in range(cfg.attempts):
        stats = BuildStats(builder="large", target=float(n), attempts_used=attempt + 1)
        if attempt == 0:
            w_fiber = 0
            layers = list(range(n))
            rng_bfs = None
        else:
            rng = derive_rng(cfg.seed, attempt)
            w_fiber = int(rng.integers(n))
            layers = sorted(int(x) for x in rng.choice(ell, size=n, replace=False))
            rng_bfs = rng
        branch = [VertexId(w_fiber, a) for a in layers]
        trans: list[dict[int, VertexId]] = []
        for w in branch:
            trans.append({x.fiber: x for x in G.neighbors(w)})
        order = sorted(trans[0])

        # the branch vertices block their fiber-mates only where chosen; the
        # remaining ell-n fiber-W vertices stay routable
        state = EmbeddingState(params)
        state.add_vertices(branch)
        for t in trans:
            state.add_vertices(t.values())

        if any(len(t) != n - 1 for t in trans):
            return BuildOutcome(certificate=None, stats=stats,
                                failure=BuildFailure("branch", "neighborhood is not a transversal"))

        # the cross-matching only ever helps, so the practical default always
        # takes it; under the stated constants it is reserved for short lifts
        gamma = cfg.effective_gamma
        if cfg.paper_constants and ell > gamma ** 3 * n ** 2 / 48:
            matching = CrossMatching(edges=frozenset(), covered_pairs=frozenset())
        else:
            matching = find_cross_matching(G, [[t[f] for f in order] for t in trans])
        used: set[VertexId] = set()
        paths: dict[tuple[int, int], tuple[VertexId, ...]] = {}
        for (i, j), (x, y) in matching.by_pair.items():
            if trans[i].get(x.fiber) != x:
                x, y = y, x
            paths[(i, j)] = (branch[i], x, y, branch[j])
            used.add(x)
            used.add(y)
        stats.direct_edges = len(matching.by_pair)

        pending = [p for p in combinations(range(n), 2) if p not in matching.covered_pairs]
        if attempt > 0 and rng_bfs is not None:
            pending = [pending[k] for k in rng_bfs.permutation(len(pending))]
        failed_pair: Optional[tuple[int, int]] = None
        for i, j in pending:
            sources = [v for v in trans[i].values() if v not in used]
            targets = [v for v in trans[j].values() if v not in used]
            try:
                res = connect_between_sets(G, state, sources, targets,
                                           max_len=max_len, rng=rng_bfs)
            except NoPathWithinBudget:
                failed_pair = (i, j)
                break
            paths[(i, j)] = (branch[i],) + res.path + (branch[j],)
            used.add(res.path[0])
            used.add(res.path[-1])
            stats.connector_paths += 1
            stats.max_connector_len = max(stats.max_connector_len, res.length)
        if failed_pair is not None:
            last_failure = BuildFailure(
                "connector", f"no admissible path for transversal pair {failed_pair} "
                             f"within length {max_len}")
            continue
        cert = SubdivisionCertificate(branch=tuple(branch), paths=paths)
        return _self_verified(G, cert, stats)
    return BuildOutcome(certificate=None, stats=stats, failure=last_failure)


# --- small-ell pipeline -------------------------------------------------------


def _common_neighbor_fibers(G: LiftGraph, u: VertexId, v: VertexId,
                            fibers: Sequence[int]) -> list[VertexId]:
    """Common neighbors of u and v lying in the given fibers, ascending."""
    out = []
    for g in fibers:
        if g == u.fiber or g == v.fiber:
            continue
        a = _neighbor_in_fiber(G, u, g)
        if a is not None and a == _neighbor_in_fiber(G, v, g):
            out.append(a)
    return out


def _neighbor_in_fiber(G: LiftGraph, v: VertexId, g: int) -> Optional[VertexId]:
    i, j = min(v.fiber, g), max(v.fiber, g)
    perm = G.matchings.get((i, j))
    if perm is None:
        return None
    if v.fiber == i:
        return VertexId(g, perm[v.layer])
    return VertexId(g, G.inverse_matchings[(i, j)][v.layer])


def build_small_ell(G: LiftGraph, cfg: BuildConfig = BuildConfig()) -> BuildOutcome:
    """Build a near-target clique subdivision in a short lift.

    Stages: (1) branch set B = partial transversal of size
    ceil((1-2*eps)*target) inside the first ceil((1-eps)*n) fibers, the rest
    of the fibers are reserved; (2) direct edges inside B; (3) greedy
    length-2 paths through unused common neighbors in the main fiber block,
    most-deficient branch vertex first; (4) prune vertices missing more than
    eps*b/prune_divisor connections; (5) vertex-disjoint stars from the
    still-deficient survivors into the reserved fibers; (6) BFS connections
    between star leaves inside the reserved block.
    """
    _require_complete(G)
    n, ell = G.base.num_vertices, G.ell
    if ell < 2:
        raise ValueError("small-ell builder needs ell >= 2")
    eps = cfg.epsilon
    tgt = target_order(n, ell)
    b = math.ceil((1 - 2 * eps) * tgt)
    f1_count = math.ceil((1 - eps) * n)
    f2_count = n - f1_count
    params = cfg.resolve_params(n, ell)
    max_len = cfg.max_len if cfg.max_len is not None else default_max_len(params)
    stats = BuildStats(builder="small", target=tgt)
    if b < 1:
        return BuildOutcome(certificate=None, stats=stats,
                            failure=BuildFailure("branch", "target order below one"))
    if b > f1_count:
        return BuildOutcome(
            certificate=None, stats=stats,
            failure=BuildFailure("branch",
                                 f"partial transversal of size {b} does not fit in {f1_count} fibers"))

    f1_fibers = list(range(f1_count))
    f2_fibers = list(range(f1_count, n))
    prune_threshold = eps * b / cfg.effective_prune_divisor
    star_size = max(1, math.ceil(eps * b / cfg.effective_star_divisor))
    floor = math.ceil(cfg.min_branch_fraction * b)

    last_failure = BuildFailure("connector", "unreached")
    for attempt in range(cfg.attempts):
        stats = BuildStats(builder="small", target=tgt, attempts_used=attempt + 1)
        if attempt == 0:
            branch = [VertexId(f, 0) for f in range(b)]
            rng_bfs = None
        else:
            rng = derive_rng(cfg.seed, attempt)
            fibers = sorted(int(x) for x in rng.choice(f1_count, size=b, replace=False))
            branch = [VertexId(f, int(rng.integers(ell))) for f in fibers]
            rng_bfs = rng
        outcome = _small_ell_attempt(
            G, cfg, branch, f1_fibers, f2_fibers, prune_threshold, star_size,
            floor, params, max_len, rng_bfs, stats)
        if isinstance(outcome, BuildFailure):
            last_failure = outcome
            continue
        return _self_verified(G, outcome, stats)
    return BuildOutcome(certificate=None, stats=stats, failure=last_failure)


def _small_ell_attempt(
    G: LiftGraph,
    cfg: BuildConfig,
    branch: list[VertexId],
    f1_fibers: list[int],
    f2_fibers: list[int],
    prune_threshold: float,
    star_size: int,
    floor: int,
    params: ExtendabilityParams,
    max_len: int,
    rng_bfs: Optional[np.random.Generator],
    stats: BuildStats,
) -> SubdivisionCertificate | BuildFailure:
    b = len(branch)
    branch_set = set(branch)
    paths: dict[tuple[int, int], tuple[VertexId, ...]] = {}

    # stage 2: direct edges
    uncovered: set[tuple[int, int]] = set()
    for i, j in combinations(range(b), 2):
        if G.is_edge(branch[i], branch[j]):
            paths[(i, j)] = (branch[i], branch[j])
            stats.direct_edges += 1
        else:
            uncovered.add((i, j))

    # stage 3: length-2 paths through fresh common neighbors in the main block
    candidates: dict[tuple[int, int], list[VertexId]] = {}
    pointer: dict[tuple[int, int], int] = {}
    for pair in uncovered:
        i, j = pair
        mids = [m for m in _common_neighbor_fibers(G, branch[i], branch[j], f1_fibers)
                if m not in branch_set]
        candidates[pair] = mids
        pointer[pair] = 0
    used_middles: set[VertexId] = set()
    deficiency = [0] * b
    for i, j in uncovered:
        deficiency[i] += 1
        deficiency[j] += 1

    def next_middle(pair: tuple[int, int]) -> Optional[VertexId]:
        mids = candidates[pair]
        k = pointer[pair]
        while k < len(mids) and mids[k] in used_middles:
            k += 1
        pointer[pair] = k
        return mids[k] if k < len(mids) else None

    exhausted: set[int] = set()
    while True:
        pick = None
        for i in range(b):
            if i in exhausted or deficiency[i] == 0:
                continue
            if pick is None or deficiency[i] > deficiency[pick]:
                pick = i
        if pick is None:
            break
        partners = sorted((j for j in range(b)
                           if (min(pick, j), max(pick, j)) in uncovered),
                          key=lambda j: (-deficiency[j], j))
        connected = False
        for j in partners:
            pair = (min(pick, j), max(pick, j))
            mid = next_middle(pair)
            if mid is None:
                continue
            used_middles.add(mid)
            paths[pair] = (branch[pair[0]], mid, branch[pair[1]])
            uncovered.discard(pair)
            deficiency[pair[0]] -= 1
            deficiency[pair[1]] -= 1
            stats.length2_paths += 1
            connected = True
            break
        if not connected:
            exhausted.add(pick)

    # stage 4: prune branch vertices that still miss too many connections
    missing = [0] * b
    for i, j in uncovered:
        missing[i] += 1
        missing[j] += 1
    survivors = [i for i in range(b) if missing[i] <= prune_threshold]
    stats.pruned_branch = b - len(survivors)
    if len(survivors) < floor:
        return BuildFailure("prune", f"pruned-too-many: {len(survivors)} of {b} survive, "
                                     f"floor is {floor}")
    alive = set(survivors)
    pending_pairs = sorted(p for p in uncovered if p[0] in alive and p[1] in alive)

    # stage 5: vertex-disjoint stars into the reserved fibers
    needs_star = sorted({i for p in pending_pairs for i in p})
    star_leaves: dict[int, list[VertexId]] = {}
    used_leaves: set[VertexId] = set()
    if needs_star and not f2_fibers:
        return BuildFailure("stars", "no reserved fibers but connections remain")
    dropped: set[int] = set()
    for i in needs_star:
        leaves = []
        for g in f2_fibers:
            w = _neighbor_in_fiber(G, branch[i], g)
            if w is not None and w not in used_leaves:
                leaves.append(w)
                if len(leaves) == star_size:
                    break
        if len(leaves) < star_size:
            dropped.add(i)
            continue
        star_leaves[i] = leaves
        used_leaves.update(leaves)
    if dropped:
        alive -= dropped
        stats.pruned_branch += len(dropped)
        if len(alive) < floor:
            return BuildFailure("stars", f"pruned-too-many: {len(alive)} of {b} survive "
                                         f"after star stage, floor is {floor}")
        pending_pairs = [p for p in pending_pairs if p[0] in alive and p[1] in alive]

    # stage 6: connect star leaves inside the reserved block
    state = EmbeddingState(params)
    for g in f1_fibers:
        state.add_vertices(VertexId(g, a) for a in range(G.ell))
    for leaves in star_leaves.values():
        state.add_vertices(leaves)
    consumed_leaves: set[VertexId] = set()

    def available_leaves(i: int) -> list[VertexId]:
        return [w for w in star_leaves[i] if w not in consumed_leaves]
    for pair in list(pending_pairs):
        i, j = pair
        if i not in alive or j not in alive:
            continue
        src = available_leaves(i)
        dst = available_leaves(j)
        try:
            if not src or not dst:
                raise NoPathWithinBudget("star leaves exhausted")
            res = connect_between_sets(G, state, src, dst, max_len=max_len, rng=rng_bfs)
        except NoPathWithinBudget:
            # drop the endpoint with more remaining obligations and move on
            rem_i = sum(1 for p in pending_pairs if i in p and p[0] in alive and p[1] in alive)
            rem_j = sum(1 for p in pending_pairs if j in p and p[0] in alive and p[1] in alive)
            victim = i if (rem_i, i) >= (rem_j, j) else j
            alive.discard(victim)
            stats.pruned_branch += 1
            if len(alive) < floor:
                return BuildFailure("connector", f"pruned-too-many while routing: "
                                                 f"{len(alive)} of {b} survive")
            continue
        consumed_leaves.add(res.path[0])
        consumed_leaves.add(res.path[-1])
        paths[pair] = (branch[i],) + res.path + (branch[j],)
        stats.connector_paths += 1
        stats.max_connector_len = max(stats.max_connector_len, res.length)

    final = sorted(alive)
    index = {old: new for new, old in enumerate(final)}
    out_paths: dict[tuple[int, int], tuple[VertexId, ...]] = {}
    for i, j in combinations(final, 2):
        p = paths.get((i, j))
        if p is None:
            return BuildFailure("assemble", f"pair ({i},{j}) left unconnected")
        out_paths[(index[i], index[j])] = p
    # recount stage stats against the final certificate
    stats.direct_edges = sum(1 for p in out_paths.values() if len(p) == 2)
    stats.length2_paths = sum(1 for p in out_paths.values() if len(p) == 3)
    return SubdivisionCertificate(branch=tuple(branch[i] for i in final), paths=out_paths)
