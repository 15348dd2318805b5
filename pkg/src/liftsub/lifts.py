"""Base graphs, uniform random lifts, and canonical (de)serialization.

A lift replaces every base vertex with a fiber of ``ell`` vertices and every
base edge with a perfect matching between the two fibers.  The matching for
base edge (i, j) with i < j is stored as a permutation of [0, ell): layer a
in fiber i is matched to layer perm[a] in fiber j.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple

import numpy as np

__all__ = [
    "BaseGraph",
    "LiftFormatError",
    "LiftGraph",
    "VertexId",
    "complete_base",
    "derive_rng",
    "deserialize",
    "lift_from_json",
    "lift_to_json",
    "sample_uniform_lift",
    "serialize",
]


class LiftFormatError(ValueError):
    """A serialized lift failed structural validation."""


class VertexId(NamedTuple):
    """A lift vertex addressed as (fiber index, layer index)."""

    fiber: int
    layer: int


def derive_rng(*key: int) -> np.random.Generator:
    """Independent RNG substream keyed by a tuple of non-negative ints.

    The same key always yields the same stream, independently of the order in
    which other streams were created.
    """
    parts = tuple(int(k) for k in key)
    if any(k < 0 for k in parts):
        raise ValueError(f"rng key components must be non-negative, got {parts}")
    return np.random.default_rng(np.random.SeedSequence(parts))


@dataclass(frozen=True)
class BaseGraph:
    """A simple undirected graph given by a sorted, duplicate-free edge list."""

    num_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.num_vertices < 1:
            raise ValueError("base graph needs at least one vertex")
        normalized = tuple((int(i), int(j)) for i, j in self.edges)
        for i, j in normalized:
            if not (0 <= i < self.num_vertices and 0 <= j < self.num_vertices):
                raise ValueError(f"edge ({i},{j}) endpoint out of range [0,{self.num_vertices})")
            if i >= j:
                raise ValueError(f"edge ({i},{j}) must satisfy i < j (no loops)")
        if list(normalized) != sorted(set(normalized)):
            raise ValueError("edge list must be sorted and duplicate-free")
        object.__setattr__(self, "edges", normalized)

    @cached_property
    def incident(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """For each vertex, the sorted base edges incident to it."""
        inc: list[list[tuple[int, int]]] = [[] for _ in range(self.num_vertices)]
        for e in self.edges:
            inc[e[0]].append(e)
            inc[e[1]].append(e)
        return tuple(tuple(lst) for lst in inc)

    def degree(self, v: int) -> int:
        return len(self.incident[v])

    @property
    def is_complete(self) -> bool:
        n = self.num_vertices
        return len(self.edges) == n * (n - 1) // 2


def complete_base(n: int) -> BaseGraph:
    """The complete graph K_n as a base graph."""
    if n < 1:
        raise ValueError("complete_base requires n >= 1")
    edges = tuple((i, j) for i in range(n) for j in range(i + 1, n))
    return BaseGraph(n, edges)


@dataclass(frozen=True)
class LiftGraph:
    """An ell-lift of a base graph.  Immutable after construction."""

    base: BaseGraph
    ell: int
    matchings: Mapping[tuple[int, int], tuple[int, ...]]

    def __post_init__(self):
        if self.ell < 1:
            raise ValueError("ell must be >= 1")
        edge_set = set(self.base.edges)
        normalized: dict[tuple[int, int], tuple[int, ...]] = {}
        for key, perm in self.matchings.items():
            e = (int(key[0]), int(key[1]))
            if e not in edge_set:
                raise ValueError(f"matching key {e} is not a base edge")
            p = tuple(int(x) for x in perm)
            if sorted(p) != list(range(self.ell)):
                raise ValueError(f"matching for edge {e} is not a bijection on [0,{self.ell})")
            normalized[e] = p
        missing = edge_set - set(normalized)
        if missing:
            raise ValueError(f"matching missing for base edge {min(missing)}")
        object.__setattr__(self, "matchings", normalized)

    @property
    def num_vertices(self) -> int:
        return self.base.num_vertices * self.ell

    @cached_property
    def inverse_matchings(self) -> dict[tuple[int, int], tuple[int, ...]]:
        inv = {}
        for e, perm in self.matchings.items():
            arr = [0] * self.ell
            for a, b in enumerate(perm):
                arr[b] = a
            inv[e] = tuple(arr)
        return inv

    @cached_property
    def flat_adjacency(self) -> list[list[int]]:
        """Sorted neighbor lists indexed by flat vertex id (fiber*ell + layer)."""
        adj: list[list[int]] = [[] for _ in range(self.num_vertices)]
        ell = self.ell
        for (i, j), perm in self.matchings.items():
            oi, oj = i * ell, j * ell
            for a, b in enumerate(perm):
                adj[oi + a].append(oj + b)
                adj[oj + b].append(oi + a)
        for lst in adj:
            lst.sort()
        return adj

    def flat_id(self, v: VertexId) -> int:
        return v.fiber * self.ell + v.layer

    def vertex_at(self, flat: int) -> VertexId:
        return VertexId(flat // self.ell, flat % self.ell)

    def vertex_ids(self) -> Iterable[VertexId]:
        for f in range(self.base.num_vertices):
            for a in range(self.ell):
                yield VertexId(f, a)

    def _check_vertex(self, v: VertexId) -> VertexId:
        f, a = int(v[0]), int(v[1])
        if not (0 <= f < self.base.num_vertices and 0 <= a < self.ell):
            raise ValueError(f"vertex ({f},{a}) out of range for n={self.base.num_vertices}, ell={self.ell}")
        return VertexId(f, a)

    def neighbors(self, v: VertexId) -> set[VertexId]:
        """The neighbors of v: exactly one per base edge incident to v's fiber."""
        v = self._check_vertex(v)
        out: set[VertexId] = set()
        for i, j in self.base.incident[v.fiber]:
            if v.fiber == i:
                out.add(VertexId(j, self.matchings[(i, j)][v.layer]))
            else:
                out.add(VertexId(i, self.inverse_matchings[(i, j)][v.layer]))
        return out

    def is_edge(self, u: VertexId, v: VertexId) -> bool:
        """True iff u and v are matched under the relevant base-edge permutation."""
        u = self._check_vertex(u)
        v = self._check_vertex(v)
        if u.fiber == v.fiber:
            return False
        if u.fiber > v.fiber:
            u, v = v, u
        perm = self.matchings.get((u.fiber, v.fiber))
        if perm is None:
            return False
        return perm[u.layer] == v.layer

    def degree(self, v: VertexId) -> int:
        v = self._check_vertex(v)
        return self.base.degree(v.fiber)


def sample_uniform_lift(base: BaseGraph, ell: int, seed: int) -> LiftGraph:
    """Sample a uniformly random ell-lift of `base`, deterministic given seed.

    Each base edge (i, j) carries an independent uniform permutation drawn
    from the substream keyed by (seed, i, j), so the result does not depend
    on edge iteration order.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    matchings = {}
    for i, j in base.edges:
        rng = derive_rng(seed, i, j)
        matchings[(i, j)] = tuple(int(x) for x in rng.permutation(ell))
    return LiftGraph(base, ell, matchings)


# --- canonical text format ---------------------------------------------------
#
# {"n": int, "ell": int, "base_edges": [[i,j],...], "matchings": {"i-j": [...]}}
# Keys sorted, fixed separators: byte-stable for a fixed lift.


def lift_to_json(G: LiftGraph) -> str:
    obj = {
        "n": G.base.num_vertices,
        "ell": G.ell,
        "base_edges": [[i, j] for i, j in G.base.edges],
        "matchings": {f"{i}-{j}": list(perm) for (i, j), perm in G.matchings.items()},
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def serialize(G: LiftGraph) -> bytes:
    return (lift_to_json(G) + "\n").encode("utf-8")


def lift_from_json(text: str) -> LiftGraph:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LiftFormatError(f"not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise LiftFormatError("top-level value must be an object")
    for field in ("n", "ell", "base_edges", "matchings"):
        if field not in obj:
            raise LiftFormatError(f"missing field '{field}'")
    n, ell = obj["n"], obj["ell"]
    if not isinstance(n, int) or n < 1:
        raise LiftFormatError("field 'n' must be a positive integer")
    if not isinstance(ell, int) or ell < 1:
        raise LiftFormatError("field 'ell' must be a positive integer")
    if not isinstance(obj["base_edges"], list):
        raise LiftFormatError("field 'base_edges' must be an array")
    edges = []
    for k, pair in enumerate(obj["base_edges"]):
        if (not isinstance(pair, list) or len(pair) != 2
                or not all(isinstance(x, int) for x in pair)):
            raise LiftFormatError(f"base_edges[{k}] must be a pair of integers")
        i, j = pair
        if not (0 <= i < j < n):
            raise LiftFormatError(f"base_edges[{k}] = ({i},{j}) must satisfy 0 <= i < j < n")
        edges.append((i, j))
    if edges != sorted(set(edges)):
        raise LiftFormatError("field 'base_edges' must be sorted and duplicate-free")
    try:
        base = BaseGraph(n, tuple(edges))
    except ValueError as exc:
        raise LiftFormatError(f"base_edges invalid: {exc}") from None
    raw = obj["matchings"]
    if not isinstance(raw, dict):
        raise LiftFormatError("field 'matchings' must be an object")
    matchings: dict[tuple[int, int], tuple[int, ...]] = {}
    for key, perm in raw.items():
        parts = key.split("-")
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise LiftFormatError(f"matchings key '{key}' must have the form 'i-j'")
        e = (int(parts[0]), int(parts[1]))
        if e not in set(edges):
            raise LiftFormatError(f"matchings key '{key}' is not a base edge")
        if not isinstance(perm, list) or len(perm) != ell:
            raise LiftFormatError(f"matchings['{key}'] must be an array of length ell={ell}")
        if not all(isinstance(x, int) for x in perm):
            raise LiftFormatError(f"matchings['{key}'] must contain integers")
        if sorted(perm) != list(range(ell)):
            raise LiftFormatError(f"matchings['{key}'] is not a bijection on [0,{ell})")
        matchings[e] = tuple(perm)
    for e in edges:
        if e not in matchings:
            raise LiftFormatError(f"matchings missing entry for base edge {e[0]}-{e[1]}")
    return LiftGraph(base, ell, matchings)


def deserialize(data: bytes | str) -> LiftGraph:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return lift_from_json(data)
