"""Validation of topological-clique certificates against a host lift.

A certificate consists of b branch vertices and one path per unordered pair
of branch indices; the paths must use host edges and be internally
vertex-disjoint.  Verification never raises on malformed input: every
problem becomes a typed violation in the verdict.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping

from .lifts import LiftGraph, VertexId

__all__ = [
    "CertificateFormatError",
    "SubdivisionCertificate",
    "Verdict",
    "Violation",
    "certificate_from_json",
    "certificate_order",
    "certificate_to_json",
    "certificate_vertex_count",
    "serialize_certificate",
    "verify_certificate",
]

# Violation kinds reported by verify_certificate.
BRANCH_COLLISION = "branch-collision"
MISSING_PAIR = "missing-pair"
UNKNOWN_PAIR = "unknown-pair"
ENDPOINT_MISMATCH = "endpoint-mismatch"
MISSING_EDGE = "missing-edge"
REUSED_INTERNAL = "reused-internal-vertex"
INTERNAL_HITS_BRANCH = "internal-hits-branch"
OUT_OF_RANGE = "out-of-range-vertex"
MALFORMED_PATH = "malformed-path"


class CertificateFormatError(ValueError):
    """A serialized certificate failed structural validation."""


@dataclass(frozen=True)
class SubdivisionCertificate:
    """Branch vertices plus one connecting path per branch-index pair."""

    branch: tuple[VertexId, ...]
    paths: Mapping[tuple[int, int], tuple[VertexId, ...]]

    def __post_init__(self):
        branch = tuple(VertexId(int(v[0]), int(v[1])) for v in self.branch)
        paths: dict[tuple[int, int], tuple[VertexId, ...]] = {}
        for (i, j), path in self.paths.items():
            i, j = int(i), int(j)
            if i > j:
                i, j = j, i
                path = tuple(reversed(tuple(path)))
            paths[(i, j)] = tuple(VertexId(int(v[0]), int(v[1])) for v in path)
        object.__setattr__(self, "branch", branch)
        object.__setattr__(self, "paths", paths)


def certificate_order(cert: SubdivisionCertificate) -> int:
    return len(cert.branch)


def certificate_vertex_count(cert: SubdivisionCertificate) -> int:
    seen = set(cert.branch)
    for path in cert.paths.values():
        seen.update(path)
    return len(seen)


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str

    def __str__(self):
        return f"[{self.kind}] {self.message}"


@dataclass(frozen=True)
class Verdict:
    ok: bool
    violations: tuple[Violation, ...]

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


def verify_certificate(G: LiftGraph, cert: SubdivisionCertificate) -> Verdict:
    """Check every certificate invariant in G and enumerate all violations."""
    violations: list[Violation] = []
    n, ell = G.base.num_vertices, G.ell

    def in_range(v: VertexId) -> bool:
        return 0 <= v.fiber < n and 0 <= v.layer < ell

    b = len(cert.branch)
    seen_branch: dict[VertexId, int] = {}
    for idx, v in enumerate(cert.branch):
        if not in_range(v):
            violations.append(Violation(OUT_OF_RANGE, f"branch[{idx}] = {tuple(v)} out of range"))
        if v in seen_branch:
            violations.append(Violation(
                BRANCH_COLLISION, f"branch[{seen_branch[v]}] and branch[{idx}] are both {tuple(v)}"))
        else:
            seen_branch[v] = idx

    expected = set(combinations(range(b), 2))
    present = set(cert.paths)
    for pair in sorted(expected - present):
        violations.append(Violation(MISSING_PAIR, f"no path for branch pair {pair}"))
    for pair in sorted(present - expected):
        violations.append(Violation(UNKNOWN_PAIR, f"path for unknown branch pair {pair}"))

    branch_set = set(cert.branch)
    internal_owner: dict[VertexId, tuple[int, int]] = {}
    for pair in sorted(present & expected):
        i, j = pair
        path = cert.paths[pair]
        if len(path) < 2:
            violations.append(Violation(MALFORMED_PATH, f"path {pair} has fewer than two vertices"))
            continue
        bad_range = [v for v in path if not in_range(v)]
        for v in bad_range:
            violations.append(Violation(OUT_OF_RANGE, f"path {pair} contains {tuple(v)} out of range"))
        if bad_range:
            continue
        if path[0] != cert.branch[i] or path[-1] != cert.branch[j]:
            violations.append(Violation(
                ENDPOINT_MISMATCH,
                f"path {pair} runs {tuple(path[0])}..{tuple(path[-1])}, expected "
                f"{tuple(cert.branch[i])}..{tuple(cert.branch[j])}"))
        for k in range(len(path) - 1):
            if not G.is_edge(path[k], path[k + 1]):
                violations.append(Violation(
                    MISSING_EDGE, f"path {pair} step {k}: {tuple(path[k])}-{tuple(path[k + 1])} is not an edge"))
        seen_in_path: set[VertexId] = set()
        for pos, v in enumerate(path):
            internal = 0 < pos < len(path) - 1
            if v in seen_in_path and internal:
                violations.append(Violation(
                    REUSED_INTERNAL, f"path {pair} repeats vertex {tuple(v)}"))
            seen_in_path.add(v)
            if not internal:
                continue
            if v in branch_set:
                violations.append(Violation(
                    INTERNAL_HITS_BRANCH, f"path {pair} passes through branch vertex {tuple(v)}"))
            elif v in internal_owner and internal_owner[v] != pair:
                violations.append(Violation(
                    REUSED_INTERNAL,
                    f"vertex {tuple(v)} is internal to both {internal_owner[v]} and {pair}"))
            else:
                internal_owner.setdefault(v, pair)

    return Verdict(ok=not violations, violations=tuple(violations))


# --- canonical text format ---------------------------------------------------
#
# {"branch": [[f,l],...], "paths": {"i-j": [[f,l],...]}} with sorted keys.


def certificate_to_json(cert: SubdivisionCertificate) -> str:
    obj = {
        "branch": [[v.fiber, v.layer] for v in cert.branch],
        "paths": {f"{i}-{j}": [[v.fiber, v.layer] for v in path]
                  for (i, j), path in cert.paths.items()},
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def serialize_certificate(cert: SubdivisionCertificate) -> bytes:
    return (certificate_to_json(cert) + "\n").encode("utf-8")


def certificate_from_json(text: str | bytes) -> SubdivisionCertificate:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CertificateFormatError(f"not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise CertificateFormatError("top-level value must be an object")
    for field in ("branch", "paths"):
        if field not in obj:
            raise CertificateFormatError(f"missing field '{field}'")
    if not isinstance(obj["branch"], list):
        raise CertificateFormatError("field 'branch' must be an array")

    def parse_vertex(raw, where: str) -> VertexId:
        if (not isinstance(raw, list) or len(raw) != 2
                or not all(isinstance(x, int) for x in raw)):
            raise CertificateFormatError(f"{where} must be a [fiber, layer] integer pair")
        return VertexId(raw[0], raw[1])

    branch = tuple(parse_vertex(v, f"branch[{k}]") for k, v in enumerate(obj["branch"]))
    if not isinstance(obj["paths"], dict):
        raise CertificateFormatError("field 'paths' must be an object")
    paths: dict[tuple[int, int], tuple[VertexId, ...]] = {}
    for key, raw_path in obj["paths"].items():
        parts = key.split("-")
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise CertificateFormatError(f"paths key '{key}' must have the form 'i-j'")
        i, j = int(parts[0]), int(parts[1])
        if i >= j:
            raise CertificateFormatError(f"paths key '{key}' must satisfy i < j")
        if not isinstance(raw_path, list):
            raise CertificateFormatError(f"paths['{key}'] must be an array")
        paths[(i, j)] = tuple(
            parse_vertex(v, f"paths['{key}'][{k}]") for k, v in enumerate(raw_path))
    return SubdivisionCertificate(branch=branch, paths=paths)
