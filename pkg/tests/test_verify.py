"""Certificate verification: passing certificates and typed violations."""

import pytest

from corruptions import CLASSES, EXPECTED_KIND, corrupt
from liftsub import (BuildConfig, SubdivisionCertificate, VertexId, build_large_ell,
                     certificate_from_json, certificate_order,
                     certificate_vertex_count, complete_base, sample_uniform_lift,
                     serialize_certificate, verify_certificate)
from liftsub.lifts import derive_rng
from liftsub.verify import (BRANCH_COLLISION, CertificateFormatError, ENDPOINT_MISMATCH,
                            INTERNAL_HITS_BRANCH, MALFORMED_PATH, MISSING_EDGE,
                            MISSING_PAIR, OUT_OF_RANGE, REUSED_INTERNAL, UNKNOWN_PAIR)


def k4_certificate():
    """K_4 as a 1-lift: the clique is its own subdivision."""
    G = sample_uniform_lift(complete_base(4), 1, seed=0)
    branch = tuple(VertexId(f, 0) for f in range(4))
    paths = {(i, j): (branch[i], branch[j]) for i in range(4) for j in range(i + 1, 4)}
    return G, SubdivisionCertificate(branch=branch, paths=paths)


def test_clique_is_its_own_subdivision():
    G, cert = k4_certificate()
    verdict = verify_certificate(G, cert)
    assert verdict.ok and not verdict.violations
    assert certificate_order(cert) == 4
    assert certificate_vertex_count(cert) == 4


def test_shared_internal_vertex_detected():
    n, ell = 5, 10
    G = sample_uniform_lift(complete_base(n), ell, seed=1)
    out = build_large_ell(G, BuildConfig(epsilon=0.5, seed=1))
    assert out.ok
    cert = out.certificate
    with_internals = [k for k, p in cert.paths.items() if len(p) > 2]
    assert len(with_internals) >= 2
    k1, k2 = with_internals[:2]
    paths = dict(cert.paths)
    p2 = list(paths[k2])
    p2[1] = paths[k1][1]
    paths[k2] = tuple(p2)
    bad = SubdivisionCertificate(branch=cert.branch, paths=paths)
    verdict = verify_certificate(G, bad)
    assert not verdict.ok
    assert REUSED_INTERNAL in verdict.kinds()


def test_missing_pair_and_unknown_pair():
    G, cert = k4_certificate()
    paths = dict(cert.paths)
    del paths[(0, 1)]
    verdict = verify_certificate(G, SubdivisionCertificate(cert.branch, paths))
    assert MISSING_PAIR in verdict.kinds()
    paths = dict(cert.paths)
    paths[(0, 9)] = (cert.branch[0], cert.branch[1])
    verdict = verify_certificate(G, SubdivisionCertificate(cert.branch, paths))
    assert UNKNOWN_PAIR in verdict.kinds()


def test_branch_collision_detected():
    G, cert = k4_certificate()
    branch = list(cert.branch)
    branch[2] = branch[0]
    verdict = verify_certificate(G, SubdivisionCertificate(tuple(branch), cert.paths))
    assert BRANCH_COLLISION in verdict.kinds()


def test_endpoint_mismatch_detected():
    G, cert = k4_certificate()
    paths = dict(cert.paths)
    paths[(0, 1)] = (cert.branch[0], cert.branch[2])
    verdict = verify_certificate(G, SubdivisionCertificate(cert.branch, paths))
    assert ENDPOINT_MISMATCH in verdict.kinds()


def test_missing_edge_detected():
    G = sample_uniform_lift(complete_base(3), 4, seed=3)
    u = VertexId(0, 0)
    w = VertexId(1, (G.matchings[(0, 1)][0] + 1) % 4)  # deliberately unmatched
    v = VertexId(2, 0)
    branch = (u, v)
    # force vertex w between u and v regardless of adjacency
    paths = {(0, 1): (u, w, v)}
    verdict = verify_certificate(G, SubdivisionCertificate(branch, paths))
    assert MISSING_EDGE in verdict.kinds()


def test_internal_hits_branch_detected():
    G = sample_uniform_lift(complete_base(4), 1, seed=0)
    branch = tuple(VertexId(f, 0) for f in range(3))
    paths = {(i, j): (branch[i], branch[j]) for i in range(3) for j in range(i + 1, 3)}
    paths[(0, 1)] = (branch[0], branch[2], branch[1])
    verdict = verify_certificate(G, SubdivisionCertificate(branch, paths))
    assert INTERNAL_HITS_BRANCH in verdict.kinds()


def test_malformed_and_out_of_range():
    G, cert = k4_certificate()
    paths = dict(cert.paths)
    paths[(0, 1)] = (cert.branch[0],)
    verdict = verify_certificate(G, SubdivisionCertificate(cert.branch, paths))
    assert MALFORMED_PATH in verdict.kinds()
    paths = dict(cert.paths)
    paths[(0, 1)] = (cert.branch[0], VertexId(9, 9), cert.branch[1])
    verdict = verify_certificate(G, SubdivisionCertificate(cert.branch, paths))
    assert OUT_OF_RANGE in verdict.kinds()


def test_verifier_is_pure():
    G, cert = k4_certificate()
    assert verify_certificate(G, cert) == verify_certificate(G, cert)


def test_random_corruptions_hit_expected_class():
    G = sample_uniform_lift(complete_base(6), 12, seed=2)
    out = build_large_ell(G, BuildConfig(epsilon=0.5, seed=2))
    assert out.ok
    cert = out.certificate
    assert verify_certificate(G, cert).ok
    rng = derive_rng(77)
    for trial in range(40):
        kind = CLASSES[trial % len(CLASSES)]
        bad = corrupt(G, cert, kind, rng)
        assert bad is not None
        verdict = verify_certificate(G, bad)
        assert not verdict.ok
        assert EXPECTED_KIND[kind] in verdict.kinds(), (kind, verdict.violations)


def test_certificate_serialization_roundtrip():
    G = sample_uniform_lift(complete_base(6), 12, seed=4)
    out = build_large_ell(G, BuildConfig(epsilon=0.5, seed=4))
    assert out.ok
    cert = out.certificate
    data = serialize_certificate(cert)
    back = certificate_from_json(data)
    assert back == cert
    assert serialize_certificate(back) == data


def test_certificate_format_errors():
    with pytest.raises(CertificateFormatError):
        certificate_from_json("[]")
    with pytest.raises(CertificateFormatError, match="branch"):
        certificate_from_json('{"paths": {}}')
    with pytest.raises(CertificateFormatError, match="i-j"):
        certificate_from_json('{"branch": [], "paths": {"x": []}}')
    with pytest.raises(CertificateFormatError, match="i < j"):
        certificate_from_json('{"branch": [[0,0]], "paths": {"1-0": []}}')


def test_vertex_count_tracks_path_internals():
    G = sample_uniform_lift(complete_base(3), 5, seed=5)
    u, m, v = VertexId(0, 0), None, None
    for w in sorted(G.neighbors(u)):
        for x in sorted(G.neighbors(w)):
            if x.fiber != u.fiber and x != u:
                m, v = w, x
                break
        if m:
            break
    cert = SubdivisionCertificate((u, v), {(0, 1): (u, m, v)})
    assert certificate_vertex_count(cert) == 3
