from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from hdx.f2core import popcount
from hdx.johnson import (
    JohnsonGraphSpec,
    build_johnson_complex,
    certify_johnson_expansion,
    compare_johnson_spectrum,
    expected_pattern,
    face_pattern,
    face_pattern_audit,
    intersection_pattern_check,
    johnson_eigenvalues,
    johnson_graph,
    johnson_grassmann_equivalence,
    johnson_lambda,
    johnson_link,
    johnson_link_complex,
)
from hdx.spectral import second_eigenvalue


@pytest.fixture(scope="module")
def x82():
    return build_johnson_complex(8, Fraction(1, 2), 2)


def krawtchouk(k: int, j: int, n: int) -> int:
    return sum((-1) ** i * math.comb(j, i) * math.comb(n - j, k - i) for i in range(k + 1))


def test_spec_validation():
    with pytest.raises(ValueError):
        JohnsonGraphSpec(4, 2, 2)
    with pytest.raises(ValueError):
        JohnsonGraphSpec(2, 3, 0)


def test_j421_closed_form_and_dense():
    spec = JohnsonGraphSpec(4, 2, 1)
    assert johnson_eigenvalues(spec) == [4, 0, -2]
    cmp = compare_johnson_spectrum(spec)
    assert cmp.ok
    assert cmp.closed_form == pytest.approx((-0.5, 0.0, 1.0))
    assert johnson_lambda(spec) == Fraction(1, 2)


@pytest.mark.parametrize("k", [2, 4, 6])
def test_half_intersection_ratio(k):
    spec = JohnsonGraphSpec(2 * k, k, k // 2)
    assert johnson_lambda(spec) == Fraction(1, 2 * k - 2)
    cmp = compare_johnson_spectrum(spec)
    assert cmp.ok
    assert second_eigenvalue(johnson_graph(spec)) == pytest.approx(1 / (2 * k - 2), abs=1e-9)


def test_unbalanced_ratio_bound():
    eta = Fraction(1, 2)
    spec = JohnsonGraphSpec(10, 4, 2)
    assert johnson_lambda(spec) <= eta / (2 * (1 + eta))
    assert compare_johnson_spectrum(spec).ok


def test_closed_form_matches_dense_for_all_small_graphs():
    checked = 0
    for n in range(3, 11):
        for k in range(1, n // 2 + 1):
            for l in range(k):
                cmp = compare_johnson_spectrum(JohnsonGraphSpec(n, k, l))
                assert cmp.ok, (n, k, l, cmp.max_gap)
                checked += 1
    assert checked > 50


def test_closed_form_rejects_large_k():
    with pytest.raises(ValueError):
        johnson_eigenvalues(JohnsonGraphSpec(5, 3, 1))


def test_complex_size_and_degree(x82):
    verts = x82.vertices()
    assert len(verts) == 128
    assert all(popcount(v) % 2 == 0 for v in verts)
    assert len(x82.link0.level(0)) == math.comb(8, 4) == 70


def test_triangles_match_direct_scan(x82):
    gens = [g for g in range(256) if popcount(g) == 4]
    slow = {(a, b) for a, b in itertools.combinations(gens, 2) if popcount(a ^ b) == 4}
    assert slow
    ours = {tuple(sorted(f)) for f in x82.link0.level(1)}
    assert ours == slow
    a, b = next(iter(slow))
    assert x82.has_face((0, a, b)) and x82.has_face((a, b, 0))
    assert not x82.has_face((0, a, a ^ 0b11))


def test_divisibility_and_graph_only_case():
    with pytest.raises(ValueError, match="2\\^k must divide"):
        build_johnson_complex(8, Fraction(1, 2), 3)
    with pytest.raises(ValueError):
        build_johnson_complex(8, Fraction(1, 3), 1)
    x = build_johnson_complex(8, Fraction(1, 4), 1)
    assert set(x.link0.faces) == {0}


def test_face_pattern_values(x82):
    assert expected_pattern(8, 4, 2) == {0: 2, 1: 2, 2: 2, 3: 2}
    assert expected_pattern(8, 4, 1) == {0: 4, 1: 4}
    a, b = x82.link0.level(1)[0]
    assert face_pattern((0, a, b), x82) == {0: 2, 1: 2, 2: 2, 3: 2}
    assert face_pattern((a, 0), x82) == {0: 4, 1: 4}
    with pytest.raises(ValueError):
        face_pattern((0, 1), x82)


def test_face_pattern_both_directions_exhaustive(x82):
    audit = face_pattern_audit(x82, 2)
    assert audit.ok
    assert audit.tuples == math.comb(255, 2)
    assert audit.faces == len(x82.link0.level(1))


def test_hadamard_like_intersections():
    x = build_johnson_complex(8, Fraction(1, 2), 3, strict=False)
    assert intersection_pattern_check(x)


def test_vertex_link_is_j842(x82):
    rep = johnson_link((0,), x82)
    assert rep.isomorphic and rep.ok
    assert rep.factors == ((8, 4, 2),)
    assert rep.lam == pytest.approx(1 / 6, abs=1e-9)
    assert rep.lam_formula == Fraction(1, 6)
    assert rep.bound == Fraction(1, 4) and rep.within_bound


def test_vertex_link_regular(x82):
    g = x82.link0.graph()
    deg = (g.joint.toarray() > 0).sum(axis=1)
    assert len(set(deg.tolist())) == 1


def test_edge_link_is_tensor_of_j421():
    x = build_johnson_complex(8, Fraction(1, 2), 3, strict=False)
    (a,) = x.link0.level(0)[0]
    rep = johnson_link((0, a), x)
    assert rep.isomorphic
    assert sorted(rep.factors) == [(4, 2, 1), (4, 2, 1)]
    assert rep.lam == pytest.approx(0.5, abs=1e-9)
    assert not rep.within_bound  # 1/2 exceeds 3/8 at this size


def test_certification_and_trickle_down(x82):
    rep = certify_johnson_expansion(x82)
    assert rep.ok
    assert rep.skeleton_lambda == pytest.approx(1 / 7, abs=1e-9)
    assert rep.skeleton_lambda_dense == pytest.approx(1 / 7, abs=1e-9)
    assert rep.trickle_bound == pytest.approx(1 / 5, abs=1e-9)
    assert not rep.remark_holds


def test_skeleton_value_matches_krawtchouk_oracle():
    # characters of F_2^8 restricted to the even-weight component: a and a + 1 coincide
    vals = [abs(krawtchouk(4, j, 8)) / 70 for j in range(1, 8)]
    assert max(vals) == pytest.approx(1 / 7)


def test_johnson_grassmann_equivalence():
    rep = johnson_grassmann_equivalence(Fraction(1, 2), 8, 2)
    assert rep.ok
    assert rep.span_condition_checked > 0
    assert rep.levels[0][1] == rep.levels[0][2] == 70


def test_link_complex_oracle():
    lc = johnson_link_complex(16, Fraction(1, 4), strict=False)
    v = lc.vertices()[0]
    ns = lc.neighbours(v)
    assert len(ns) == math.comb(4, 2) * math.comb(12, 2)
    assert all(lc.has_edge(v, u) for u in ns)
    rng = np.random.default_rng(0)
    for u in rng.choice(lc.vertices(), 200):
        assert lc.has_edge(v, int(u)) == (int(u) in set(ns))
