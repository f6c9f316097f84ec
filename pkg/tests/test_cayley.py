from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest

from hdx.cayley import (
    CayleyComplex,
    LabeledLinkGraph,
    SimplicialComplex,
    basify,
    cayley_from_basification,
    certify_basification,
    complete_generator_complex,
    complex_lambda,
    degree_lower_bound,
    hg_matrix,
)
from hdx.f2core import rank_of_rows, span
from hdx.grassmann import certify_expansion, complete_grassmann, from_top, link
from hdx.spectral import WeightedGraph, second_eigenvalue

TRIANGLE = "a\tb\tc\nb\tc\ta\na\tc\tb\n"


def toy() -> CayleyComplex:
    return cayley_from_basification(2, basify(complete_grassmann(2, 2)))


def test_simplicial_complex_basics():
    c = SimplicialComplex.from_top([(1, 2, 3), (2, 3, 4)])
    c.validate()
    assert c.dim == 2
    assert c.contains((2, 3)) and not c.contains((1, 4))
    assert sum(c.weights(0).values()) == pytest.approx(1.0)
    assert sorted(c.link((2, 3)).vertices()) == [1, 4]


def test_basify_toy():
    b = basify(complete_grassmann(2, 2))
    assert b.dim == 1
    assert sorted(b.vertices()) == [1, 2, 3]
    assert sorted(b.level(1)) == [(1, 2), (1, 3), (2, 3)]


def test_basify_counts_and_link_spectra_at_n4():
    y = complete_grassmann(4, 3)
    b = basify(y)
    assert len(b.vertices()) == len(y.level(1)) == 15
    # top faces: each 3-space has 7*6*4/6 = 28 unordered bases
    assert len(b.level(2)) == 15 * 28
    assert second_eigenvalue(b.graph()) == pytest.approx(link(y, span([], 4)).lam, abs=1e-9)
    for w in y.level(1)[:5]:
        (v,) = w.nonzero_vectors()
        assert second_eigenvalue(b.link_graph((v,))) == pytest.approx(link(y, w).lam, abs=1e-9)


def test_toy_cayley_complex_is_k4():
    x = toy()
    full = x.materialize(component=False)
    assert len(full.vertices()) == 4
    assert len(full.level(1)) == 6
    assert len(full.level(2)) == 4
    assert second_eigenvalue(x.skeleton_graph()) == pytest.approx(1 / 3, abs=1e-9)
    assert x.skeleton_lambda() == pytest.approx(1 / 3, abs=1e-9)


def test_vertex_links_are_translates_of_the_basification():
    x = cayley_from_basification(3, basify(complete_grassmann(3, 2)))
    full = x.materialize(component=False)
    for v in range(8):
        lk = full.link((v,))
        assert set(lk.level(1)) == set(x.link_at(v).level(1))
        assert {tuple(sorted(u ^ v for u in f)) for f in lk.level(1)} == set(x.link0.level(1))


def test_skeleton_graph_is_cayley_graph_of_level_one():
    y = complete_grassmann(4, 2)
    x = cayley_from_basification(4, basify(y))
    g = x.skeleton_graph()
    gens = {w.nonzero_vectors()[0] for w in y.level(1)}
    for a, b, _ in [(u, v, 0) for u in range(16) for v in range(16) if u < v]:
        assert x.has_edge(a, b) == ((a ^ b) in gens)
    # character computation against a dense solve
    assert x.skeleton_lambda() == pytest.approx(second_eigenvalue(g), abs=1e-9)


def test_certify_basification_pipeline():
    y = complete_grassmann(4, 2)
    rep = certify_basification(y, cayley_from_basification(4, basify(y)))
    assert rep.ok
    toy_rep = certify_basification(complete_grassmann(2, 2), toy())
    assert toy_rep.link_lambda == pytest.approx(0.5)
    assert toy_rep.skeleton_lambda == pytest.approx(1 / 3)
    assert toy_rep.trickle_bound == pytest.approx(1.0)


def test_certify_flags_disconnected_skeleton():
    y = from_top(3, [span([1, 2], 3)])
    rep = certify_basification(y, cayley_from_basification(3, basify(y)))
    assert not rep.connected and not rep.ok


def test_complex_lambda_matches_poset():
    y = complete_grassmann(4, 3)
    assert complex_lambda(basify(y)) == pytest.approx(certify_expansion(y).worst_lambda, abs=1e-9)


def test_hg_matrix_triangle():
    g = LabeledLinkGraph.from_tsv(TRIANGLE)
    h = hg_matrix(g)
    assert set(h.rows) == {0b111}
    assert h.rank == 1


def test_hg_matrix_edgeless_and_not_nice():
    h = hg_matrix(LabeledLinkGraph(("a", "b"), {}))
    assert h.rows == () and h.rank == 0
    with pytest.raises(ValueError):
        hg_matrix(LabeledLinkGraph.from_tsv("a\tb\tc\n"))
    with pytest.raises(ValueError):
        LabeledLinkGraph.from_tsv("a\tb\n")


def test_degree_bound_triangle_is_tight():
    rep = degree_lower_bound(LabeledLinkGraph.from_tsv(TRIANGLE), 2)
    assert rep.rank == 1 and rep.bound == 3 == rep.m
    assert rep.ok


def test_kernel_condition_both_directions_on_triangle():
    g = LabeledLinkGraph.from_tsv(TRIANGLE)
    h = hg_matrix(g)
    for n in (2, 3):
        for gens in itertools.permutations(range(1, 1 << n), 3):
            s = dict(zip(g.vertices, gens))
            # the complex with this link exists iff each labeled edge sums to its label
            exists = all(s[u] ^ s[v] == s[w] for (u, v), w in g.labels.items())
            assert h.columns_in_kernel(list(gens), n) == exists


def test_complete_generator_complex_n3():
    x = complete_generator_complex(3)
    lk = x.labeled_link()
    assert lk.nice and lk.is_connected()
    rep = degree_lower_bound(lk, 3)
    assert rep.m == 7 >= rep.bound
    assert rep.m >= 2 * 3 - 1
    assert rep.greedy_rows >= rep.greedy_target
    h = hg_matrix(lk)
    assert h.columns_in_kernel(list(lk.vertices), 3)
    assert h.rank == rank_of_rows(h.rows) <= 7 - 3


def test_pipeline_links_are_nice_and_kernel_contains_generators():
    for y in (complete_grassmann(3, 2), complete_grassmann(4, 2)):
        x = cayley_from_basification(y.ambient_dim, basify(y))
        lk = x.labeled_link()
        assert lk.nice
        assert hg_matrix(lk).columns_in_kernel(list(lk.vertices), y.ambient_dim)


def test_translation_invariance_of_labeled_links():
    x = cayley_from_basification(3, basify(complete_grassmann(3, 2)))
    base = {frozenset(f) for f in x.link0.level(1)}
    for v in range(8):
        shifted = {frozenset(u ^ v for u in f) for f in x.link_at(v).level(1)}
        assert shifted == base


def test_tsv_round_trip():
    g = LabeledLinkGraph.from_tsv(TRIANGLE)
    again = LabeledLinkGraph.from_tsv(g.to_tsv())
    assert again.labels == g.labels


def test_invalid_link_vertices():
    with pytest.raises(ValueError):
        CayleyComplex(2, SimplicialComplex.from_top([(1, 4)]))


def test_weighted_basification_measure():
    y = from_top(3, [span([1, 2], 3), span([1, 4], 3)], {span([1, 2], 3): Fraction(3), span([1, 4], 3): Fraction(1)})
    b = basify(y)
    w = b.weights(0)
    assert sum(w.values()) == pytest.approx(1.0)
    assert w[(2,)] == pytest.approx(3 * w[(4,)])
    assert isinstance(b.graph(), WeightedGraph)
    assert np.isfinite(second_eigenvalue(b.graph()))
