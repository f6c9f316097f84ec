from __future__ import annotations

import random
from fractions import Fraction

import numpy as np
import pytest

from hdx.f2core import gaussian_binomial, span, zero_subspace
from hdx.grassmann import (
    certify_expansion,
    complete_grassmann,
    composed_walk,
    containment_bound,
    containment_graph,
    from_top,
    link,
    quotient_poset,
    quotient_subspace,
    subspaces_of,
)
from hdx.spectral import bipartite_second_singular


def random_subspace(rng: random.Random, n: int, k: int):
    while True:
        s = span([rng.getrandbits(n) for _ in range(k)], n)
        if s.dim == k:
            return s


def test_complete_grassmann_levels():
    y = complete_grassmann(3, 1)
    assert [len(y.level(i)) for i in (0, 1)] == [1, 7]
    assert len(complete_grassmann(4, 2).level(2)) == 35 == gaussian_binomial(4, 2)
    for n in range(1, 5):
        assert len(complete_grassmann(n, n).level(n)) == 1
    with pytest.raises(ValueError):
        complete_grassmann(3, 4)


def test_validation_catches_broken_posets():
    y = complete_grassmann(4, 2)
    y.validate()
    one = from_top(3, [span([1, 2], 3)])
    with pytest.raises(ValueError, match="span"):
        one.validate()


def test_measure_is_a_distribution_on_each_level():
    rng = random.Random(0)
    tops = [random_subspace(rng, 5, 3) for _ in range(6)]
    weights = {t: Fraction(rng.randint(1, 5)) for t in tops}
    y = from_top(5, tops, weights)
    for i in range(4):
        assert sum(y.measure(i).values()) == 1


def test_link_of_zero_is_complete_graph():
    y = complete_grassmann(4, 2)
    lk = link(y, zero_subspace(4))
    assert len(lk.graph.vertices) == 15
    assert lk.lam == pytest.approx(1 / 14, abs=1e-9)
    assert lk.lam <= 1 / (2 ** (4 - 2) - 1)


def test_link_of_a_line_is_cocktail_party_graph():
    y = complete_grassmann(5, 3)
    w = span([1], 5)
    lk = link(y, w)
    # oracle: 30 vectors outside w, adjacent unless they differ by the vector of w
    verts = sorted(v for v in range(1, 32) if v != 1)
    a = np.array([[1.0 if u != v and u ^ v != 1 else 0.0 for v in verts] for u in verts])
    eig = np.sort(np.abs(np.linalg.eigvalsh(a / a.sum(axis=1)[:, None])))
    assert lk.lam == pytest.approx(eig[-2], abs=1e-9) == pytest.approx(1 / 14, abs=1e-9)


def test_link_forms_agree_on_random_links():
    rng = random.Random(1)
    tops = [random_subspace(rng, 5, 4) for _ in range(5)]
    y = from_top(5, tops, {t: Fraction(rng.randint(1, 4)) for t in tops})
    pool = [w for i in range(3) for w in y.level(i)]
    for w in rng.sample(pool, 10):
        lk = link(y, w)
        assert lk.lam == pytest.approx(lk.subspace_lam, abs=1e-7)


def test_link_rejects_bad_inputs():
    y = complete_grassmann(4, 2)
    with pytest.raises(ValueError):
        link(y, span([1], 4))
    with pytest.raises(ValueError):
        link(from_top(4, [span([1, 2], 4)]), span([4], 4))


def test_containment_graph_rejects_degenerate_levels():
    y = complete_grassmann(4, 2)
    with pytest.raises(ValueError):
        containment_graph(y, 1, 1)
    with pytest.raises(ValueError):
        containment_graph(y, 1, 3)


def test_containment_graph_bound_at_n4():
    y = complete_grassmann(4, 2)
    lam = certify_expansion(y).worst_lambda
    sv = bipartite_second_singular(containment_graph(y, 1, 2))
    assert sv <= containment_bound(lam, 1, 2)
    # points against lines of PG(3,2): A A^T = 7 I + J, degrees 7 and 3
    assert sv == pytest.approx(np.sqrt(6 / 21), abs=1e-9)


def test_containment_composition():
    y = complete_grassmann(4, 3)
    direct, prod = composed_walk(y, 1, 3)
    assert np.allclose(direct, prod, atol=1e-9)
    s12 = bipartite_second_singular(containment_graph(y, 1, 2))
    s23 = bipartite_second_singular(containment_graph(y, 2, 3))
    s13 = bipartite_second_singular(containment_graph(y, 1, 3))
    assert s13 <= s12 * s23 + 1e-9


def test_containment_composition_on_weighted_poset():
    rng = random.Random(7)
    tops = [random_subspace(rng, 5, 3) for _ in range(10)]
    y = from_top(5, tops, {t: Fraction(rng.randint(1, 6)) for t in tops})
    direct, prod = composed_walk(y, 0, 3)
    assert np.allclose(direct, prod, atol=1e-9)


def test_containment_singular_values_decay_with_level_gap():
    y = complete_grassmann(5, 4)
    vals = [bipartite_second_singular(containment_graph(y, 1, j)) for j in (2, 3, 4)]
    assert vals[0] > vals[1] > vals[2]


def test_certify_expansion_examples():
    rep = certify_expansion(complete_grassmann(4, 2))
    assert rep.worst_lambda == pytest.approx(1 / 14) and rep.witness.dim == 0
    rep5 = certify_expansion(complete_grassmann(5, 2))
    assert rep5.worst_lambda == pytest.approx(1 / 30)
    assert rep5.trivial
    single = certify_expansion(from_top(3, [span([1, 2], 3)]))
    assert single.trivial and len(single.per_link) == 1


def test_link_of_link_is_link_of_sum_at_n4():
    y = complete_grassmann(4, 4)
    for w1 in y.level(1):
        q = quotient_poset(y, w1)
        for w in y.above(w1, 2):
            assert link(q, quotient_subspace(w1, w)).lam == pytest.approx(link(y, w).lam, abs=1e-9)


def test_subspaces_of_counts():
    w = span([1, 2, 4, 8], 5)
    for k in range(5):
        subs = subspaces_of(w, k)
        assert len(subs) == len(set(subs)) == gaussian_binomial(4, k)
        assert all(s.is_subspace_of(w) for s in subs)


def test_json_dump():
    y = complete_grassmann(3, 1)
    data = y.to_json()
    assert data["n"] == 3 and len(data["levels"][1]) == 7
