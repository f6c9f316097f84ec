from __future__ import annotations

import itertools

import numpy as np
import pytest
import scipy.sparse as sp

from hdx.matrixposet import build_DS
from hdx.f2core import BitMatrix
from hdx.spectral import (
    BipartiteGraph,
    LocalDecomposition,
    WeightedGraph,
    bipartite_second_singular,
    complete_bipartite,
    complete_graph,
    double_cover,
    l1_closeness_bound,
    local_to_global_check,
    second_eigenvalue,
    spectral_report,
    spectrum,
    tensor,
)


def johnson(n: int, k: int, l: int) -> WeightedGraph:
    verts = list(itertools.combinations(range(n), k))
    edges = [(a, b, 1) for a, b in itertools.combinations(verts, 2) if len(set(a) & set(b)) == l]
    return WeightedGraph.from_edges(verts, edges)


def dense_lambda(g: WeightedGraph) -> float:
    """Independent oracle: eigenvalues of the row-stochastic walk matrix."""
    vals = np.sort(np.abs(np.linalg.eigvals(g.markov())))
    return float(vals[-2])


def test_complete_graph_values():
    assert second_eigenvalue(complete_graph(7, loops=True)) == pytest.approx(0, abs=1e-9)
    for m in range(3, 9):
        assert second_eigenvalue(complete_graph(m)) == pytest.approx(1 / (m - 1), abs=1e-9)


def test_johnson_4_2_1():
    g = johnson(4, 2, 1)
    assert second_eigenvalue(g) == pytest.approx(0.5, abs=1e-9)
    assert dense_lambda(g) == pytest.approx(0.5, abs=1e-9)


def test_disconnected_and_empty_graphs():
    g = WeightedGraph.from_edges([0, 1, 2, 3], [(0, 1, 1), (2, 3, 1)])
    rep = spectral_report(g)
    assert rep.lam == 1.0 and not rep.connected
    with pytest.raises(ValueError):
        WeightedGraph.from_edges([], [])
    with pytest.raises(ValueError):
        WeightedGraph.from_edges([0, 1], [])


def test_operator_is_self_adjoint_under_the_measure():
    g = johnson(6, 3, 1)
    a = g.markov()
    mu = g.measure
    sym = np.diag(np.sqrt(mu)) @ a @ np.diag(1 / np.sqrt(mu))
    assert np.max(np.abs(sym - sym.T)) < 1e-12


def test_bipartite_values():
    assert bipartite_second_singular(complete_bipartite(3, 5)) == pytest.approx(0, abs=1e-9)
    assert bipartite_second_singular(double_cover(complete_graph(3))) == pytest.approx(0.5, abs=1e-9)


def test_bipartite_containment_of_lines_in_planes_of_f2_3():
    lines = [v for v in range(1, 8)]
    planes = [frozenset(x for x in range(1, 8) if bin(x & h).count("1") % 2 == 0) for h in range(1, 8)]
    edges = [(v, p, 1) for v in lines for p in planes if v in p]
    b = BipartiteGraph.from_edges(lines, planes, edges)
    # incidence of the Fano plane: A A^T = 2 I + J, so the second singular value is sqrt(2)/3
    assert bipartite_second_singular(b) == pytest.approx(np.sqrt(2) / 3, abs=1e-9)


def test_tensor_products():
    g = johnson(4, 2, 1)
    assert second_eigenvalue(tensor(g, complete_graph(5, loops=True))) == pytest.approx(second_eigenvalue(g), abs=1e-9)
    assert second_eigenvalue(tensor(g, g)) == pytest.approx(0.5, abs=1e-9)
    h = complete_graph(4)
    prod = np.sort(spectrum(tensor(g, h)))
    pairs = np.sort(np.outer(spectrum(g), spectrum(h)).ravel())
    assert np.allclose(prod, pairs, atol=1e-9)


def test_double_cover_examples():
    edge = WeightedGraph.from_edges([0, 1], [(0, 1, 1)])
    assert not double_cover(edge).is_connected()
    assert bipartite_second_singular(double_cover(johnson(4, 2, 1))) == pytest.approx(0.5, abs=1e-9)


def test_double_cover_matches_graph_on_random_graphs():
    rng = np.random.default_rng(11)
    done = 0
    while done < 20:
        m = int(rng.integers(4, 10))
        w = np.triu(rng.random((m, m)) * (rng.random((m, m)) < 0.6), 1)
        g = WeightedGraph.from_joint(range(m), w + w.T) if w.sum() > 0 else None
        if g is None or not g.is_connected():
            continue
        if np.isclose(abs(spectrum(g)[-1]), 1.0):
            continue  # bipartite graphs have disconnected double covers
        assert bipartite_second_singular(double_cover(g)) == pytest.approx(second_eigenvalue(g), abs=1e-9)
        done += 1


def test_l1_closeness():
    g = johnson(5, 2, 0)
    eps, holds = l1_closeness_bound(g, g)
    assert eps == pytest.approx(0) and holds
    for m in (5, 8, 12):
        a, b = complete_graph(m), complete_graph(m, loops=True)
        eps, holds = l1_closeness_bound(a, b)
        p = 1 / m
        assert holds and eps == pytest.approx(2 * p)
        assert second_eigenvalue(a) <= 2 * p + 1e-12
    with pytest.raises(ValueError):
        l1_closeness_bound(WeightedGraph.from_edges([0, 1, 2], [(0, 1, 1), (1, 2, 1)]), complete_graph(3))


def test_l1_closeness_two_step_walk_on_ds3():
    b = build_DS(1, 1, 3, upper=BitMatrix.identity(3))
    lr = b.left_to_right()
    rl = b.joint.toarray().T / b.right_measure[:, None]
    walk = lr @ rl
    joint = walk * b.left_measure[:, None]
    two = WeightedGraph.from_joint(range(len(b.left)), (joint + joint.T) / 2)
    eps, holds = l1_closeness_bound(two, complete_graph(len(b.left), loops=True))
    assert holds and 0 < eps < 2


def test_power_iteration_agrees_with_dense():
    rng = np.random.default_rng(3)
    n = 1200
    rows, cols = [], []
    for _ in range(4):
        perm = rng.permutation(n)
        for i in range(0, n, 2):
            rows += [perm[i], perm[i + 1]]
            cols += [perm[i + 1], perm[i]]
    ring = np.arange(n)
    rows += list(ring) + list((ring + 1) % n)
    cols += list((ring + 1) % n) + list(ring)
    g = WeightedGraph.from_joint(range(n), sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)))
    dense = spectral_report(g, "dense")
    power = spectral_report(g, "power")
    assert power.method == "power"
    assert abs(dense.lam - power.lam) < 1e-6


def _check(g: WeightedGraph, comps, weights):
    rep = local_to_global_check(g, LocalDecomposition(tuple(comps), tuple(weights)))
    assert rep.holds
    assert rep.bound == pytest.approx(rep.gamma + rep.lambda2**2 * (1 - rep.gamma))
    return rep


def test_local_to_global_trivial():
    g = johnson(5, 2, 0)
    rep = _check(g, [g], [1.0])
    assert rep.gamma == pytest.approx(second_eigenvalue(g))


def test_local_to_global_k6_by_triangles():
    g = complete_graph(6)
    comps = [WeightedGraph.from_edges(t, [(a, b, 1) for a, b in itertools.combinations(t, 2)]) for t in itertools.combinations(range(6), 3)]
    rep = _check(g, comps, [1 / len(comps)] * len(comps))
    assert rep.gamma == pytest.approx(0.5)
    assert rep.actual == pytest.approx(0.2)


def test_local_to_global_johnson_by_pairs():
    g = johnson(8, 4, 2)
    verts = g.vertices
    comps = []
    for p in itertools.combinations(range(8), 2):
        vs = [v for v in verts if set(p) <= set(v)]
        edges = [(a, b, 1) for a, b in itertools.combinations(vs, 2) if set(a) & set(b) == set(p)]
        comps.append(WeightedGraph.from_edges(vs, edges))
    rep = _check(g, comps, [1 / len(comps)] * len(comps))
    assert rep.actual == pytest.approx(1 / 6)


def test_local_to_global_rejects_wrong_decomposition():
    g = complete_graph(4)
    wrong = WeightedGraph.from_edges([0, 1], [(0, 1, 1)])
    with pytest.raises(ValueError):
        local_to_global_check(g, LocalDecomposition((wrong,), (1.0,)))


def test_tsv_and_report_dumps():
    g = johnson(4, 2, 1)
    text = g.to_tsv()
    assert text.startswith("# vertices 6")
    assert len([ln for ln in text.splitlines() if not ln.startswith("#")]) == 12
    rep = spectral_report(g)
    assert '"lambda": 0.5' in rep.dumps() or abs(rep.to_json()["lambda"] - 0.5) < 1e-9
