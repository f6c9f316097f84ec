from __future__ import annotations

import itertools
import random
from fractions import Fraction

import pytest

from hdx.cayley import SimplicialComplex
from hdx.coboundary import (
    BT_OUT,
    FIVE_CYCLE_BOUND,
    LINK_CONE_BOUND,
    MATRIX_CONE_BOUND,
    SPECIAL_FOUR_CYCLE_BOUND,
    TR_OUT,
    Cochain0,
    Cochain1,
    Contraction,
    DiagramError,
    GroupTable,
    MatrixLinkComplex,
    PlaneDiagram,
    WeightComplex,
    backtrack_contraction,
    brute_force_beta,
    build_johnson_cone,
    build_johnson_link_cone,
    collapse,
    cone_area,
    cone_beta_bound,
    conform,
    cyclic_group,
    delta0,
    delta1,
    dist,
    fan_contraction,
    group_by_name,
    halves,
    is_identity,
    isoperimetric_check,
    link_cycle_contraction,
    matrix_link_contraction_patterns,
    matrix_two_path,
    middle_path_contract,
    middle_vertex_contract,
    sign_law_violations,
    star_cone,
    symmetric_group_3,
    triangle_contraction,
    triangle_test,
    van_kampen_assemble,
    verify_contraction,
    worked_example,
)
from hdx.coboundary import _disjoint_five_cycle
from hdx.f2core import BitMatrix, is_direct_sum, rank
from hdx.johnson import johnson_link_complex

GROUPS = [cyclic_group(2), cyclic_group(3), symmetric_group_3()]


def k4() -> SimplicialComplex:
    return SimplicialComplex.from_top(itertools.combinations(range(4), 3))


def random_complex(rng: random.Random, n: int = 6, tops: int = 5) -> SimplicialComplex:
    tris = rng.sample(list(itertools.combinations(range(n), 3)), tops)
    return SimplicialComplex.from_top(tris)


def random_cochain(rng: random.Random, x, group: GroupTable) -> Cochain1:
    return Cochain1.from_oriented(group, {e: rng.randrange(group.order) for e in x.level(1)})


def test_group_tables():
    s3 = symmetric_group_3()
    assert s3.order == 6 and not s3.is_abelian
    assert cyclic_group(3).is_abelian
    assert group_by_name("z4").order == 4 and group_by_name("S3").order == 6
    with pytest.raises(ValueError):
        group_by_name("A5")
    with pytest.raises(ValueError):
        GroupTable.from_table("bad", [[0, 1], [0, 1]])
    for a in range(6):
        assert s3.mul(a, s3.inv(a)) == s3.identity


def test_delta_of_constant_is_identity():
    x = k4()
    for g in GROUPS:
        for c in range(g.order):
            assert is_identity(delta0(Cochain0({v: c for v in x.vertices()}), x, g), g)


def test_delta_squared_is_identity_over_s3():
    x = k4()
    g = symmetric_group_3()
    rng = random.Random(0)
    for _ in range(20):
        pot = Cochain0({v: rng.randrange(6) for v in x.vertices()})
        f = delta0(pot, x, g)
        assert f.antisymmetric(g)
        assert is_identity(delta1(f, x, g), g)


def test_cochain1_rejects_conflicting_orientations():
    g = cyclic_group(3)
    with pytest.raises(ValueError):
        Cochain1.from_oriented(g, {(0, 1): 1, (1, 0): 1})


def test_single_edge_corruption_on_k4():
    x = k4()
    g = cyclic_group(2)
    f = delta0(Cochain0({0: 1, 1: 0, 2: 1, 3: 0}), x, g)
    bad = f.changed(g, (0, 1), 1 - f(0, 1))
    assert triangle_test(f, x, g) == 0
    assert triangle_test(bad, x, g) == Fraction(2, 4)
    assert dist(f, bad, x) == Fraction(1, 6)


def test_triangle_test_matches_direct_count():
    rng = random.Random(1)
    for g in GROUPS:
        x = random_complex(rng)
        f = random_cochain(rng, x, g)
        tris = x.level(2)
        hits = sum(1 for a, b, c in tris if g.product(f(a, b), f(b, c), f(c, a)) != g.identity)
        assert triangle_test(f, x, g) == Fraction(hits, len(tris))


def test_antisymmetry_and_sign_law_on_random_complexes():
    rng = random.Random(2)
    for g in GROUPS:
        for _ in range(20):
            x = random_complex(rng)
            f = random_cochain(rng, x, g)
            assert f.antisymmetric(g)
            h = delta1(f, x, g)
            if g.is_abelian:
                assert sign_law_violations(h, g) == []
            else:
                assert sign_law_violations(h, g, up_to_conjugacy=True) == []


def test_s3_sign_law_fails_without_conjugacy():
    # the cyclic rotations of a non-abelian triangle product differ by conjugation
    g = symmetric_group_3()
    x = SimplicialComplex.from_top([(0, 1, 2)])
    rng = random.Random(3)
    seen = False
    for _ in range(50):
        h = delta1(random_cochain(rng, x, g), x, g)
        seen |= bool(sign_law_violations(h, g))
    assert seen


def test_beta_on_k4_meets_star_cone_bound():
    x = k4()
    cone = star_cone(x)
    area = cone_area(cone, x)
    assert area == 1
    assert cone_beta_bound(area) == 1
    for g in (cyclic_group(2), cyclic_group(3)):
        rep = brute_force_beta(x, g)
        assert rep.beta is not None and rep.beta >= cone_beta_bound(area)
        assert rep.coboundaries == g.order ** 3
        assert not rep.cocycle_not_coboundary


def test_beta_agrees_with_direct_minimum_on_k4_z2():
    x = k4()
    g = cyclic_group(2)
    edges = x.level(1)
    cobs = []
    for vals in itertools.product(range(2), repeat=4):
        cobs.append(delta0(Cochain0(dict(enumerate(vals))), x, g))
    best = None
    for vals in itertools.product(range(2), repeat=len(edges)):
        f = Cochain1.from_oriented(g, dict(zip(edges, vals)))
        d = min(dist(f, c, x) for c in cobs)
        if d:
            r = triangle_test(f, x, g) / d
            best = r if best is None else min(best, r)
    assert brute_force_beta(x, g).beta == best


def test_beta_zero_when_a_cocycle_is_not_a_coboundary():
    hollow = SimplicialComplex.from_top([(0, 1), (1, 2), (0, 2)])
    rep = brute_force_beta(hollow, cyclic_group(2))
    assert rep.beta == 0 and rep.cocycle_not_coboundary
    assert rep.to_json()["cocycle_not_coboundary"] is True


def test_cone_beta_bound_rejects_zero_area():
    with pytest.raises(ValueError):
        cone_beta_bound(0)
    assert cone_beta_bound(3, k=3) == Fraction(1, 12)


def test_triangle_boundary_contraction_is_valid():
    x = k4()
    c = triangle_contraction(0, 1, 2)
    check = verify_contraction(c, x)
    assert check.ok and check.triangles == 1
    assert c.final() == (0,)


def test_non_triangle_step_is_rejected():
    x = SimplicialComplex.from_top([(0, 1, 2), (0, 2, 3)])
    bad = Contraction((0, 1, 2, 3, 0), ((TR_OUT, 1, None),))
    check = verify_contraction(bad, x)
    assert not check.ok and check.move_index == 0
    with pytest.raises(ValueError):
        check.raise_if_invalid()
    not_closed = Contraction((0, 1, 2), ())
    assert not verify_contraction(not_closed, x).ok


def test_backtrack_contraction_and_collapse():
    x = k4()
    c = backtrack_contraction((0, 1, 2, 1, 0))
    assert verify_contraction(c, x).ok and c.triangles == 0
    assert collapse((0, 0, 1, 1, 2, 0)) == (0, 1, 2, 0)
    with pytest.raises(ValueError):
        backtrack_contraction((0, 1, 2, 0))


def test_reversal_and_rotation_preserve_validity():
    x = k4()
    c = middle_vertex_contract((0, 1, 2, 0), 3, x)
    for s in range(3):
        r = c.rebased(s)
        assert verify_contraction(r, x).ok and r.triangles == c.triangles
    rev = c.reversed()
    assert rev.start == (0, 2, 1, 0) and verify_contraction(rev, x).ok
    assert conform(c, (1, 0, 2, 1)).start == (1, 0, 2, 1)
    with pytest.raises(ValueError):
        conform(c, (0, 1, 3, 0))


def test_middle_vertex_contraction_uses_one_triangle_per_edge():
    for m in (3, 4, 6):
        cone_tris = [(m, i, (i + 1) % m) for i in range(m)]
        x = SimplicialComplex.from_top(cone_tris)
        cyc = tuple(range(m)) + (0,)
        c = middle_vertex_contract(cyc, m, x)
        assert verify_contraction(c, x).ok
        assert c.triangles == m


def test_middle_path_contraction_counts():
    # v = 10, w = 11, path u = 0 -> ... -> u'
    def suspended(path):
        tris = [(apex, a, b) for a, b in zip(path, path[1:]) for apex in (10, 11)]
        return SimplicialComplex.from_top(tris + [(10, path[0], 20), (11, path[-1], 21)])

    x = suspended([0, 1])
    c = middle_path_contract((10, 0, 11, 1, 10), (0, 1), x)
    assert verify_contraction(c, x).ok and c.triangles == 2
    x = suspended([0, 1, 2])
    c = middle_path_contract((10, 0, 11, 2, 10), (0, 1, 2), x)
    assert verify_contraction(c, x).ok and c.triangles == 4
    with pytest.raises(ValueError):
        middle_path_contract((10, 0, 11, 2, 10), (0, 2), x)


def test_van_kampen_single_face():
    x = k4()
    d = PlaneDiagram.from_faces(["a", "b", "c"], [["a", "b", "c"]], {"a": 0, "b": 1, "c": 2})
    c = van_kampen_assemble(d, {1: triangle_contraction(0, 1, 2)}, x)
    assert verify_contraction(c, x).ok and c.triangles == 1


def test_worked_example_needs_seven_triangles():
    x, d, inner, cycle = worked_example()
    assert [inner[i].triangles for i in (1, 2, 3)] == [2, 3, 2]
    c = van_kampen_assemble(d, inner, x)
    assert c.start == cycle
    assert verify_contraction(c, x).ok
    assert c.triangles == 7


def test_diagram_validation_errors():
    psi = {v: v for v in "abcd"}
    with pytest.raises(DiagramError):
        PlaneDiagram.from_faces(["a", "b", "c", "d"], [["a", "b", "c"]], psi)
    with pytest.raises(DiagramError):
        PlaneDiagram.from_faces(["a", "b"], [["a", "b"]], psi)
    d = PlaneDiagram.from_faces(["a", "b", "c"], [["a", "b", "c"]], {"a": 0, "b": 1})
    with pytest.raises(DiagramError):
        d.validate()
    hollow = SimplicialComplex.from_top([(0, 1), (1, 2)])
    d = PlaneDiagram.from_faces(["a", "b", "c"], [["a", "b", "c"]], {"a": 0, "b": 1, "c": 2})
    with pytest.raises(DiagramError):
        d.validate(hollow)


def test_van_kampen_rejects_wrong_face_set():
    x = k4()
    d = PlaneDiagram.from_faces(["a", "b", "c"], [["a", "b", "c"]], {"a": 0, "b": 1, "c": 2})
    with pytest.raises(DiagramError):
        van_kampen_assemble(d, {}, x)


def test_fan_contraction_uses_m_plus_faces():
    # a wheel: hub 0 and rim 1..m; star cone from the hub has area 1
    for m in (4, 5, 7):
        tris = [(0, i, i % m + 1) for i in range(1, m + 1)]
        x = SimplicialComplex.from_top(tris)
        cone = star_cone(x, 0)
        assert cone_area(cone, x) == 1
        rim = tuple(range(1, m + 1)) + (1,)
        c = fan_contraction(cone, rim, x)
        assert verify_contraction(c, x).ok
        assert c.triangles == m


def test_star_cone_and_triangle_isoperimetry():
    x = k4()
    cone = star_cone(x)
    rep = isoperimetric_check(x, cone, [(1, 2, 3, 1), (0, 1, 2, 0)])
    assert rep.ok and rep.area == 1
    assert all(t <= 3 * rep.area for t in rep.triangles)
    assert rep.to_json()["ok"]


def test_cone_area_rejects_wrong_start():
    x = k4()
    cone = star_cone(x)
    bad = dict(cone.contractions)
    e = next(iter(bad))
    bad[e] = triangle_contraction(1, 2, 3)
    with pytest.raises(ValueError):
        cone_area(type(cone)(cone.base, cone.paths, bad), x)


def test_disjoint_five_cycle_uses_nine_triangles():
    lc = johnson_link_complex(16, Fraction(1, 4), strict=False)
    # five weight-4 sets, consecutive ones sharing two coordinates, non-adjacent ones disjoint
    blocks = [0b11 << (2 * i) for i in range(5)]
    cyc = [blocks[i] | blocks[(i + 1) % 5] for i in range(5)]
    for a, b in zip(cyc, cyc[1:] + cyc[:1]):
        assert lc.has_edge(a, b)
    c = _disjoint_five_cycle(cyc + [cyc[0]], 4, lc)
    assert verify_contraction(c, lc).ok
    assert c.triangles == 9


def test_link_cycle_contraction_spends_seventeen_per_edge():
    lc = johnson_link_complex(16, Fraction(1, 4), strict=False)
    v = lc.vertices()[0]
    u = lc.neighbours(v)[0]
    w = next(t for t in lc.neighbours(u) if lc.has_edge(t, v))
    c = link_cycle_contraction((v, u, w, v), lc)
    assert verify_contraction(c, lc).ok
    assert c.triangles == 3 * 17


def test_johnson_link_cone_area():
    lc = johnson_link_complex(16, Fraction(1, 4), strict=False)
    cone, rep = build_johnson_link_cone(lc, samples=30)
    assert rep.ok and rep.area <= LINK_CONE_BOUND
    assert rep.sampled == 30 and rep.sampled_ok
    assert rep.vertices == 1820
    u = cone.base
    assert all(len(p) <= 3 for p in list(cone.paths.values())[:100])
    assert cone.paths[u] == (u,)


def test_johnson_link_cone_needs_room():
    with pytest.raises(ValueError):
        build_johnson_link_cone(johnson_link_complex(8, Fraction(1, 2), strict=False))


@pytest.fixture(scope="module")
def johnson_cone():
    return build_johnson_cone(8, Fraction(1, 2))


def test_johnson_cone_is_valid_and_within_budget(johnson_cone):
    aux, cone, rep = johnson_cone
    assert rep.ok
    assert rep.vertices == 128
    assert rep.area <= rep.budget == 32 * 40
    assert rep.six_cycle_max <= 40
    assert rep.stats.xprime_four_cycle_max <= 4
    assert rep.stats.x_four_cycle_max <= 8
    x = WeightComplex(8, frozenset({4}))
    for e in list(cone.contractions)[:50]:
        c = cone.contraction(*e)
        assert c.start == cone.decoding_cycle(*e)
        assert verify_contraction(c, x).ok


def test_random_six_cycles_meet_isoperimetric_bound(johnson_cone):
    _, cone, rep = johnson_cone
    x = WeightComplex(8, frozenset({4}))
    gens = [g for g in range(256) if bin(g).count("1") == 4]
    rng = random.Random(5)
    cycles = []
    while len(cycles) < 5:
        steps = [rng.choice(gens) for _ in range(5)]
        last = 0
        for s in steps:
            last ^= s
        if bin(last).count("1") != 4:
            continue
        v = rng.choice(x.vertices())
        walk = [v]
        for s in steps + [last]:
            walk.append(walk[-1] ^ s)
        assert walk[-1] == walk[0]
        cycles.append(tuple(walk))
    report = isoperimetric_check(x, cone, cycles, area=rep.area)
    assert report.ok
    assert all(t <= 6 * rep.area for t in report.triangles)


def test_johnson_cone_rejects_non_integer_weight():
    with pytest.raises(ValueError):
        build_johnson_cone(8, Fraction(1, 3))


def test_matrix_link_complex_validation():
    with pytest.raises(ValueError):
        MatrixLinkComplex(17, 4)
    with pytest.raises(ValueError):
        MatrixLinkComplex(16, 8)


def test_matrix_two_path_is_direct_sum_of_halves():
    n = 17
    x = MatrixLinkComplex(n, 8)
    rows = [1 << i for i in range(n)]
    a = BitMatrix(tuple(rows[i] if i < 4 else 0 for i in range(n)), n)
    b = BitMatrix(tuple(rows[i] if 4 <= i < 8 else 0 for i in range(n)), n)
    assert x.is_vertex(a) and x.is_vertex(b)
    p0, mid, p1 = matrix_two_path(a, b)
    assert (p0, p1) == (a, b)
    assert mid == halves(a)[0] + halves(b)[0]
    assert rank(mid) == 4 and is_direct_sum([halves(a)[0], halves(b)[0]])
    assert x.has_edge(a, mid) and x.has_edge(mid, b)
    assert not x.has_edge(a, b)


def test_matrix_link_patterns_within_bounds():
    rep = matrix_link_contraction_patterns(samples=1, seed=0)
    assert rep.ok and not rep.failures
    assert all(t == 3 for t in rep.triangle_cycle_triangles)
    assert max(rep.special_four_cycle_triangles) <= SPECIAL_FOUR_CYCLE_BOUND
    assert max(rep.five_cycle_triangles) <= FIVE_CYCLE_BOUND
    assert max(rep.cycle_triangles) <= MATRIX_CONE_BOUND
    assert len(rep.five_cycle_triangles) == 9


def test_move_constants_exist():
    assert BT_OUT != TR_OUT
