"""Johnson complexes over F_2^n: face patterns, link tensor structure, Delsarte eigenvalues, certification."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .cayley import CayleyComplex, SimplicialComplex, basify
from .f2core import check_budget, independent, popcount, span
from .spectral import WeightedGraph, second_eigenvalue, spectral_report

# ---------------------------------------------------------------- Johnson graphs


@dataclass(frozen=True)
class JohnsonGraphSpec:
    n: int
    k: int
    l: int

    def __post_init__(self) -> None:
        if not self.n > self.k > self.l >= 0:
            raise ValueError(f"need n > k > l >= 0, got J({self.n},{self.k},{self.l})")


def _subsets(ground: int, size: int) -> list[int]:
    idx = [i for i in range(ground.bit_length()) if (ground >> i) & 1]
    return [sum(1 << i for i in c) for c in itertools.combinations(idx, size)]


def johnson_graph_on(ground: int, k: int, l: int) -> WeightedGraph:
    """``J`` on the ``k``-subsets of the coordinate set ``ground`` (a bitmask), edges at intersection ``l``."""
    verts = _subsets(ground, k)
    index = {v: i for i, v in enumerate(verts)}
    rows, cols = [], []
    for v in verts:
        for w in verts:
            if popcount(v & w) == l and v != w:
                rows.append(index[v])
                cols.append(index[w])
    if not rows:
        raise ValueError("Johnson graph has no edges")
    joint = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(verts), len(verts)))
    return WeightedGraph.from_joint(verts, joint)


def johnson_graph(spec: JohnsonGraphSpec) -> WeightedGraph:
    check_budget(math.comb(spec.n, spec.k) ** 2, f"J({spec.n},{spec.k},{spec.l}) adjacency")
    return johnson_graph_on((1 << spec.n) - 1, spec.k, spec.l)


def _comb(a: int, b: int) -> int:
    return math.comb(a, b) if 0 <= b <= a else 0


def johnson_eigenvalues(spec: JohnsonGraphSpec) -> list[int]:
    """Unnormalized ``λ_0, …, λ_k`` of ``J(n, k, l)`` in closed form (Delsarte)."""
    n, k, l = spec.n, spec.k, spec.l
    if 2 * k > n:
        raise ValueError("closed form assumes n >= 2k")
    out = []
    for t in range(k + 1):
        out.append(
            sum(
                (-1) ** (t - i) * _comb(k - i, l - i) * _comb(n - k + i - t, k - l + i - t) * math.comb(t, i)
                for i in range(t + 1)
            )
        )
    return out


def johnson_lambda(spec: JohnsonGraphSpec) -> Fraction:
    """``max_{t ≥ 1} |λ_t| / λ_0`` as an exact rational."""
    lams = johnson_eigenvalues(spec)
    return max(Fraction(abs(x), lams[0]) for x in lams[1:])


@dataclass(frozen=True)
class SpectrumComparison:
    spec: JohnsonGraphSpec
    closed_form: tuple[float, ...]
    dense: tuple[float, ...]
    max_gap: float
    lam: Fraction

    @property
    def ok(self) -> bool:
        return self.max_gap <= 1e-9


def compare_johnson_spectrum(spec: JohnsonGraphSpec) -> SpectrumComparison:
    """Normalized closed-form eigenvalues against a dense diagonalization (distinct values, sorted)."""
    lams = johnson_eigenvalues(spec)
    closed = sorted({x / lams[0] for x in lams})
    eig = np.linalg.eigvalsh(johnson_graph(spec).symmetric_operator().toarray())
    clusters: list[list[float]] = []
    for x in sorted(float(v) for v in eig):
        if clusters and abs(x - clusters[-1][-1]) <= 1e-7:
            clusters[-1].append(x)
        else:
            clusters.append([x])
    merged = [float(np.mean(c)) for c in clusters]
    gap = max(max(min(abs(a - b) for b in merged) for a in closed), max(min(abs(a - b) for b in closed) for a in merged))
    return SpectrumComparison(spec, tuple(closed), tuple(merged), gap, johnson_lambda(spec))


# --------------------------------------------------------------- Johnson complexes


def _as_fraction(eps) -> Fraction:
    return eps if isinstance(eps, Fraction) else Fraction(eps).limit_denominator(1 << 20)


def _johnson_weight(n: int, eps: Fraction, k: int, strict: bool) -> int:
    if not 0 < eps <= Fraction(1, 2):
        raise ValueError("eps must lie in (0, 1/2]")
    w = eps * n
    if w.denominator != 1:
        raise ValueError("eps*n must be an integer")
    w = int(w)
    need = 1 << k if strict else 1 << (k - 1)
    if w % need:
        raise ValueError("2^k must divide eps*n" if strict else "2^(k-1) must divide eps*n")
    return w


def johnson_link_faces(n: int, w: int, k: int) -> dict[int, list[tuple[int, ...]]]:
    """Faces of the link of 0 up to ``k`` generators: weight-``w`` sets with every subset sum of weight ``w``."""
    gens = _subsets((1 << n) - 1, w)
    check_budget(len(gens) ** 2, "Johnson link pairs")
    levels = {0: [((g,), (g,)) for g in gens]}
    for i in range(1, k):
        nxt = []
        for face, sums in levels[i - 1]:
            for g in gens:
                if g <= face[-1]:
                    continue
                if all(popcount(s ^ g) == w for s in sums):
                    nxt.append((face + (g,), sums + tuple(s ^ g for s in sums) + (g,)))
        check_budget(len(nxt), f"Johnson link level {i}")
        levels[i] = nxt
    return {i: [f for f, _ in fs] for i, fs in levels.items()}


@dataclass(frozen=True)
class JohnsonComplex:
    """``X_{ε,n}`` as a Cayley complex on the even-weight vectors with uniform top faces."""

    n: int
    eps: Fraction
    k: int
    weight: int
    cayley: CayleyComplex

    @property
    def link0(self) -> SimplicialComplex:
        return self.cayley.link0

    def vertices(self) -> list[int]:
        return self.cayley.vertices(component=True)

    def has_face(self, face) -> bool:
        return self.cayley.has_face(face)

    def materialize(self) -> SimplicialComplex:
        return self.cayley.materialize(component=True)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "eps": [self.eps.numerator, self.eps.denominator],
            "k": self.k,
            "link_faces": {str(i): len(self.link0.faces[i]) for i in sorted(self.link0.faces)},
        }


def build_johnson_complex(n: int, eps, k: int, strict: bool = True) -> JohnsonComplex:
    """``X_{ε,n}`` of dimension ``k``.

    ``strict`` enforces ``2^k | εn``; without it the weaker ``2^(k-1) | εn``,
    which is what the face pattern needs for ``k``-faces to exist, is enforced.
    """
    if k < 1:
        raise ValueError("k must be positive")
    eps = _as_fraction(eps)
    w = _johnson_weight(n, eps, k, strict)
    check_budget(1 << (n - 1), "Johnson vertices")
    faces = johnson_link_faces(n, w, k)
    if not faces[k - 1]:
        raise ValueError("no top faces")
    link0 = SimplicialComplex.from_top(faces[k - 1])
    return JohnsonComplex(n, eps, k, w, CayleyComplex(n, link0))


# ------------------------------------------------------------------ face pattern


def _cells(xs: tuple[int, ...], n: int) -> dict[int, int]:
    """``C_B`` as bitmasks: coordinates inside exactly the ``x_i`` with ``i ∈ B``."""
    full = (1 << n) - 1
    out = {}
    for b in range(1 << len(xs)):
        cell = full
        for i, x in enumerate(xs):
            cell &= x if (b >> i) & 1 else full ^ x
        out[b] = cell
    return out


def expected_pattern(n: int, w: int, m: int) -> dict[int, int]:
    big_m = 1 << m
    out = {b: 2 * w // big_m for b in range(1, big_m)}
    out[0] = n - (big_m - 1) * 2 * w // big_m
    return out


def face_pattern(face, x: JohnsonComplex) -> dict[int, int]:
    """Cell sizes ``c_B`` for ``B ⊆ [m]`` (bitmask keys) of an ``(m-1)``-face translated to 0."""
    face = tuple(face)
    if not x.has_face(face):
        raise ValueError(f"{face} is not a face")
    base = face[0]
    xs = tuple(v ^ base for v in face[1:])
    sizes = {b: popcount(c) for b, c in _cells(xs, x.n).items()}
    if sizes != expected_pattern(x.n, x.weight, len(xs)):
        raise AssertionError(f"face {face} has cell sizes {sizes}")
    return sizes


@dataclass(frozen=True)
class PatternAudit:
    m: int
    tuples: int
    faces: int
    pattern_matches: int
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations and self.faces == self.pattern_matches


def face_pattern_audit(x: JohnsonComplex, m: int) -> PatternAudit:
    """Exhaustive both ways: over all ``m``-tuples of distinct nonzero vectors, face iff cell sizes match."""
    n = x.n
    check_budget((1 << n) ** m, "face pattern tuples")
    target = expected_pattern(n, x.weight, m)
    faces = matches = total = 0
    bad = []
    for xs in itertools.combinations(range(1, 1 << n), m):
        total += 1
        is_face = x.link0.contains(xs) if m <= x.k else False
        sizes = {b: popcount(c) for b, c in _cells(xs, n).items()}
        hit = sizes == target
        faces += is_face
        matches += hit
        if is_face != hit and len(bad) < 5:
            bad.append(xs)
    return PatternAudit(m, total, faces, matches, tuple(bad))


def intersection_pattern_check(x: JohnsonComplex) -> bool:
    """Any ``j`` generators of a top link face meet in exactly ``εn / 2^(j-1)`` coordinates."""
    for face in x.link0.level(x.k - 1):
        for j in range(1, len(face) + 1):
            for sub in itertools.combinations(face, j):
                common = (1 << x.n) - 1
                for s in sub:
                    common &= s
                if popcount(common) * (1 << (j - 1)) != x.weight:
                    return False
    return True


# ---------------------------------------------------------------------- links


@dataclass(frozen=True)
class JohnsonLinkReport:
    face: tuple[int, ...]
    m: int
    factors: tuple[tuple[int, int, int], ...]
    vertices: int
    edges: int
    isomorphic: bool
    max_weight_gap: float
    lam: float
    lam_product: float
    lam_formula: Fraction
    bound: Fraction

    @property
    def within_bound(self) -> bool:
        return self.lam <= float(self.bound) + 1e-9

    @property
    def ok(self) -> bool:
        """Isomorphic to the tensor product, with the eigenvalue its factors predict."""
        return self.isomorphic and abs(self.lam - float(self.lam_formula)) <= 1e-9

    def to_json(self) -> dict:
        return {
            "face": list(self.face),
            "m": self.m,
            "factors": [list(f) for f in self.factors],
            "vertices": self.vertices,
            "edges": self.edges,
            "isomorphic": self.isomorphic,
            "max_weight_gap": self.max_weight_gap,
            "lambda": self.lam,
            "lambda_product": self.lam_product,
            "lambda_formula": str(self.lam_formula),
            "bound": str(self.bound),
            "within_bound": self.within_bound,
            "ok": self.ok,
        }


def _product_graph(graphs: list[WeightedGraph]) -> tuple[list[tuple], sp.csr_matrix]:
    verts: list[tuple] = [()]
    joint = sp.csr_matrix(np.ones((1, 1)))
    for g in graphs:
        verts = [a + (b,) for a in verts for b in g.vertices]
        joint = sp.kron(joint, g.joint, format="csr")
    return verts, joint


def johnson_link(face, x: JohnsonComplex) -> JohnsonLinkReport:
    """Link graph of an ``m``-face, built from the complex and from the tensor product of Johnson graphs.

    The map ``φ(y) = (y ∩ C_B)_B`` must be a bijection carrying the link's edge
    distribution exactly onto the product's.
    """
    face = tuple(face)
    m = len(face) - 1
    if m > x.k - 2:
        raise ValueError("links have edges only for m <= k - 2")
    if not x.has_face(face):
        raise ValueError(f"{face} is not a face")
    base = face[0]
    xs = tuple(sorted(v ^ base for v in face[1:]))
    link = (x.link0 if not xs else x.link0.link(xs)).graph()
    big_m = 1 << m
    w = x.weight
    cells = _cells(xs, x.n)
    factors = []
    graphs = []
    for b in range(1, big_m):
        factors.append((popcount(cells[b]), w // big_m, w // (2 * big_m)))
        graphs.append(johnson_graph_on(cells[b], w // big_m, w // (2 * big_m)))
    factors.append((popcount(cells[0]), w // big_m, w // (2 * big_m)))
    graphs.append(johnson_graph_on(cells[0], w // big_m, w // (2 * big_m)))
    verts, joint = _product_graph(graphs)
    order = list(range(1, big_m)) + [0]
    phi = {y: tuple(y & cells[b] for b in order) for y in link.vertices}
    pindex = {v: i for i, v in enumerate(verts)}
    iso = len(set(phi.values())) == len(phi) == len(verts) and all(v in pindex for v in phi.values())
    if iso:
        perm = np.array([pindex[phi[y]] for y in link.vertices])
        moved = joint[perm][:, perm]
        gap = float(abs(moved - link.joint).max()) / float(link.joint.max())
        iso = gap <= 1e-9
    else:
        gap = math.inf
    lam = second_eigenvalue(link)
    lam_prod = second_eigenvalue(WeightedGraph.from_joint(verts, joint))
    formula = max(johnson_lambda(JohnsonGraphSpec(*f)) for f in factors)
    bound = Fraction(1, 2) - x.eps / (1 << (m + 1))
    return JohnsonLinkReport(
        face, m, tuple(factors), len(link.vertices), int(sp.triu(link.joint).nnz), iso, gap, lam, lam_prod, formula, bound
    )


@dataclass(frozen=True)
class JohnsonExpansionReport:
    links: tuple[JohnsonLinkReport, ...]
    skeleton_lambda: float
    skeleton_lambda_dense: float | None
    trickle_bound: float
    remark_bound: float

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.links) and self.skeleton_lambda <= self.trickle_bound + 1e-9

    @property
    def bound_violations(self) -> tuple[int, ...]:
        """Face dimensions ``m`` whose link exceeds ``1/2 - ε/2^(m+1)``."""
        return tuple(r.m for r in self.links if not r.within_bound)

    @property
    def remark_holds(self) -> bool:
        return self.skeleton_lambda <= self.remark_bound + 1e-9

    def to_json(self) -> dict:
        return {
            "links": [r.to_json() for r in self.links],
            "skeleton_lambda": self.skeleton_lambda,
            "skeleton_lambda_dense": self.skeleton_lambda_dense,
            "trickle_bound": self.trickle_bound,
            "one_minus_two_eps": self.remark_bound,
            "one_minus_two_eps_holds": self.remark_holds,
            "bound_violations": list(self.bound_violations),
            "ok": self.ok,
        }


def certify_johnson_expansion(x: JohnsonComplex, dense_limit: int = 4096) -> JohnsonExpansionReport:
    """One link per face dimension ``m ≤ k-2`` (all ``m``-faces are equivalent), then the skeleton.

    Each link must match its tensor decomposition; the level bound
    ``1/2 - ε/2^(m+1)`` is reported per link.  The skeleton is checked
    against the trickle-down bound ``λ/(1-λ)`` of the vertex link; the
    ``1 - 2ε`` form is reported, not asserted.
    """
    links = []
    for m in range(x.k - 1):
        rep = (0,) + (x.link0.level(m - 1)[0] if m else ())
        links.append(johnson_link(rep, x))
    skel = x.cayley.skeleton_lambda()
    dense = None
    if len(x.vertices()) <= dense_limit:
        dense = spectral_report(x.cayley.skeleton_graph(component=True), "dense").lam
    lam0 = links[0].lam if links else 1.0
    bound = lam0 / (1 - lam0) if lam0 < 1 else math.inf
    return JohnsonExpansionReport(tuple(links), skel, dense, bound, float(1 - 2 * x.eps))


# ------------------------------------------------------- Johnson Grassmann posets


@dataclass(frozen=True)
class EquivalenceReport:
    levels: tuple[tuple[int, int, int], ...]
    span_condition_checked: int
    witness: tuple | None

    @property
    def ok(self) -> bool:
        return self.witness is None

    def to_json(self) -> dict:
        return {
            "levels": [list(t) for t in self.levels],
            "span_condition_checked": self.span_condition_checked,
            "witness": list(self.witness) if self.witness else None,
            "ok": self.ok,
        }


def johnson_grassmann_poset(n: int, eps):
    """``Y_{ε,n}``: images of admissible Johnson functions on ``F_2^d`` with ``d = log2(2εn)``."""
    from .hadamard import build_induced_poset, johnson_family

    eps = _as_fraction(eps)
    two_w = 2 * eps * n
    if two_w.denominator != 1 or int(two_w) & (int(two_w) - 1):
        raise ValueError("2*eps*n must be a power of two")
    d = int(two_w).bit_length() - 1
    return build_induced_poset(johnson_family(n), d, 1)


def johnson_grassmann_equivalence(eps, n: int, k: int) -> EquivalenceReport:
    """Faces of ``X_{ε,n}`` at 0 against the basification of ``Y_{ε,n}``, level by level up to ``k``.

    Also checks, over every independent ``j``-set of weight-``εn`` vectors
    (``j ≤ k``), that its span lies in ``Y(j)`` iff every subset sum has
    weight ``εn``.
    """
    x = build_johnson_complex(n, eps, k)
    y_ind = johnson_grassmann_poset(n, eps)
    y = y_ind.grassmann()
    beta = basify(y)
    levels = []
    witness = None
    for i in range(k):
        ours = x.link0.faces[i]
        theirs = beta.faces.get(i, frozenset())
        levels.append((i, len(ours), len(theirs)))
        diff = ours ^ theirs
        if diff and witness is None:
            witness = min(diff)
    checked = 0
    gens = x.link0.vertices()
    for j in range(1, k + 1):
        members = {w for w in y.level(j)}
        for combo in itertools.combinations(gens, j):
            if not independent(combo):
                continue
            checked += 1
            sums_ok = all(
                popcount(_xor(sub)) == x.weight for r in range(1, j + 1) for sub in itertools.combinations(combo, r)
            )
            if sums_ok != (span(combo, n) in members) and witness is None:
                witness = combo
    return EquivalenceReport(tuple(levels), checked, witness)


def _xor(xs) -> int:
    out = 0
    for v in xs:
        out ^= v
    return out


# --------------------------------------------------------- implicit link complex


@dataclass(frozen=True)
class JohnsonLinkComplex:
    """The vertex link of ``X_{ε,n}`` as an implicit 2-complex.

    Vertices are weight-``w`` vectors; ``{u, v}`` is an edge when
    ``wt(u+v) = w`` and a triangle also needs ``wt(u+v+t) = w``.
    """

    n: int
    w: int
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def vertices(self) -> list[int]:
        if "v" not in self._cache:
            self._cache["v"] = _subsets((1 << self.n) - 1, self.w)
        return self._cache["v"]

    def has_edge(self, u: int, v: int) -> bool:
        return u != v and popcount(u ^ v) == self.w and popcount(u) == popcount(v) == self.w

    def has_triangle(self, u: int, v: int, t: int) -> bool:
        return self.has_edge(u, v) and self.has_edge(u, t) and self.has_edge(v, t) and popcount(u ^ v ^ t) == self.w

    def neighbours(self, v: int) -> list[int]:
        key = ("n", v)
        if key not in self._cache:
            half = self.w // 2
            inside = _subsets(v, half)
            outside = _subsets(((1 << self.n) - 1) ^ v, half)
            self._cache[key] = sorted(a | b for a in inside for b in outside)
        return self._cache[key]


def johnson_link_complex(n: int, eps, strict: bool = True) -> JohnsonLinkComplex:
    """Vertex link of the 3-dimensional complex (needs ``8 | εn``, or ``4 | εn`` when not strict)."""
    eps = _as_fraction(eps)
    w = _johnson_weight(n, eps, 3, strict)
    return JohnsonLinkComplex(n, w)


__all__ = [
    "EquivalenceReport",
    "JohnsonComplex",
    "JohnsonExpansionReport",
    "JohnsonGraphSpec",
    "JohnsonLinkComplex",
    "JohnsonLinkReport",
    "PatternAudit",
    "SimplicialComplex",
    "SpectrumComparison",
    "build_johnson_complex",
    "certify_johnson_expansion",
    "compare_johnson_spectrum",
    "expected_pattern",
    "face_pattern",
    "face_pattern_audit",
    "intersection_pattern_check",
    "johnson_eigenvalues",
    "johnson_graph",
    "johnson_graph_on",
    "johnson_grassmann_equivalence",
    "johnson_grassmann_poset",
    "johnson_lambda",
    "johnson_link",
    "johnson_link_complex",
    "johnson_link_faces",
]
