"""Simplicial complexes, basifications of Grassmann posets, Cayley complexes over F_2^n, and the H_G degree bound."""

from __future__ import annotations

import itertools
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .f2core import check_budget, dot, independent, rank_of_rows, span
from .grassmann import GrassmannPoset, certify_expansion
from .spectral import WeightedGraph, second_eigenvalue

Face = tuple


# ------------------------------------------------------------ simplicial complexes


@dataclass(frozen=True)
class SimplicialComplex:
    """Pure complex given by its top faces and a distribution on them.

    ``faces[i]`` holds the sorted ``(i+1)``-tuples; lower levels carry the
    induced weights ``Pr_i(t) = Σ_{s ⊃ t} Pr_k(s) / C(k+1, i+1)``.
    """

    faces: dict[int, frozenset]
    top_weights: dict[Face, float]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_top(cls, tops: Iterable[Sequence[Hashable]], weights: Mapping[Face, float] | None = None) -> SimplicialComplex:
        tops = sorted({tuple(sorted(t)) for t in tops})
        if weights is not None:
            weights = {tuple(sorted(t)): p for t, p in weights.items()}
        if not tops:
            raise ValueError("need at least one top face")
        k = len(tops[0]) - 1
        if any(len(t) != k + 1 for t in tops):
            raise ValueError("top faces must share a dimension")
        faces: dict[int, set] = {i: set() for i in range(k + 1)}
        for t in tops:
            for i in range(k + 1):
                faces[i].update(itertools.combinations(t, i + 1))
        if weights is None:
            tw = {t: 1.0 / len(tops) for t in tops}
        else:
            total = float(sum(weights[t] for t in tops))
            tw = {t: float(weights[t]) / total for t in tops}
        return cls({i: frozenset(f) for i, f in faces.items()}, tw)

    @property
    def dim(self) -> int:
        return max(self.faces)

    def vertices(self) -> list:
        return sorted(v for (v,) in self.faces[0])

    def level(self, i: int) -> list[Face]:
        return sorted(self.faces.get(i, ()))

    def contains(self, face: Iterable) -> bool:
        f = tuple(sorted(face))
        return f in self.faces.get(len(f) - 1, ())

    def weights(self, i: int) -> dict[Face, float]:
        key = ("w", i)
        if key not in self._cache:
            k = self.dim
            per = math.comb(k + 1, i + 1)
            out: dict[Face, float] = defaultdict(float)
            for t, p in self.top_weights.items():
                for sub in itertools.combinations(t, i + 1):
                    out[sub] += p / per
            self._cache[key] = dict(out)
        return self._cache[key]

    def link(self, face: Iterable) -> SimplicialComplex:
        f = set(face)
        tops = {}
        for t, p in self.top_weights.items():
            if f <= set(t):
                tops[tuple(v for v in t if v not in f)] = p
        if not tops:
            raise ValueError(f"{tuple(sorted(f))} is not a face")
        if not next(iter(tops)):
            raise ValueError("the link of a top face is empty")
        return SimplicialComplex.from_top(tops, tops)

    def graph(self) -> WeightedGraph:
        """The 1-skeleton with its induced edge weights."""
        if self.dim < 1:
            raise ValueError("complex has no edges")
        return WeightedGraph.from_edges(self.vertices(), [(a, b, p) for (a, b), p in self.weights(1).items()])

    def link_graph(self, face: Iterable) -> WeightedGraph:
        return self.link(face).graph()

    # 2-complex protocol shared with implicit complexes
    def neighbours(self, v) -> list:
        key = ("adj",)
        if key not in self._cache:
            adj = defaultdict(list)
            for a, b in self.faces.get(1, ()):
                adj[a].append(b)
                adj[b].append(a)
            self._cache[key] = {u: sorted(vs) for u, vs in adj.items()}
        return self._cache[key].get(v, [])

    def has_edge(self, u, v) -> bool:
        return u != v and self.contains((u, v))

    def has_triangle(self, u, v, w) -> bool:
        return len({u, v, w}) == 3 and self.contains((u, v, w))

    def validate(self) -> None:
        k = self.dim
        for i in range(1, k + 1):
            for f in self.faces[i]:
                for sub in itertools.combinations(f, i):
                    if sub not in self.faces[i - 1]:
                        raise ValueError(f"not downward closed at {f}")
        if set(self.top_weights) != set(self.faces[k]):
            raise ValueError("top weights must cover the top faces exactly")

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "faces": {str(i): [list(f) for f in self.level(i)] for i in sorted(self.faces)},
        }


def is_connected_graph(vertices: Sequence, neighbours) -> bool:
    if not vertices:
        return True
    seen = {vertices[0]}
    stack = [vertices[0]]
    while stack:
        for w in neighbours(stack.pop()):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(vertices)


# ------------------------------------------------------------------ basification


def basify(y: GrassmannPoset) -> SimplicialComplex:
    """``β(Y)``: sets of independent vectors spanning a member of ``Y``.

    A top face (a basis of a top space ``W``) carries ``Pr(W)`` divided by the
    number of unordered bases of ``W``.
    """
    d = y.dim
    n_bases = math.prod((1 << d) - (1 << i) for i in range(d)) // math.factorial(d)
    check_budget(len(y.level(d)) * n_bases, "basification top faces")
    tops: dict[Face, float] = {}
    for w, p in y.top_measure.items():
        vecs = w.nonzero_vectors()
        for combo in itertools.combinations(vecs, d):
            if independent(combo):
                tops[combo] = float(p) / n_bases
    return SimplicialComplex.from_top(tops, tops)


# ------------------------------------------------------------------ Cayley complexes


@dataclass(frozen=True)
class CayleyComplex:
    """``Cay(F_2^n, B)``: faces ``{x, x+v_1, …, x+v_i}`` for faces ``{v_1, …, v_i}`` of the vertex link ``B``.

    Stored implicitly; faces are materialized on demand.  The top face
    ``T`` carries ``Σ_{y ∈ T} Pr_B(T - y)`` (up to normalization): pick a base
    vertex uniformly and a link top face from ``B``.
    """

    n: int
    link0: SimplicialComplex
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if any(not 0 < s < (1 << self.n) for s in self.link0.vertices()):
            raise ValueError("link vertices must be nonzero vectors of F_2^n")

    @property
    def generators(self) -> tuple[int, ...]:
        return tuple(self.link0.vertices())

    @property
    def dim(self) -> int:
        return self.link0.dim + 1

    def generated_subspace(self):
        return span(self.generators, self.n)

    def is_connected(self) -> bool:
        return self.generated_subspace().dim == self.n

    def vertices(self, component: bool = False) -> list[int]:
        """``F_2^n``, or only the component of 0 (the span of the generators)."""
        if component:
            sub = self.generated_subspace()
            check_budget(1 << sub.dim, "Cayley vertices")
            return sub.vectors()
        check_budget(1 << self.n, "Cayley vertices")
        return list(range(1 << self.n))

    def neighbours(self, x: int) -> list[int]:
        return [x ^ s for s in self.generators]

    def has_edge(self, u: int, v: int) -> bool:
        return self.has_face((u, v))

    def has_face(self, face: Iterable[int]) -> bool:
        f = list(face)
        if len(set(f)) != len(f):
            return False
        if len(f) == 1:
            return 0 <= f[0] < (1 << self.n)
        base = f[0]
        return self.link0.contains(tuple(sorted(v ^ base for v in f[1:])))

    def has_triangle(self, u: int, v: int, w: int) -> bool:
        return self.has_face((u, v, w))

    def faces(self, i: int, component: bool = True) -> set[Face]:
        verts = self.vertices(component)
        if i == 0:
            return {(x,) for x in verts}
        link_faces = self.link0.level(i - 1)
        check_budget(len(verts) * len(link_faces), f"Cayley {i}-faces")
        out = set()
        for x in verts:
            for t in link_faces:
                out.add(tuple(sorted((x,) + tuple(x ^ s for s in t))))
        return out

    def materialize(self, component: bool = True) -> SimplicialComplex:
        k = self.dim
        lw = self.link0.top_weights
        tops = {}
        for t in self.faces(k, component):
            p = 0.0
            for y in t:
                p += lw.get(tuple(sorted(v ^ y for v in t if v != y)), 0.0)
            tops[t] = p
        return SimplicialComplex.from_top(tops, tops)

    def link_at(self, x: int) -> SimplicialComplex:
        """The vertex link of ``x``: the translate ``x + B``."""
        tw = {tuple(sorted(x ^ s for s in t)): p for t, p in self.link0.top_weights.items()}
        return SimplicialComplex.from_top(tw, tw)

    def generator_weights(self) -> dict[int, float]:
        return {s: p for (s,), p in self.link0.weights(0).items()}

    def skeleton_graph(self, component: bool = True) -> WeightedGraph:
        """``Cay(F_2^n, S)`` with edge ``{x, x+s}`` weighted by the link marginal of ``s``."""
        mu = self.generator_weights()
        verts = self.vertices(component)
        edges = [(x, x ^ s, p) for x in verts for s, p in mu.items() if x < x ^ s]
        return WeightedGraph.from_edges(verts, edges)

    def skeleton_spectrum(self) -> list[float]:
        """Walk eigenvalues ``Σ_s μ(s) (-1)^{<χ,s>}`` on the component of 0, one per character."""
        mu = self.generator_weights()
        sub = self.generated_subspace()
        check_budget(1 << self.n, "characters")
        perp = sub.orthogonal()
        # characters of span(S) are F_2^n / span(S)^perp: one representative per coset
        reps = sorted({perp.reduce(chi) for chi in range(1 << self.n)})
        gens = np.array(list(mu), dtype=np.int64)
        wts = np.array(list(mu.values()))
        out = []
        for chi in reps:
            signs = np.array([1 - 2 * dot(chi, int(s)) for s in gens])
            out.append(float(signs @ wts))
        return out

    def skeleton_lambda(self) -> float:
        """Second eigenvalue of the skeleton walk on the component of 0 (character computation)."""
        spec = sorted(self.skeleton_spectrum(), key=lambda v: -v)
        if len(spec) == 1:
            return 0.0
        return max(abs(v) for v in spec[1:])

    def labeled_link(self) -> LabeledLinkGraph:
        """Link of 0 with edge ``{s_1, s_2}`` labeled ``s_1 + s_2``."""
        labels = {}
        for a, b in self.link0.level(1):
            labels[(a, b)] = a ^ b
        return LabeledLinkGraph(self.generators, labels)


def cayley_from_basification(n: int, b: SimplicialComplex) -> CayleyComplex:
    return CayleyComplex(n, b)


@dataclass(frozen=True)
class BasificationReport:
    poset_lambda: float
    link_lambda: float
    skeleton_lambda: float
    trickle_bound: float
    connected: bool

    @property
    def ok(self) -> bool:
        return (
            self.connected
            and self.link_lambda <= self.poset_lambda + 1e-9
            and self.skeleton_lambda <= self.trickle_bound + 1e-9
        )

    def to_json(self) -> dict:
        return {
            "poset_lambda": self.poset_lambda,
            "link_lambda": self.link_lambda,
            "skeleton_lambda": self.skeleton_lambda,
            "trickle_bound": self.trickle_bound,
            "connected": self.connected,
            "ok": self.ok,
        }


def complex_lambda(b: SimplicialComplex) -> float:
    """Worst link eigenvalue of ``b`` over faces of dimension at most ``dim - 2`` (including the empty face)."""
    worst = second_eigenvalue(b.graph()) if b.dim >= 1 else 0.0
    for i in range(0, b.dim - 1):
        for f in b.level(i):
            worst = max(worst, second_eigenvalue(b.link_graph(f)))
    return worst


def certify_basification(y: GrassmannPoset, x: CayleyComplex) -> BasificationReport:
    """Compare link expansion of ``X = Cay(F_2^n, β(Y))`` with that of ``Y`` and bound the skeleton."""
    poset_lam = certify_expansion(y).worst_lambda
    link_lam = complex_lambda(x.link0)
    connected = x.is_connected()
    skel = x.skeleton_lambda() if connected else 1.0
    bound = link_lam / (1 - link_lam) if link_lam < 1 else math.inf
    return BasificationReport(poset_lam, link_lam, skel, bound, connected)


# ------------------------------------------------------------ labeled links, H_G


@dataclass(frozen=True)
class LabeledLinkGraph:
    """Link graph whose edge ``{u, v}`` carries a vertex label."""

    vertices: tuple
    labels: dict[tuple, Hashable]

    def __post_init__(self) -> None:
        vs = set(self.vertices)
        for (u, v), w in self.labels.items():
            if u not in vs or v not in vs or w not in vs:
                raise ValueError(f"edge ({u}, {v}) -> {w} uses an unknown vertex")

    def label(self, u, v):
        return self.labels.get((u, v), self.labels.get((v, u)))

    def nice_violation(self) -> tuple | None:
        """An edge ``{i, j} -> k`` whose labeled three-cycle is missing, else None."""
        for (i, j), k in self.labels.items():
            if self.label(i, k) != j or self.label(j, k) != i:
                return (i, j, k)
        return None

    @property
    def nice(self) -> bool:
        return self.nice_violation() is None

    def is_connected(self) -> bool:
        adj = defaultdict(list)
        for u, v in self.labels:
            adj[u].append(v)
            adj[v].append(u)
        return is_connected_graph(list(self.vertices), lambda v: adj[v])

    def has_isolated(self) -> bool:
        touched = {u for e in self.labels for u in e}
        return any(v not in touched for v in self.vertices)

    @classmethod
    def from_tsv(cls, text: str) -> LabeledLinkGraph:
        labels = {}
        verts = set()
        for ln, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"line {ln}: expected 'u v label', got {line!r}")
            u, v, w = parts
            labels[(u, v)] = w
            verts.update(parts)
        return cls(tuple(sorted(verts)), labels)

    def to_tsv(self) -> str:
        return "".join(f"{u}\t{v}\t{w}\n" for (u, v), w in sorted(self.labels.items(), key=str))


@dataclass(frozen=True)
class HGMatrix:
    """``H_G`` over GF(2): one row bitmask per labeled edge, columns indexed by ``vertices``."""

    rows: tuple[int, ...]
    vertices: tuple

    @property
    def rank(self) -> int:
        return rank_of_rows(self.rows)

    def kernel_contains(self, column: Sequence[int]) -> bool:
        """Is the 0/1 vector ``column`` (indexed like ``vertices``) in the kernel?"""
        mask = sum(1 << i for i, c in enumerate(column) if c & 1)
        return all(not bin(r & mask).count("1") & 1 for r in self.rows)

    def columns_in_kernel(self, generators: Sequence[int], n: int) -> bool:
        """Are all coordinate columns of the generator matrix ``M_s`` in the kernel?"""
        return all(self.kernel_contains([(g >> j) & 1 for g in generators]) for j in range(n))


def hg_matrix(link: LabeledLinkGraph) -> HGMatrix:
    bad = link.nice_violation()
    if bad is not None:
        raise ValueError(f"link is not nice: edge {bad[:2]} labeled {bad[2]} lacks its labeled three-cycle")
    index = {v: i for i, v in enumerate(link.vertices)}
    rows = []
    for (u, v), w in link.labels.items():
        rows.append((1 << index[u]) ^ (1 << index[v]) ^ (1 << index[w]))
    return HGMatrix(tuple(rows), link.vertices)


def _greedy_rows(h: HGMatrix, connected: bool, adjacency: dict | None = None) -> list[int]:
    """Independent rows chosen so each introduces a new vertex (adjacent to the covered set when ``connected``)."""
    covered = 0
    chosen: list[int] = []
    pivots: dict[int, int] = {}

    def add(row: int) -> bool:
        x = row
        while x:
            top = x.bit_length() - 1
            if top not in pivots:
                pivots[top] = x
                return True
            x ^= pivots[top]
        return False

    rows = sorted(set(h.rows))
    full = (1 << len(h.vertices)) - 1
    touched = 0
    for r in rows:
        touched |= r
    while covered != touched & full:
        pick = None
        for r in rows:
            if r & ~covered and (not connected or not chosen or r & covered):
                pick = r
                break
        if pick is None:
            break
        if not add(pick):
            raise AssertionError("greedy row is dependent although it covers a new vertex")
        chosen.append(pick)
        covered |= pick
    return chosen


@dataclass(frozen=True)
class DegreeBoundReport:
    m: int
    n: int
    rank: int
    bound: int
    greedy_rows: int
    greedy_target: float
    corollary: str
    corollary_bound: float

    @property
    def ok(self) -> bool:
        return self.m >= self.bound and self.greedy_rows >= self.greedy_target and self.m >= self.corollary_bound

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "rank": self.rank,
            "bound": self.bound,
            "greedy_rows": self.greedy_rows,
            "greedy_target": self.greedy_target,
            "corollary": self.corollary,
            "corollary_bound": self.corollary_bound,
            "ok": self.ok,
        }


def degree_lower_bound(link: LabeledLinkGraph, n: int) -> DegreeBoundReport:
    """``m ≥ n + rank(H_G)`` plus the greedy witnesses behind the two corollaries."""
    h = hg_matrix(link)
    m = len(link.vertices)
    r = h.rank
    if link.is_connected():
        rows = _greedy_rows(h, connected=True)
        target = m / 2 - 0.5 if m >= 3 else 0
        corollary, cbound = "connected: m >= 2n - 1", 2 * n - 1
    elif not link.has_isolated():
        rows = _greedy_rows(h, connected=False)
        target = m // 3
        corollary, cbound = "no isolated vertices: m >= 1.5(n - 1)", 1.5 * (n - 1)
    else:
        rows = _greedy_rows(h, connected=False)
        target = 0
        corollary, cbound = "none", 0
    if len(rows) > r:
        raise AssertionError("greedy rows exceed the rank")
    return DegreeBoundReport(m, n, r, n + r, len(rows), target, corollary, cbound)


def complete_generator_complex(n: int) -> CayleyComplex:
    """``Cay(F_2^n, all nonzero)`` with every labeled triangle ``{s_1, s_2}`` (``s_1 ≠ s_2``)."""
    gens = range(1, 1 << n)
    tops = [(a, b) for a, b in itertools.combinations(gens, 2)]
    return CayleyComplex(n, SimplicialComplex.from_top(tops))


def dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True)


__all__ = [
    "BasificationReport",
    "CayleyComplex",
    "DegreeBoundReport",
    "HGMatrix",
    "LabeledLinkGraph",
    "SimplicialComplex",
    "basify",
    "cayley_from_basification",
    "certify_basification",
    "complete_generator_complex",
    "complex_lambda",
    "degree_lower_bound",
    "hg_matrix",
    "is_connected_graph",
]
