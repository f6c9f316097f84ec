"""Grassmann subposets of F_2^n: links, containment graphs, certification."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .f2core import (
    BudgetExceeded,
    Subspace,
    bits_of,
    enumerate_subspaces,
    gaussian_binomial,
    span,
    vector_str,
    zero_subspace,
)
from .spectral import BipartiteGraph, WeightedGraph, second_eigenvalue

TOL = 1e-9


@dataclass
class GrassmannPoset:
    """Downward-closed family of subspaces with a distribution on the top level."""

    ambient_dim: int
    dim: int
    levels: dict[int, list[Subspace]]
    top_measure: dict[Subspace, Fraction]
    _members: dict[int, set] = field(default_factory=dict, repr=False)
    _link_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._members = {i: set(ws) for i, ws in self.levels.items()}

    def contains(self, w: Subspace) -> bool:
        return w in self._members.get(w.dim, ())

    def level(self, i: int) -> list[Subspace]:
        return self.levels.get(i, [])

    def above(self, w: Subspace, j: int) -> list[Subspace]:
        return [u for u in self.level(j) if w.is_subspace_of(u)]

    def measure(self, i: int) -> dict[Subspace, Fraction]:
        """Marginal of the flag distribution on level ``i``."""
        cache = self._link_cache.setdefault(("measure", i), {})
        if cache:
            return cache
        per_top = gaussian_binomial(self.dim, i)
        out: dict[Subspace, Fraction] = {w: Fraction(0) for w in self.level(i)}
        for top, p in self.top_measure.items():
            for w in subspaces_of(top, i):
                out[w] += p / per_top
        cache.update(out)
        return cache

    def validate(self) -> None:
        """Structural checks: downward closure, purity, measure support, ambient span."""
        for i in range(1, self.dim + 1):
            for w in self.level(i):
                for sub in subspaces_of(w, i - 1):
                    if not self.contains(sub):
                        raise ValueError(f"not downward closed at {w}")
        tops = set(self.level(self.dim))
        if set(self.top_measure) != tops:
            raise ValueError("top measure must be supported exactly on the top level")
        if abs(sum(self.top_measure.values()) - 1) > TOL:
            raise ValueError("top measure must sum to 1")
        for i in range(self.dim):
            for w in self.level(i):
                if not self.above(w, i + 1):
                    raise ValueError(f"{w} is maximal below the top dimension")
        vecs = [b for w in self.level(1) for b in w.basis]
        if span(vecs, self.ambient_dim).dim != self.ambient_dim:
            raise ValueError("level 1 does not span the ambient space")

    def to_json(self) -> dict:
        return {
            "n": self.ambient_dim,
            "d": self.dim,
            "levels": [[[vector_str(b, self.ambient_dim) for b in w.basis] for w in self.level(i)] for i in range(self.dim + 1)],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def subspaces_of(w: Subspace, k: int) -> list[Subspace]:
    """All ``k``-dimensional subspaces of ``w``."""
    basis = w.basis
    out = []
    for coords in enumerate_subspaces(len(basis), k):
        vecs = []
        for c in coords.basis:
            v = 0
            for t in bits_of(c):
                v ^= basis[t]
            vecs.append(v)
        out.append(span(vecs, w.ambient_dim))
    return out


def from_top(n: int, tops: Iterable[Subspace], weights: Mapping[Subspace, Fraction] | None = None) -> GrassmannPoset:
    """Downward closure of a family of equal-dimension subspaces."""
    tops = sorted(set(tops), key=lambda w: w.basis)
    if not tops:
        raise ValueError("need at least one top space")
    d = tops[0].dim
    if any(t.dim != d for t in tops):
        raise ValueError("top spaces must share a dimension")
    levels: dict[int, set] = {i: set() for i in range(d + 1)}
    for t in tops:
        for i in range(d + 1):
            levels[i].update(subspaces_of(t, i))
    if weights is None:
        measure = {t: Fraction(1, len(tops)) for t in tops}
    else:
        total = sum(Fraction(weights[t]) for t in tops)
        measure = {t: Fraction(weights[t]) / total for t in tops}
    ordered = {i: sorted(ws, key=lambda w: w.basis) for i, ws in levels.items()}
    return GrassmannPoset(n, d, ordered, measure)


def complete_grassmann(n: int, d: int) -> GrassmannPoset:
    """All subspaces of ``F_2^n`` of dimension at most ``d``, uniform on the top."""
    if not 0 <= d <= n:
        raise ValueError("need 0 <= d <= n")
    levels = {i: list(enumerate_subspaces(n, i)) for i in range(d + 1)}
    tops = levels[d]
    return GrassmannPoset(n, d, levels, {t: Fraction(1, len(tops)) for t in tops})


# ----------------------------------------------------------------- links


@dataclass(frozen=True)
class LinkGraph:
    base: Subspace
    graph: WeightedGraph
    subspace_graph: WeightedGraph
    lam: float
    subspace_lam: float


def link(y: GrassmannPoset, w: Subspace) -> LinkGraph:
    """Link of ``w``: vectors ``v`` with ``span(v)+w`` in the next level.

    Edge ``{v, v'}`` carries the conditional flag weight of ``span(v, v')+w``
    shared uniformly among the vector pairs spanning it over ``w``.  The
    subspace-vertex form of the link is built alongside and must have the
    same second eigenvalue.
    """
    if not y.contains(w):
        raise ValueError(f"{w} is not in the poset")
    i = w.dim
    if i > y.dim - 2:
        raise ValueError("links are defined for i <= d - 2")
    key = ("link", w)
    if key in y._link_cache:
        return y._link_cache[key]
    meas = y.measure(i + 2)
    up2 = [u for u in y.level(i + 2) if w.is_subspace_of(u)]
    up1 = [u for u in y.level(i + 1) if w.is_subspace_of(u)]
    vertices = sorted({v for u in up1 for v in u.vectors() if not w.contains(v)})
    pairs_per_space = 3 * (1 << i) * (1 << (i + 1)) // 2
    vec_edges = []
    sub_edges = []
    for u in up2:
        weight = float(meas[u])
        outside = [v for v in u.vectors() if not w.contains(v)]
        for a_pos, a in enumerate(outside):
            wa = span(w.basis + (a,), y.ambient_dim)
            for b in outside[a_pos + 1 :]:
                if not wa.contains(b):
                    vec_edges.append((a, b, weight / pairs_per_space))
        mids = [m for m in up1 if m.is_subspace_of(u)]
        for p in range(len(mids)):
            for q in range(p + 1, len(mids)):
                sub_edges.append((mids[p], mids[q], weight / 3))
    graph = WeightedGraph.from_edges(vertices, vec_edges)
    sub_graph = WeightedGraph.from_edges(up1, sub_edges)
    lam, sub_lam = second_eigenvalue(graph), second_eigenvalue(sub_graph)
    if abs(lam - sub_lam) > 1e-7:
        raise AssertionError(f"link forms disagree at {w}: {lam} vs {sub_lam}")
    result = LinkGraph(w, graph, sub_graph, lam, sub_lam)
    y._link_cache[key] = result
    return result


def containment_graph(y: GrassmannPoset, i: int, j: int, w: Subspace | None = None) -> BipartiteGraph:
    """Bipartite inclusion graph between levels ``i`` and ``j`` (above ``w`` if given)."""
    if not i < j:
        raise ValueError("containment graph needs i < j")
    if j > y.dim:
        raise ValueError("level beyond poset dimension")
    base = w if w is not None else zero_subspace(y.ambient_dim)
    k = base.dim
    if i < k:
        raise ValueError("level i must be at least dim(w)")
    lower = [a for a in y.level(i) if base.is_subspace_of(a)]
    upper = [b for b in y.level(j) if base.is_subspace_of(b)]
    if not lower or not upper:
        raise ValueError("level empty")
    meas = y.measure(j)
    per_upper = gaussian_binomial(j - k, i - k)
    lidx = {a: t for t, a in enumerate(lower)}
    edges = []
    for b in upper:
        p = meas[b] / per_upper
        for a in subspaces_of(b, i):
            if a in lidx and base.is_subspace_of(a):
                edges.append((a, b, p))
    return BipartiteGraph.from_edges(lower, upper, edges)


def containment_bound(lam: float, i: int, j: int) -> float:
    """Bipartite expansion bound for the ``(i, j)`` containment graph of a ``lam``-expander."""
    return (0.61 + j * lam) ** ((j - i) / 2)


def composed_walk(y: GrassmannPoset, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Direct ``i -> j`` walk and the product of single-level walks, as dense matrices."""
    direct = containment_graph(y, i, j).left_to_right()
    prod = None
    for t in range(i, j):
        step = containment_graph(y, t, t + 1).left_to_right()
        prod = step if prod is None else prod @ step
    return direct, prod


@dataclass(frozen=True)
class ExpansionReport:
    worst_lambda: float
    witness: Subspace | None
    per_link: tuple[tuple[Subspace, float], ...]
    trivial: bool

    def to_json(self) -> dict:
        return {
            "worst_lambda": self.worst_lambda,
            "witness": str(self.witness),
            "links": len(self.per_link),
            "trivial": self.trivial,
        }


def certify_expansion(y: GrassmannPoset) -> ExpansionReport:
    """Solve every link ``Y_w`` with ``dim w <= d-2``; report the worst eigenvalue."""
    per_link = []
    for i in range(0, y.dim - 1):
        for w in y.level(i):
            per_link.append((w, link(y, w).lam))
    if not per_link:
        return ExpansionReport(0.0, None, (), True)
    witness, worst = max(per_link, key=lambda item: item[1])
    only_empty = all(w.dim == 0 for w, _ in per_link)
    return ExpansionReport(worst, witness, tuple(per_link), only_empty)


# ------------------------------------------------------------- quotients


def _quotient_coords(w: Subspace) -> list[int]:
    pivots = set(w.pivots)
    return [j for j in range(w.ambient_dim) if j not in pivots]


def quotient_vector(w: Subspace, x: int) -> int:
    """Coordinates of ``x + w`` in ``F_2^n / w`` (non-pivot columns of ``w``, compressed)."""
    r = w.reduce(x)
    out = 0
    for t, j in enumerate(_quotient_coords(w)):
        if (r >> j) & 1:
            out |= 1 << t
    return out


def quotient_subspace(w: Subspace, u: Subspace) -> Subspace:
    return span([quotient_vector(w, b) for b in u.basis], w.ambient_dim - w.dim)


def quotient_poset(y: GrassmannPoset, w: Subspace) -> GrassmannPoset:
    """The link of ``w`` as a Grassmann poset over ``F_2^n / w``."""
    if not y.contains(w):
        raise ValueError(f"{w} is not in the poset")
    tops = [t for t in y.level(y.dim) if w.is_subspace_of(t)]
    weights = {quotient_subspace(w, t): y.top_measure[t] for t in tops}
    return from_top(y.ambient_dim - w.dim, weights.keys(), weights)


__all__ = [
    "BudgetExceeded",
    "ExpansionReport",
    "GrassmannPoset",
    "LinkGraph",
    "certify_expansion",
    "complete_grassmann",
    "composed_walk",
    "containment_bound",
    "containment_graph",
    "from_top",
    "link",
    "quotient_poset",
    "quotient_subspace",
    "quotient_vector",
    "subspaces_of",
]
