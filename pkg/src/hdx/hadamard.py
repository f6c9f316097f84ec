"""Induced Grassmann posets from Hadamard encodings of admissible functions.

An admissible function ``s`` assigns to every nonzero ``v`` in ``F_2^d`` an
element of some ambient ``F_2^N`` (a vector, or a packed ``n x n`` matrix);
its encoding ``s^(x) = sum_{<x,v>=1} s(v)`` is injective and linear, and
the images ``Im(s^)`` over a family of functions are the top spaces of the
induced poset.  A family is stored as an array with one row per function
(column ``v - 1`` holds ``s(v)``) together with a probability per row.

A subspace of the element space is keyed by the sorted tuple of its nonzero
elements.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .f2core import (
    BitMatrix,
    BudgetExceeded,
    Subspace,
    bits_of,
    check_budget,
    col_space,
    dominated_by,
    dot,
    enumerate_rank_r,
    enumerate_subspaces,
    independent,
    popcount,
    rank_of_rows,
    row_space,
    span,
    vector_str,
)
from .grassmann import GrassmannPoset, from_top
from .matrixposet import free_pieces, outer_key
from .spectral import WeightedGraph, second_eigenvalue

SubKey = tuple[int, ...]


# ------------------------------------------------------------ rank families


_GENERIC_RANKS: dict[tuple, dict[int, int]] = {}


def _bfs_ranks(generators: tuple[int, ...], n: int) -> dict[int, int]:
    key = (generators, n)
    if key not in _GENERIC_RANKS:
        check_budget(1 << n, f"rank table over F_2^{n}")
        ranks = {0: 0}
        frontier = [0]
        while frontier:
            nxt = []
            for x in frontier:
                for g in generators:
                    y = x ^ g
                    if y not in ranks:
                        ranks[y] = ranks[x] + 1
                        nxt.append(y)
            frontier = nxt
        _GENERIC_RANKS[key] = ranks
    return _GENERIC_RANKS[key]


@dataclass(frozen=True)
class RankFamily:
    """Generator set ``G`` and its rank function.

    ``johnson``: standard basis of ``F_2^n`` (rank = Hamming weight).
    ``matrix``: rank-one ``n x n`` matrices (rank = matrix rank), elements are packed keys.
    ``generic``: an explicit spanning set of ``F_2^n``, rank by breadth-first search.
    ``complete``: no rank structure; admissible functions have independent images.
    """

    kind: str
    n: int
    generators: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in {"johnson", "matrix", "generic", "complete"}:
            raise ValueError(f"unknown family {self.kind!r}")
        if self.kind == "generic":
            if 0 in self.generators or not self.generators:
                raise ValueError("generators must be nonzero and nonempty")
            if span(self.generators, self.n).dim != self.n:
                raise ValueError("generators must span F_2^n")

    @property
    def bits(self) -> int:
        return self.n * self.n if self.kind == "matrix" else self.n

    def rank(self, x: int) -> int:
        if self.kind == "johnson":
            return popcount(x)
        if self.kind == "matrix":
            mask = (1 << self.n) - 1
            return rank_of_rows((x >> (self.n * i)) & mask for i in range(self.n))
        if self.kind == "generic":
            return _bfs_ranks(self.generators, self.n)[x]
        raise ValueError("the complete family has no rank function")

    def direct(self, xs: Sequence[int]) -> bool:
        total = 0
        for x in xs:
            total ^= x
        return self.rank(total) == sum(self.rank(x) for x in xs)

    def leq(self, x: int, y: int) -> bool:
        return self.rank(y) == self.rank(x) + self.rank(x ^ y)

    def of_rank(self, r: int) -> list[int]:
        if self.kind == "johnson":
            return [sum(1 << i for i in c) for c in itertools.combinations(range(self.n), r)]
        if self.kind == "matrix":
            return sorted(a.key for a in enumerate_rank_r(self.n, r))
        ranks = _bfs_ranks(self.generators, self.n)
        return sorted(x for x, k in ranks.items() if k == r)

    def below(self, y: int, r: int) -> list[int]:
        """Elements ``x <= y`` of rank ``r``."""
        if self.kind == "johnson":
            return [sum(1 << i for i in c) for c in itertools.combinations(bits_of(y), r)]
        if self.kind == "matrix":
            return [a.key for a in dominated_by(BitMatrix.from_key(y, self.n), r)]
        return [x for x in self.of_rank(r) if self.leq(x, y)]

    def lower_bounds(self, xs: Sequence[int]) -> list[int]:
        """Common lower bounds of all of ``xs``."""
        first = min(xs, key=self.rank)
        out = []
        for r in range(self.rank(first) + 1):
            out += [c for c in self.below(first, r) if all(self.leq(c, x) for x in xs)]
        return out

    def meet(self, xs: Sequence[int]) -> int | None:
        """Greatest common lower bound, or None when it does not exist."""
        if self.kind == "johnson":
            out = xs[0]
            for x in xs[1:]:
                out &= x
            return out
        lows = self.lower_bounds(xs)
        top = [m for m in lows if all(self.leq(v, m) for v in lows)]
        return top[0] if top else None

    def label(self, x: int) -> str:
        if self.kind == "matrix":
            return BitMatrix.from_key(x, self.n).to_hex()
        return vector_str(x, self.n)


def johnson_family(n: int) -> RankFamily:
    return RankFamily("johnson", n)


def matrix_family(n: int) -> RankFamily:
    if n > 8:
        raise ValueError("matrix families use 64-bit keys: n <= 8")
    return RankFamily("matrix", n)


def generic_family(generators: Iterable[int], n: int) -> RankFamily:
    return RankFamily("generic", n, tuple(sorted(set(generators))))


def complete_family(n: int) -> RankFamily:
    return RankFamily("complete", n)


# --------------------------------------------------------- direct-meet tools


def is_k_admissible(family: RankFamily, k: int) -> bool:
    """Every element of rank at most ``k`` extends directly to rank exactly ``k``."""
    ranks = _bfs_ranks(family.generators, family.n) if family.kind == "generic" else None
    elems = list(ranks) if ranks is not None else [x for x in range(1 << family.bits)]
    check_budget(len(elems) ** 2, "k-admissibility pairs")
    by_rank = defaultdict(list)
    for x in elems:
        by_rank[family.rank(x)].append(x)
    for v in elems:
        rv = family.rank(v)
        if rv > k:
            continue
        if not any(family.rank(v ^ u) == k for u in by_rank.get(k - rv, [])):
            return False
    return True


def direct_meet_witness(family: RankFamily, w1: int, w2: int, w3: int) -> int | None:
    """For a direct triple, an element below ``w1+w2`` and ``w1+w3`` but not below ``w1``.

    Returns None when ``w1`` is the meet, as the direct-meet property requires.
    """
    if not family.direct([w1, w2, w3]):
        raise ValueError("triple is not a direct sum")
    for c in family.lower_bounds([w1 ^ w2, w1 ^ w3]):
        if not family.leq(c, w1):
            return c
    return None


def check_direct_meet(family: RankFamily, triples: Iterable[tuple[int, int, int]] | None = None):
    """First direct triple violating the direct-meet property, as ``(w1, w2, w3, witness)``, else None.

    Without ``triples`` every direct triple of nonzero elements is examined.
    """
    if triples is None:
        check_budget((1 << family.bits) ** 3, "direct-meet triples")
        elems = range(1, 1 << family.bits)
        triples = ((a, b, c) for a in elems for b in elems for c in elems if family.direct([a, b, c]))
    for w1, w2, w3 in triples:
        wit = direct_meet_witness(family, w1, w2, w3)
        if wit is not None:
            return (w1, w2, w3, wit)
    return None


# ------------------------------------------------------- admissible functions


@dataclass(frozen=True)
class AdmissibleFunction:
    """``values[v - 1] = s(v)`` for nonzero ``v`` in ``F_2^d``."""

    d: int
    values: tuple[int, ...]
    family: RankFamily

    def __post_init__(self) -> None:
        if len(self.values) != (1 << self.d) - 1:
            raise ValueError("need one value per nonzero vector of F_2^d")

    def __call__(self, v: int) -> int:
        return self.values[v - 1]

    @property
    def total(self) -> int:
        """The direct sum ``M_s`` of all values."""
        out = 0
        for x in self.values:
            out ^= x
        return out

    def value_rank(self) -> int | None:
        ranks = {self.family.rank(x) for x in self.values}
        return ranks.pop() if len(ranks) == 1 else None

    def is_admissible(self) -> bool:
        if not self.values:
            return True
        if self.family.kind == "complete":
            return independent(self.values)
        return self.value_rank() is not None and self.family.direct(list(self.values))

    def image(self) -> SubKey:
        return tuple(sorted(hadamard_encode(self, x) for x in range(1, 1 << self.d)))

    def to_json(self) -> dict:
        return {vector_str(v, self.d): self.family.label(self(v)) for v in range(1, 1 << self.d)}


def hadamard_encode(s: AdmissibleFunction, x: int) -> int:
    """``s^(x)``: the sum of ``s(v)`` over ``v`` with ``<x, v> = 1``."""
    out = 0
    for v in range(1, 1 << s.d):
        if dot(x, v):
            out ^= s(v)
    return out


def _restrict(x: int, coords: Sequence[int]) -> int:
    return sum(((x >> j) & 1) << t for t, j in enumerate(coords))


def _quotient_coords(v: Subspace) -> list[int]:
    piv = set(v.pivots)
    return [j for j in range(v.ambient_dim) if j not in piv]


def derive_skeleton_function(s: AdmissibleFunction, v: Subspace) -> AdmissibleFunction:
    """``s_V`` on the nonzero cosets of ``V``: ``s_V(v + V) = sum_{v' in v + V} s(v')``.

    Cosets are indexed by the non-pivot coordinates of their reduced
    representative, which identifies ``F_2^d / V`` with ``F_2^i``; under the
    same coordinates ``x`` in ``V^perp`` pairs with cosets by restriction, so
    ``s_V^(restrict(x)) = s^(x)``.
    """
    if v.ambient_dim != s.d:
        raise ValueError("V must live in the domain of s")
    coords = _quotient_coords(v)
    i = len(coords)
    vals = [0] * ((1 << i) - 1)
    for u in range(1, 1 << s.d):
        q = _restrict(v.reduce(u), coords)
        if q:
            vals[q - 1] ^= s(u)
    out = AdmissibleFunction(i, tuple(vals), s.family)
    if not out.is_admissible():
        raise ValueError("derived function is not admissible; the family is not rank-based")
    for x in v.orthogonal().vectors():
        if hadamard_encode(out, _restrict(x, coords)) != hadamard_encode(s, x):
            raise AssertionError("skeleton encoding disagrees on V-perp")
    return out


# ------------------------------------------------------- function enumeration


def _johnson_functions(n: int, count: int, r: int) -> np.ndarray:
    out: list[tuple[int, ...]] = []

    def extend(prefix: tuple[int, ...], used: int) -> None:
        if len(prefix) == count:
            out.append(prefix)
            return
        free = [i for i in range(n) if not (used >> i) & 1]
        for c in itertools.combinations(free, r):
            x = sum(1 << i for i in c)
            extend(prefix + (x,), used | x)

    total = 1
    for t in range(count):
        total *= math.comb(n - t * r, r)
    check_budget(total, f"johnson admissible functions ({count} values of weight {r} in [{n}])")
    extend((), 0)
    return np.array(out, dtype=np.uint64).reshape(-1, count)


def _matrix_functions(n: int, count: int, r: int) -> np.ndarray:
    chunks = list(free_pieces(n, (r,) * count))
    if not chunks:
        return np.zeros((0, count), dtype=np.uint64)
    arr = np.concatenate(chunks)
    return np.unique(arr, axis=0) if r > 1 else arr


def _generic_functions(family: RankFamily, count: int, r: int) -> np.ndarray:
    elems = family.of_rank(r)
    check_budget(len(elems) ** count, "generic admissible functions")
    out = []

    def extend(prefix: tuple[int, ...], total: int, rank_sum: int) -> None:
        if len(prefix) == count:
            out.append(prefix)
            return
        for x in elems:
            if family.rank(total ^ x) == rank_sum + r:
                extend(prefix + (x,), total ^ x, rank_sum + r)

    extend((), 0, 0)
    return np.array(out, dtype=np.uint64).reshape(-1, count)


def _complete_functions(n: int, count: int) -> np.ndarray:
    from .f2core import count_independent_tuples, independent_tuples

    check_budget(count_independent_tuples(n, count), "independent tuples")
    return np.array(list(independent_tuples(n, count)), dtype=np.uint64).reshape(-1, count)


def enumerate_functions(family: RankFamily, d: int, r: int = 1) -> np.ndarray:
    """All admissible functions on ``F_2^d`` with values of rank ``r``, one per row."""
    count = (1 << d) - 1
    if family.kind == "johnson":
        return _johnson_functions(family.n, count, r)
    if family.kind == "matrix":
        return _matrix_functions(family.n, count, r)
    if family.kind == "generic":
        return _generic_functions(family, count, r)
    return _complete_functions(family.n, count)


def encode_all(functions: np.ndarray, d: int) -> np.ndarray:
    """Row-wise encodings: column ``x - 1`` holds ``s^(x)``."""
    out = np.zeros_like(functions)
    for x in range(1, 1 << d):
        for v in range(1, 1 << d):
            if dot(x, v):
                out[:, x - 1] ^= functions[:, v - 1]
    return out


# ------------------------------------------------------------- the poset


def subkey(w: Subspace | Iterable[int]) -> SubKey:
    if isinstance(w, Subspace):
        return tuple(sorted(w.nonzero_vectors()))
    vecs = sorted(set(int(x) for x in w) - {0})
    return tuple(sorted(span(vecs, 64).nonzero_vectors()))


def _dim_of(key: SubKey) -> int:
    return (len(key) + 1).bit_length() - 1


@dataclass
class InducedPoset:
    """The poset of images ``Im(s^)`` with the measure induced by a density on functions."""

    family: RankFamily
    d: int
    r: int
    functions: np.ndarray
    weights: np.ndarray
    measured: bool = False
    base: GrassmannPoset | None = None
    _images: np.ndarray | None = field(default=None, repr=False)
    _levels: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return len(self.functions)

    def images(self) -> np.ndarray:
        if self._images is None:
            self._images = encode_all(self.functions, self.d)
        return self._images

    def function(self, row: int) -> AdmissibleFunction:
        return AdmissibleFunction(self.d, tuple(int(x) for x in self.functions[row]), self.family)

    def _level_rows(self, i: int) -> dict[SubKey, float]:
        imgs = self.images()
        out: dict[SubKey, float] = defaultdict(float)
        per = len(list(enumerate_subspaces(self.d, i)))
        for u in enumerate_subspaces(self.d, i):
            cols = [x - 1 for x in u.nonzero_vectors()]
            if not cols:
                out[()] = 1.0
                return out
            sub = np.sort(imgs[:, cols], axis=1)
            keys, inverse = np.unique(sub, axis=0, return_inverse=True)
            mass = np.bincount(inverse.ravel(), weights=self.weights, minlength=len(keys)) / per
            for k, p in zip(keys, mass):
                out[tuple(int(x) for x in k)] += float(p)
        return out

    def level_measure(self, i: int) -> dict[SubKey, float]:
        """Level ``i`` (downward closure of the images) with its flag marginal."""
        if i not in self._levels:
            if not 0 <= i <= self.d:
                raise ValueError("level outside 0..d")
            self._levels[i] = dict(self._level_rows(i))
        return self._levels[i]

    def level(self, i: int) -> set[SubKey]:
        return set(self.level_measure(i))

    def top_measure(self) -> dict[SubKey, float]:
        return self.level_measure(self.d)

    def contains(self, w: SubKey) -> bool:
        return w in self.level_measure(_dim_of(w))

    def level_from_functions(self, i: int) -> set[SubKey]:
        """``{Im(s'^) : s' in S_i}`` from the level-``i`` admissible functions directly."""
        if i == 0:
            return {()}
        funcs = enumerate_functions(self.family, i, self.r << (self.d - i))
        if self.base is not None:
            funcs = funcs[_sparsified_mask(funcs, self.family.n, self.base, (1 << self.d) - (1 << (self.d - i)))]
        imgs = np.sort(encode_all(funcs, i), axis=1)
        return {tuple(int(x) for x in row) for row in np.unique(imgs, axis=0)}

    def grassmann(self) -> GrassmannPoset:
        """As a ``GrassmannPoset`` over ``F_2^bits`` (small posets only)."""
        tops = self.top_measure()
        check_budget(len(tops) * (1 << self.d), "grassmann conversion")
        weights = {span(k, self.family.bits): Fraction(p).limit_denominator(1 << 40) for k, p in tops.items()}
        return from_top(self.family.bits, weights.keys(), weights)


def build_induced_poset(
    family: RankFamily, d: int, r: int = 1, density: Callable[[np.ndarray], np.ndarray] | None = None
) -> InducedPoset:
    """Enumerate the admissible functions of ``family`` and take images.

    ``density`` maps the function array to nonnegative weights (the measured
    variant); it must be invariant under permuting the domain.
    """
    if d < 1:
        raise ValueError("d must be positive")
    funcs = enumerate_functions(family, d, r)
    if not len(funcs):
        raise ValueError("no admissible functions for these parameters")
    if density is None:
        weights = np.full(len(funcs), 1.0 / len(funcs))
        measured = False
    else:
        weights = np.asarray(density(funcs), dtype=float)
        weights = weights / weights.sum()
        measured = True
    return InducedPoset(family, d, r, funcs, weights, measured)


# ----------------------------------------------------------------- SP operator


def _matrix_spaces(keys: np.ndarray, n: int) -> tuple[dict[int, Subspace], dict[int, Subspace]]:
    rows_of, cols_of = {}, {}
    for k in np.unique(keys):
        m = BitMatrix.from_key(int(k), n)
        rows_of[int(k)], cols_of[int(k)] = row_space(m), col_space(m)
    return rows_of, cols_of


def _sparsified_mask(funcs: np.ndarray, n: int, base: GrassmannPoset, dim: int) -> np.ndarray:
    totals = np.bitwise_xor.reduce(funcs, axis=1)
    rows_of, cols_of = _matrix_spaces(totals, n)
    ok = {k for k in rows_of if base.contains(rows_of[k]) and base.contains(cols_of[k]) and rows_of[k].dim == dim}
    return np.array([int(t) in ok for t in totals], dtype=bool)


def sp_operator(y0: GrassmannPoset, d_prime: int) -> InducedPoset:
    """The sparsified matrix poset built from ``y0``.

    Top spaces are images of rank-one functions on ``F_2^{d'}`` whose total
    has row and column spaces in ``y0(2^{d'} - 1)``.  A function's weight is
    ``Pr(row) Pr(col)`` under the level-``(2^{d'}-1)`` flag marginal of ``y0``,
    shared uniformly among functions with that row and column space.
    """
    d = 1 << d_prime
    if y0.dim != d:
        raise ValueError(f"y0 must have dimension 2^d' = {d}")
    n = y0.ambient_dim
    family = matrix_family(n)
    funcs = _matrix_functions(n, d - 1, 1)
    totals = np.bitwise_xor.reduce(funcs, axis=1)
    rows_of, cols_of = _matrix_spaces(totals, n)
    marginal = y0.measure(d - 1)
    pair_of = {}
    for k in rows_of:
        r, c = rows_of[k], cols_of[k]
        pair_of[k] = (r, c) if r in marginal and c in marginal else None
    keep = np.array([pair_of[int(t)] is not None for t in totals], dtype=bool)
    funcs, totals = funcs[keep], totals[keep]
    per_total = Counter(int(t) for t in totals)
    counts = Counter()
    for t, c in per_total.items():
        counts[pair_of[t]] += c
    weight_of = {t: float(marginal[pair_of[t][0]] * marginal[pair_of[t][1]]) / counts[pair_of[t]] for t in per_total}
    weights = np.array([weight_of[int(t)] for t in totals])
    weights /= weights.sum()
    return InducedPoset(family, d_prime, 1, funcs, weights, measured=True, base=y0)


# ------------------------------------------------------- image sets, psi


@dataclass(frozen=True)
class ImageSet:
    elements: tuple[int, ...]
    total: int
    representatives: int


def _representatives(y: InducedPoset, w: SubKey, limit: int) -> list[tuple[int, Subspace]]:
    i = _dim_of(w)
    imgs = y.images()
    target = np.array(w, dtype=np.uint64)
    found = []
    for u in enumerate_subspaces(y.d, i):
        cols = [x - 1 for x in u.nonzero_vectors()]
        if cols:
            hit = np.nonzero(np.all(np.sort(imgs[:, cols], axis=1) == target, axis=1))[0]
        else:
            hit = np.arange(len(imgs))
        found += [(int(row), u) for row in hit[:limit]]
        if len(found) >= limit:
            break
    return found[:limit]


def image_set(w: SubKey | Subspace, y: InducedPoset, limit: int = 16) -> ImageSet:
    """``Q_W``: the values of ``s_V`` for any ``s`` and ``V = U^perp`` with ``s^(U) = W``.

    Computed from up to ``limit`` representatives; all must agree.  The least
    representative (lexicographic value table) is listed first.
    """
    w = subkey(w) if isinstance(w, Subspace) else tuple(w)
    reps = _representatives(y, w, limit)
    if not reps:
        raise ValueError("W is not in the poset")
    reps.sort(key=lambda ru: tuple(int(x) for x in y.functions[ru[0]]))
    sets = set()
    for row, u in reps:
        s_v = derive_skeleton_function(y.function(row), u.orthogonal())
        sets.add(tuple(sorted(s_v.values)))
    if len(sets) != 1:
        raise AssertionError(f"representatives of W disagree on the image set: {sorted(sets)}")
    elems = sets.pop()
    total = 0
    for z in elems:
        total ^= z
    return ImageSet(elems, total, len(reps))


def unique_decomposition(y_elem: int, w: SubKey | Subspace, y: InducedPoset) -> list[int] | None:
    """``[y_1, ..., y_{2^i}]`` with ``y_j = Meet(y, z_j)`` and ``y_{2^i}`` direct with ``z_W``.

    None when no decomposition with the required properties exists.
    """
    fam = y.family
    q = image_set(w, y) if w else ImageSet((), 0, 0)
    parts = []
    for z in q.elements:
        m = fam.meet([y_elem, z])
        if m is None:
            return None
        parts.append(m)
    rest = y_elem
    for p in parts:
        rest ^= p
    parts.append(rest)
    ranks = {fam.rank(p) for p in parts}
    if len(ranks) != 1 or 0 in ranks:
        return None
    if not fam.direct(parts):
        return None
    if any(not fam.leq(p, z) or 2 * fam.rank(p) != fam.rank(z) for p, z in zip(parts, q.elements)):
        return None
    if not fam.direct([rest, q.total]):
        return None
    return parts


# ------------------------------------------------------------ component graphs


def link_graph(y: InducedPoset, w: SubKey | Subspace) -> WeightedGraph:
    """Link of ``W``: vertices ``y`` with ``W + span(y)`` in level ``i+1``.

    A function ``s`` with ``s^(U) = W`` contributes its weight, spread evenly
    over ordered pairs ``(x, x')`` with ``U + span(x, x')`` of dimension
    ``i + 2``, to the edge ``{s^(x), s^(x')}``.  This is the flag distribution
    of the poset conditioned on ``W``.
    """
    w = subkey(w) if isinstance(w, Subspace) else tuple(w)
    i = _dim_of(w)
    if i > y.d - 2:
        raise ValueError("links have edges only for dim W <= d - 2")
    imgs = y.images()
    target = np.array(w, dtype=np.uint64)
    blocks = []
    for u in enumerate_subspaces(y.d, i):
        cols = [x - 1 for x in u.nonzero_vectors()]
        rows = (
            np.nonzero(np.all(np.sort(imgs[:, cols], axis=1) == target, axis=1))[0] if cols else np.arange(len(imgs))
        )
        if len(rows):
            pairs = [
                (x, x2)
                for x in range(1, 1 << y.d)
                if not u.contains(x)
                for x2 in range(1, 1 << y.d)
                if not (u + span([x], y.d)).contains(x2)
            ]
            blocks.append((rows, pairs))
    if not blocks:
        raise ValueError("W is not in the poset")
    verts = np.unique(np.concatenate([imgs[rows][:, [x - 1 for x, _ in pairs]].ravel() for rows, pairs in blocks]))
    total = sp.csr_matrix((len(verts), len(verts)))
    for rows, pairs in blocks:
        wts = y.weights[rows] / len(pairs)
        for x, x2 in pairs:
            a = np.searchsorted(verts, imgs[rows, x - 1])
            b = np.searchsorted(verts, imgs[rows, x2 - 1])
            total = total + sp.coo_matrix((wts, (a, b)), shape=total.shape).tocsr()
    return WeightedGraph.from_joint([int(v) for v in verts], total + total.T)


def t_graph(family: RankFamily, z: int) -> WeightedGraph:
    """``T^z``: uniform ordered decompositions ``z = w1+w2+w3+w4`` into rank ``m`` parts, step ``(w1+w2, w1+w3)``."""
    k = family.rank(z)
    if k % 4 or k == 0:
        raise ValueError("T^z needs rank(z) = 4m with m > 0")
    m = k // 4
    verts = sorted(family.below(z, 2 * m))
    index = {v: t for t, v in enumerate(verts)}
    rows, cols = [], []
    for w1 in family.below(z, m):
        for w2 in family.below(z ^ w1, m):
            for w3 in family.below(z ^ w1 ^ w2, m):
                rows.append(index[w1 ^ w2])
                cols.append(index[w1 ^ w3])
    joint = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(verts), len(verts)))
    return WeightedGraph.from_joint(verts, joint + joint.T)


def h_graph(y: InducedPoset, z: int, m: int) -> WeightedGraph:
    """``H_{z,m}`` with the weights of ``y``'s function density.

    Sample ``s`` conditioned on ``t = M_s >= z``, then a uniformly random
    ordered direct triple ``w1, w2, w3`` of rank ``m`` below ``t - z``, and
    step ``w1 + w2 -> w1 + w3``.
    """
    fam = y.family
    totals = np.bitwise_xor.reduce(y.functions, axis=1)
    mass: dict[int, float] = defaultdict(float)
    for t, p in zip(totals, y.weights):
        t = int(t)
        if fam.leq(z, t) if z else True:
            mass[t] += float(p)
    if not mass:
        raise ValueError("no function dominates z")
    verts = sorted(v for v in fam.of_rank(2 * m) if fam.direct([v, z]))
    index = {v: t for t, v in enumerate(verts)}
    rows, cols, vals = [], [], []
    for t, p in mass.items():
        rest = t ^ z
        triples = [
            (w1, w2, w3)
            for w1 in fam.below(rest, m)
            for w2 in fam.below(rest ^ w1, m)
            for w3 in fam.below(rest ^ w1 ^ w2, m)
        ]
        for w1, w2, w3 in triples:
            rows.append(index[w1 ^ w2]), cols.append(index[w1 ^ w3]), vals.append(p / len(triples))
    joint = sp.coo_matrix((vals, (rows, cols)), shape=(len(verts), len(verts)))
    return WeightedGraph.from_joint(verts, joint + joint.T)


def _extensions_mod(n: int, count: int, base: Subspace) -> list[tuple[int, ...]]:
    out = []

    def extend(prefix: tuple[int, ...], cur: Subspace) -> None:
        if len(prefix) == count:
            out.append(prefix)
            return
        for v in range(1, 1 << n):
            if not cur.contains(v):
                extend(prefix + (v,), cur + span([v], n))

    extend((), base)
    return out


def _side_weights(n: int, base: Subspace, y0: GrassmannPoset) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """Triples extending ``base`` and the weight ``sum_{x4} Pr(top) / N(top)`` of each.

    ``Pr`` is ``y0``'s top distribution conditioned on containing ``base`` and
    ``N(top)`` counts the ordered 4-tuples extending ``base`` onto ``top``.
    """
    tops = {t: p for t, p in y0.top_measure.items() if base.is_subspace_of(t)}
    if not tops:
        raise ValueError("no top space contains the base")
    triples = _extensions_mod(n, 3, base)
    per_triple: list[list[Subspace]] = []
    n_top: Counter = Counter()
    for tri in triples:
        cur = base + span(tri, n)
        hits = []
        for x4 in range(1, 1 << n):
            if not cur.contains(x4):
                top = cur + span([x4], n)
                if top in tops:
                    hits.append(top)
                    n_top[top] += 1
        per_triple.append(hits)
    weights = np.array([sum(float(tops[t]) / n_top[t] for t in hits) for hits in per_triple])
    return triples, weights


def build_L_graph(y0: GrassmannPoset, w: Sequence[int] | SubKey) -> WeightedGraph:
    """Sparsified link graph ``L_{Y,W}`` for rank-one pieces (``m = 1``).

    Sample ``w1`` and ``w2`` from the tops of ``y0`` over ``row(Z_W)`` and
    ``col(Z_W)``, a uniform ``U`` completing ``Z_W`` onto them, and a
    ``T^U`` step.  With ``m = 1`` a pair ``(U, decomposition)`` is an ordered
    4-tuple of rank-one matrices ``x_t (x) y_t``, so the weight of a step
    factors into a column term and a row term, each summed over the
    unobserved fourth factor.
    """
    n = y0.ambient_dim
    d = y0.dim
    w = tuple(int(x) for x in w)
    ell = _dim_of(w) if w else 0
    if d % (1 << (ell + 2)):
        raise ValueError(f"m = d / 2^(l+2) = {d}/{1 << (ell + 2)} is not an integer; the link has no edges")
    if d >> (ell + 2) != 1:
        raise BudgetExceeded("build_L_graph enumerates rank-one pieces only (m = 1)")
    mats = [BitMatrix.from_key(x, n) for x in w]
    row_z = span([b for m_ in mats for b in row_space(m_).basis], n)
    col_z = span([b for m_ in mats for b in col_space(m_).basis], n)
    cols, a_w = _side_weights(n, col_z, y0)
    rows, b_w = _side_weights(n, row_z, y0)
    check_budget(len(cols) * len(rows), "L-graph witness pairs")
    f_arr = np.array(rows, dtype=np.uint64)
    mult = np.array([sum(1 << (n * i) for i in bits_of(e)) for e in range(1 << n)], dtype=np.uint64)
    chunks = []
    for (e1, e2, e3), a in zip(cols, a_w):
        p1 = f_arr[:, 0] * mult[e1]
        left = p1 ^ (f_arr[:, 1] * mult[e2])
        right = p1 ^ (f_arr[:, 2] * mult[e3])
        chunks.append((left, right, a * b_w))
    verts = np.unique(np.concatenate([c[0] for c in chunks]))
    total = sp.csr_matrix((len(verts), len(verts)))
    batch = []
    for k, (left, right, wts) in enumerate(chunks):
        batch.append((np.searchsorted(verts, left), np.searchsorted(verts, right), wts))
        if len(batch) == 64 or k == len(chunks) - 1:
            a = np.concatenate([b[0] for b in batch])
            b = np.concatenate([b[1] for b in batch])
            v = np.concatenate([b_[2] for b_ in batch])
            total = total + sp.coo_matrix((v, (a, b)), shape=total.shape).tocsr()
            batch = []
    return WeightedGraph.from_joint([int(v) for v in verts], total + total.T)


def l_vertices(y0: GrassmannPoset, w: Sequence[int], rank_: int) -> list[int]:
    """Rank-``rank_`` matrices direct with ``Z_W`` whose row and column sums with it lie in ``y0``."""
    n = y0.ambient_dim
    mats = [BitMatrix.from_key(int(x), n) for x in w]
    row_z = span([b for m_ in mats for b in row_space(m_).basis], n)
    col_z = span([b for m_ in mats for b in col_space(m_).basis], n)
    out = []
    for a in enumerate_rank_r(n, rank_):
        r, c = row_space(a), col_space(a)
        rs, cs = r + row_z, c + col_z
        if rs.dim == r.dim + row_z.dim and cs.dim == c.dim + col_z.dim and y0.contains(rs) and y0.contains(cs):
            out.append(a.key)
    return sorted(out)


# ---------------------------------------------------------- decomposition check


@dataclass(frozen=True)
class DecompositionReport:
    w: SubKey
    dim: int
    factors: tuple[str, ...]
    link_vertices: int
    product_vertices: int
    bijective: bool
    link_edges: int
    product_edges: int
    max_weight_gap: float
    lam_link: float | None
    lam_product: float | None
    degenerate: bool

    @property
    def ok(self) -> bool:
        return self.bijective and (self.degenerate or self.max_weight_gap <= 1e-9)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "factors": list(self.factors),
            "link_vertices": self.link_vertices,
            "product_vertices": self.product_vertices,
            "bijective": self.bijective,
            "link_edges": self.link_edges,
            "product_edges": self.product_edges,
            "max_weight_gap": self.max_weight_gap,
            "lam_link": self.lam_link,
            "lam_product": self.lam_product,
            "degenerate": self.degenerate,
            "ok": self.ok,
        }


def _product(graphs: Sequence[WeightedGraph]) -> tuple[list[tuple], sp.csr_matrix]:
    verts: list[tuple] = [()]
    joint = sp.csr_matrix(np.ones((1, 1)))
    for g in graphs:
        verts = [a + (b,) for a in verts for b in g.vertices]
        joint = sp.kron(joint, g.joint, format="csr")
    return verts, joint


def _link_vertex_set(y: InducedPoset, w: SubKey) -> set[int]:
    i = _dim_of(w)
    imgs = y.images()
    target = np.array(w, dtype=np.uint64)
    out: set[int] = set()
    for u in enumerate_subspaces(y.d, i):
        cols = [x - 1 for x in u.nonzero_vectors()]
        rows = np.nonzero(np.all(np.sort(imgs[:, cols], axis=1) == target, axis=1))[0] if cols else np.arange(len(imgs))
        outside = [x - 1 for x in range(1, 1 << y.d) if not u.contains(x)]
        if len(rows):
            out.update(int(v) for v in np.unique(imgs[rows][:, outside]))
    return out


def link_decomposition_check(y: InducedPoset, w: SubKey | Subspace) -> DecompositionReport:
    """Compare the link of ``W`` with ``T^{z_1} x ... x T^{z_{2^i-1}} x H`` through ``psi``.

    ``H`` is ``H_{z_W, m}`` for unmeasured posets and ``L_{Y0,W}`` for
    sparsified ones.  ``psi(y) = (y_1, ..., y_{2^i})`` must be a bijection
    onto the product's vertices and carry the link's edge distribution onto
    the product distribution.  When ``dim W = d - 1`` the link has no edges
    and only the vertex bijection is checked.
    """
    w = subkey(w) if isinstance(w, Subspace) else tuple(w)
    i = _dim_of(w)
    fam = y.family
    q = image_set(w, y) if i else ImageSet((), 0, 0)
    half = fam.rank(q.elements[0]) // 2 if q.elements else (y.r << (y.d - 1))
    last_rank = y.r << (y.d - i - 1)
    t_parts = [t_graph(fam, z) if fam.rank(z) % 4 == 0 else None for z in q.elements]
    names = [f"T^{fam.label(z)}" for z in q.elements]
    names.append("L_{Y,W}" if y.base is not None else f"H_(z_W,{last_rank // 2})")

    # vertices
    link_verts = sorted(_link_vertex_set(y, w))
    psi = {}
    for v in link_verts:
        parts = unique_decomposition(v, w, y)
        if parts is None:
            raise AssertionError(f"link vertex {fam.label(v)} has no decomposition")
        psi[v] = tuple(parts)
    comp_sets = [sorted(fam.below(z, half)) for z in q.elements]
    if y.base is not None:
        last = l_vertices(y.base, w, last_rank)
    else:
        last = sorted(v for v in fam.of_rank(last_rank) if fam.direct([v, q.total]))
    product_count = math.prod(len(c) for c in comp_sets) * len(last)
    images = set(psi.values())
    in_product = all(
        all(p in set(c) for p, c in zip(parts[:-1], comp_sets)) and parts[-1] in set(last) for parts in images
    )
    bijective = len(images) == len(link_verts) == product_count and in_product

    if i > y.d - 2:
        return DecompositionReport(w, i, tuple(names), len(link_verts), product_count, bijective, 0, 0, 0.0, None, None, True)

    link = link_graph(y, w)
    if y.base is not None:
        last_graph = build_L_graph(y.base, w)
    else:
        last_graph = h_graph(y, q.total, last_rank // 2)
    if any(t is None for t in t_parts):
        raise ValueError("image set elements must have rank divisible by 4 for T factors")
    prod_verts, prod_joint = _product(t_parts + [last_graph])
    pindex = {v: t for t, v in enumerate(prod_verts)}
    if set(pindex) != images:
        bijective = False
    perm = np.array([pindex.get(psi[v], -1) for v in link.vertices])
    if bijective:
        moved = prod_joint[perm][:, perm]
        gap = float(abs(moved - link.joint).max()) / float(link.joint.max())
    else:
        gap = float("inf")
    lam_link = second_eigenvalue(link)
    lam_prod = second_eigenvalue(WeightedGraph.from_joint(prod_verts, prod_joint))
    return DecompositionReport(
        w,
        i,
        tuple(names),
        len(link_verts),
        len(prod_verts),
        bijective,
        int(sp.triu(link.joint).nnz),
        int(sp.triu(prod_joint).nnz),
        gap,
        lam_link,
        lam_prod,
        False,
    )


# ------------------------------------------------------------- independence


@dataclass(frozen=True)
class IndependenceReport:
    conditioned: int
    parts: int
    factorizes: bool
    max_gap: Fraction


def independence_check(
    y: InducedPoset, partition: Sequence[Sequence[int]], targets: Sequence[int]
) -> IndependenceReport:
    """Conditioned on ``sum_{v in R_i} s(v) = z_i`` for ``i < m``, are the restrictions ``s|R_i`` independent?

    Exact: the conditional joint law of the restrictions is compared with the
    product of its marginals on every atom, in rational arithmetic.
    """
    parts = [list(r) for r in partition]
    flat = sorted(v for r in parts for v in r)
    if flat != list(range(1, 1 << y.d)):
        raise ValueError("partition must cover the nonzero vectors exactly once")
    if len(targets) != len(parts) - 1:
        raise ValueError("need one target per part except the last")
    f = y.functions
    mask = np.ones(len(f), dtype=bool)
    for r, z in zip(parts, targets):
        mask &= np.bitwise_xor.reduce(f[:, [v - 1 for v in r]], axis=1) == np.uint64(z)
    rows = np.nonzero(mask)[0]
    if len(parts) == 1 or not len(rows):
        return IndependenceReport(len(rows), len(parts), True, Fraction(0))
    weights = [Fraction(float(y.weights[t])).limit_denominator(1 << 50) for t in rows]
    total = sum(weights)
    joint: Counter = Counter()
    margins = [Counter() for _ in parts]
    for t, p in zip(rows, weights):
        key = tuple(tuple(int(f[t, v - 1]) for v in r) for r in parts)
        joint[key] += p / total
        for j, k in enumerate(key):
            margins[j][k] += p / total
    gap = Fraction(0)
    support = [list(mg) for mg in margins]
    for combo in itertools.product(*support):
        expect = math.prod((margins[j][k] for j, k in enumerate(combo)), start=Fraction(1))
        gap = max(gap, abs(joint.get(combo, Fraction(0)) - expect))
    return IndependenceReport(len(rows), len(parts), gap == 0, gap)


__all__ = [
    "AdmissibleFunction",
    "DecompositionReport",
    "ImageSet",
    "IndependenceReport",
    "InducedPoset",
    "RankFamily",
    "SubKey",
    "build_L_graph",
    "build_induced_poset",
    "check_direct_meet",
    "complete_family",
    "derive_skeleton_function",
    "direct_meet_witness",
    "encode_all",
    "enumerate_functions",
    "generic_family",
    "h_graph",
    "hadamard_encode",
    "image_set",
    "independence_check",
    "is_k_admissible",
    "johnson_family",
    "l_vertices",
    "link_decomposition_check",
    "link_graph",
    "matrix_family",
    "outer_key",
    "sp_operator",
    "subkey",
    "t_graph",
    "unique_decomposition",
]
