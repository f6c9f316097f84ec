"""Graphs on the matrix domination order: T^U, H_{D,m}, relation and sum graphs.

Edges of the sum-type graphs are found by enumerating their witnesses: ordered
tuples of matrices whose sum is direct (and dominated by ``U`` or direct with
``D`` when a bound is present).  Every witness tuple is counted once, so the
resulting edge weights are the enumeration-defined sampling distributions.
Keys of ``n x n`` matrices are the row-major packings of ``BitMatrix.key``;
the vectorised paths need ``n <= 8`` so that a key fits in 64 bits.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
import scipy.sparse as sp

from .f2core import (
    BitMatrix,
    BudgetExceeded,
    bits_of,
    check_budget,
    complement_basis,
    coordinates,
    count_independent_tuples,
    dominated_by,
    dominates,
    enumerate_rank_r,
    independent_tuples,
    is_direct_sum,
    rank,
    rank_decomposition,
    solve_dual,
    solve_linear,
    span,
    under_identity_certificate,
)
from .spectral import BipartiteGraph, WeightedGraph

log = logging.getLogger(__name__)

CHUNK = 1 << 16


@dataclass(frozen=True)
class PosetGraphSpec:
    """Addressing record for the graphs of this module (``T:U=<hex>,m=1`` style)."""

    kind: str
    params: tuple[int, ...]
    upper: BitMatrix | None = None
    disjoint: BitMatrix | None = None

    def __post_init__(self) -> None:
        if self.kind not in {"T", "H", "R", "S", "DS"}:
            raise ValueError(f"unknown graph kind {self.kind!r}")
        if self.upper is not None and self.disjoint is not None:
            raise ValueError("choose an upper bound or a disjointness bound, not both")


# ------------------------------------------------------------ key helpers


def _multiplier(e: int, n: int) -> int:
    return sum(1 << (n * i) for i in bits_of(e))


def outer_key(e: int, f: int, n: int) -> int:
    """Key of ``e (x) f``: copies of ``f`` in the rows selected by ``e``."""
    return f * _multiplier(e, n)


def _multiplier_table(n: int) -> np.ndarray:
    if n > 8:
        raise ValueError("vectorised enumeration needs n <= 8")
    return np.array([_multiplier(e, n) for e in range(1 << n)], dtype=np.uint64)


def _matrices(keys: Sequence[int], n: int) -> list[BitMatrix]:
    return [BitMatrix.from_key(int(k), n) for k in keys]


def _extensions(n: int, r: int, base: Sequence[int]) -> list[tuple[int, ...]]:
    """Ordered ``r``-tuples extending the independent family ``base`` independently."""
    pivots: dict[int, int] = {}

    def insert(piv: dict[int, int], v: int) -> int:
        x = v
        while x:
            top = x.bit_length() - 1
            hit = piv.get(top)
            if hit is None:
                return x
            x ^= hit
        return 0

    for b in base:
        x = insert(pivots, b)
        if not x:
            raise ValueError("base family is dependent")
        pivots[x.bit_length() - 1] = x
    out: list[tuple[int, ...]] = []

    def extend(prefix: tuple[int, ...], piv: dict[int, int]) -> None:
        if len(prefix) == r:
            out.append(prefix)
            return
        for v in range(1, 1 << n):
            x = insert(piv, v)
            if x:
                nxt = dict(piv)
                nxt[x.bit_length() - 1] = x
                extend(prefix + (v,), nxt)

    extend((), pivots)
    return out


def _block_slices(sizes: Sequence[int]) -> list[slice]:
    out, start = [], 0
    for s in sizes:
        out.append(slice(start, start + s))
        start += s
    return out


def free_pieces(n: int, sizes: Sequence[int], disjoint: BitMatrix | None = None) -> Iterator[np.ndarray]:
    """Ordered tuples of matrices of ranks ``sizes`` whose sum is direct (and direct with ``disjoint``).

    Yields arrays of shape ``(N, len(sizes))`` of keys.  A tuple of rank-``m``
    pieces arises from ``|GL_m|`` choices of factor bases per piece, the same
    number for every tuple, so the multiset is uniform over witness tuples.
    """
    r = sum(sizes)
    base_c = [e for e, _ in rank_decomposition(disjoint)] if disjoint is not None else []
    base_r = [f for _, f in rank_decomposition(disjoint)] if disjoint is not None else []
    d0 = len(base_c)
    if d0 + r > n:
        return
    per_side = 1
    for t in range(r):
        per_side *= (1 << n) - (1 << (d0 + t))
    check_budget(per_side * per_side, f"direct {len(sizes)}-tuples of ranks {tuple(sizes)} at n={n}")
    mult = _multiplier_table(n)
    lefts = np.array(_extensions(n, r, base_c), dtype=np.int64).reshape(-1, r)
    rights = np.array(_extensions(n, r, base_r), dtype=np.uint64).reshape(-1, r)
    blocks = _block_slices(sizes)
    for erow in lefts:
        out = np.zeros((len(rights), len(sizes)), dtype=np.uint64)
        for b, sl in enumerate(blocks):
            for t in range(sl.start, sl.stop):
                out[:, b] ^= rights[:, t] * mult[erow[t]]
        yield out


def _lift(x: int, vecs: Sequence[int]) -> int:
    out = 0
    for t in bits_of(x):
        out ^= vecs[t]
    return out


def under_pieces(u: BitMatrix, sizes: Sequence[int]) -> Iterator[np.ndarray]:
    """Ordered tuples of ranks ``sizes`` with direct sum dominated by ``u``.

    With ``u = E F`` the tuples correspond to families of dual pairs
    ``(b_t, g_t)`` in ``F_2^k`` (``<b_s, g_t> = delta``), lifted through
    ``E`` and ``F``; each tuple is hit the same number of times.
    """
    n = u.n
    pairs = rank_decomposition(u)
    k = len(pairs)
    r = sum(sizes)
    if r > k:
        return
    check_budget(count_independent_tuples(k, r) << (r * (k - r)), f"dual families of size {r} under rank {k}")
    es = [e for e, _ in pairs]
    fs = [f for _, f in pairs]
    blocks = _block_slices(sizes)
    free = k - r
    rows: list[tuple[int, ...]] = []
    for bs in independent_tuples(k, r) if r else [()]:
        full = list(bs) + complement_basis(span(bs, k))
        duals = solve_dual(full, k)
        g0, kern = duals[:r], duals[r:]
        lifted_e = [_lift(b, es) for b in bs]
        for c in range(1 << (r * free)):
            keys = []
            for sl in blocks:
                key = 0
                for t in range(sl.start, sl.stop):
                    g = g0[t] ^ _lift((c >> (t * free)) & ((1 << free) - 1), kern)
                    key ^= outer_key(lifted_e[t], _lift(g, fs), n)
                keys.append(key)
            rows.append(tuple(keys))
            if len(rows) >= CHUNK:
                yield np.array(rows, dtype=np.uint64)
                rows = []
    if rows:
        yield np.array(rows, dtype=np.uint64)


def _positions(sorted_keys: np.ndarray, keys: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(sorted_keys, keys)
    idx = np.minimum(idx, len(sorted_keys) - 1)
    if not np.all(sorted_keys[idx] == keys):
        raise AssertionError("witness produced an endpoint outside the vertex set")
    return idx


def _pair_counts(chunks, left_keys: np.ndarray, right_keys: np.ndarray, combine) -> sp.csr_matrix:
    """Count witness tuples per (left, right) endpoint pair."""
    rows, cols = [], []
    for chunk in chunks:
        a, b = combine(chunk)
        rows.append(_positions(left_keys, a))
        cols.append(_positions(right_keys, b))
    if not rows:
        return sp.csr_matrix((len(left_keys), len(right_keys)))
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    mat = sp.coo_matrix((np.ones(len(r)), (r, c)), shape=(len(left_keys), len(right_keys)))
    return mat.tocsr()


def _step_pair(chunk: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(w1 + w2, w1 + w3)`` for each witness row ``(w1, w2, w3)``."""
    return chunk[:, 0] ^ chunk[:, 1], chunk[:, 0] ^ chunk[:, 2]


# --------------------------------------------------------------- universes


def universe(r: int, n: int, upper: BitMatrix | None = None, disjoint: BitMatrix | None = None) -> list[BitMatrix]:
    """Rank-``r`` matrices, optionally dominated by ``upper`` or direct with ``disjoint``."""
    if upper is not None and disjoint is not None:
        raise ValueError("choose one bound")
    if upper is not None:
        return list(dominated_by(upper, r))
    mats = enumerate_rank_r(n, r)
    if disjoint is None:
        return list(mats)
    d = rank(disjoint)
    return [a for a in mats if rank(a + disjoint) == r + d]


def _sorted_keys(mats: Sequence[BitMatrix]) -> np.ndarray:
    return np.array(sorted(a.key for a in mats), dtype=np.uint64)


def _symmetric_graph(keys: np.ndarray, n: int, counts: sp.csr_matrix) -> WeightedGraph:
    return WeightedGraph.from_joint(_matrices(keys, n), counts + counts.T)


# --------------------------------------------------------------------- T, H


def t_adjacent(a: BitMatrix, b: BitMatrix, u: BitMatrix, m: int) -> bool:
    """Edge oracle for ``T^U``: some rank-``m`` ``C`` has ``C + (A-C) + (B-C)`` direct and below ``U``."""
    if a == b:
        return False
    for c in dominated_by(a, m):
        if dominates(c, b) and is_direct_sum([c, a - c, b - c]) and dominates(a + b + c, u):
            return True
    return False


def h_adjacent(a: BitMatrix, b: BitMatrix, d: BitMatrix, m: int) -> bool:
    """Edge oracle for ``H_{D,m}``."""
    if a == b:
        return False
    for c in dominated_by(a, m):
        if dominates(c, b) and is_direct_sum([d, c, a - c, b - c]):
            return True
    return False


def _oracle_graph(vertices: list[BitMatrix], adjacent) -> WeightedGraph:
    edges = []
    for i, a in enumerate(vertices):
        for b in vertices[i + 1 :]:
            if adjacent(a, b):
                edges.append((a, b, 1.0))
    return WeightedGraph.from_edges(vertices, edges)


def _weighted(build_exact, build_uniform, weighting: str) -> WeightedGraph:
    if weighting == "exact":
        return build_exact()
    if weighting == "uniform":
        return build_uniform()
    if weighting == "auto":
        try:
            return build_exact()
        except BudgetExceeded as exc:
            log.warning("exact witness enumeration over budget (%s); using the unweighted variant", exc)
            return build_uniform()
    raise ValueError(f"unknown weighting {weighting!r}")


def build_T(u: BitMatrix, m: int, weighting: str = "auto") -> WeightedGraph:
    """The subposet graph ``T^U`` on rank-``2m`` matrices below ``U``.

    Edge weights follow a uniform decomposition ``U = w1 + w2 + w3 + w4`` into
    rank-``m`` parts and the step ``(w1 + w2, w1 + w3)``; ``w4 = U - w1 - w2 - w3``
    is forced, so enumerating direct triples below ``U`` is exact.
    ``weighting="uniform"`` builds the unweighted variant from the edge oracle.
    """
    if m <= 0 or rank(u) != 4 * m:
        raise ValueError(f"T^U needs rank(U) = 4m, got rank {rank(u)} with m = {m}")
    verts = universe(2 * m, u.n, upper=u)
    keys = _sorted_keys(verts)

    def exact() -> WeightedGraph:
        counts = _pair_counts(under_pieces(u, (m, m, m)), keys, keys, _step_pair)
        return _symmetric_graph(keys, u.n, counts)

    def uniform() -> WeightedGraph:
        check_budget(len(verts) ** 2, "T^U vertex pairs for the edge oracle")
        return _oracle_graph(_matrices(keys, u.n), lambda a, b: t_adjacent(a, b, u, m))

    return _weighted(exact, uniform, weighting)


def h_vertices(d: BitMatrix, m: int, n: int) -> list[BitMatrix]:
    """Vertices of ``H_{D,m}``: rank-``2m`` matrices direct with ``D``."""
    return universe(2 * m, n, disjoint=d)


def build_H(d: BitMatrix, m: int, n: int, weighting: str = "auto") -> WeightedGraph:
    """The disjoint graph ``H_{D,m}``.

    An edge is sampled from a uniformly random ordered triple of rank-``m``
    matrices ``(w1, w2, w3)`` with ``D + w1 + w2 + w3`` direct, stepping
    ``w1 + w2 -> w1 + w3``.
    """
    if d.n != n:
        raise ValueError("D must be n x n")
    if 2 * m + rank(d) > n:
        raise ValueError("H_{D,m} needs 2m + rank(D) <= n")
    if 3 * m + rank(d) > n:
        raise ValueError("H_{D,m} has no edges: 3m + rank(D) exceeds n")
    verts = h_vertices(d, m, n)
    keys = _sorted_keys(verts)

    def exact() -> WeightedGraph:
        counts = _pair_counts(free_pieces(n, (m, m, m), d), keys, keys, _step_pair)
        return _symmetric_graph(keys, n, counts)

    def uniform() -> WeightedGraph:
        check_budget(len(verts) ** 2, "H vertex pairs for the edge oracle")
        return _oracle_graph(_matrices(keys, n), lambda a, b: h_adjacent(a, b, d, m))

    return _weighted(exact, uniform, weighting)


# --------------------------------------------------------------------- R, S


def _bipartite(lkeys: np.ndarray, rkeys: np.ndarray, n: int, counts: sp.csr_matrix) -> BipartiteGraph:
    return BipartiteGraph.from_joint(_matrices(lkeys, n), _matrices(rkeys, n), counts)


def build_R(
    i: int, j: int, n: int, upper: BitMatrix | None = None, disjoint: BitMatrix | None = None
) -> BipartiteGraph:
    """Relation graph: rank ``i`` on the left, rank ``j`` on the right, ``A <= B``."""
    if not 0 <= i < j:
        raise ValueError("relation graph needs 0 <= i < j")
    left = universe(i, n, upper, disjoint)
    right = universe(j, n, upper, disjoint)
    lkeys, rkeys = _sorted_keys(left), _sorted_keys(right)
    rows, cols = [], []
    for col, bkey in enumerate(rkeys):
        below = [a.key for a in dominated_by(BitMatrix.from_key(int(bkey), n), i)]
        rows.append(_positions(lkeys, np.array(below, dtype=np.uint64)))
        cols.append(np.full(len(below), col))
    r, c = np.concatenate(rows), np.concatenate(cols)
    counts = sp.coo_matrix((np.ones(len(r)), (r, c)), shape=(len(lkeys), len(rkeys))).tocsr()
    return _bipartite(lkeys, rkeys, n, counts)


def build_S(
    i: int, j: int, k: int, n: int, upper: BitMatrix | None = None, disjoint: BitMatrix | None = None
) -> BipartiteGraph:
    """Sum graph: ``A ~ B`` when some rank-``k`` ``C`` makes ``C + (A-C) + (B-C)`` direct.

    With ``upper`` the direct sum must be dominated by it, with ``disjoint``
    it must also be direct with that matrix.  ``k = 0`` gives ``DS(i, j)``.
    """
    if not 0 <= k <= min(i, j):
        raise ValueError("sum graph needs 0 <= k <= min(i, j)")
    room = rank(upper) if upper is not None else n - (rank(disjoint) if disjoint is not None else 0)
    if i + j - k > room:
        raise ValueError("i + j - k exceeds the available rank")
    left = universe(i, n, upper, disjoint)
    right = universe(j, n, upper, disjoint)
    lkeys, rkeys = _sorted_keys(left), _sorted_keys(right)
    sizes = (k, i - k, j - k)
    chunks = under_pieces(upper, sizes) if upper is not None else free_pieces(n, sizes, disjoint)

    def combine(chunk: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return chunk[:, 0] ^ chunk[:, 1], chunk[:, 0] ^ chunk[:, 2]

    return _bipartite(lkeys, rkeys, n, _pair_counts(chunks, lkeys, rkeys, combine))


def build_DS(i: int, j: int, n: int, upper: BitMatrix | None = None, disjoint: BitMatrix | None = None) -> BipartiteGraph:
    return build_S(i, j, 0, n, upper, disjoint)


def relation_to_ds_map(u: BitMatrix, i: int, j: int) -> bool:
    """Check edge by edge that ``A -> U - A`` on the right maps ``R^U(i, j)`` onto ``DS^U(i, rank U - j)``."""
    ell = rank(u)
    r_graph = build_R(i, j, u.n, upper=u)
    ds_graph = build_DS(i, ell - j, u.n, upper=u)
    rmap = {b: u - b for b in r_graph.right}
    if sorted(rmap.values(), key=lambda x: x.key) != sorted(ds_graph.right, key=lambda x: x.key):
        return False
    if tuple(r_graph.left) != tuple(ds_graph.left):
        return False
    r_edges = set()
    coo = r_graph.joint.tocoo()
    for a, b in zip(coo.row, coo.col):
        r_edges.add((r_graph.left[a], rmap[r_graph.right[b]]))
    coo = ds_graph.joint.tocoo()
    ds_edges = {(ds_graph.left[a], ds_graph.right[b]) for a, b in zip(coo.row, coo.col)}
    return r_edges == ds_edges


# -------------------------------------------------------------- short paths


class PathConstructionError(RuntimeError):
    """A step of the short-path construction failed; this indicates a bug."""


class _Frame:
    """Coordinates in which ``Z`` becomes the identity of ``F_2^k``.

    ``A <= Z`` is written ``E A' F`` with ``A' <= I_k``; ``A'`` is recovered
    from the coordinates of ``A``'s factors in the bases ``E`` and ``F``.
    """

    def __init__(self, z: BitMatrix) -> None:
        pairs = rank_decomposition(z)
        self.n = z.n
        self.k = len(pairs)
        self.es = [e for e, _ in pairs]
        self.fs = [f for _, f in pairs]

    def dual_pairs(self, a: BitMatrix) -> list[tuple[int, int]]:
        rows = [0] * self.k
        for e, f in rank_decomposition(a):
            ce, cf = coordinates(self.es, e), coordinates(self.fs, f)
            if ce is None or cf is None:
                raise PathConstructionError("matrix is not below the frame matrix")
            for t in bits_of(ce):
                rows[t] ^= cf
        cert = under_identity_certificate(BitMatrix(tuple(rows), self.k))
        if cert is None:
            raise PathConstructionError("matrix is not dominated by the frame matrix")
        return cert

    def lift(self, pairs: Sequence[tuple[int, int]]) -> BitMatrix:
        rows = [0] * self.n
        for x, y in pairs:
            e, f = _lift(x, self.es), _lift(y, self.fs)
            for i in bits_of(e):
                rows[i] ^= f
        return BitMatrix(tuple(rows), self.n)


def _independent_in(space_constraints: Sequence[int], avoid: Sequence[int], k: int, count: int, stage: str) -> list[int]:
    """``count`` vectors orthogonal to every constraint, independent modulo ``span(avoid)``."""
    sub = span(space_constraints, k).orthogonal()
    chosen: list[int] = []
    for w in sub.basis:
        if span(list(avoid) + chosen + [w], k).dim == len(span(list(avoid), k).basis) + len(chosen) + 1:
            chosen.append(w)
            if len(chosen) == count:
                return chosen
    raise PathConstructionError(f"{stage}: not enough independent directions")


def _dual_rows(es: Sequence[int], orth_to: Sequence[int], k: int, stage: str) -> list[int]:
    """``f_j`` with ``<e_i, f_j> = delta_ij`` and ``<x, f_j> = 0`` for ``x`` in ``orth_to``."""
    out = []
    for j in range(len(es)):
        cons = [(e, 1 if i == j else 0) for i, e in enumerate(es)] + [(x, 0) for x in orth_to]
        f = solve_linear(cons, k)
        if f is None:
            raise PathConstructionError(f"{stage}: dual system has no solution")
        out.append(f)
    return out


def _bridge(a: list[tuple[int, int]], b: list[tuple[int, int]], k: int) -> list[tuple[int, int]]:
    """Rank-``m`` ``T`` with ``A + T`` and ``T + B`` both below ``I_k``."""
    m = len(a)
    te = _independent_in([f for _, f in a] + [f for _, f in b], [e for e, _ in a] + [e for e, _ in b], k, m, "T-finding")
    tf = _dual_rows(te, [e for e, _ in a] + [e for e, _ in b], k, "T-finding")
    return list(zip(te, tf))


def _four_path(a: list[tuple[int, int]], b: list[tuple[int, int]], k: int) -> list[list[tuple[int, int]]]:
    """``M1, M2, M3`` with ``A+M1, M1+M2, M2+M3, M3+B`` all below ``I_k``."""
    m = len(a)
    ae, af = [e for e, _ in a], [f for _, f in a]
    be, bf = [e for e, _ in b], [f for _, f in b]
    e1 = _independent_in(af + bf, ae, k, m, "M^1-finding")
    f1 = _dual_rows(e1, ae, k, "M^1-finding")
    f3 = _dual_rows(e1, be, k, "M^3-finding")
    e2 = _independent_in(f1 + f3, e1, k, m, "M^2-finding")
    f2 = _dual_rows(e2, e1, k, "M^2-finding")
    return [list(zip(e1, f1)), list(zip(e2, f2)), list(zip(e1, f3))]


def _stage(z: BitMatrix, fixed: BitMatrix, start: BitMatrix, end: BitMatrix) -> list[BitMatrix]:
    """Path ``fixed + start -> ... -> fixed + end`` of length 4 inside ``T^Z``."""
    frame = _Frame(z - fixed)
    a, b = frame.dual_pairs(start), frame.dual_pairs(end)
    mids = [frame.lift(p) for p in _four_path(a, b, frame.k)]
    return [fixed + start] + [fixed + x for x in mids] + [fixed + end]


def _simplify(path: list[BitMatrix]) -> list[BitMatrix]:
    out: list[BitMatrix] = []
    for v in path:
        if v in out:
            out = out[: out.index(v) + 1]
        else:
            out.append(v)
    return out


def short_path_T(c: BitMatrix, d: BitMatrix, u: BitMatrix, validate: bool = True) -> list[BitMatrix]:
    """A path from ``C`` to ``D`` in ``T^U`` with at most 12 steps.

    ``C = C1 + C2`` and ``D = D1 + D2`` are split into rank-``m`` halves, a
    bridge ``T`` direct with both ``C1`` and ``D1`` below ``U`` is found, and
    three four-step paths run ``C -> C1 + T -> D1 + T -> D``, each inside the
    interval above the fixed half.
    """
    k = rank(u)
    if k % 4:
        raise ValueError("U must have rank 4m")
    m = k // 4
    for x in (c, d):
        if rank(x) != 2 * m or not dominates(x, u):
            raise ValueError("endpoints must be rank-2m matrices below U")
    if c == d:
        return [c]
    if t_adjacent(c, d, u, m):
        return [c, d]
    frame = _Frame(u)
    cp, dp = frame.dual_pairs(c), frame.dual_pairs(d)
    c1, c2 = frame.lift(cp[:m]), frame.lift(cp[m:])
    d1, d2 = frame.lift(dp[:m]), frame.lift(dp[m:])
    t = frame.lift(_bridge(cp[:m], dp[:m], k))
    path = _stage(u, c1, c2, t)
    path += _stage(u, t, c1, d1)[1:]
    path += _stage(u, d1, t, d2)[1:]
    path = _simplify(path)
    if validate:
        for x, y in zip(path, path[1:]):
            if not t_adjacent(x, y, u, m):
                raise PathConstructionError(f"invalid step {x.to_hex()} -> {y.to_hex()}")
    return path


# ------------------------------------------------------------------ intervals


def interval_isomorphism_check(m1: BitMatrix, m2: BitMatrix, universe_: Sequence[BitMatrix] | None = None) -> bool:
    """``A -> A - M1`` maps the interval ``[M1, M2]`` onto the matrices below ``M2 - M1``.

    Checks bijectivity, the rank shift by ``rank(M1)`` and order preservation
    in both directions on every pair of the interval.
    """
    if not dominates(m1, m2):
        raise ValueError("need M1 <= M2")
    if universe_ is None:
        universe_ = [a for r in range(rank(m2) + 1) for a in dominated_by(m2, r)]
    interval = [a for a in universe_ if dominates(m1, a) and dominates(a, m2)]
    top = m2 - m1
    target = {a for r in range(rank(top) + 1) for a in dominated_by(top, r)}
    image = [a - m1 for a in interval]
    if len(set(image)) != len(interval) or set(image) != target:
        return False
    r1 = rank(m1)
    if any(rank(b) != rank(a) - r1 for a, b in zip(interval, image)):
        return False
    for a, pa in zip(interval, image):
        for b, pb in zip(interval, image):
            if dominates(a, b) != dominates(pa, pb):
                return False
    return True


__all__ = [
    "PathConstructionError",
    "PosetGraphSpec",
    "build_DS",
    "build_H",
    "build_R",
    "build_S",
    "build_T",
    "free_pieces",
    "h_adjacent",
    "h_vertices",
    "interval_isomorphism_check",
    "outer_key",
    "relation_to_ds_map",
    "short_path_T",
    "t_adjacent",
    "under_pieces",
    "universe",
]
