"""Cochains over finite groups, the triangle test, contractions, van Kampen diagrams and cones."""

from __future__ import annotations

import itertools
import math
import random
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Mapping, Protocol, Sequence

import numpy as np

from .f2core import (
    BitMatrix,
    Subspace,
    bits_of,
    check_budget,
    col_space,
    coordinates,
    dominated_by,
    dominates,
    dot,
    intersection,
    is_direct_sum,
    matrix_from_pairs,
    matrix_sum,
    rank,
    rank_decomposition,
    row_space,
    solve_linear,
    span,
    zero_subspace,
)
from .matrixposet import PathConstructionError, short_path_T, t_adjacent

Vertex = Hashable
Walk = tuple


class TwoComplex(Protocol):
    def has_edge(self, u, v) -> bool: ...

    def has_triangle(self, u, v, w) -> bool: ...


# ------------------------------------------------------------------ groups


@dataclass(frozen=True)
class GroupTable:
    """A finite group as a multiplication table on ``0..order-1``."""

    name: str
    table: tuple[tuple[int, ...], ...]
    identity: int
    inverse: tuple[int, ...]

    @classmethod
    def from_table(cls, name: str, table: Sequence[Sequence[int]]) -> GroupTable:
        t = tuple(tuple(int(x) for x in row) for row in table)
        n = len(t)
        if any(len(row) != n for row in t) or any(not 0 <= x < n for row in t for x in row):
            raise ValueError(f"{name}: table must be square with entries in range")
        ids = [e for e in range(n) if all(t[e][a] == a and t[a][e] == a for a in range(n))]
        if not ids:
            raise ValueError(f"{name}: no identity element")
        e = ids[0]
        inv = []
        for a in range(n):
            bs = [b for b in range(n) if t[a][b] == e and t[b][a] == e]
            if not bs:
                raise ValueError(f"{name}: element {a} has no inverse")
            inv.append(bs[0])
        for a, b, c in itertools.product(range(n), repeat=3):
            if t[t[a][b]][c] != t[a][t[b][c]]:
                raise ValueError(f"{name}: not associative at {(a, b, c)}")
        return cls(name, t, e, tuple(inv))

    @property
    def order(self) -> int:
        return len(self.table)

    def mul(self, a: int, b: int) -> int:
        return self.table[a][b]

    def inv(self, a: int) -> int:
        return self.inverse[a]

    def product(self, *xs: int) -> int:
        out = self.identity
        for x in xs:
            out = self.table[out][x]
        return out

    @property
    def is_abelian(self) -> bool:
        n = self.order
        return all(self.table[a][b] == self.table[b][a] for a in range(n) for b in range(n))

    def conjugate(self, a: int, b: int) -> bool:
        return any(self.product(g, a, self.inverse[g]) == b for g in range(self.order))

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.table, dtype=np.int64), np.array(self.inverse, dtype=np.int64)


def cyclic_group(m: int) -> GroupTable:
    return GroupTable.from_table(f"Z{m}", [[(a + b) % m for b in range(m)] for a in range(m)])


def symmetric_group_3() -> GroupTable:
    perms = sorted(itertools.permutations(range(3)))
    index = {p: i for i, p in enumerate(perms)}
    table = [[index[tuple(p[q[i]] for i in range(3))] for q in perms] for p in perms]
    return GroupTable.from_table("S3", table)


def group_by_name(name: str) -> GroupTable:
    key = name.upper()
    if key == "S3":
        return symmetric_group_3()
    if key.startswith("Z") and key[1:].isdigit():
        return cyclic_group(int(key[1:]))
    raise ValueError(f"unknown group {name!r}; use Z<m> or S3")


# ------------------------------------------------------------------ cochains


def _exact(w: float) -> Fraction:
    return Fraction(w).limit_denominator(10**9)


def _edges(x) -> list[tuple]:
    return x.level(1)


def _triangles(x) -> list[tuple]:
    return x.level(2)


@dataclass(frozen=True)
class Cochain0:
    values: Mapping[Vertex, int]

    def __call__(self, v) -> int:
        return self.values[v]


@dataclass(frozen=True)
class Cochain1:
    """Antisymmetric edge function: ``f(v, u) = f(u, v)^{-1}``."""

    values: Mapping[tuple, int]

    @classmethod
    def from_oriented(cls, group: GroupTable, oriented: Mapping[tuple, int]) -> Cochain1:
        vals: dict[tuple, int] = {}
        for (u, v), g in oriented.items():
            for key, val in (((u, v), g), ((v, u), group.inv(g))):
                if vals.get(key, val) != val:
                    raise ValueError(f"conflicting values on edge {key}")
                vals[key] = val
        return cls(vals)

    def __call__(self, u, v) -> int:
        return self.values[(u, v)]

    def antisymmetric(self, group: GroupTable) -> bool:
        return all(self.values.get((v, u)) == group.inv(g) for (u, v), g in self.values.items())

    def changed(self, group: GroupTable, edge: tuple, value: int) -> Cochain1:
        vals = dict(self.values)
        u, v = edge
        vals[(u, v)] = value
        vals[(v, u)] = group.inv(value)
        return Cochain1(vals)


@dataclass(frozen=True)
class Cochain2:
    """Triangle function on all six orderings of each triangle."""

    values: Mapping[tuple, int]

    def __call__(self, u, v, w) -> int:
        return self.values[(u, v, w)]


def _perm_sign(p: Sequence[int]) -> int:
    sign = 1
    p = list(p)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def delta0(g: Cochain0, x, group: GroupTable) -> Cochain1:
    """``δg(u, v) = g(u) g(v)^{-1}``."""
    return Cochain1.from_oriented(group, {(u, v): group.mul(g(u), group.inv(g(v))) for u, v in _edges(x)})


def delta1(f: Cochain1, x, group: GroupTable) -> Cochain2:
    """``δf(u, v, w) = f(u, v) f(v, w) f(w, u)`` on every ordering."""
    vals = {}
    for t in _triangles(x):
        for a, b, c in itertools.permutations(t):
            vals[(a, b, c)] = group.product(f(a, b), f(b, c), f(c, a))
    return Cochain2(vals)


def delta(c, x, group: GroupTable):
    if isinstance(c, Cochain0):
        return delta0(c, x, group)
    if isinstance(c, Cochain1):
        return delta1(c, x, group)
    raise TypeError("delta is defined on 0- and 1-cochains")


def is_identity(c, group: GroupTable) -> bool:
    return all(v == group.identity for v in c.values.values())


def sign_law_violations(h: Cochain2, group: GroupTable, up_to_conjugacy: bool = False) -> list[tuple]:
    """Orderings where ``h(πt) = h(t)^{sign π}`` fails (optionally only up to conjugacy)."""
    bad = []
    seen = set()
    for key in h.values:
        t = tuple(sorted(key))
        if t in seen:
            continue
        seen.add(t)
        ref = h(*t)
        for p in itertools.permutations(range(3)):
            val = h(*(t[i] for i in p))
            want = ref if _perm_sign(p) == 1 else group.inv(ref)
            ok = group.conjugate(val, want) if up_to_conjugacy else val == want
            if not ok:
                bad.append((t, p))
    return bad


def dist(f1: Cochain1, f2: Cochain1, x) -> Fraction:
    """Weighted fraction of edges where the two cochains differ."""
    return sum((_exact(w) for (u, v), w in x.weights(1).items() if f1(u, v) != f2(u, v)), Fraction(0))


def wt(h: Cochain2, x, group: GroupTable) -> Fraction:
    """Weighted fraction of triangles where ``h`` is not the identity."""
    return sum((_exact(p) for t, p in x.weights(2).items() if h(*t) != group.identity), Fraction(0))


def triangle_test(f: Cochain1, x, group: GroupTable) -> Fraction:
    """Rejection probability of the triangle test, ``wt(δf)``."""
    return wt(delta1(f, x, group), x, group)


@dataclass(frozen=True)
class BetaReport:
    beta: Fraction | None  # None when every 1-cochain is a coboundary
    witness: Cochain1 | None
    witness_dist: Fraction
    witness_wt: Fraction
    cochains: int
    coboundaries: int
    group: str

    @property
    def cocycle_not_coboundary(self) -> bool:
        return self.witness is not None and self.witness_wt == 0

    def to_json(self) -> dict:
        return {
            "group": self.group,
            "beta": None if self.beta is None else str(self.beta),
            "beta_float": None if self.beta is None else float(self.beta),
            "witness": None if self.witness is None else {f"{u}-{v}": g for (u, v), g in sorted(self.witness.values.items(), key=str)},
            "witness_dist": str(self.witness_dist),
            "witness_wt": str(self.witness_wt),
            "cochains": self.cochains,
            "coboundaries": self.coboundaries,
            "cocycle_not_coboundary": self.cocycle_not_coboundary,
        }


def _common_denominator(ws: Sequence[Fraction]) -> tuple[np.ndarray, int]:
    den = math.lcm(*(w.denominator for w in ws)) if ws else 1
    return np.array([int(w * den) for w in ws], dtype=np.int64), den


def brute_force_beta(x, group: GroupTable, chunk: int = 4096) -> BetaReport:
    """``min wt(δf) / dist(f, B^1)`` over every 1-cochain not in ``B^1``.

    Potentials are normalised at the first vertex (right translation by a
    constant leaves ``δg`` unchanged), so ``|B^1| ≤ |Γ|^{|V|-1}``.
    """
    verts = x.vertices()
    edges = _edges(x)
    tris = _triangles(x)
    q = group.order
    total = q ** len(edges)
    check_budget(total * q ** max(len(verts) - 1, 0), "cochain pairs for brute-force beta")
    mul, inv = group.as_arrays()
    vidx = {v: i for i, v in enumerate(verts)}
    eidx = {e: i for i, e in enumerate(edges)}
    ew, eden = _common_denominator([_exact(x.weights(1)[e]) for e in edges])
    tw, tden = _common_denominator([_exact(x.weights(2)[t]) for t in tris]) if tris else (np.zeros(0, dtype=np.int64), 1)

    pots = np.array(list(itertools.product(range(q), repeat=len(verts) - 1)), dtype=np.int64).reshape(-1, len(verts) - 1)
    pots = np.hstack([np.full((len(pots), 1), group.identity, dtype=np.int64), pots])
    ea = np.array([vidx[u] for u, _ in edges], dtype=np.int64)
    eb = np.array([vidx[v] for _, v in edges], dtype=np.int64)
    cob = np.unique(mul[pots[:, ea], inv[pots[:, eb]]], axis=0)

    t_ab = np.array([eidx[(a, b)] for a, b, c in tris], dtype=np.int64)
    t_bc = np.array([eidx[(b, c)] for a, b, c in tris], dtype=np.int64)
    t_ac = np.array([eidx[(a, c)] for a, b, c in tris], dtype=np.int64)

    best: tuple[Fraction, np.ndarray, Fraction, Fraction] | None = None
    it = itertools.product(range(q), repeat=len(edges))
    while True:
        block = np.array(list(itertools.islice(it, chunk)), dtype=np.int64)
        if block.size == 0:
            break
        block = block.reshape(-1, len(edges))
        d_int = ((block[:, None, :] != cob[None, :, :]) @ ew).min(axis=1)
        if len(tris):
            dv = mul[mul[block[:, t_ab], block[:, t_bc]], inv[block[:, t_ac]]]
            w_int = (dv != group.identity) @ tw
        else:
            w_int = np.zeros(len(block), dtype=np.int64)
        for row in np.nonzero(d_int > 0)[0]:
            dv_ = Fraction(int(d_int[row]), eden)
            wv_ = Fraction(int(w_int[row]), tden)
            ratio = wv_ / dv_
            if best is None or ratio < best[0]:
                best = (ratio, block[row].copy(), dv_, wv_)
    if best is None:
        return BetaReport(None, None, Fraction(0), Fraction(0), total, len(cob), group.name)
    ratio, row, dv_, wv_ = best
    witness = Cochain1.from_oriented(group, {e: int(row[i]) for i, e in enumerate(edges)})
    return BetaReport(ratio, witness, dv_, wv_, total, len(cob), group.name)


def cone_beta_bound(area: int, k: int = 2) -> Fraction:
    """Coboundary constant guaranteed by a cone of the given area on a ``k``-face transitive complex."""
    if area <= 0:
        raise ValueError("cone area must be positive")
    return Fraction(1, math.comb(k + 1, 3) * area)


# ------------------------------------------------------------ contractions

BT_IN, BT_OUT, TR_IN, TR_OUT = "bt+", "bt-", "tr+", "tr-"
Move = tuple  # (kind, index, vertex or None)


def collapse(walk: Iterable) -> Walk:
    """Drop consecutive repeats (edges of a diagram mapped to a single vertex)."""
    out: list = []
    for v in walk:
        if not out or out[-1] != v:
            out.append(v)
    return tuple(out)


def _apply(walk: list, move: Move) -> None:
    kind, i, v = move
    if kind == BT_IN:
        walk[i + 1:i + 1] = [v, walk[i]]
    elif kind == BT_OUT:
        del walk[i + 1:i + 3]
    elif kind == TR_IN:
        walk.insert(i + 1, v)
    elif kind == TR_OUT:
        del walk[i + 1]
    else:
        raise ValueError(f"unknown move {kind!r}")


def _move_error(walk: list, move: Move, x: TwoComplex) -> str | None:
    kind, i, v = move
    n = len(walk)
    if kind == BT_IN:
        if not 0 <= i < n:
            return "index out of range"
        if not x.has_edge(walk[i], v):
            return f"backtrack along a non-edge {walk[i]!r}-{v!r}"
    elif kind == BT_OUT:
        if not 0 <= i <= n - 3:
            return "index out of range"
        if walk[i] != walk[i + 2]:
            return "not a backtrack"
    elif kind == TR_IN:
        if not 0 <= i <= n - 2:
            return "index out of range"
        if not x.has_triangle(walk[i], v, walk[i + 1]):
            return f"{(walk[i], v, walk[i + 1])!r} is not a triangle"
    elif kind == TR_OUT:
        if not 0 <= i <= n - 3:
            return "index out of range"
        if not x.has_triangle(walk[i], walk[i + 1], walk[i + 2]):
            return f"{(walk[i], walk[i + 1], walk[i + 2])!r} is not a triangle"
    else:
        return f"unknown move {kind!r}"
    return None


@dataclass(frozen=True)
class Contraction:
    """A closed walk and BT/TR moves reducing it to its base point."""

    start: Walk
    moves: tuple[Move, ...]

    @property
    def base(self):
        return self.start[0]

    @property
    def triangles(self) -> int:
        return sum(1 for m in self.moves if m[0] in (TR_IN, TR_OUT))

    def final(self) -> Walk:
        walk = list(self.start)
        for m in self.moves:
            _apply(walk, m)
        return tuple(walk)

    def steps(self) -> list[dict]:
        """Group the moves so every step holds exactly one TR move.

        Backtracks before a TR move belong to its step; trailing backtracks
        join the last step (or form the only step when no TR is used).
        """
        walk = list(self.start)
        steps: list[dict] = []
        pending: list[Move] = []
        for m in self.moves:
            _apply(walk, m)
            if m[0] in (TR_IN, TR_OUT):
                steps.append({"bt_moves": pending, "tr": m, "cycle": tuple(walk)})
                pending = []
            else:
                pending.append(m)
        if pending:
            if steps:
                steps[-1]["bt_moves"] = steps[-1]["bt_moves"] + pending
                steps[-1]["cycle"] = tuple(walk)
            else:
                steps.append({"bt_moves": pending, "tr": None, "cycle": tuple(walk)})
        return steps

    def cycles(self) -> list[Walk]:
        return [self.start] + [s["cycle"] for s in self.steps()]

    def reversed(self) -> Contraction:
        """The same contraction run on the reversed cycle."""
        length = len(self.start) - 1
        out = []
        for kind, i, v in self.moves:
            if kind == BT_IN:
                out.append((kind, length - i, v))
                length += 2
            elif kind == BT_OUT:
                out.append((kind, length - i - 2, None))
                length -= 2
            elif kind == TR_IN:
                out.append((kind, length - i - 1, v))
                length += 1
            else:
                out.append((kind, length - i - 2, None))
                length -= 1
        return Contraction(tuple(reversed(self.start)), tuple(out))

    def rebased(self, s: int) -> Contraction:
        """Contraction of the rotation of the cycle starting at position ``s``."""
        length = len(self.start) - 1
        s %= max(length, 1)
        if s == 0:
            return self
        rot = self.start[s:] + self.start[1:s + 1]
        tr = _Tracer(rot)
        tr.excursion(0, self.start[s::-1])
        tr.splice(self, s)
        tr.retract(s, s)
        return tr.contraction()

    def map_vertices(self, fn: Callable) -> Contraction:
        return Contraction(tuple(fn(v) for v in self.start), tuple((k, i, None if v is None else fn(v)) for k, i, v in self.moves))

    def to_json(self, label: Callable = str) -> list[dict]:
        out = []
        for s in self.steps():
            tr = s["tr"]
            out.append({
                "cycle": [label(v) for v in s["cycle"]],
                "tr_triangle": None if tr is None else {"kind": tr[0], "index": tr[1], "vertex": None if tr[2] is None else label(tr[2])},
                "bt_moves": [{"kind": k, "index": i, "vertex": None if v is None else label(v)} for k, i, v in s["bt_moves"]],
            })
        return [{"start": [label(v) for v in self.start]}] + out


class _Tracer:
    """Accumulates moves while tracking the current walk."""

    def __init__(self, walk: Sequence) -> None:
        self.start = tuple(walk)
        self.walk = list(walk)
        self.moves: list[Move] = []

    def push(self, move: Move) -> None:
        _apply(self.walk, move)
        self.moves.append(move)

    def excursion(self, pos: int, path: Sequence) -> None:
        """Insert ``path ∘ path^{-1}`` at ``pos`` by backtracks (``path[0]`` must sit at ``pos``)."""
        if self.walk[pos] != path[0]:
            raise AssertionError("excursion must start at the walk vertex")
        for k in range(1, len(path)):
            self.push((BT_IN, pos + k - 1, path[k]))

    def retract(self, apex: int, depth: int) -> None:
        """Undo an excursion of the given depth whose far end sits at ``apex``."""
        for k in range(depth):
            self.push((BT_OUT, apex - 1 - k, None))

    def splice(self, c: Contraction, offset: int) -> None:
        seg = tuple(self.walk[offset:offset + len(c.start)])
        if seg != c.start:
            raise AssertionError(f"splice mismatch: {seg!r} vs {c.start!r}")
        for kind, i, v in c.moves:
            self.push((kind, i + offset, v))

    def contraction(self) -> Contraction:
        return Contraction(self.start, tuple(self.moves))


def conform(c: Contraction, target: Sequence) -> Contraction:
    """Re-express ``c`` for ``target``, a rotation or reversal of its cycle."""
    target = tuple(target)
    if target == c.start:
        return c
    if len(target) == 1 or len(c.start) == 1:
        raise ValueError(f"cycle {target!r} does not match {c.start!r}")
    src = c.start[:-1]
    tgt = target[:-1]
    if len(src) == len(tgt):
        for cand in (c, c.reversed()):
            s0 = cand.start[:-1]
            for s in range(len(s0)):
                if s0[s:] + s0[:s] == tgt:
                    return cand.rebased(s)
    raise ValueError(f"cycle {target!r} is not a rotation of {c.start!r}")


@dataclass(frozen=True)
class ContractionCheck:
    ok: bool
    triangles: int
    move_index: int | None = None
    reason: str | None = None

    def raise_if_invalid(self) -> None:
        if not self.ok:
            raise ValueError(f"invalid contraction at move {self.move_index}: {self.reason}")


def verify_contraction(c: Contraction, x: TwoComplex) -> ContractionCheck:
    """Replay every move against ``x`` and check the walk ends at its base point."""
    walk = list(c.start)
    if len(walk) == 0 or walk[0] != walk[-1]:
        return ContractionCheck(False, c.triangles, None, "start is not a closed walk")
    for a, b in zip(walk, walk[1:]):
        if not x.has_edge(a, b):
            return ContractionCheck(False, c.triangles, None, f"start uses a non-edge {a!r}-{b!r}")
    for idx, m in enumerate(c.moves):
        err = _move_error(walk, m, x)
        if err is not None:
            return ContractionCheck(False, c.triangles, idx, err)
        _apply(walk, m)
    if walk != [c.start[0]]:
        return ContractionCheck(False, c.triangles, len(c.moves), f"ends at {tuple(walk)!r}, not a single vertex")
    return ContractionCheck(True, c.triangles)


def triangle_contraction(a, b, c) -> Contraction:
    """The 1-contraction of the boundary ``(a, b, c, a)`` of a triangle."""
    return Contraction((a, b, c, a), ((TR_OUT, 0, None), (BT_OUT, 0, None)))


def backtrack_contraction(walk: Sequence) -> Contraction:
    """Contract a closed walk that reduces to a point using backtracks only."""
    tr = _Tracer(walk)
    changed = True
    while changed and len(tr.walk) > 1:
        changed = False
        for i in range(len(tr.walk) - 2):
            if tr.walk[i] == tr.walk[i + 2]:
                tr.push((BT_OUT, i, None))
                changed = True
                break
    if len(tr.walk) != 1:
        raise ValueError(f"{tuple(walk)!r} does not reduce by backtracks")
    return tr.contraction()


# ---------------------------------------------------------- plane diagrams


class DiagramError(ValueError):
    """The diagram is not a valid van Kampen diagram."""


def _cycle_edges(cyc: Sequence) -> list[frozenset]:
    return [frozenset((cyc[i], cyc[(i + 1) % len(cyc)])) for i in range(len(cyc))]


def _two_connected(vertices: set, adj: Mapping) -> bool:
    if len(vertices) < 3:
        return False

    def connected(skip) -> bool:
        rest = [v for v in vertices if v != skip]
        seen = {rest[0]}
        stack = [rest[0]]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w != skip and w not in seen and w in vertices:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(rest)

    return connected(None) and all(connected(v) for v in vertices)


@dataclass(frozen=True)
class PlaneDiagram:
    """A 2-connected plane graph (rotation system) labelled into ``X(0)``.

    ``rotation[v]`` lists the neighbours of ``v`` in cyclic order; tracing
    darts ``(a, b) -> (b, next_b(a))`` yields the faces.  ``outer`` is a dart
    of the outer face.  ``face_order`` optionally fixes inner face indices.
    """

    rotation: Mapping[Hashable, tuple]
    psi: Mapping[Hashable, Vertex]
    outer: tuple
    face_order: tuple = ()

    @classmethod
    def from_faces(cls, outer: Sequence, inner: Sequence[Sequence], psi: Mapping) -> PlaneDiagram:
        """Build the rotation system from a tiling of a disk.

        Faces may be listed in either orientation; they are oriented
        consistently, and each vertex star must close up into one cycle.
        """
        faces = [list(outer)] + [list(f) for f in inner]
        owners: dict[frozenset, list[int]] = defaultdict(list)
        for k, f in enumerate(faces):
            if len(set(f)) != len(f) or len(f) < 3:
                raise DiagramError(f"face {k} is not a simple cycle")
            for e in _cycle_edges(f):
                owners[e].append(k)
        for e, ks in owners.items():
            if len(ks) != 2:
                raise DiagramError(f"edge {tuple(e)} lies on {len(ks)} faces")
        orient: dict[int, bool] = {0: True}
        stack = [0]

        def darts(k: int) -> list[tuple]:
            f = faces[k] if orient[k] else faces[k][::-1]
            return [(f[i], f[(i + 1) % len(f)]) for i in range(len(f))]

        while stack:
            k = stack.pop()
            for a, b in darts(k):
                (other,) = [j for j in owners[frozenset((a, b))] if j != k]
                f = faces[other]
                i = f.index(b)
                forward = f[(i + 1) % len(f)] == a
                if other in orient:
                    if orient[other] != forward:
                        raise DiagramError("faces cannot be oriented consistently")
                else:
                    orient[other] = forward
                    stack.append(other)
        if len(orient) != len(faces):
            raise DiagramError("faces are not connected through edges")
        nxt: dict = defaultdict(dict)
        for k in range(len(faces)):
            f = faces[k] if orient[k] else faces[k][::-1]
            for i in range(len(f)):
                a, b, c = f[i - 1], f[i], f[(i + 1) % len(f)]
                if a in nxt[b]:
                    raise DiagramError(f"vertex {b!r} repeats a corner")
                nxt[b][a] = c
        rotation = {}
        for v, perm in nxt.items():
            start = next(iter(perm))
            order = [start]
            while perm[order[-1]] != start:
                order.append(perm[order[-1]])
                if len(order) > len(perm):
                    raise DiagramError(f"star of {v!r} does not close")
            if len(order) != len(perm):
                raise DiagramError(f"star of {v!r} is not a single disk")
            rotation[v] = tuple(order)
        f0 = faces[0] if orient[0] else faces[0][::-1]
        order = tuple(frozenset(_cycle_edges(f)) for f in faces[1:])
        return cls(rotation, dict(psi), (f0[0], f0[1]), order)

    def vertices(self) -> list:
        return list(self.rotation)

    def edges(self) -> set[frozenset]:
        return {frozenset((u, v)) for u, vs in self.rotation.items() for v in vs}

    def _next(self, a, b):
        rot = self.rotation[b]
        return (b, rot[(rot.index(a) + 1) % len(rot)])

    def traced_faces(self) -> list[list]:
        seen = set()
        faces = []
        for u, vs in self.rotation.items():
            for v in vs:
                if (u, v) in seen:
                    continue
                face = []
                d = (u, v)
                while d not in seen:
                    seen.add(d)
                    face.append(d[0])
                    d = self._next(*d)
                faces.append(face)
        return faces

    def faces(self) -> list[list]:
        """Face boundaries with the outer face first, then inner faces in index order."""
        traced = self.traced_faces()
        outer = None
        rest = []
        for f in traced:
            darts = {(f[i], f[(i + 1) % len(f)]) for i in range(len(f))}
            if self.outer in darts:
                outer = f
            else:
                rest.append(f)
        if outer is None:
            raise DiagramError("outer dart not found")
        if self.face_order:
            by_edges = {frozenset(_cycle_edges(f)): f for f in rest}
            try:
                rest = [by_edges[k] for k in self.face_order]
            except KeyError as exc:
                raise DiagramError("traced faces differ from the declared tiling") from exc
        return [outer] + rest

    def validate(self, x: TwoComplex | None = None) -> None:
        verts = set(self.rotation)
        adj = {v: set(vs) for v, vs in self.rotation.items()}
        for v, vs in adj.items():
            if v in vs or len(vs) != len(self.rotation[v]):
                raise DiagramError(f"vertex {v!r} has a loop or a repeated neighbour")
            for w in vs:
                if v not in adj.get(w, ()):
                    raise DiagramError(f"rotation is not symmetric at {v!r}-{w!r}")
        faces = self.traced_faces()
        e = len(self.edges())
        if len(verts) - e + len(faces) != 2:
            raise DiagramError(f"Euler characteristic {len(verts) - e + len(faces)} != 2: not planar")
        if not _two_connected(verts, adj):
            raise DiagramError("diagram is not 2-vertex-connected")
        missing = verts - set(self.psi)
        if missing:
            raise DiagramError(f"labels missing for {sorted(map(str, missing))[:3]}")
        if x is not None:
            for uv in self.edges():
                a, b = tuple(uv)
                pa, pb = self.psi[a], self.psi[b]
                if pa != pb and not x.has_edge(pa, pb):
                    raise DiagramError(f"edge {a!r}-{b!r} maps to a non-edge")

    def boundary_walk(self, face: Sequence, start_index: int = 0) -> Walk:
        cyc = list(face[start_index:]) + list(face[:start_index]) + [face[start_index]]
        return collapse(self.psi[v] for v in cyc)


def _rotate_to(cyc: list, v) -> list:
    i = cyc.index(v)
    return cyc[i:] + cyc[:i]


def van_kampen_assemble(
    diagram: PlaneDiagram,
    inner: Mapping[int, Contraction],
    x: TwoComplex | None = None,
    check_connectivity: bool = True,
) -> Contraction:
    """Contract the outer boundary by peeling valid faces one at a time.

    Inner faces are indexed ``1..ℓ`` as returned by ``diagram.faces()``; each
    ``inner[i]`` contracts the labelled boundary of face ``i`` (any rotation
    or orientation).  The lowest-index valid face is peeled first.  The
    result contracts ``ψ`` of the outer boundary starting at the outer dart's
    tail and uses exactly ``Σ inner[i].triangles`` TR moves.
    """
    diagram.validate(x)
    faces = diagram.faces()
    outer = _rotate_to(faces[0], diagram.outer[0])
    left = {i: f for i, f in enumerate(faces) if i > 0}
    if set(left) != set(inner):
        raise DiagramError(f"contractions given for faces {sorted(inner)} but diagram has {sorted(left)}")
    psi = diagram.psi
    edges = diagram.edges()
    tether: list = [psi[outer[0]]]
    tracer = _Tracer(collapse(psi[v] for v in outer + [outer[0]]))

    def image(path: Sequence) -> Walk:
        return collapse(psi[v] for v in path)

    while len(left) > 1:
        n = len(outer)
        ring = {frozenset((outer[k], outer[(k + 1) % n])): k for k in range(n)}
        pos = [len(tether) - 1]
        for k in range(n):
            pos.append(pos[-1] + (psi[outer[k]] != psi[outer[(k + 1) % n]]))
        chosen = None
        for idx in sorted(left):
            f = left[idx]
            shared = sorted(ring[e] for e in _cycle_edges(f) if e in ring)
            if not shared or len(shared) == len(f):
                continue
            marks = [False] * n
            for k in shared:
                marks[k] = True
            starts = [k for k in range(n) if marks[k] and not marks[k - 1]]
            if len(starts) != 1:
                continue
            k0, r = starts[0], len(shared)
            p_path = [outer[(k0 + j) % n] for j in range(r + 1)]
            fc = _rotate_to(list(f), p_path[0])
            if fc[1] != p_path[1]:
                fc = _rotate_to(list(reversed(f)), p_path[0])
            if fc[:r + 1] != p_path:
                continue
            q_path = fc[r:] + [fc[0]]
            if set(q_path[1:-1]) & set(outer):
                continue
            chosen = (idx, k0, r, p_path, q_path)
            break
        if chosen is None:
            raise DiagramError("no valid face found")
        idx, k0, r, p_path, q_path = chosen
        degree = {v: 0 for v in p_path}
        for e in edges:
            for v in e:
                if v in degree:
                    degree[v] += 1
        if any(degree[v] != 2 for v in p_path[1:-1]):
            raise DiagramError("interior vertex of the valid path has degree above 2")
        face_c = inner[idx]
        wraps = k0 + r > n and k0 != 0
        if not wraps:
            j = k0 + r
            qx = image(q_path)
            tracer.excursion(pos[j], qx)
            target = image(p_path + q_path[1:])
            tracer.splice(conform(face_c, target), pos[k0])
            outer = outer[:k0 + 1] + list(reversed(q_path[1:-1])) + outer[j:]
        else:
            j = k0 + r - n
            p1 = outer[k0:] + [outer[0]]
            p2 = outer[:j + 1]
            rx = image(q_path + p1[1:])
            tracer.excursion(pos[j], rx)
            target = image(p2 + q_path[1:] + p1[1:])
            tracer.splice(conform(face_c, target), pos[0])
            back = image(list(reversed(p1)))
            tether.extend(back[1:])
            outer = [p1[0]] + list(reversed(q_path[1:-1])) + outer[j:k0]
        for a, b in zip(p_path, p_path[1:]):
            edges.discard(frozenset((a, b)))
        del left[idx]
        if check_connectivity and len(left) > 1:
            adj: dict = defaultdict(set)
            for e in edges:
                a, b = tuple(e)
                adj[a].add(b)
                adj[b].add(a)
            if not _two_connected(set(adj), adj):
                raise DiagramError("2-connectivity broken after peeling")
    (idx,) = left
    last = left[idx]
    if set(_cycle_edges(last)) != set(_cycle_edges(outer)):
        raise DiagramError("last face does not match the remaining boundary")
    target = image(outer + [outer[0]])
    if len(target) > 1:
        tracer.splice(conform(inner[idx], target), len(tether) - 1)
    tracer.retract(len(tether) - 1, len(tether) - 1)
    out = tracer.contraction()
    expected = sum(c.triangles for c in inner.values())
    if out.triangles != expected:
        raise AssertionError(f"assembled {out.triangles} TR moves, expected {expected}")
    return out


# ----------------------------------------------------------------- builders


def middle_vertex_contract(cycle: Sequence, z, x: TwoComplex) -> Contraction:
    """Contract a closed walk through triangles with an apex ``z`` (one TR per edge)."""
    c = tuple(cycle)
    if c[0] != c[-1] or len(c) < 4:
        raise ValueError("need a closed walk with at least three edges")
    for a, b in zip(c, c[1:]):
        if not x.has_triangle(z, a, b):
            raise ValueError(f"edge {a!r}-{b!r} does not span a triangle with {z!r}")
    m = len(c) - 1
    outer = [("c", i) for i in range(m)]
    inner = [[("z",), ("c", i), ("c", (i + 1) % m)] for i in range(m)]
    psi = {("c", i): c[i] for i in range(m)}
    psi[("z",)] = z
    d = PlaneDiagram.from_faces(outer, inner, psi)
    faces = d.faces()
    contractions = {k: _triangle_for(d, faces[k]) for k in range(1, len(faces))}
    return van_kampen_assemble(d, contractions, x)


def _triangle_for(d: PlaneDiagram, face: Sequence) -> Contraction:
    a, b, c = (d.psi[v] for v in face)
    return triangle_contraction(a, b, c)


def middle_path_contract(cycle: Sequence, path: Sequence, x: TwoComplex) -> Contraction:
    """Contract ``(v, u, w, u', v)`` along a path ``u -> u'`` whose edges span triangles with ``v`` and ``w``.

    A path with ``m`` edges gives ``2m`` triangles.
    """
    c = tuple(cycle)
    p = tuple(path)
    if len(c) != 5 or c[0] != c[4]:
        raise ValueError("need a closed 4-cycle (v, u, w, u', v)")
    v, u, w, u2 = c[:4]
    if p[0] != u or p[-1] != u2:
        raise ValueError("path must run from u to u'")
    for a, b in zip(p, p[1:]):
        for apex in (v, w):
            if not x.has_triangle(apex, a, b):
                raise ValueError(f"path edge {a!r}-{b!r} does not span a triangle with {apex!r}")
    if len(p) == 1:
        return backtrack_contraction(c)
    m = len(p) - 1
    psi = {("v",): v, ("w",): w}
    psi.update({("p", i): p[i] for i in range(m + 1)})
    outer = [("v",), ("p", 0), ("w",), ("p", m)]
    inner = [[apex, ("p", i), ("p", i + 1)] for i in range(m) for apex in (("v",), ("w",))]
    d = PlaneDiagram.from_faces(outer, inner, psi)
    faces = d.faces()
    return van_kampen_assemble(d, {k: _triangle_for(d, faces[k]) for k in range(1, len(faces))}, x)


# -------------------------------------------------------------------- cones


@dataclass(frozen=True)
class Cone:
    """Base point, a path ``P_u`` from it to every vertex and contractions ``S_uw``.

    ``contractions`` holds one orientation per edge; the other is its reversal.
    """

    base: Vertex
    paths: Mapping[Vertex, Walk]
    contractions: Mapping[tuple, Contraction]

    def decoding_cycle(self, u, w) -> Walk:
        return tuple(self.paths[u]) + tuple(reversed(self.paths[w]))

    def contraction(self, u, w) -> Contraction:
        if (u, w) in self.contractions:
            return self.contractions[(u, w)]
        return self.contractions[(w, u)].reversed()

    def to_json(self, label: Callable = str) -> dict:
        return {
            "v0": label(self.base),
            "paths": {label(u): [label(v) for v in p] for u, p in self.paths.items()},
            "contractions": {f"{label(u)}|{label(w)}": self.contractions[(u, w)].triangles for u, w in self.contractions},
        }


def cone_area(cone: Cone, x: TwoComplex, edges: Iterable[tuple] | None = None) -> int:
    """Largest TR count over the cone's contractions, after replaying each one."""
    area = 0
    for u, w in (cone.contractions if edges is None else edges):
        c = cone.contraction(u, w)
        if c.start != cone.decoding_cycle(u, w):
            raise ValueError(f"S_{u!r},{w!r} does not start at the decoding cycle")
        verify_contraction(c, x).raise_if_invalid()
        area = max(area, c.triangles)
    return area


def bfs_paths(base, vertices: Iterable, neighbours: Callable) -> dict:
    """Shortest paths from ``base`` (ties broken by neighbour order)."""
    paths = {base: (base,)}
    frontier = [base]
    while frontier:
        nxt = []
        for u in frontier:
            for v in neighbours(u):
                if v not in paths:
                    paths[v] = paths[u] + (v,)
                    nxt.append(v)
        frontier = nxt
    missing = [v for v in vertices if v not in paths]
    if missing:
        raise ValueError(f"graph is disconnected: {missing[0]!r} unreachable")
    return paths


def star_cone(x, base=None) -> Cone:
    """Cone over a complex whose decoding cycles from ``base`` are triangles or backtracks."""
    verts = x.vertices()
    base = verts[0] if base is None else base
    paths = bfs_paths(base, verts, x.neighbours)
    contractions = {}
    for u, w in x.level(1):
        cyc = tuple(paths[u]) + tuple(reversed(paths[w]))
        core = collapse(cyc)
        if len(core) == 4 and x.has_triangle(*core[:3]) and core == cyc:
            contractions[(u, w)] = triangle_contraction(*core[:3])
        else:
            contractions[(u, w)] = backtrack_contraction(cyc)
    return Cone(base, paths, contractions)


def fan_contraction(cone: Cone, cycle: Sequence, x: TwoComplex | None = None) -> Contraction:
    """Contract a closed walk by tiling it with the cone's decoding cycles."""
    c = tuple(cycle)
    m = len(c) - 1
    if c[0] != c[-1] or m < 3:
        raise ValueError("need a closed walk with at least three edges")
    hub = ("hub",)
    psi = {hub: cone.base}
    spokes = []
    for i in range(m):
        p = cone.paths[c[i]]
        spoke = [hub] + [("p", i, j) for j in range(1, len(p) - 1)] + [("c", i)]
        for j in range(1, len(p) - 1):
            psi[("p", i, j)] = p[j]
        psi[("c", i)] = c[i]
        spokes.append(spoke)
    outer = [("c", i) for i in range(m)]
    inner = [spokes[i] + list(reversed(spokes[(i + 1) % m]))[:-1] for i in range(m)]
    d = PlaneDiagram.from_faces(outer, inner, psi)
    contractions = {i + 1: cone.contraction(c[i], c[(i + 1) % m]) for i in range(m)}
    return van_kampen_assemble(d, contractions, x)


@dataclass(frozen=True)
class IsoperimetricReport:
    area: int
    cycles: tuple[int, ...]
    triangles: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return all(t <= self.area * m for t, m in zip(self.triangles, self.cycles))

    def to_json(self) -> dict:
        return {"area": self.area, "cycle_lengths": list(self.cycles), "triangles": list(self.triangles), "ok": self.ok}


def isoperimetric_check(x: TwoComplex, cone: Cone, cycles: Iterable[Sequence], area: int | None = None) -> IsoperimetricReport:
    """Contract each cycle through the cone fan and compare with ``Area · length``."""
    if area is None:
        area = cone_area(cone, x)
    lengths, counts = [], []
    for cyc in cycles:
        c = fan_contraction(cone, cyc, x)
        verify_contraction(c, x).raise_if_invalid()
        lengths.append(len(cyc) - 1)
        counts.append(c.triangles)
    return IsoperimetricReport(area, tuple(lengths), tuple(counts))


# ------------------------------------------------------ the worked example


def worked_example() -> tuple:
    """A 9-vertex complex, a 7-cycle and a diagram whose faces need 2, 3 and 2 triangles.

    Returns ``(complex, diagram, inner contractions, cycle)``.  One diagram
    vertex (``v8``) shares the label ``x4`` with ``v4``.
    """
    from .cayley import SimplicialComplex

    tris = [(1, 2, 6), (1, 6, 3), (3, 5, 6), (3, 5, 7), (3, 7, 9), (3, 4, 9), (1, 3, 4), (2, 6, 8), (5, 6, 8), (5, 7, 8)]
    x = SimplicialComplex.from_top(tris)
    psi = {f"v{i}": i for i in range(1, 10)}
    psi["v8"] = 4
    outer = ["v1", "v2", "v6", "v5", "v7", "v9", "v8", "v4"]
    inner = [["v3", "v9", "v8", "v4", "v1"], ["v1", "v2", "v6", "v5", "v3"], ["v3", "v5", "v7", "v9"]]
    d = PlaneDiagram.from_faces(outer, inner, psi)
    contractions = {
        1: _fan_at(x, (3, 9, 4, 1, 3)),
        2: _fan_at(x, (6, 5, 3, 1, 2, 6)),
        3: _fan_at(x, (3, 5, 7, 9, 3)),
    }
    return x, d, contractions, (1, 2, 6, 5, 7, 9, 4, 1)


def _fan_at(x: TwoComplex, cycle: Sequence) -> Contraction:
    """Triangulate a polygon by the diagonals from its first vertex."""
    c = tuple(cycle)
    m = len(c) - 1
    apex = c[0]
    tr = _Tracer(c)
    for _ in range(m - 2):
        tr.push((TR_OUT, 0, None))
    tr.push((BT_OUT, 0, None))
    out = tr.contraction()
    verify_contraction(out, x).raise_if_invalid()
    if apex != out.final()[0]:
        raise AssertionError("fan ended away from the apex")
    return out


# ------------------------------------------------------ Johnson link cone


def _low_bits(mask: int, count: int) -> int:
    """The ``count`` lowest set bits of ``mask``."""
    out = 0
    while count > 0:
        if mask == 0:
            raise ValueError("not enough coordinates")
        low = mask & -mask
        out |= low
        mask ^= low
        count -= 1
    return out


def _split_halves(mask: int, size: int) -> tuple[int, int]:
    first = _low_bits(mask, size)
    return first, mask ^ first


def _common_neighbour(a: int, b: int, w: int, full: int) -> int:
    """A weight-``w`` set meeting ``a`` and ``b`` in ``w/2`` coordinates each, using few outside coordinates."""
    half = w // 2
    both, only_a, only_b, rest = a & b, a & ~b, b & ~a, full & ~(a | b)
    for p in range(half + 1):
        q = r = half - p
        s = w - p - q - r
        if p <= bin(both).count("1") and q <= bin(only_a).count("1") and r <= bin(only_b).count("1") and s <= bin(rest).count("1"):
            return _low_bits(both, p) | _low_bits(only_a, q) | _low_bits(only_b, r) | _low_bits(rest, s)
    raise ValueError("no common neighbour")


def _middle_of_four_cycle(v: int, u: int, w_: int, u2: int, w: int) -> int:
    """Vertex adjacent to ``u, u'`` and spanning triangles with ``v, w`` (``v ∩ w = ∅``)."""

    def part(side: int) -> int:
        x1, x2 = u & side, u2 & side
        t = min(bin(x1 & ~x2).count("1"), w // 4)
        return (_low_bits(x1 & ~x2, t) | _low_bits(x2 & ~x1, t)
                | _low_bits(x1 & x2, w // 4 - t) | _low_bits(side & ~(x1 | x2), w // 4 - t))

    return part(v) | part(w_)


def _disjoint_five_cycle(cycle: Sequence[int], w: int, x: TwoComplex) -> Contraction:
    """9-triangle contraction of a 5-cycle whose non-adjacent vertices are disjoint."""
    v = list(cycle[:5])
    q = w // 4
    a, b, c, d, e = (v[i - 1] & v[i] for i in range(5))
    (a1, _), (b1, _), (c1, c2), (d1, _), (e1, e2) = (_split_halves(t, q) for t in (a, b, c, d, e))
    v5 = b1 | c1 | d1 | e1
    v6 = a1 | b1 | c2 | e1
    v7 = a1 | b1 | d1 | e2
    psi = {i: v[i] for i in range(5)}
    psi.update({5: v5, 6: v6, 7: v7})
    tris = [(1, 2, 5), (2, 3, 5), (3, 5, 7), (5, 6, 7), (1, 5, 6), (0, 1, 6), (3, 4, 7), (4, 6, 7), (0, 6, 4)]
    dg = PlaneDiagram.from_faces([0, 1, 2, 3, 4], [list(t) for t in tris], psi)
    faces = dg.faces()
    return van_kampen_assemble(dg, {k: _triangle_for(dg, faces[k]) for k in range(1, len(faces))}, x, check_connectivity=False)


def _link_four_cycle(cycle: Sequence[int], w: int, x: TwoComplex) -> Contraction:
    v, u, w_, u2 = cycle[:4]
    z = _middle_of_four_cycle(v, u, w_, u2, w)
    return middle_path_contract((v, u, w_, u2, v), (u, z, u2), x)


def _link_pentagon(cycle: Sequence[int], w: int, x: TwoComplex) -> Contraction:
    """17-triangle contraction of ``(z, w1, c1, c2, w2)`` with ``z`` disjoint from ``c1, c2``."""
    z, w1, c1, c2, w2 = cycle[:5]
    s1, s2 = _split_halves(z, w // 2)
    v1p = s1 | (c1 & ~c2)
    v4p = s2 | (c2 & ~c1)
    psi = {"z": z, "w1": w1, "c1": c1, "c2": c2, "w2": w2, "p1": v1p, "p4": v4p}
    dg = PlaneDiagram.from_faces(
        ["z", "w1", "c1", "c2", "w2"],
        [["z", "w1", "c1", "p1"], ["z", "p1", "c1", "c2", "p4"], ["z", "p4", "c2", "w2"]],
        psi,
    )
    inner = {
        1: _link_four_cycle((z, w1, c1, v1p), w, x),
        2: _disjoint_five_cycle((z, v1p, c1, c2, v4p), w, x),
        3: _link_four_cycle((z, v4p, c2, w2), w, x),
    }
    return van_kampen_assemble(dg, inner, x)


def link_cycle_contraction(cycle: Sequence[int], x, n: int | None = None) -> Contraction:
    """Fan a decoding cycle of the link around a vertex disjoint from it (17 triangles per edge)."""
    w = x.w
    n = x.n if n is None else n
    full = (1 << n) - 1
    c = tuple(cycle)
    m = len(c) - 1
    used = 0
    for v in c:
        used |= v
    z = _low_bits(full & ~used, w)
    spokes = [_common_neighbour(z, c[i], w, full) for i in range(m)]
    psi = {"z": z}
    psi.update({("w", i): spokes[i] for i in range(m)})
    psi.update({("c", i): c[i] for i in range(m)})
    outer = [("c", i) for i in range(m)]
    inner = [["z", ("w", i), ("c", i), ("c", (i + 1) % m), ("w", (i + 1) % m)] for i in range(m)]
    dg = PlaneDiagram.from_faces(outer, inner, psi)
    contractions = {
        i + 1: _link_pentagon((z, spokes[i], c[i], c[(i + 1) % m], spokes[(i + 1) % m]), w, x) for i in range(m)
    }
    return van_kampen_assemble(dg, contractions, x)


def _membership_counts(cycles: np.ndarray, n: int) -> np.ndarray:
    """Per row, how many coordinates have each membership pattern across the row's sets."""
    rows, length = cycles.shape
    counts = np.zeros((rows, 1 << length), dtype=np.int16)
    idx = np.arange(rows)
    for j in range(n):
        pattern = np.zeros(rows, dtype=np.int64)
        for k in range(length):
            pattern |= ((cycles[:, k] >> j) & 1) << k
        np.add.at(counts, (idx, pattern), 1)
    return counts


def _transport(src: Sequence[int], dst: Sequence[int], n: int) -> Callable[[int], int]:
    """A coordinate permutation taking each set of ``src`` to the matching set of ``dst``."""
    def pattern(sets, j):
        return tuple((s >> j) & 1 for s in sets)

    groups_src: dict = defaultdict(list)
    groups_dst: dict = defaultdict(list)
    for j in range(n):
        groups_src[pattern(src, j)].append(j)
        groups_dst[pattern(dst, j)].append(j)
    perm = [0] * n
    for key, js in groups_src.items():
        ks = groups_dst.get(key, [])
        if len(ks) != len(js):
            raise ValueError("cycles lie in different orbits")
        for a, b in zip(js, ks):
            perm[a] = b

    def apply(v: int) -> int:
        out = 0
        for j in range(n):
            if (v >> j) & 1:
                out |= 1 << perm[j]
        return out

    return apply


class _TransportedContractions(Mapping):
    """Lazy ``S_uw``: the contraction built for the orbit representative, moved by a coordinate permutation."""

    def __init__(self, edges: list[tuple], cycles: Mapping, reps: list[tuple], rep_of: Mapping, built: Mapping, n: int) -> None:
        self._edges = edges
        self._cycles = cycles
        self._reps = reps
        self._rep_of = rep_of
        self._built = built
        self._n = n

    def __getitem__(self, key: tuple) -> Contraction:
        r = self._rep_of[key]
        rep_edge = self._reps[r]
        base = self._built[rep_edge]
        if key == rep_edge:
            return base
        return base.map_vertices(_transport(self._cycles(*rep_edge), self._cycles(*key), self._n))

    def __iter__(self):
        return iter(self._edges)

    def __len__(self) -> int:
        return len(self._edges)


@dataclass(frozen=True)
class LinkConeReport:
    n: int
    w: int
    vertices: int
    edges: int
    orbits: int
    area: int
    bound: int
    per_orbit: tuple[int, ...]
    sampled: int
    sampled_ok: bool

    @property
    def ok(self) -> bool:
        return self.area <= self.bound and self.sampled_ok

    def to_json(self) -> dict:
        return {
            "n": self.n, "w": self.w, "vertices": self.vertices, "edges": self.edges, "orbits": self.orbits,
            "area": self.area, "bound": self.bound, "tr_counts": sorted(set(self.per_orbit)),
            "sampled_replays": self.sampled, "sampled_ok": self.sampled_ok, "ok": self.ok,
        }


LINK_CONE_BOUND = 85


def build_johnson_link_cone(x, samples: int = 200, seed: int = 0) -> tuple[Cone, LinkConeReport]:
    """Cone of area at most 85 on the link complex (weight-``w`` sets of ``[n]``, needs ``n ≥ 4w``).

    ``P_u`` is a path of length two from the lowest set.  Decoding cycles are
    grouped into coordinate-permutation orbits by their membership-pattern
    counts; one contraction per orbit is built and replayed, the rest are
    obtained by permuting coordinates (an automorphism of the complex), and
    ``samples`` of those are replayed too.
    """
    n, w = x.n, x.w
    if w % 4 or n < 4 * w:
        raise ValueError("need 4 | w and n ≥ 4w")
    full = (1 << n) - 1
    verts = x.vertices()
    check_budget(len(verts) * len(x.neighbours(verts[0])), "link cone edges")
    v0 = min(verts)
    paths = {v0: (v0,)}
    for u in verts:
        if u != v0:
            paths[u] = (v0, _common_neighbour(v0, u, w, full), u)
    edges = [(u, v) for u in verts for v in x.neighbours(u) if u < v]

    def cycle_of(u, v):
        return paths[u] + tuple(reversed(paths[v]))

    reps: list[tuple] = []
    rep_of: dict = {}
    for length in sorted({len(cycle_of(*e)) for e in edges}):
        group = [e for e in edges if len(cycle_of(*e)) == length]
        arr = np.array([cycle_of(*e)[:-1] for e in group], dtype=np.int64)
        keys = _membership_counts(arr, n)
        _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
        offset = len(reps)
        reps.extend(group[i] for i in first)
        for e, r in zip(group, np.asarray(inverse).ravel()):
            rep_of[e] = offset + int(r)
    built = {}
    per_orbit = []
    for e in reps:
        c = link_cycle_contraction(cycle_of(*e), x)
        verify_contraction(c, x).raise_if_invalid()
        built[e] = c
        per_orbit.append(c.triangles)
    lazy = _TransportedContractions(edges, cycle_of, reps, rep_of, built, n)
    cone = Cone(v0, paths, lazy)
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(edges), size=min(samples, len(edges)), replace=False)
    sampled_ok = True
    for i in picks:
        e = edges[int(i)]
        c = cone.contraction(*e)
        sampled_ok &= c.start == cycle_of(*e) and verify_contraction(c, x).ok
    report = LinkConeReport(n, w, len(verts), len(edges), len(reps), max(per_orbit), LINK_CONE_BOUND,
                            tuple(per_orbit), len(picks), bool(sampled_ok))
    return cone, report


# ---------------------------------------------------------- Johnson cone


def _pc(x: int) -> int:
    return bin(x).count("1")


@dataclass(frozen=True)
class WeightComplex:
    """Implicit 2-complex on even-weight vectors: ``u ~ v`` when ``wt(u+v)`` lies in ``weights``.

    With ``weights = {w}`` this is the 2-skeleton of ``X_{ε,n}`` (``w = εn``);
    with all even weights up to ``w`` it is the auxiliary complex whose edges
    substitute into paths of length two.
    """

    n: int
    weights: frozenset

    def has_edge(self, u: int, v: int) -> bool:
        return _pc(u ^ v) in self.weights

    def has_triangle(self, u: int, v: int, w: int) -> bool:
        return self.has_edge(u, v) and self.has_edge(v, w) and self.has_edge(u, w)

    def vertices(self) -> list[int]:
        return [v for v in range(1 << self.n) if _pc(v) % 2 == 0]

    def neighbours(self, v: int) -> list[int]:
        return [u for u in self.vertices() if self.has_edge(u, v)]


def _region_solution(a: int, b: int, ground: int, la: int, lb: int, size: int) -> int | None:
    """A subset of ``ground`` of the given size meeting ``a`` in ``la`` and ``b`` in ``lb`` coordinates."""
    both, only_a, only_b = a & b, a & ~b, b & ~a
    rest = ground & ~(a | b)
    for p in range(min(la, lb) + 1):
        q, r = la - p, lb - p
        s = size - p - q - r
        if s < 0 or p > _pc(both) or q > _pc(only_a) or r > _pc(only_b) or s > _pc(rest):
            continue
        return _low_bits(both, p) | _low_bits(only_a, q) | _low_bits(only_b, r) | _low_bits(rest, s)
    return None


@dataclass
class JohnsonConeStats:
    xprime_four_cycle_max: int = 0
    x_four_cycle_max: int = 0
    x_four_cycle_path_max: int = 0
    six_cycle_max: int = 0
    split_fallbacks: int = 0
    two_step_fallbacks: int = 0
    parity_patches: int = 0


class _JohnsonConeBuilder:
    def __init__(self, n: int, w: int) -> None:
        if w % 4 or w == 0 or 2 * w > n:
            raise ValueError("need 4 | εn and ε ≤ 1/2")
        self.n = n
        self.w = w
        self.full = (1 << n) - 1
        self.x = WeightComplex(n, frozenset({w}))
        self.xp = WeightComplex(n, frozenset(range(2, w + 1, 2)))
        self.stats = JohnsonConeStats()
        self._six: dict[frozenset, Contraction] = {}

    # -- the auxiliary complex

    def path(self, v: int) -> Walk:
        """Half-step lexicographic path from 0: add ``εn/2`` coordinates at a time in increasing order."""
        out = [0]
        cur = 0
        rest = v
        while rest:
            step = _low_bits(rest, min(self.w // 2, _pc(rest)))
            cur |= step
            rest ^= step
            out.append(cur)
        return tuple(out)

    def xprime_face(self, walk: Sequence[int]) -> Contraction:
        """Contract a face of the auxiliary complex: a point, a backtrack, a triangle or a monotone 4-cycle."""
        c = collapse(walk)
        if len(c) == 1:
            return Contraction(c, ())
        try:
            return backtrack_contraction(c)
        except ValueError:
            pass
        if len(c) == 4:
            if not self.xp.has_triangle(*c[:3]):
                raise ValueError(f"{c!r} is not a triangle of the auxiliary complex")
            return triangle_contraction(*c[:3])
        if len(c) == 5:
            for s in range(4):
                r = c[s:4] + c[:s + 1]
                if r[0] & ~r[1] == 0 and r[0] & ~r[3] == 0 and (r[1] | r[3]) & ~r[2] == 0:
                    return conform(self.monotone_four_cycle(r), c)
        raise ValueError(f"no contraction rule for {c!r}")

    def monotone_four_cycle(self, c: Sequence[int]) -> Contraction:
        """At most 4 triangles for ``(v0, v1, v2, v1')`` with ``v0 ⊆ v1, v1' ⊆ v2``."""
        v0, v1, v2, v1b = c[:4]
        xp = self.xp
        if _pc(v2 ^ v0) <= self.w:
            out = _fan_at(xp, tuple(c[:4]) + (v0,))
        elif v1 == v1b:
            out = backtrack_contraction(tuple(c[:4]) + (v0,))
        elif _pc(v1 ^ v1b) <= self.w:
            out = middle_path_contract((v0, v1, v2, v1b, v0), (v1, v1b), xp)
        else:
            mid = None
            b, cc = v1 & ~v1b, v1b & ~v1
            if _pc(b) % 2 == 0 and _pc(cc) % 2 == 0:
                cand = v1 ^ _low_bits(b, _pc(b) // 2) ^ _low_bits(cc, _pc(cc) // 2)
                if self._good_middle(v0, v1, v2, v1b, cand):
                    mid = cand
            if mid is None:
                self.stats.split_fallbacks += 1
                mid = self._search_middle(v0, v1, v2, v1b)
            out = middle_path_contract((v0, v1, v2, v1b, v0), (v1, mid, v1b), self.xp)
        self.stats.xprime_four_cycle_max = max(self.stats.xprime_four_cycle_max, out.triangles)
        return out

    def _good_middle(self, v0, v1, v2, v1b, m) -> bool:
        t = self.xp.has_triangle
        return _pc(m) % 2 == 0 and t(v0, v1, m) and t(v2, v1, m) and t(v0, m, v1b) and t(v2, m, v1b)

    def _search_middle(self, v0, v1, v2, v1b) -> int:
        lo, free = v1 & v1b, v1 ^ v1b
        bits = [1 << j for j in range(self.n) if free >> j & 1]
        for r in range(len(bits) + 1):
            for pick in itertools.combinations(bits, r):
                m = lo | sum(pick)
                if self._good_middle(v0, v1, v2, v1b, m):
                    return m
        raise ValueError(f"monotone 4-cycle {(v0, v1, v2, v1b)!r} has no middle vertex")

    def monotone_cycle(self, p1: Walk, p2: Walk, top: int) -> Contraction:
        """``(8m-2)``-contraction of ``p1 ∘ (x, top) ∘ (top, y) ∘ p2^{-1}`` for equal-length lexicographic paths."""
        m = len(p1) - 1
        if len(p2) != len(p1):
            raise ValueError("paths must have equal length")
        cycle = tuple(p1) + (top,) + tuple(reversed(p2))
        if m == 0:
            return backtrack_contraction(cycle)
        a = [0] * (m + 2)
        a[m + 1] = top
        for i in range(m, 0, -1):
            cur = p1[i] | p2[i]
            if _pc(cur) % 2:
                self.stats.parity_patches += 1
                cur |= _low_bits(a[i + 1] & ~cur, 1)
            a[i] = cur
        psi = {"0": 0, "A": top}
        for i in range(1, m + 1):
            psi[("b", i)], psi[("c", i)], psi[("a", i)] = p1[i], p2[i], a[i]
        outer = ["0"] + [("b", i) for i in range(1, m + 1)] + ["A"] + [("c", i) for i in range(m, 0, -1)]
        inner = [["0", ("b", 1), ("a", 1), ("c", 1)]]
        for i in range(1, m):
            inner.append([("b", i), ("b", i + 1), ("a", i + 1), ("a", i)])
            inner.append([("c", i), ("c", i + 1), ("a", i + 1), ("a", i)])
        inner.append([("b", m), "A", ("a", m)])
        inner.append([("c", m), "A", ("a", m)])
        return self._assemble(outer, inner, psi, self.xprime_face, self.xp)

    def _assemble(self, outer, inner, psi, face_rule, x) -> Contraction:
        d = PlaneDiagram.from_faces(outer, inner, psi)
        contractions = {k + 1: face_rule(tuple(psi[v] for v in f) + (psi[f[0]],)) for k, f in enumerate(inner)}
        return van_kampen_assemble(d, contractions, x, check_connectivity=False)

    def xprime_cone_contraction(self, u: int, v: int) -> Contraction:
        """Contraction of ``P_u ∘ (u, v) ∘ P_v^{-1}`` in the auxiliary complex."""
        pu, pv = self.path(u), self.path(v)
        if len(pu) < len(pv):
            return self.xprime_cone_contraction(v, u).reversed()
        top = u | v
        if _pc(top) % 2:
            self.stats.parity_patches += 1
            top |= _low_bits(self.full & ~top, 1)
        k, j = len(pu) - 1, len(pv) - 1
        psi = {"0": 0, "T": top}
        for i in range(1, k + 1):
            psi[("p", i)] = pu[i]
        for i in range(1, j + 1):
            psi[("q", i)] = pv[i]
        P = ["0"] + [("p", i) for i in range(1, k + 1)]
        Q = ["0"] + [("q", i) for i in range(1, j + 1)]
        if j == 0:
            return self.xprime_face(pu + (0,))
        outer = P + list(reversed(Q[1:]))
        x_h = P[j]
        inner = []
        rules = []
        main = P[:j + 1] + ["T"] + list(reversed(Q[1:]))
        inner.append(main)
        rules.append(lambda walk, pu=pu, pv=pv, j=j, top=top: conform(self.monotone_cycle(pu[:j + 1], pv, top), walk))
        inner.append([P[k], Q[j], "T"])
        rules.append(self.xprime_face)
        if k > j:
            inner.append([x_h, P[k], "T"])
            rules.append(self.xprime_face)
            if k == j + 2:
                inner.append([x_h, P[j + 1], P[k]])
                rules.append(self.xprime_face)
        d = PlaneDiagram.from_faces(outer, inner, psi)
        contractions = {}
        for idx, (f, rule) in enumerate(zip(inner, rules)):
            contractions[idx + 1] = rule(collapse(tuple(psi[v] for v in f) + (psi[f[0]],)))
        out = van_kampen_assemble(d, contractions, self.xp, check_connectivity=False)
        return conform(out, pu + tuple(reversed(pv)))

    # -- substitution into the Johnson complex

    def midpoint(self, a: int, b: int) -> int:
        """Middle vertex of the 2-substitution of the edge ``{a, b}`` (symmetric in ``a, b``)."""
        x = min(a, b)
        s = a ^ b
        t1 = _low_bits(s, _pc(s) // 2)
        r = _low_bits(self.full & ~s, self.w - _pc(s) // 2)
        return x ^ r ^ t1

    def compose(self, walk: Sequence[int]) -> Walk:
        out = [walk[0]]
        for a, b in zip(walk, walk[1:]):
            out += [self.midpoint(a, b), b]
        return tuple(out)

    def x_four_cycle(self, c: Sequence[int]) -> Contraction:
        """At most 8 triangles for any 4-cycle of the Johnson complex, via a middle path of length ≤ 4."""
        v0 = c[0]
        t = tuple(v ^ v0 for v in c[:4])
        _, v1, v2, v1b = t
        if v2 == 0 or v1 == v1b:
            out = backtrack_contraction(t + (0,))
        else:
            path = self._g_path(v1, v2, v1b)
            self.stats.x_four_cycle_path_max = max(self.stats.x_four_cycle_path_max, len(path) - 1)
            out = middle_path_contract(t + (0,), path, self.x)
        self.stats.x_four_cycle_max = max(self.stats.x_four_cycle_max, out.triangles)
        return out.map_vertices(lambda z: z ^ v0) if v0 else out

    def _g_path(self, v1: int, v2: int, v1b: int) -> Walk:
        w = self.w
        if _pc(v1 ^ v1b) == w:
            return (v1, v1b)
        tt = _pc(v2)
        outside = self.full & ~v2
        nodes = [y for y in _subsets_of(self.full, w) if _pc(y ^ v2) == w]

        def step(p: int, q: int) -> int | None:
            """Common neighbour: a ``ceil`` edge from ``p`` then a ``floor`` edge to ``q``."""
            hc, hf = -(-tt // 4), tt // 4
            x = _region_solution(p & v2, q & v2, v2, hc, hf, tt // 2)
            y = _region_solution(p & outside, q & outside, outside, w // 2 - hc, w // 2 - hf, w - tt // 2)
            if x is None or y is None:
                return None
            alpha = x | y
            if alpha in (p, q) or _pc(alpha ^ p) != w or _pc(alpha ^ q) != w:
                return None
            return alpha

        for beta in nodes:
            if beta in (v1, v1b):
                continue
            a1 = step(v1, beta)
            a2 = step(v1b, beta)
            if a1 is not None and a2 is not None:
                return (v1, a1, beta, a2, v1b)
        self.stats.two_step_fallbacks += 1
        prev = {v1: None}
        frontier = [v1]
        while frontier and v1b not in prev:
            nxt = []
            for y in frontier:
                for z in nodes:
                    if z not in prev and _pc(y ^ z) == w:
                        prev[z] = y
                        nxt.append(z)
            frontier = nxt
        if v1b not in prev:
            raise ValueError("common-neighbour graph is disconnected")
        path = [v1b]
        while prev[path[-1]] is not None:
            path.append(prev[path[-1]])
        return tuple(reversed(path))

    def six_cycle(self, u: int, v: int, w_: int) -> Contraction:
        """At most 40 triangles for the composed boundary of an auxiliary triangle ``{u, v, w}``."""
        key = frozenset((u, v, w_))
        if key not in self._six:
            u, v, w_ = sorted(key)
            cyc = self.compose((u, v, w_, u))
            t = tuple(z ^ u for z in cyc)
            self._six[key] = self._six_at_zero(t).map_vertices(lambda z: z ^ u) if u else self._six_at_zero(t)
            self.stats.six_cycle_max = max(self.stats.six_cycle_max, self._six[key].triangles)
        return self._six[key]

    def _six_at_zero(self, cyc: Walk) -> Contraction:
        _, a, v, b, w_, c = cyc[:6]
        eps_n = self.w
        only_v, both, only_w = v & ~w_, v & w_, w_ & ~v
        outside = self.full & ~(v | w_)
        if _pc(both) % 2 == 0:
            la, lc = _split_halves(only_v, _pc(only_v) // 2)
            ma, mc = _split_halves(both, _pc(both) // 2)
            ra, rc = _split_halves(only_w, _pc(only_w) // 2)
            extra = 0
            xs = _low_bits(outside, eps_n - _pc(v | w_) // 2)
        else:
            la, rest_l = _split_halves(only_v, _pc(only_v) // 2)
            lc = _low_bits(rest_l, _pc(only_v) // 2)
            ma, rest_m = _split_halves(both, _pc(both) // 2)
            mc = _low_bits(rest_m, _pc(both) // 2)
            extra = rest_m & ~mc
            ra, rest_r = _split_halves(only_w, _pc(only_w) // 2)
            rc = _low_bits(rest_r, _pc(only_w) // 2)
            xs = _low_bits(outside, eps_n - _pc(v | w_) // 2)
        ap = la | ma | ra | extra | xs
        bp = la | ma | rc | extra | xs
        cp = lc | mc | rc | extra | xs
        psi = {"0": 0, "a": a, "v": v, "b": b, "w": w_, "c": c, "a'": ap, "b'": bp, "c'": cp}
        for name in ("a'", "b'", "c'"):
            if _pc(psi[name]) != eps_n:
                raise AssertionError(f"auxiliary vertex {name} has the wrong weight")
        outer = ["0", "a", "v", "b", "w", "c"]
        inner = [["0", "a", "v", "a'"], ["v", "b", "w", "b'"], ["w", "c", "0", "c'"], ["0", "a'", "v", "b'"], ["0", "b'", "w", "c'"]]
        return self._assemble(outer, inner, psi, self.x_four_cycle, self.x)

    def lift(self, c: Contraction, uv: tuple[int, int]) -> Contraction:
        """Turn an auxiliary-complex contraction of a decoding cycle into one of its composition in the Johnson complex."""
        u, v = uv
        start = self.compose(c.start)
        tr = _Tracer(start)
        for kind, i, z in c.moves:
            walk = tr.walk
            if kind == BT_IN:
                a = walk[2 * i]
                tr.excursion(2 * i, (a, self.midpoint(a, z), z))
            elif kind == BT_OUT:
                tr.push((BT_OUT, 2 * i + 1, None))
                tr.push((BT_OUT, 2 * i, None))
            elif kind == TR_IN:
                a, b = walk[2 * i], walk[2 * i + 2]
                tr.excursion(2 * i, (a, self.midpoint(a, z), z, self.midpoint(z, b), b))
                target = tuple(tr.walk[2 * i + 4:2 * i + 11])
                tr.splice(conform(self.six_cycle(a, z, b), target), 2 * i + 4)
            else:
                a, z_, b = walk[2 * i], walk[2 * i + 2], walk[2 * i + 4]
                tr.excursion(2 * i, (a, self.midpoint(a, b), b))
                target = tuple(tr.walk[2 * i + 2:2 * i + 9])
                tr.splice(conform(self.six_cycle(a, z_, b), target), 2 * i + 2)
        return tr.contraction()


def _subsets_of(ground: int, size: int) -> list[int]:
    bits = [1 << j for j in range(ground.bit_length()) if ground >> j & 1]
    return [sum(c) for c in itertools.combinations(bits, size)]


@dataclass(frozen=True)
class JohnsonConeReport:
    n: int
    w: int
    vertices: int
    aux_edges: int
    edges: int
    aux_area: int
    area: int
    six_cycle_max: int
    budget: int
    aux_bound_16: int
    aux_bound_8: int
    stats: JohnsonConeStats

    @property
    def ok(self) -> bool:
        return (self.area <= self.budget and self.six_cycle_max <= 40
                and self.stats.xprime_four_cycle_max <= 4 and self.stats.x_four_cycle_max <= 8)

    def to_json(self) -> dict:
        return {
            "n": self.n, "eps_n": self.w, "vertices": self.vertices,
            "aux_edges": self.aux_edges, "edges": self.edges,
            "aux_area": self.aux_area, "aux_bound_16_over_eps": self.aux_bound_16, "aux_bound_8_variant": self.aux_bound_8,
            "six_cycle_max": self.six_cycle_max, "area": self.area, "budget": self.budget,
            "monotone_four_cycle_max": self.stats.xprime_four_cycle_max,
            "four_cycle_max": self.stats.x_four_cycle_max, "four_cycle_path_max": self.stats.x_four_cycle_path_max,
            "split_fallbacks": self.stats.split_fallbacks, "two_step_fallbacks": self.stats.two_step_fallbacks,
            "parity_patches": self.stats.parity_patches, "ok": self.ok,
        }


def build_johnson_cone(n: int, eps, x: TwoComplex | None = None) -> tuple[Cone, Cone, JohnsonConeReport]:
    """Cone for the 2-dimensional Johnson complex, built through the auxiliary complex.

    Returns ``(auxiliary cone, cone, report)``.  Every contraction of both
    cones is replayed: the auxiliary one against its own complex and the
    composed one against ``x`` (the Johnson complex; default: the weight test).
    Each composed contraction first inserts the substitution midpoint of its
    own edge (one extra triangle) and then lifts the auxiliary contraction
    move by move, spending at most 40 triangles per auxiliary triangle.
    """
    eps = Fraction(eps)
    w = eps * n
    if w.denominator != 1:
        raise ValueError("εn must be an integer")
    b = _JohnsonConeBuilder(n, int(w))
    x = b.x if x is None else x
    verts = b.x.vertices()
    check_budget(len(verts) * len(verts), "Johnson cone vertex pairs")
    aux_paths = {v: b.path(v) for v in verts}
    aux_edges = [(u, v) for u in verts for v in verts if u < v and b.xp.has_edge(u, v)]
    aux_contractions = {}
    for u, v in aux_edges:
        c = b.xprime_cone_contraction(u, v)
        verify_contraction(c, b.xp).raise_if_invalid()
        aux_contractions[(u, v)] = c
    aux_cone = Cone(0, aux_paths, aux_contractions)
    paths = {v: b.compose(p) for v, p in aux_paths.items()}
    contractions = {}
    for u, v in aux_edges:
        if not b.x.has_edge(u, v):
            continue
        pu, pv = paths[u], paths[v]
        tr = _Tracer(pu + tuple(reversed(pv)))
        tr.push((TR_IN, len(pu) - 1, b.midpoint(u, v)))
        tr.splice(b.lift(aux_contractions[(u, v)], (u, v)), 0)
        c = tr.contraction()
        verify_contraction(c, x).raise_if_invalid()
        contractions[(u, v)] = c
    cone = Cone(0, paths, contractions)
    aux_area = max(c.triangles for c in aux_contractions.values())
    area = max(c.triangles for c in contractions.values())
    report = JohnsonConeReport(
        n, int(w), len(verts), len(aux_edges), len(contractions), aux_area, area, b.stats.six_cycle_max,
        int(16 / eps) * 40, int(16 / eps), int(8 * (2 / eps - 1)), b.stats,
    )
    return aux_cone, cone, report


# ------------------------------------------------------------ matrix link


class MatrixLinkError(RuntimeError):
    """A construction step of the matrix-link cone failed; ``claim`` names the step."""

    def __init__(self, claim: str, detail: str) -> None:
        super().__init__(f"{claim}: {detail}")
        self.claim = claim
        self.detail = detail


def _combine(mask: int, vecs: Sequence[int]) -> int:
    out = 0
    for t in bits_of(mask):
        out ^= vecs[t]
    return out


def part_with_spaces(a: BitMatrix, rows: Subspace, cols: Subspace) -> BitMatrix | None:
    """The unique ``B ≤ A`` with ``row(B) = rows`` and ``col(B) = cols``, or None.

    With ``A = Σ e_t ⊗ f_t``, ``B = E P Fᵀ`` for the idempotent ``P`` whose
    image is the coordinates of ``cols`` and whose row image is the
    coordinates of ``rows``.
    """
    if rows.dim != cols.dim:
        return None
    pairs = rank_decomposition(a)
    es = [e for e, _ in pairs]
    fs = [f for _, f in pairs]
    ic = [coordinates(es, c) for c in cols.basis]
    ys = [coordinates(fs, r) for r in rows.basis]
    if any(t is None for t in ic) or any(t is None for t in ys):
        return None
    gram = [sum(dot(i, y) << l for l, y in enumerate(ys)) for i in ic]
    out = BitMatrix.zero(a.n)
    for j, c in enumerate(cols.basis):
        alpha = solve_linear([(g, int(t == j)) for t, g in enumerate(gram)], len(ys))
        if alpha is None:
            return None
        out = out + BitMatrix.outer(c, _combine(_combine(alpha, ys), fs), a.n)
    return out


def halves(a: BitMatrix) -> tuple[BitMatrix, BitMatrix]:
    """``A = A_1 ⊕ A_2`` with ranks ``⌊r/2⌋`` and ``⌈r/2⌉``, from a rank decomposition."""
    pairs = rank_decomposition(a)
    h = len(pairs) // 2
    return matrix_from_pairs(pairs[:h], a.n), matrix_from_pairs(pairs[h:], a.n)


@dataclass(frozen=True)
class MatrixLinkComplex:
    """Rank-``d/2`` matrices in ``F_2^{n×n}``.

    ``{A_1, A_2}`` is an edge when some rank-``d/4`` ``B`` has
    ``B ⊕ (A_1-B) ⊕ (A_2-B)``; a triangle splits as seven rank-``d/8`` parts
    ``B_1..B_7`` in direct sum with ``A_1 = B_1+B_2+B_3+B_4``,
    ``A_2 = B_1+B_2+B_5+B_6`` and ``A_3 = B_1+B_3+B_5+B_7``.  The shared
    parts are forced: their row and column spaces are the intersections of
    those of the ``A_i``.
    """

    n: int
    d: int

    def __post_init__(self) -> None:
        if self.d <= 0 or self.d % 8:
            raise ValueError("d must be a positive multiple of 8")
        if self.n <= 2 * self.d:
            raise ValueError("need n > 2d")

    def is_vertex(self, a: BitMatrix) -> bool:
        return a.n == self.n and rank(a) == self.d // 2

    def edge_witness(self, a1: BitMatrix, a2: BitMatrix) -> BitMatrix | None:
        if a1 == a2:
            return None
        q = self.d // 4
        rows = intersection(row_space(a1), row_space(a2))
        cols = intersection(col_space(a1), col_space(a2))
        if rows.dim != q or cols.dim != q:
            return None
        b = part_with_spaces(a1, rows, cols)
        if b is None or not is_direct_sum([b, a1 + b, a2 + b]):
            return None
        return b

    def has_edge(self, a1: BitMatrix, a2: BitMatrix) -> bool:
        return self.edge_witness(a1, a2) is not None

    def triangle_parts(self, a1: BitMatrix, a2: BitMatrix, a3: BitMatrix) -> tuple[BitMatrix, ...] | None:
        """``(B_1, ..., B_7)`` for a triangle, or None."""
        e12 = self.edge_witness(a1, a2)
        e13 = self.edge_witness(a1, a3)
        e23 = self.edge_witness(a2, a3)
        if e12 is None or e13 is None or e23 is None:
            return None
        rows = intersection(intersection(row_space(a1), row_space(a2)), row_space(a3))
        cols = intersection(intersection(col_space(a1), col_space(a2)), col_space(a3))
        b1 = part_with_spaces(e12, rows, cols)
        if b1 is None:
            return None
        b2, b3, b5 = e12 + b1, e13 + b1, e23 + b1
        b4 = a1 + b1 + b2 + b3
        b6 = a2 + b1 + b2 + b5
        b7 = a3 + b1 + b3 + b5
        parts = (b1, b2, b3, b4, b5, b6, b7)
        e = self.d // 8
        if any(rank(b) != e for b in parts) or rank(matrix_sum(parts)) != 7 * e:
            return None
        return parts

    def has_triangle(self, a1: BitMatrix, a2: BitMatrix, a3: BitMatrix) -> bool:
        return self.triangle_parts(a1, a2, a3) is not None


def _random_direct(rng: random.Random, n: int, r: int, rows: Subspace, cols: Subspace, tries: int = 1000) -> BitMatrix:
    """A random rank-``r`` matrix whose row and column spaces meet ``rows`` and ``cols`` trivially."""
    for _ in range(tries):
        es = [rng.getrandbits(n) for _ in range(r)]
        fs = [rng.getrandbits(n) for _ in range(r)]
        if span(es + list(cols.basis), n).dim == r + cols.dim and span(fs + list(rows.basis), n).dim == r + rows.dim:
            return matrix_from_pairs(zip(es, fs), n)
    raise MatrixLinkError("direct complement", f"no rank-{r} matrix found after {tries} tries")


def matrix_two_path(a: BitMatrix, b: BitMatrix) -> tuple[BitMatrix, BitMatrix, BitMatrix]:
    """``(A, A_1 ⊕ B_1, B)`` for ``A ⊕ B``, with ``A_1``, ``B_1`` equal-rank halves."""
    if not is_direct_sum([a, b]):
        raise MatrixLinkError("two-path", "endpoints are not a direct sum")
    return a, halves(a)[0] + halves(b)[0], b


def _t_neighbour(p: BitMatrix, u: BitMatrix, m: int, avoid: Iterable[BitMatrix] = ()) -> BitMatrix:
    skip = set(avoid)
    for q in dominated_by(u, rank(p)):
        if q not in skip and t_adjacent(p, q, u, m):
            return q
    raise MatrixLinkError("special four-cycle", "no neighbour in the graph below U")


def _t_common(p: BitMatrix, q: BitMatrix, u: BitMatrix, m: int) -> BitMatrix:
    for r in dominated_by(u, rank(p)):
        if r != p and r != q and t_adjacent(p, r, u, m) and t_adjacent(r, q, u, m):
            return r
    raise MatrixLinkError("special four-cycle", "edge lies in no triangle of the graph below U")


def _walk_of_length(path: Sequence[BitMatrix], length: int, u: BitMatrix, m: int) -> list[BitMatrix] | None:
    """Stretch a path below ``U`` to a walk with exactly ``length`` steps (same ends), or None."""
    walk = list(path)
    extra = length - (len(walk) - 1)
    if extra < 0:
        return None
    if extra % 2:
        if len(walk) > 1:
            walk.insert(1, _t_common(walk[0], walk[1], u, m))
            extra -= 1
        elif extra >= 3:
            p = walk[0]
            q = _t_neighbour(p, u, m)
            walk = [p, q, _t_common(p, q, u, m), p]
            extra -= 3
        else:
            return None
    while extra:
        last = walk[-1]
        walk += [_t_neighbour(last, u, m), last]
        extra -= 2
    return walk


def special_cycle_path(
    z: BitMatrix, a: BitMatrix, c: tuple[BitMatrix, BitMatrix], d: tuple[BitMatrix, BitMatrix]
) -> list[BitMatrix]:
    """A path ``C → D`` whose edges span triangles with both ``Z`` and ``A``.

    ``C = c[0] ⊕ c[1]`` and ``D = d[0] ⊕ d[1]`` with the first parts below
    ``Z`` and the second below ``A``.  Paths between the parts in the graphs
    below ``Z`` and ``A`` are stretched to a common length and added
    coordinatewise.
    """
    if not is_direct_sum([z, a]):
        raise MatrixLinkError("special four-cycle", "Z and A are not a direct sum")
    for part, top in ((c[0], z), (d[0], z), (c[1], a), (d[1], a)):
        if not dominates(part, top):
            raise MatrixLinkError("special four-cycle", "a part is not dominated by its side")
    try:
        pm = short_path_T(c[0], d[0], z)
        pn = short_path_T(c[1], d[1], a)
    except (ValueError, PathConstructionError) as exc:
        raise MatrixLinkError("short paths below U", str(exc)) from exc
    mz, ma = rank(z) // 4, rank(a) // 4
    for length in range(max(len(pm), len(pn)) - 1, max(len(pm), len(pn)) + 3):
        wm = _walk_of_length(pm, length, z, mz)
        wn = _walk_of_length(pn, length, a, ma)
        if wm is not None and wn is not None:
            return [p + q for p, q in zip(wm, wn)]
    raise MatrixLinkError("special four-cycle", "could not equalise path lengths")


@dataclass(frozen=True)
class FiveCycleTiling:
    contraction: Contraction
    triangle_cycle: int
    special_four_cycles: tuple[int, int]


def five_cycle_tiling(
    x: MatrixLinkComplex, z: BitMatrix, spokes: tuple[BitMatrix, BitMatrix], a1: BitMatrix, a2: BitMatrix, validate: bool = True
) -> FiveCycleTiling:
    """Contract ``(Z, C_1, A_1, A_2, C_2)`` with ``C_i = Z_h ⊕ (A_i)_h``.

    ``D = Z_o ⊕ B`` (``B`` the edge witness, ``Z_o`` the other half of ``Z``)
    splits the cycle into the triangle-cycle ``(D, A_1, A_2)``, contracted
    through an apex, and two special 4-cycles ``(Z, C_i, A_i, D)``
    contracted along middle paths.
    """
    b = x.edge_witness(a1, a2)
    if b is None:
        raise MatrixLinkError("five-cycle", "A_1, A_2 is not an edge")
    zh, zo = halves(z)
    dv = zo + b
    k1 = halves(zo)[0]
    apex = k1 + halves(b)[0] + halves(a1 + b)[0] + halves(a2 + b)[0]
    try:
        tri = middle_vertex_contract((dv, a1, a2, dv), apex, x)
    except ValueError as exc:
        raise MatrixLinkError("three-cycle tiling", str(exc)) from exc
    fours = []
    for c, a in zip(spokes, (a1, a2)):
        path = special_cycle_path(z, a, (zh, c + zh), (zo, b))
        try:
            fours.append(middle_path_contract((z, c, a, dv, z), path, x))
        except ValueError as exc:
            raise MatrixLinkError("special four-cycle", str(exc)) from exc
    names = {"z": z, "c1": spokes[0], "a1": a1, "a2": a2, "c2": spokes[1], "d": dv}
    diagram = PlaneDiagram.from_faces(
        ["z", "c1", "a1", "a2", "c2"],
        [["z", "c1", "a1", "d"], ["d", "a1", "a2"], ["z", "d", "a2", "c2"]],
        names,
    )
    whole = van_kampen_assemble(diagram, {1: fours[0], 2: tri, 3: fours[1]}, x if validate else None)
    return FiveCycleTiling(whole, tri.triangles, (fours[0].triangles, fours[1].triangles))


FIVE_CYCLE_BOUND = 51
MATRIX_CONE_BOUND = 459
SPECIAL_FOUR_CYCLE_BOUND = 24


@dataclass(frozen=True)
class MatrixLinkReport:
    n: int
    d: int
    samples: int
    seed: int
    cycle_triangles: tuple[int, ...]
    five_cycle_triangles: tuple[int, ...]
    special_four_cycle_triangles: tuple[int, ...]
    triangle_cycle_triangles: tuple[int, ...]
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return (
            not self.failures
            and all(t <= MATRIX_CONE_BOUND for t in self.cycle_triangles)
            and all(t <= FIVE_CYCLE_BOUND for t in self.five_cycle_triangles)
            and all(t <= SPECIAL_FOUR_CYCLE_BOUND for t in self.special_four_cycle_triangles)
            and all(t == 3 for t in self.triangle_cycle_triangles)
        )

    def to_json(self) -> dict:
        def summary(xs: tuple[int, ...]) -> dict:
            return {"count": len(xs), "max": max(xs, default=0), "values": sorted(set(xs))}

        return {
            "n": self.n, "d": self.d, "samples": self.samples, "seed": self.seed,
            "nine_cycles": list(self.cycle_triangles),
            "five_cycles": summary(self.five_cycle_triangles),
            "special_four_cycles": summary(self.special_four_cycle_triangles),
            "three_cycles": summary(self.triangle_cycle_triangles),
            "bounds": {"nine_cycle": MATRIX_CONE_BOUND, "five_cycle": FIVE_CYCLE_BOUND, "special_four_cycle": SPECIAL_FOUR_CYCLE_BOUND},
            "failures": list(self.failures), "ok": self.ok,
        }


class MatrixLinkCone:
    """Cone paths of length four from a root ``M_0``: ``M_0 → · → D_A → · → A`` with ``D_A`` direct with both ends.

    ``D_A`` is drawn from a generator seeded by ``(seed, A)``, so ``P_A``
    depends only on ``A``.
    """

    def __init__(self, x: MatrixLinkComplex, root: BitMatrix, seed: int = 0) -> None:
        if not x.is_vertex(root):
            raise ValueError("root must be a vertex")
        self.x, self.root, self.seed = x, root, seed

    def path(self, a: BitMatrix) -> tuple[BitMatrix, ...]:
        if a == self.root:
            return (a,)
        rng = random.Random(f"{self.seed}:{a.key}")
        rows = row_space(self.root) + row_space(a)
        cols = col_space(self.root) + col_space(a)
        mid = _random_direct(rng, self.x.n, self.x.d // 2, rows, cols)
        first = matrix_two_path(self.root, mid)
        second = matrix_two_path(mid, a)
        return first + second[1:]

    def decoding_cycle(self, a: BitMatrix, b: BitMatrix) -> tuple[BitMatrix, ...]:
        return self.path(a) + tuple(reversed(self.path(b)))

    def contract(self, a: BitMatrix, b: BitMatrix, rng: random.Random, validate: bool = True) -> tuple[Contraction, list[FiveCycleTiling]]:
        """Tile the decoding cycle of ``{A, B}`` by 5-cycles through an apex ``Z``."""
        x = self.x
        cycle = self.decoding_cycle(a, b)
        for u, v in zip(cycle, cycle[1:]):
            if not x.has_edge(u, v):
                raise MatrixLinkError("length-four paths", "decoding cycle uses a non-edge")
        ring = list(dict.fromkeys(cycle[:-1]))
        if len(ring) != len(cycle) - 1:
            raise MatrixLinkError("nine-cycle", "decoding cycle repeats a vertex")
        rows = [row_space(u) + row_space(v) for u, v in zip(cycle, cycle[1:])]
        cols = [col_space(u) + col_space(v) for u, v in zip(cycle, cycle[1:])]
        for _ in range(1000):
            z = _random_direct(rng, x.n, x.d // 2, zero_subspace(x.n), zero_subspace(x.n))
            zr, zc = row_space(z), col_space(z)
            if all(intersection(zr, r).dim == 0 and intersection(zc, c).dim == 0 for r, c in zip(rows, cols)):
                break
        else:
            raise MatrixLinkError("apex", "no apex direct with every edge of the cycle")
        zh = halves(z)[0]
        spokes = {u: zh + halves(u)[0] for u in ring}
        fan = Cone(z, {u: (z, spokes[u], u) for u in ring}, {})
        tilings = []
        contractions = {}
        for u, v in zip(cycle, cycle[1:]):
            t = five_cycle_tiling(x, z, (spokes[u], spokes[v]), u, v, validate)
            tilings.append(t)
            contractions[(u, v)] = t.contraction
        fan = Cone(z, fan.paths, contractions)
        whole = fan_contraction(fan, cycle, x if validate else None)
        return whole, tilings


def matrix_link_contraction_patterns(
    x: MatrixLinkComplex | None = None, samples: int = 3, seed: int = 0, validate: bool = True
) -> MatrixLinkReport:
    """Build, tile and replay the decoding cycles of ``samples`` random edges.

    The complex is far too large to enumerate, so edges ``{A, B}`` are
    sampled: ``B`` keeps one half of ``A`` and adds a random part direct with
    ``A``.
    """
    x = MatrixLinkComplex(17, 8) if x is None else x
    rng = random.Random(seed)
    none = zero_subspace(x.n)
    r = x.d // 2
    root = _random_direct(rng, x.n, r, none, none)
    cone = MatrixLinkCone(x, root, seed)
    nine, five, four, three, failures = [], [], [], [], []
    for s in range(samples):
        a = _random_direct(rng, x.n, r, none, none)
        b = halves(a)[0] + _random_direct(rng, x.n, r // 2, row_space(a), col_space(a))
        try:
            whole, tilings = cone.contract(a, b, rng, validate)
        except MatrixLinkError as exc:
            failures.append(f"sample {s}: {exc}")
            continue
        if validate:
            check = verify_contraction(whole, x)
            if not check.ok:
                failures.append(f"sample {s}: replay failed at move {check.move_index}: {check.reason}")
        if whole.start != cone.decoding_cycle(a, b):
            failures.append(f"sample {s}: contraction does not start at the decoding cycle")
        nine.append(whole.triangles)
        five += [t.contraction.triangles for t in tilings]
        four += [c for t in tilings for c in t.special_four_cycles]
        three += [t.triangle_cycle for t in tilings]
    return MatrixLinkReport(x.n, x.d, samples, seed, tuple(nine), tuple(five), tuple(four), tuple(three), tuple(failures))


__all__ = [
    "BT_IN", "BT_OUT", "TR_IN", "TR_OUT",
    "FIVE_CYCLE_BOUND", "LINK_CONE_BOUND", "MATRIX_CONE_BOUND", "SPECIAL_FOUR_CYCLE_BOUND",
    "BetaReport", "Cochain0", "Cochain1", "Cochain2", "Cone", "Contraction", "ContractionCheck",
    "DiagramError", "FiveCycleTiling", "GroupTable", "IsoperimetricReport", "JohnsonConeReport",
    "JohnsonConeStats", "LinkConeReport", "MatrixLinkComplex", "MatrixLinkCone", "MatrixLinkError",
    "MatrixLinkReport", "PlaneDiagram", "TwoComplex", "WeightComplex",
    "backtrack_contraction", "bfs_paths", "brute_force_beta", "build_johnson_cone",
    "build_johnson_link_cone", "collapse", "cone_area", "cone_beta_bound", "conform", "cyclic_group",
    "delta", "delta0", "delta1", "dist", "fan_contraction", "five_cycle_tiling", "group_by_name",
    "halves", "is_identity", "isoperimetric_check", "link_cycle_contraction",
    "matrix_link_contraction_patterns", "matrix_two_path", "middle_path_contract",
    "middle_vertex_contract", "part_with_spaces", "sign_law_violations", "special_cycle_path",
    "star_cone", "symmetric_group_3", "triangle_contraction", "triangle_test", "van_kampen_assemble",
    "verify_contraction", "worked_example", "wt",
]
