"""Exact GF(2) linear algebra on int bitsets.

Vectors are Python ints; bit ``j`` is coordinate ``j`` (column 0 is the
least significant bit).  A matrix stores one int per row.  The rank-one
matrix ``e (x) f`` has column space ``span(e)`` and row space ``span(f)``:
row ``i`` equals ``f`` when bit ``i`` of ``e`` is set.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

DEFAULT_CAP = 1 << 24


class BudgetExceeded(RuntimeError):
    """An enumeration would exceed the configured element cap."""


def enumeration_cap() -> int:
    """Element cap for enumerations; ``HDX_BUDGET`` overrides the default."""
    raw = os.environ.get("HDX_BUDGET")
    return int(raw) if raw else DEFAULT_CAP


def check_budget(count: int, what: str, cap: int | None = None) -> None:
    limit = enumeration_cap() if cap is None else cap
    if count > limit:
        raise BudgetExceeded(f"{what}: {count} elements exceeds cap {limit}")


def popcount(x: int) -> int:
    return bin(x).count("1")


def dot(x: int, y: int) -> int:
    return popcount(x & y) & 1


def bits_of(x: int) -> list[int]:
    out = []
    while x:
        low = x & -x
        out.append(low.bit_length() - 1)
        x ^= low
    return out


def vector_str(x: int, n: int) -> str:
    """Bitstring with coordinate 0 first."""
    return "".join("1" if (x >> j) & 1 else "0" for j in range(n))


def parse_vector(text: str) -> int:
    return sum(1 << j for j, ch in enumerate(text.strip()) if ch == "1")


@dataclass(frozen=True)
class BitVector:
    bits: int
    n: int

    def __post_init__(self) -> None:
        if self.n <= 0 or self.bits >> self.n:
            raise ValueError("vector does not fit in declared length")

    @property
    def weight(self) -> int:
        return popcount(self.bits)

    def __add__(self, other: BitVector) -> BitVector:
        if other.n != self.n:
            raise ValueError("length mismatch")
        return BitVector(self.bits ^ other.bits, self.n)

    def __str__(self) -> str:
        return vector_str(self.bits, self.n)


def _reduce_into(pivots: dict[int, int], x: int) -> int:
    """Reduce ``x`` against pivots keyed by leading bit; returns the residue."""
    while x:
        top = x.bit_length() - 1
        p = pivots.get(top)
        if p is None:
            return x
        x ^= p
    return 0


def rank_of_rows(rows: Iterable[int]) -> int:
    pivots: dict[int, int] = {}
    for row in rows:
        x = _reduce_into(pivots, row)
        if x:
            pivots[x.bit_length() - 1] = x
    return len(pivots)


def independent(vectors: Sequence[int]) -> bool:
    return rank_of_rows(vectors) == len(vectors)


@dataclass(frozen=True)
class BitMatrix:
    rows: tuple[int, ...]
    n: int

    def __post_init__(self) -> None:
        if len(self.rows) != self.n:
            raise ValueError(f"expected {self.n} rows, got {len(self.rows)}")
        limit = 1 << self.n
        if any(r < 0 or r >= limit for r in self.rows):
            raise ValueError("row does not fit in declared length")

    @classmethod
    def zero(cls, n: int) -> BitMatrix:
        return cls((0,) * n, n)

    @classmethod
    def identity(cls, n: int) -> BitMatrix:
        return cls(tuple(1 << i for i in range(n)), n)

    @classmethod
    def outer(cls, e: int, f: int, n: int) -> BitMatrix:
        return cls(tuple(f if (e >> i) & 1 else 0 for i in range(n)), n)

    @classmethod
    def from_key(cls, key: int, n: int) -> BitMatrix:
        mask = (1 << n) - 1
        return cls(tuple((key >> (i * n)) & mask for i in range(n)), n)

    @classmethod
    def from_lists(cls, entries: Sequence[Sequence[int]]) -> BitMatrix:
        n = len(entries)
        return cls(tuple(sum((v & 1) << j for j, v in enumerate(row)) for row in entries), n)

    @property
    def key(self) -> int:
        """Row-major packing into one int (row ``i`` at bits ``i*n``)."""
        out = 0
        for i, r in enumerate(self.rows):
            out |= r << (i * self.n)
        return out

    def __add__(self, other: BitMatrix) -> BitMatrix:
        _same_shape(self, other)
        return BitMatrix(tuple(a ^ b for a, b in zip(self.rows, other.rows)), self.n)

    __sub__ = __add__

    def __matmul__(self, other: BitMatrix) -> BitMatrix:
        _same_shape(self, other)
        out = []
        for r in self.rows:
            acc = 0
            for j in bits_of(r):
                acc ^= other.rows[j]
            out.append(acc)
        return BitMatrix(tuple(out), self.n)

    def apply(self, x: int) -> int:
        """Matrix-vector product ``M x``."""
        return sum(dot(r, x) << i for i, r in enumerate(self.rows))

    def transpose(self) -> BitMatrix:
        n = self.n
        cols = [0] * n
        for i, r in enumerate(self.rows):
            for j in bits_of(r):
                cols[j] |= 1 << i
        return BitMatrix(tuple(cols), n)

    def is_zero(self) -> bool:
        return not any(self.rows)

    def to_lists(self) -> list[list[int]]:
        return [[(r >> j) & 1 for j in range(self.n)] for r in self.rows]

    def to_text(self) -> str:
        return "\n".join([str(self.n)] + [vector_str(r, self.n) for r in self.rows]) + "\n"

    def to_hex(self) -> str:
        width = max(1, (self.n + 3) // 4)
        return ",".join(format(r, f"0{width}x") for r in self.rows)

    def __str__(self) -> str:
        return "\n".join(vector_str(r, self.n) for r in self.rows)


def parse_matrix(text: str) -> BitMatrix:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    n = int(lines[0])
    rows = [parse_vector(ln) for ln in lines[1 : 1 + n]]
    if len(rows) != n or any(len(ln) != n for ln in lines[1 : 1 + n]):
        raise ValueError("malformed matrix text")
    return BitMatrix(tuple(rows), n)


def parse_hex_matrix(text: str, n: int) -> BitMatrix:
    return BitMatrix(tuple(int(tok, 16) for tok in text.split(",")), n)


def _same_shape(a: BitMatrix, b: BitMatrix) -> None:
    if a.n != b.n:
        raise ValueError(f"shape mismatch: {a.n} vs {b.n}")


def rank(m: BitMatrix) -> int:
    return rank_of_rows(m.rows)


def dominates(a: BitMatrix, m: BitMatrix) -> bool:
    """True iff ``a <= m`` in the domination order."""
    _same_shape(a, m)
    return rank(m) == rank(a) + rank(m + a)


def matrix_sum(parts: Iterable[BitMatrix]) -> BitMatrix:
    parts = list(parts)
    if not parts:
        raise ValueError("empty sum")
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    return total


def is_direct_sum(parts: Sequence[BitMatrix]) -> bool:
    if not parts:
        raise ValueError("is_direct_sum needs at least one part")
    return rank(matrix_sum(parts)) == sum(rank(p) for p in parts)


# ---------------------------------------------------------------- subspaces


@dataclass(frozen=True)
class Subspace:
    """Subspace in reduced echelon form.

    Each basis vector's pivot is its lowest set bit; pivots ascend along the
    basis and every pivot column is cleared in all other basis vectors, so
    equal subspaces have identical ``basis`` tuples.
    """

    basis: tuple[int, ...]
    ambient_dim: int

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def pivots(self) -> tuple[int, ...]:
        return tuple((b & -b).bit_length() - 1 for b in self.basis)

    def contains(self, x: int) -> bool:
        for b in self.basis:
            if x & (b & -b):
                x ^= b
        return x == 0

    def reduce(self, x: int) -> int:
        """Canonical coset representative of ``x`` modulo this subspace."""
        for b in self.basis:
            if x & (b & -b):
                x ^= b
        return x

    def vectors(self) -> list[int]:
        out = [0]
        for b in self.basis:
            out += [v ^ b for v in out]
        return out

    def nonzero_vectors(self) -> list[int]:
        return self.vectors()[1:]

    def __add__(self, other: Subspace) -> Subspace:
        return span(self.basis + other.basis, self.ambient_dim)

    def is_subspace_of(self, other: Subspace) -> bool:
        return all(other.contains(b) for b in self.basis)

    def intersect(self, other: Subspace) -> Subspace:
        return intersection(self, other)

    def orthogonal(self) -> Subspace:
        """The annihilator ``{x : <x, w> = 0 for all w}``."""
        n = self.ambient_dim
        free = [j for j in range(n) if j not in set(self.pivots)]
        out = []
        for j in free:
            x = 1 << j
            for b, p in zip(self.basis, self.pivots):
                if (b >> j) & 1:
                    x |= 1 << p
            out.append(x)
        return span(out, n)

    def __str__(self) -> str:
        return "<" + ",".join(vector_str(b, self.ambient_dim) for b in self.basis) + ">"


def span(vectors: Iterable[int], n: int) -> Subspace:
    by_low: dict[int, int] = {}
    for v in vectors:
        x = v
        while x:
            low = x & -x
            p = by_low.get(low)
            if p is None:
                by_low[low] = x
                break
            x ^= p
    lows = sorted(by_low)
    basis = [by_low[low] for low in lows]
    # back-substitute so each pivot column is clear everywhere else
    for i in range(len(basis) - 1, -1, -1):
        low = lows[i]
        for j in range(len(basis)):
            if j != i and basis[j] & low:
                basis[j] ^= basis[i]
    return Subspace(tuple(basis), n)


def zero_subspace(n: int) -> Subspace:
    return Subspace((), n)


def full_space(n: int) -> Subspace:
    return Subspace(tuple(1 << j for j in range(n)), n)


def intersection(a: Subspace, b: Subspace) -> Subspace:
    # Zassenhaus: rows (x, x) for x in a and (y, 0) for y in b, in a 2n-bit space.
    n = a.ambient_dim
    rows = [(x << n) | x for x in a.basis] + [y << n for y in b.basis]
    pivots: dict[int, int] = {}
    for row in rows:
        x = _reduce_into(pivots, row)
        if x:
            pivots[x.bit_length() - 1] = x
    low_mask = (1 << n) - 1
    return span([v & low_mask for v in pivots.values() if v >> n == 0], n)


def row_space(m: BitMatrix) -> Subspace:
    return span(m.rows, m.n)


def col_space(m: BitMatrix) -> Subspace:
    return span(m.transpose().rows, m.n)


def gaussian_binomial(n: int, k: int) -> int:
    if k < 0 or k > n:
        return 0
    num, den = 1, 1
    for i in range(k):
        num *= (1 << (n - i)) - 1
        den *= (1 << (i + 1)) - 1
    return num // den


def enumerate_subspaces(n: int, k: int) -> Iterator[Subspace]:
    """Every ``k``-dimensional subspace of ``F_2^n`` exactly once (canonical form)."""
    if k < 0 or k > n:
        return
    check_budget(gaussian_binomial(n, k), f"subspaces G({n},{k})")
    for piv in itertools.combinations(range(n), k):
        pivset = set(piv)
        slots = []
        for p in piv:
            slots.append([j for j in range(p + 1, n) if j not in pivset])
        total = sum(len(s) for s in slots)
        for fill in range(1 << total):
            basis = []
            shift = 0
            for p, free in zip(piv, slots):
                v = 1 << p
                for t, j in enumerate(free):
                    if (fill >> (shift + t)) & 1:
                        v |= 1 << j
                shift += len(free)
                basis.append(v)
            yield Subspace(tuple(basis), n)


# ----------------------------------------------------------- decompositions


def rank_decomposition(m: BitMatrix) -> list[tuple[int, int]]:
    """Pairs ``(e_j, f_j)`` with ``m = sum e_j (x) f_j`` and both families independent."""
    basis_rows: list[int] = []
    pivots: dict[int, tuple[int, int]] = {}  # leading bit -> (reduced vector, combination mask)
    coeff = []
    for row in m.rows:
        x, combo = row, 0
        while x:
            top = x.bit_length() - 1
            hit = pivots.get(top)
            if hit is None:
                break
            x ^= hit[0]
            combo ^= hit[1]
        if x:
            # the residue is this row plus the basis rows recorded in combo
            idx = len(basis_rows)
            basis_rows.append(row)
            pivots[x.bit_length() - 1] = (x, combo ^ (1 << idx))
            combo = 1 << idx
        coeff.append(combo)
    # coeff[i] expresses row i in terms of basis_rows
    pairs = []
    for j, f in enumerate(basis_rows):
        e = sum(1 << i for i, c in enumerate(coeff) if (c >> j) & 1)
        pairs.append((e, f))
    return pairs


def matrix_from_pairs(pairs: Iterable[tuple[int, int]], n: int) -> BitMatrix:
    rows = [0] * n
    for e, f in pairs:
        for i in bits_of(e):
            rows[i] ^= f
    return BitMatrix(tuple(rows), n)


def direct_sum_equivalences(a: BitMatrix, b: BitMatrix) -> tuple[bool, bool, bool, bool]:
    """The four equivalent forms of ``a (+) b``, each evaluated independently.

    1. rank additivity
    2. trivial row-space and column-space intersections
    3. ``row(a+b) = row(a) (+) row(b)`` and likewise for columns
    4. joint rank-one decompositions whose left and right factors are independent
    """
    _same_shape(a, b)
    n = a.n
    rows_a, rows_b = row_space(a), row_space(b)
    cols_a, cols_b = col_space(a), col_space(b)
    c1 = rank(a + b) == rank(a) + rank(b)
    c2 = intersection(rows_a, rows_b).dim == 0 and intersection(cols_a, cols_b).dim == 0
    rows_s, cols_s = row_space(a + b), col_space(a + b)
    c3 = (
        rows_s == rows_a + rows_b
        and rows_s.dim == rows_a.dim + rows_b.dim
        and cols_s == cols_a + cols_b
        and cols_s.dim == cols_a.dim + cols_b.dim
    )
    pa, pb = rank_decomposition(a), rank_decomposition(b)
    lefts = [e for e, _ in pa] + [e for e, _ in pb]
    rights = [f for _, f in pa] + [f for _, f in pb]
    c4 = (
        independent(lefts)
        and independent(rights)
        and matrix_from_pairs(pa, n) == a
        and matrix_from_pairs(pb, n) == b
    )
    return c1, c2, c3, c4


def under_identity_certificate(a: BitMatrix) -> list[tuple[int, int]] | None:
    """Dual pairs ``(e_i, f_i)`` with ``a = sum e_i (x) f_i`` and ``<e_i, f_j> = delta_ij``.

    Any two rank decompositions of ``a`` have similar Gram matrices, so the
    Gram matrix of one decomposition is the identity iff a dual decomposition
    exists at all.
    """
    pairs = rank_decomposition(a)
    for i, (e, _) in enumerate(pairs):
        for j, (_, f) in enumerate(pairs):
            if dot(e, f) != (1 if i == j else 0):
                return None
    return pairs


def brute_force_meet(a: BitMatrix, b: BitMatrix, universe: Iterable[BitMatrix]) -> BitMatrix | None:
    """Greatest common lower bound of ``a`` and ``b`` inside ``universe``, if unique."""
    lower = [v for v in universe if dominates(v, a) and dominates(v, b)]
    found = [m for m in lower if all(dominates(v, m) for v in lower)]
    return found[0] if len(found) == 1 else None


def count_independent_tuples(n: int, r: int) -> int:
    out = 1
    for i in range(r):
        out *= (1 << n) - (1 << i)
    return out


def count_rank_r(n: int, r: int) -> int:
    return gaussian_binomial(n, r) * count_independent_tuples(n, r)


def independent_tuples(n: int, r: int) -> Iterator[tuple[int, ...]]:
    """Ordered ``r``-tuples of independent vectors in ``F_2^n``."""

    def extend(prefix: tuple[int, ...], pivots: dict[int, int]) -> Iterator[tuple[int, ...]]:
        if len(prefix) == r:
            yield prefix
            return
        for v in range(1, 1 << n):
            x = _reduce_into(pivots, v)
            if x:
                nxt = dict(pivots)
                nxt[x.bit_length() - 1] = x
                yield from extend(prefix + (v,), nxt)

    yield from extend((), {})


def enumerate_rank_r(n: int, r: int, cap: int | None = None) -> Iterator[BitMatrix]:
    """Every rank-``r`` matrix in ``F_2^{n x n}`` exactly once.

    A rank-``r`` matrix is ``sum_j e_j (x) f_j`` where ``f_j`` is the canonical
    basis of its row space and the ``e_j`` are independent; both are unique.
    """
    if r < 0 or r > n:
        return
    check_budget(count_rank_r(n, r), f"rank-{r} matrices at n={n}", cap)
    if r == 0:
        yield BitMatrix.zero(n)
        return
    left = list(independent_tuples(n, r))
    for rows in enumerate_subspaces(n, r):
        for es in left:
            yield matrix_from_pairs(zip(es, rows.basis), n)


def all_matrices(n: int, cap: int | None = None) -> Iterator[BitMatrix]:
    check_budget(1 << (n * n), f"all matrices at n={n}", cap)
    for key in range(1 << (n * n)):
        yield BitMatrix.from_key(key, n)


def solve_dual(basis: Sequence[int], n: int) -> list[int]:
    """Rows of the inverse of a full basis: ``g_j`` with ``<g_j, basis_i> = delta_ij``."""
    if len(basis) != n or not independent(basis):
        raise ValueError("need a full basis")
    # Gauss-Jordan on the matrix whose columns are the basis vectors
    cols = BitMatrix(tuple(basis), n).transpose()
    aug = [(cols.rows[i], 1 << i) for i in range(n)]
    for c in range(n):
        piv = next(i for i in range(c, n) if (aug[i][0] >> c) & 1)
        aug[c], aug[piv] = aug[piv], aug[c]
        for i in range(n):
            if i != c and (aug[i][0] >> c) & 1:
                aug[i] = (aug[i][0] ^ aug[c][0], aug[i][1] ^ aug[c][1])
    # aug now holds inverse rows: inv[c] satisfies inv[c] . column_i = delta
    return [aug[c][1] for c in range(n)]


def solve_linear(constraints: Sequence[tuple[int, int]], n: int) -> int | None:
    """Some ``x`` in ``F_2^n`` with ``<x, a> = b`` for every ``(a, b)``, or None."""
    pivots: dict[int, tuple[int, int]] = {}
    for a, b in constraints:
        for p, (pa, pb) in pivots.items():
            if (a >> p) & 1:
                a, b = a ^ pa, b ^ pb
        if a == 0:
            if b:
                return None
            continue
        p = (a & -a).bit_length() - 1
        for q, (qa, qb) in list(pivots.items()):
            if (qa >> p) & 1:
                pivots[q] = (qa ^ a, qb ^ b)
        pivots[p] = (a, b)
    x = 0
    for p, (_, b) in pivots.items():
        if b:
            x |= 1 << p
    return x


def coordinates(basis: Sequence[int], x: int) -> int | None:
    """Mask ``c`` with ``x = sum_{t in c} basis[t]``, or None when ``x`` is outside the span."""
    pivots: dict[int, tuple[int, int]] = {}
    for t, v in enumerate(basis):
        combo = 1 << t
        while v:
            top = v.bit_length() - 1
            hit = pivots.get(top)
            if hit is None:
                pivots[top] = (v, combo)
                break
            v ^= hit[0]
            combo ^= hit[1]
        else:
            raise ValueError("basis vectors must be independent")
    combo = 0
    while x:
        hit = pivots.get(x.bit_length() - 1)
        if hit is None:
            return None
        x ^= hit[0]
        combo ^= hit[1]
    return combo


def complement_basis(sub: Subspace) -> list[int]:
    """Standard basis vectors completing ``sub`` to the whole space."""
    piv = set(sub.pivots)
    return [1 << j for j in range(sub.ambient_dim) if j not in piv]


def projections(k: int, r: int) -> Iterator[list[tuple[int, int]]]:
    """Dual pairs of every rank-``r`` idempotent on ``F_2^k``.

    An idempotent is fixed by its image ``I`` and kernel ``K``; kernels
    complementary to ``I`` are graphs of linear maps from a fixed complement
    into ``I``.
    """
    for image in enumerate_subspaces(k, r):
        comp = complement_basis(image)
        ivecs = image.basis
        for choice in itertools.product(range(1 << r), repeat=len(comp)):
            kernel = []
            for c, coeffs in zip(comp, choice):
                x = c
                for t in range(r):
                    if (coeffs >> t) & 1:
                        x ^= ivecs[t]
                kernel.append(x)
            dual = solve_dual(list(ivecs) + kernel, k)
            yield list(zip(ivecs, dual[:r]))


def dominated_by(a: BitMatrix, r: int) -> Iterator[BitMatrix]:
    """Every rank-``r`` matrix ``c <= a``.

    With ``a = sum e_t (x) f_t``, the interval below ``a`` is the image of the
    interval below the identity on ``F_2^{rank a}`` under
    ``x (x) y -> (sum x_t e_t) (x) (sum y_t f_t)``.
    """
    pairs = rank_decomposition(a)
    k = len(pairs)
    if r < 0 or r > k:
        return
    check_budget(gaussian_binomial(k, r) << (r * (k - r)), f"rank-{r} matrices under a rank-{k} matrix")
    if r == 0:
        yield BitMatrix.zero(a.n)
        return
    es = [e for e, _ in pairs]
    fs = [f for _, f in pairs]

    def lift(x: int, vecs: list[int]) -> int:
        out = 0
        for t in bits_of(x):
            out ^= vecs[t]
        return out

    for proj in projections(k, r):
        yield matrix_from_pairs(((lift(x, es), lift(y, fs)) for x, y in proj), a.n)


__all__ = [
    "BitMatrix",
    "BitVector",
    "BudgetExceeded",
    "DEFAULT_CAP",
    "Subspace",
    "all_matrices",
    "bits_of",
    "brute_force_meet",
    "check_budget",
    "col_space",
    "complement_basis",
    "coordinates",
    "count_independent_tuples",
    "count_rank_r",
    "direct_sum_equivalences",
    "dominated_by",
    "dominates",
    "dot",
    "enumerate_rank_r",
    "enumerate_subspaces",
    "enumeration_cap",
    "full_space",
    "gaussian_binomial",
    "independent",
    "independent_tuples",
    "intersection",
    "is_direct_sum",
    "matrix_from_pairs",
    "matrix_sum",
    "parse_hex_matrix",
    "parse_matrix",
    "parse_vector",
    "popcount",
    "projections",
    "rank",
    "rank_decomposition",
    "rank_of_rows",
    "row_space",
    "solve_dual",
    "solve_linear",
    "span",
    "under_identity_certificate",
    "vector_str",
    "zero_subspace",
]
