"""Second eigenvalues of weighted graphs and bipartite graphs.

A graph is stored as the symmetric joint distribution ``P[u, v]`` of an
ordered edge sample, summing to one.  An undirected edge ``{u, v}`` of weight
``w`` contributes ``w/2`` to ``P[u, v]`` and to ``P[v, u]``; a loop contributes
``w`` to ``P[v, v]``.  The stationary measure is the row sum of ``P``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

DENSE_LIMIT = 4096
DENSE_TOL = 1e-9
ITER_TOL = 1e-6
RESTART_SEEDS = (11, 23, 47)


def _as_float(w) -> float:
    return float(Fraction(w)) if isinstance(w, (Fraction, str)) else float(w)


@dataclass(frozen=True)
class WeightedGraph:
    vertices: tuple
    joint: sp.csr_matrix = field(repr=False, compare=False)

    @classmethod
    def from_edges(cls, vertices: Sequence[Hashable], edges: Iterable[tuple]) -> WeightedGraph:
        """``edges`` holds ``(u, v, weight)`` with vertex labels; weights are normalised once."""
        verts = tuple(vertices)
        index = {v: i for i, v in enumerate(verts)}
        rows, cols, vals = [], [], []
        for u, v, w in edges:
            w = _as_float(w)
            if w < 0:
                raise ValueError("negative edge weight")
            if w == 0:
                continue
            a, b = index[u], index[v]
            if a == b:
                rows.append(a), cols.append(a), vals.append(w)
            else:
                rows += [a, b]
                cols += [b, a]
                vals += [w / 2, w / 2]
        return cls.from_joint(verts, sp.coo_matrix((vals, (rows, cols)), shape=(len(verts), len(verts))))

    @classmethod
    def from_joint(cls, vertices: Sequence[Hashable], joint) -> WeightedGraph:
        verts = tuple(vertices)
        if not verts:
            raise ValueError("empty graph")
        mat = sp.csr_matrix(joint, dtype=float)
        mat.sum_duplicates()
        total = mat.sum()
        if total <= 0:
            raise ValueError("graph has no edges")
        mat = mat / total
        if abs(mat - mat.T).max() > 1e-12:
            raise ValueError("edge distribution is not symmetric")
        return cls(verts, sp.csr_matrix(mat))

    @property
    def size(self) -> int:
        return len(self.vertices)

    @property
    def measure(self) -> np.ndarray:
        return np.asarray(self.joint.sum(axis=1)).ravel()

    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.vertices)}

    def edges(self) -> list[tuple]:
        """Undirected edges ``(u, v, weight)`` with ``u`` listed no later than ``v``."""
        coo = sp.triu(self.joint).tocoo()
        out = []
        for a, b, w in zip(coo.row, coo.col, coo.data):
            out.append((self.vertices[a], self.vertices[b], float(w if a == b else 2 * w)))
        return out

    def neighbours(self, v) -> list:
        row = self.joint.getrow(self.index()[v])
        return [self.vertices[j] for j in row.indices]

    def has_edge(self, u, v) -> bool:
        idx = self.index()
        return self.joint[idx[u], idx[v]] > 0

    def markov(self) -> np.ndarray:
        """Dense random-walk matrix ``A[v, u] = P[v, u] / mu(v)``."""
        mu = self.measure
        return self.joint.toarray() / mu[:, None]

    def symmetric_operator(self) -> sp.csr_matrix:
        """``D^{-1/2} P D^{-1/2}``, similar to the walk operator and symmetric."""
        scale = sp.diags(1.0 / np.sqrt(self.measure))
        return sp.csr_matrix(scale @ self.joint @ scale)

    def is_connected(self) -> bool:
        count, _ = connected_components(self.joint, directed=False)
        return count == 1

    def degrees(self) -> np.ndarray:
        return np.diff(self.joint.indptr)

    def to_tsv(self) -> str:
        lines = [f"# vertices {self.size}"] + [f"# {i}\t{v}" for i, v in enumerate(self.vertices)]
        idx = self.index()
        lines += [f"{idx[u]}\t{idx[v]}\t{w:.17g}" for u, v, w in self.edges()]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class BipartiteGraph:
    left: tuple
    right: tuple
    joint: sp.csr_matrix = field(repr=False, compare=False)

    @classmethod
    def from_edges(cls, left: Sequence, right: Sequence, edges: Iterable[tuple]) -> BipartiteGraph:
        lidx = {v: i for i, v in enumerate(left)}
        ridx = {v: i for i, v in enumerate(right)}
        rows, cols, vals = [], [], []
        for u, v, w in edges:
            w = _as_float(w)
            if w < 0:
                raise ValueError("negative edge weight")
            rows.append(lidx[u]), cols.append(ridx[v]), vals.append(w)
        mat = sp.coo_matrix((vals, (rows, cols)), shape=(len(left), len(right)))
        return cls.from_joint(left, right, mat)

    @classmethod
    def from_joint(cls, left: Sequence, right: Sequence, joint) -> BipartiteGraph:
        if not left or not right:
            raise ValueError("empty side")
        mat = sp.csr_matrix(joint, dtype=float)
        mat.sum_duplicates()
        total = mat.sum()
        if total <= 0:
            raise ValueError("graph has no edges")
        return cls(tuple(left), tuple(right), sp.csr_matrix(mat / total))

    @property
    def left_measure(self) -> np.ndarray:
        return np.asarray(self.joint.sum(axis=1)).ravel()

    @property
    def right_measure(self) -> np.ndarray:
        return np.asarray(self.joint.sum(axis=0)).ravel()

    def operator(self) -> np.ndarray:
        """Dense ``D_L^{-1/2} P D_R^{-1/2}``; its singular values are the walk's."""
        dl = 1.0 / np.sqrt(self.left_measure)
        dr = 1.0 / np.sqrt(self.right_measure)
        return (self.joint.toarray() * dl[:, None]) * dr[None, :]

    def left_to_right(self) -> np.ndarray:
        """Markov operator on functions of the right side, evaluated on the left."""
        return self.joint.toarray() / self.left_measure[:, None]

    def is_connected(self) -> bool:
        nl, nr = len(self.left), len(self.right)
        block = sp.bmat([[None, self.joint], [self.joint.T, None]])
        count, _ = connected_components(block, directed=False)
        return count == 1 and nl + nr > 0

    def degrees_left(self) -> np.ndarray:
        return np.diff(self.joint.indptr)

    def degrees_right(self) -> np.ndarray:
        return np.diff(sp.csc_matrix(self.joint).indptr)


@dataclass(frozen=True)
class SpectralReport:
    n: int
    m: int
    lam: float
    connected: bool
    method: str
    iterations: int
    tolerance: float

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "lambda": self.lam,
            "connected": self.connected,
            "method": self.method,
            "iterations": self.iterations,
            "tolerance": self.tolerance,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def spectrum(g: WeightedGraph) -> np.ndarray:
    """All eigenvalues of the walk operator, descending."""
    vals = np.linalg.eigvalsh(g.symmetric_operator().toarray())
    return vals[::-1]


def _power_lambda(op: sp.csr_matrix, top: np.ndarray, tol: float, max_iter: int) -> tuple[float, int]:
    """Largest |eigenvalue| of ``op`` orthogonal to ``top`` by power iteration on ``op^2``."""
    best, total_iters = 0.0, 0
    for seed in RESTART_SEEDS:
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(op.shape[0])
        x -= top * (top @ x)
        x /= np.linalg.norm(x)
        prev = None
        for it in range(1, max_iter + 1):
            y = op @ (op @ x)
            y -= top * (top @ y)
            est = float(x @ y)
            norm = np.linalg.norm(y)
            if norm == 0:
                est = 0.0
                break
            x = y / norm
            if prev is not None and abs(est - prev) < tol * tol * 1e-2:
                break
            prev = est
        total_iters += it
        best = max(best, float(np.sqrt(max(est, 0.0))))
    return best, total_iters


def spectral_report(g: WeightedGraph, method: str = "auto", max_iter: int = 200000) -> SpectralReport:
    m = int(sp.triu(g.joint).nnz)
    if not g.is_connected():
        return SpectralReport(g.size, m, 1.0, False, "disconnected", 0, 0.0)
    if g.size == 1:
        return SpectralReport(1, m, 0.0, True, "trivial", 0, 0.0)
    if method == "auto":
        method = "dense" if g.size <= DENSE_LIMIT else "power"
    op = g.symmetric_operator()
    if method == "dense":
        vals = np.sort(np.linalg.eigvalsh(op.toarray()))
        lam = float(np.max(np.abs(vals[:-1])))
        return SpectralReport(g.size, m, lam, True, "dense", 0, DENSE_TOL)
    if method == "power":
        top = np.sqrt(g.measure)
        top /= np.linalg.norm(top)
        lam, iters = _power_lambda(op, top, ITER_TOL, max_iter)
        return SpectralReport(g.size, m, lam, True, "power", iters, ITER_TOL)
    raise ValueError(f"unknown method {method!r}")


def second_eigenvalue(g: WeightedGraph, method: str = "auto") -> float:
    """Largest |eigenvalue| of the walk off the constants; 1.0 when disconnected."""
    return spectral_report(g, method).lam


def bipartite_singular_values(b: BipartiteGraph) -> np.ndarray:
    return np.linalg.svd(b.operator(), compute_uv=False)


def bipartite_second_singular(b: BipartiteGraph) -> float:
    """Norm of the left-to-right operator on mean-zero functions; 1.0 when disconnected."""
    if not b.is_connected():
        return 1.0
    vals = bipartite_singular_values(b)
    return float(vals[1]) if len(vals) > 1 else 0.0


def tensor(g1: WeightedGraph, g2: WeightedGraph) -> WeightedGraph:
    verts = [(a, b) for a in g1.vertices for b in g2.vertices]
    return WeightedGraph.from_joint(verts, sp.kron(g1.joint, g2.joint, format="csr"))


def bipartite_tensor(b1: BipartiteGraph, b2: BipartiteGraph) -> BipartiteGraph:
    left = [(a, b) for a in b1.left for b in b2.left]
    right = [(a, b) for a in b1.right for b in b2.right]
    return BipartiteGraph.from_joint(left, right, sp.kron(b1.joint, b2.joint, format="csr"))


def double_cover(g: WeightedGraph) -> BipartiteGraph:
    left = [(v, 0) for v in g.vertices]
    right = [(v, 1) for v in g.vertices]
    return BipartiteGraph.from_joint(left, right, g.joint)


def complete_graph(m: int, loops: bool = False) -> WeightedGraph:
    verts = list(range(m))
    joint = np.ones((m, m))
    if not loops:
        np.fill_diagonal(joint, 0.0)
    return WeightedGraph.from_joint(verts, joint)


def complete_bipartite(a: int, b: int) -> BipartiteGraph:
    return BipartiteGraph.from_joint(list(range(a)), list(range(b)), np.ones((a, b)))


def l1_closeness_bound(a: WeightedGraph, b: WeightedGraph, tol: float = DENSE_TOL) -> tuple[float, bool]:
    """``eps = max_v |A_v - B_v|_1`` and whether ``lambda(A) <= lambda(B) + eps``."""
    if a.vertices != b.vertices:
        raise ValueError("graphs must share a vertex list")
    if np.max(np.abs(a.measure - b.measure)) > tol:
        raise ValueError("stationary measures differ")
    diff = np.abs(a.markov() - b.markov()).sum(axis=1)
    eps = float(diff.max())
    return eps, second_eigenvalue(a) <= second_eigenvalue(b) + eps + tol


@dataclass(frozen=True)
class LocalDecomposition:
    components: tuple[WeightedGraph, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.components) != len(self.weights) or not self.components:
            raise ValueError("need one weight per component")
        total = sum(self.weights)
        if abs(total - 1.0) > 1e-9:
            raise ValueError("component weights must sum to 1")


@dataclass(frozen=True)
class LocalToGlobalReport:
    gamma: float
    lambda2: float
    bound: float
    actual: float

    @property
    def holds(self) -> bool:
        return self.actual <= self.bound + DENSE_TOL

    @property
    def slack(self) -> float:
        return self.bound - self.actual


def _embedded(g: WeightedGraph, comp: WeightedGraph, index: dict) -> sp.csr_matrix:
    perm = np.array([index[v] for v in comp.vertices])
    coo = comp.joint.tocoo()
    return sp.csr_matrix((coo.data, (perm[coo.row], perm[coo.col])), shape=g.joint.shape)


def local_to_global_check(g: WeightedGraph, tau: LocalDecomposition, tol: float = DENSE_TOL) -> LocalToGlobalReport:
    index = g.index()
    mixed = sp.csr_matrix(g.joint.shape)
    for comp, w in zip(tau.components, tau.weights):
        mixed = mixed + w * _embedded(g, comp, index)
    if abs(mixed - g.joint).max() > tol:
        raise ValueError("decomposition does not reproduce the edge distribution")
    gamma = max(second_eigenvalue(c) for c in tau.components)
    rows, cols, vals = [], [], []
    for t, (comp, w) in enumerate(zip(tau.components, tau.weights)):
        mu = comp.measure
        for v, p in zip(comp.vertices, mu):
            rows.append(index[v]), cols.append(t), vals.append(w * p)
    hg = BipartiteGraph.from_joint(
        g.vertices, list(range(len(tau.components))), sp.coo_matrix((vals, (rows, cols)), shape=(g.size, len(tau.components)))
    )
    lam2 = bipartite_second_singular(hg)
    bound = gamma + lam2 * lam2 * (1 - gamma)
    return LocalToGlobalReport(gamma, lam2, bound, second_eigenvalue(g))


@dataclass(frozen=True)
class BipartiteLocalDecomposition:
    components: tuple[BipartiteGraph, ...]
    weights: tuple[float, ...]


def bipartite_local_to_global_check(
    g: BipartiteGraph, tau: BipartiteLocalDecomposition, tol: float = DENSE_TOL
) -> LocalToGlobalReport:
    """Bipartite form: ``lambda_2(G) <= max lambda_2(G_t) + lambda_2(B_L) lambda_2(B_R)``."""
    lidx = {v: i for i, v in enumerate(g.left)}
    ridx = {v: i for i, v in enumerate(g.right)}
    mixed = sp.csr_matrix(g.joint.shape)
    lrows, lcols, lvals, rrows, rcols, rvals = [], [], [], [], [], []
    for t, (comp, w) in enumerate(zip(tau.components, tau.weights)):
        lp = np.array([lidx[v] for v in comp.left])
        rp = np.array([ridx[v] for v in comp.right])
        coo = comp.joint.tocoo()
        mixed = mixed + w * sp.csr_matrix((coo.data, (lp[coo.row], rp[coo.col])), shape=g.joint.shape)
        for v, p in zip(comp.left, comp.left_measure):
            lrows.append(lidx[v]), lcols.append(t), lvals.append(w * p)
        for v, p in zip(comp.right, comp.right_measure):
            rrows.append(ridx[v]), rcols.append(t), rvals.append(w * p)
    if abs(mixed - g.joint).max() > tol:
        raise ValueError("decomposition does not reproduce the edge distribution")
    parts = list(range(len(tau.components)))
    bl = BipartiteGraph.from_joint(g.left, parts, sp.coo_matrix((lvals, (lrows, lcols)), shape=(len(g.left), len(parts))))
    br = BipartiteGraph.from_joint(g.right, parts, sp.coo_matrix((rvals, (rrows, rcols)), shape=(len(g.right), len(parts))))
    gamma = max(bipartite_second_singular(c) for c in tau.components)
    lam2 = bipartite_second_singular(bl) * bipartite_second_singular(br)
    return LocalToGlobalReport(gamma, lam2, gamma + lam2, bipartite_second_singular(g))


__all__ = [
    "BipartiteGraph",
    "BipartiteLocalDecomposition",
    "LocalDecomposition",
    "LocalToGlobalReport",
    "SpectralReport",
    "WeightedGraph",
    "bipartite_local_to_global_check",
    "bipartite_second_singular",
    "bipartite_tensor",
    "complete_bipartite",
    "complete_graph",
    "double_cover",
    "l1_closeness_bound",
    "local_to_global_check",
    "second_eigenvalue",
    "spectral_report",
    "spectrum",
    "tensor",
]
