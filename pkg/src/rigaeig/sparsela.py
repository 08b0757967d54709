"""Sparse symmetric LDL^T factorization with fill-reducing orderings.

The factorization is the up-looking column algorithm driven by the
elimination tree, without numerical pivoting: the factors are congruent
to the input matrix, so the signs of D give the inertia (Sylvester's
law), which is what validates the eigenvalue counts in spectrum slicing.
A pivot smaller than 1e-14 * max|A| aborts with ``ZeroPivot`` and the
caller perturbs the shift.

FLOP accounting conventions (used consistently by the cost reports):

* factorization: sum over columns of (column count of L, diagonal
  included) squared,
* forward/backward elimination: 2 * fill_nnz per solve,
* matrix-vector product: 2 * nnz per call,

counting a fused multiply-add as two operations and symbolic analysis as
free.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from numba import njit

from .assembly import DiscreteSystem, SymSparseMatrix
from .bspline import separator_basis_indices


class ZeroPivot(Exception):
    """Pivot at or numerically at zero: the shift hit an eigenvalue."""


class NegativeNorm(Exception):
    """v^T M v < 0 for the mass inner product: M is not positive definite."""


@dataclass
class OpCounter:
    """Accumulated work of one operation type; monotone nondecreasing."""

    flops: int = 0
    calls: int = 0
    seconds: float = 0.0

    def add(self, flops: int, seconds: float) -> None:
        self.flops += int(flops)
        self.calls += 1
        self.seconds += seconds

    def merge(self, other: "OpCounter") -> None:
        self.flops += other.flops
        self.calls += other.calls
        self.seconds += other.seconds


@dataclass
class CostCounters:
    """Per-run counter set: Nfa/Nfb/Nmv are the call counts below."""

    fact: OpCounter = field(default_factory=OpCounter)
    fb: OpCounter = field(default_factory=OpCounter)
    matvec: OpCounter = field(default_factory=OpCounter)
    nsh: int = 0
    nit: int = 0
    retries: int = 0
    steps_per_iteration: list[int] = field(default_factory=list)

    @property
    def nfa(self) -> int:
        return self.fact.calls

    @property
    def nfb(self) -> int:
        return self.fb.calls

    @property
    def nmv(self) -> int:
        return self.matvec.calls

    def merge(self, other: "CostCounters") -> None:
        self.fact.merge(other.fact)
        self.fb.merge(other.fb)
        self.matvec.merge(other.matvec)
        self.nsh += other.nsh
        self.nit += other.nit
        self.retries += other.retries
        self.steps_per_iteration.extend(other.steps_per_iteration)


# ---------------------------------------------------------------------------
# numba kernels (A passed as the upper triangle in CSC, diagonal included)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _etree_counts(n, Ap, Ai):
    parent = np.full(n, -1, np.int32)
    flag = np.full(n, -1, np.int64)
    lnz = np.zeros(n, np.int64)
    for k in range(n):
        flag[k] = k
        for p in range(Ap[k], Ap[k + 1]):
            i = Ai[p]
            while flag[i] != k:  # walk towards the root, stop in marked region
                if parent[i] == -1:
                    parent[i] = k
                flag[i] = k
                lnz[i] += 1
                i = parent[i]
    return parent, lnz


@njit(cache=True)
def _ldl_numeric(n, Ap, Ai, Ax, parent, Lp, Li, Lx, D, zero_tol):
    y = np.zeros(n, np.float64)
    pattern = np.empty(n, np.int64)
    path = np.empty(n, np.int64)
    flag = np.full(n, -1, np.int64)
    lfill = np.zeros(n, np.int64)
    for k in range(n):
        top = n
        flag[k] = k
        y[k] = 0.0
        for p in range(Ap[k], Ap[k + 1]):
            i = Ai[p]
            y[i] += Ax[p]
            ln = 0
            while flag[i] != k:
                path[ln] = i
                ln += 1
                flag[i] = k
                i = parent[i]
            while ln > 0:  # prepend so the pattern comes out topological
                ln -= 1
                top -= 1
                pattern[top] = path[ln]
        dk = y[k]
        y[k] = 0.0
        for s in range(top, n):
            i = pattern[s]
            yi = y[i]
            y[i] = 0.0
            p2 = Lp[i] + lfill[i]
            for p in range(Lp[i], p2):
                y[Li[p]] -= Lx[p] * yi
            lki = yi / D[i]
            dk -= lki * yi
            Li[p2] = k
            Lx[p2] = lki
            lfill[i] += 1
        D[k] = dk
        if abs(dk) < zero_tol:
            return k
    return -1


@njit(cache=True)
def _ldl_solve(n, Lp, Li, Lx, D, x):
    for j in range(n):  # L y = b
        xj = x[j]
        if xj != 0.0:
            for p in range(Lp[j], Lp[j + 1]):
                x[Li[p]] -= Lx[p] * xj
    for j in range(n):
        x[j] /= D[j]
    for j in range(n - 1, -1, -1):  # L^T z = y
        acc = 0.0
        for p in range(Lp[j], Lp[j + 1]):
            acc += Lx[p] * x[Li[p]]
        x[j] -= acc


@dataclass
class LDLFactorization:
    """Permuted factorization P A P^T = L diag(D) L^T with unit lower L."""

    permutation: np.ndarray
    Lp: np.ndarray
    Li: np.ndarray
    Lx: np.ndarray
    D: np.ndarray
    inertia: tuple[int, int, int]
    fill_nnz: int
    factor_flops: int

    @property
    def n(self) -> int:
        return self.D.size

    @property
    def n_negative(self) -> int:
        return self.inertia[0]

    def l_matrix(self) -> sp.csc_array:
        """Unit lower-triangular factor as a scipy matrix (for tests)."""
        n = self.n
        L = sp.csc_array((self.Lx, self.Li, self.Lp), shape=(n, n))
        return sp.csc_array(L + sp.eye_array(n, format="csc"))


def _as_csr(A) -> sp.csr_array:
    if isinstance(A, SymSparseMatrix):
        return A.csr
    return sp.csr_array(A)


def factor_ldl(A, ordering="nd", counters: CostCounters | None = None) -> LDLFactorization:
    """Factor a symmetric matrix as P A P^T = L D L^T without pivoting.

    ``ordering`` is ``"natural"``, ``"nd"`` (generic nested dissection of
    the sparsity graph) or an explicit permutation array, e.g. from
    ``separator_ordering``.  Raises ``ZeroPivot`` on a vanishing pivot.
    """
    t0 = time.perf_counter()
    csr = _as_csr(A)
    n = csr.shape[0]
    if isinstance(ordering, str):
        if ordering == "natural":
            perm = np.arange(n, dtype=np.int64)
        elif ordering == "nd":
            perm = nested_dissection_graph(csr)
        else:
            raise ValueError(f"unknown ordering strategy {ordering!r}")
    else:
        perm = np.asarray(ordering, dtype=np.int64)
        if perm.shape != (n,):
            raise ValueError("permutation length does not match matrix dimension")

    maxabs = float(np.max(np.abs(csr.data))) if csr.nnz else 0.0
    if maxabs == 0.0:
        raise ZeroPivot("matrix is identically zero")
    zero_tol = 1e-14 * maxabs

    B = csr[perm][:, perm] if not np.array_equal(perm, np.arange(n)) else csr
    U = sp.triu(B, format="csc")
    Ap = U.indptr.astype(np.int64)
    Ai = U.indices.astype(np.int32)
    Ax = U.data.astype(np.float64)

    parent, lnz = _etree_counts(n, Ap, Ai)
    Lp = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(lnz, out=Lp[1:])
    Li = np.empty(Lp[n], dtype=np.int32)
    Lx = np.empty(Lp[n], dtype=np.float64)
    D = np.zeros(n, dtype=np.float64)
    bad = _ldl_numeric(n, Ap, Ai, Ax, parent, Lp, Li, Lx, D, zero_tol)
    if bad >= 0:
        raise ZeroPivot(f"pivot {bad} below {zero_tol:.3e} (shift at an eigenvalue?)")

    neg = int(np.count_nonzero(D < 0.0))
    inertia = (neg, 0, n - neg)
    fill_nnz = int(Lp[n]) + n
    factor_flops = int(np.sum((lnz + 1) ** 2))
    fact = LDLFactorization(perm, Lp, Li, Lx, D, inertia, fill_nnz, factor_flops)
    if counters is not None:
        counters.fact.add(factor_flops, time.perf_counter() - t0)
    return fact


def solve_fb(fact: LDLFactorization, b, counters: CostCounters | None = None) -> np.ndarray:
    """A^{-1} b through permute, forward solve, scale, backward solve."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (fact.n,):
        raise ValueError(f"rhs has shape {b.shape}, expected ({fact.n},)")
    t0 = time.perf_counter()
    x = b[fact.permutation].copy()
    _ldl_solve(fact.n, fact.Lp, fact.Li, fact.Lx, fact.D, x)
    out = np.empty_like(x)
    out[fact.permutation] = x
    if counters is not None:
        counters.fb.add(2 * fact.fill_nnz, time.perf_counter() - t0)
    return out


def mass_matvec(M, v, counters: CostCounters | None = None) -> np.ndarray:
    """y = M v, charging 2*nnz(M) operations to the mat-vec counter."""
    csr = _as_csr(M)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (csr.shape[0],):
        raise ValueError(f"vector has shape {v.shape}, expected ({csr.shape[0]},)")
    t0 = time.perf_counter()
    y = csr @ v
    if counters is not None:
        counters.matvec.add(2 * csr.nnz, time.perf_counter() - t0)
    return y


def m_inner(u, v, M=None) -> float:
    """Mass inner product v^T M u (Euclidean when M is None)."""
    if M is None:
        return float(np.dot(v, u))
    return float(np.dot(v, _as_csr(M) @ u))


def m_norm(v, M=None) -> float:
    """Mass norm (v^T M v)^(1/2); rejects indefinite M."""
    sq = m_inner(v, v, M)
    if sq < -1e-12:
        raise NegativeNorm(f"v^T M v = {sq} < 0")
    return float(np.sqrt(max(sq, 0.0)))


# ---------------------------------------------------------------------------
# orderings
# ---------------------------------------------------------------------------


def _direction_c0(space) -> np.ndarray:
    """Dirichlet-reduced indices of the C0 interface bases of one direction."""
    full = separator_basis_indices(space)
    return full - 1  # boundary basis 0 was eliminated


def separator_ordering(system: DiscreteSystem) -> np.ndarray:
    """Nested dissection aligned with the C0 block structure.

    Splits every box at the C0 interface nearest its middle (a width-one
    separator); inside the maximum-continuity blocks it falls back to
    width-p index slabs, which is plain nested dissection of the banded
    interaction graph.  Leaf blocks are eliminated first, then the
    separators bottom-up, so the interface DOFs of every level end up
    after the block interiors they decouple.  Returns the elimination
    order: position k holds the original index eliminated k-th.
    """
    sizes = [s.basis_count - 2 for s in system.spaces]
    degree = system.spaces[0].degree
    c0 = [_direction_c0(s) for s in system.spaces]
    d = system.dim
    strides = [1] * d
    for t in range(1, d):
        strides[t] = strides[t - 1] * sizes[t - 1]
    leaf = max(2 * degree, 8)

    leaves: list[np.ndarray] = []
    seps: list[list[np.ndarray]] = []  # per recursion depth

    def emit(ranges) -> np.ndarray:
        axes = [np.arange(a, b, dtype=np.int64) * strides[t] for t, (a, b) in enumerate(ranges)]
        block = axes[0]
        for arr in axes[1:]:
            block = (arr[:, None] + block[None, :]).ravel()
        return block

    def dissect(ranges, depth):
        extents = [b - a for a, b in ranges]
        # exhaust the free width-one C0 splits before anything else,
        # preferring the direction with the largest extent
        split = None
        for t in sorted(range(d), key=lambda t: -extents[t]):
            a, b = ranges[t]
            cands = c0[t][(c0[t] >= a + 1) & (c0[t] <= b - 2)]
            if cands.size:
                c = int(cands[np.argmin(np.abs(cands - (a + b - 1) / 2.0))])
                split = (t, c, c + 1)
                break
        if split is None:
            t = int(np.argmax(extents))
            ext = extents[t]
            if ext <= leaf:
                leaves.append(emit(ranges))
                return
            a, b = ranges[t]
            s0 = a + (ext - degree) // 2
            s0 = min(max(s0, a + 1), b - 1 - degree)
            split = (t, s0, s0 + degree)
        t, s0, s1 = split
        a, b = ranges[t]
        left = list(ranges)
        left[t] = (a, s0)
        right = list(ranges)
        right[t] = (s1, b)
        sep = list(ranges)
        sep[t] = (s0, s1)
        dissect(left, depth + 1)
        dissect(right, depth + 1)
        while len(seps) <= depth:
            seps.append([])
        seps[depth].append(emit(sep))

    dissect([(0, m) for m in sizes], 0)
    chunks = leaves
    for level in reversed(seps):
        chunks.extend(level)
    order = np.concatenate(chunks)
    if order.size != system.dof_count:
        raise AssertionError("dissection did not enumerate every DOF")
    return order


def nested_dissection_graph(pattern, leaf: int = 16) -> np.ndarray:
    """Generic nested dissection by BFS level-set bisection.

    Fallback for matrices without tensor structure; separators are middle
    BFS levels, recursion handles disconnected pieces.
    """
    csr = _as_csr(pattern)
    n = csr.shape[0]
    indptr, indices = csr.indptr, csr.indices
    order: list[np.ndarray] = []

    def bfs_levels(verts: np.ndarray) -> np.ndarray:
        inset = np.full(n, -1, dtype=np.int64)
        inset[verts] = np.arange(verts.size)
        level = np.full(verts.size, -1, dtype=np.int64)
        frontier = [int(verts[0])]
        level[inset[verts[0]]] = 0
        depth = 0
        while frontier:
            nxt = []
            for u in frontier:
                for w in indices[indptr[u] : indptr[u + 1]]:
                    lw = inset[w]
                    if lw >= 0 and level[lw] < 0:
                        level[lw] = depth + 1
                        nxt.append(int(w))
            frontier = nxt
            depth += 1
        return level

    def rec(verts: np.ndarray):
        if verts.size <= leaf:
            order.append(verts)
            return
        level = bfs_levels(verts)
        reached = level >= 0
        if not reached.all():  # disconnected: recurse per piece
            rec(verts[reached])
            rec(verts[~reached])
            return
        t = int(np.median(level))
        sep = verts[level == t]
        lo = verts[level < t]
        hi = verts[level > t]
        if lo.size == 0 or hi.size == 0:
            order.append(verts)  # expansion degenerate (clique-like): stop
            return
        rec(lo)
        rec(hi)
        order.append(sep)

    rec(np.arange(n, dtype=np.int64))
    return np.concatenate(order)
