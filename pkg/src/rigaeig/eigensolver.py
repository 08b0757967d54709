"""Shift-and-invert Lanczos with thick restart and inertia-validated slicing.

For each shift sigma the pencil (K, M) is transformed to the operator
H = (K - sigma M)^{-1} M, whose eigenvalues theta = 1/(lambda - sigma)
push the pencil eigenvalues nearest sigma to the well-separated end of
the spectrum.  The Lanczos recurrence runs with full M-reorthogonal-
ization and hard locking of converged pairs; restarts keep a few of the
best unconverged Ritz vectors plus the residual direction, continuing
the recurrence through the arrowhead coupling.

Slices [sigma_k, sigma_k+1] are validated by matrix inertia: the LDL^T
factorizations at the endpoints give the exact number of eigenvalues
inside, and a slice only completes once that many pairs have converged.
A stalling slice is rescued by factoring the midpoint and recursing on
the halves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .assembly import DiscreteSystem
from .sparsela import (
    CostCounters,
    LDLFactorization,
    ZeroPivot,
    factor_ldl,
    mass_matvec,
    separator_ordering,
    solve_fb,
)

# Enabled by the test suite: asserts basis orthonormality at every restart
# boundary and the spectral-transform identity for every converged pair.
DEBUG_INVARIANTS = False


class CountMismatch(Exception):
    """A slice failed to produce the eigenvalue count its inertia promised."""

    def __init__(self, message, interval=None, expected=None, found=None):
        super().__init__(message)
        self.interval = interval
        self.expected = expected
        self.found = found


@dataclass
class RitzPair:
    """Ritz approximation at one shift; lambda = sigma + 1/theta."""

    theta: float
    lam: float
    residual: float  # |coupling . w|, the transformed-problem residual norm
    converged: bool
    weights: np.ndarray  # coefficients in the current Lanczos basis


@dataclass
class SliceResult:
    lo: float
    hi: float
    expected_count: int
    eigenvalues: np.ndarray
    vectors: np.ndarray  # one eigenvector per row
    counters: CostCounters


@dataclass
class EigenResult:
    """Globally sorted converged eigenpairs with slice provenance."""

    eigenvalues: np.ndarray
    vectors: np.ndarray  # column i is the coefficient vector of eigenvalue i
    residuals: np.ndarray
    slice_ids: np.ndarray
    slices: list[tuple[float, float, int]]  # (lo, hi, count inside)
    counters: CostCounters


@dataclass
class SolverOptions:
    m: int = 60  # Lanczos steps per restart cycle
    keep: int = 8  # unconverged Ritz vectors retained at a restart
    tol: float = 1e-10  # relative residual for Ritz convergence
    breakdown_tol: float = 1e-12
    stall_restarts: int = 3
    max_restarts: int = 60
    max_bisect: int = 40
    slice_target: int | None = None  # eigenvalues per slice, default m // 2

    @property
    def target(self) -> int:
        return self.slice_target if self.slice_target else max(1, self.m // 2)


def operator_apply(fact: LDLFactorization, M, v, counters: CostCounters | None = None):
    """Apply (K - sigma M)^{-1} M: one mass mat-vec then one f/b solve."""
    return solve_fb(fact, mass_matvec(M, v, counters), counters)


def tridiag_eig(alpha, beta) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric tridiagonal matrix.

    ``alpha`` is the diagonal, ``beta`` the subdiagonal (length one less).
    Values ascending, vectors orthonormal in the columns.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if alpha.size == 0:
        return np.empty(0), np.empty((0, 0))
    if alpha.size == 1:
        return alpha.copy(), np.ones((1, 1))
    return scipy.linalg.eigh_tridiagonal(alpha, beta)


class _VecStore:
    """Growing row store for locked vectors."""

    def __init__(self, n: int):
        self._buf = np.empty((8, n))
        self.count = 0

    def append(self, v: np.ndarray) -> None:
        if self.count == self._buf.shape[0]:
            grown = np.empty((2 * self.count, self._buf.shape[1]))
            grown[: self.count] = self._buf
            self._buf = grown
        self._buf[self.count] = v
        self.count += 1

    def view(self) -> np.ndarray:
        return self._buf[: self.count]


class LanczosState:
    """Lanczos decomposition H V = V T + r c^T with M-orthonormal basis V.

    ``T`` is tridiagonal until the first thick restart, after which the
    retained Ritz block couples to the continuation through the stored
    coupling row.  ``mass=None`` means the Euclidean inner product.
    """

    def __init__(
        self,
        apply_op,
        n: int,
        mass=None,
        shift: float = 0.0,
        max_dim: int = 60,
        counters: CostCounters | None = None,
        rng: np.random.Generator | None = None,
        tol: float = 1e-10,
        breakdown_tol: float = 1e-12,
        start=None,
        locked_pairs=(),
    ):
        self.apply_op = apply_op
        self.n = n
        self.mass = mass
        self.shift = shift
        self.max_dim = min(max_dim, n)
        self.counters = counters
        self.rng = rng if rng is not None else np.random.default_rng()
        self.tol = tol
        self.breakdown_tol = breakdown_tol

        self.V = np.zeros((self.max_dim + 1, n))
        self.MV = np.zeros((self.max_dim + 1, n))
        self.T = np.zeros((self.max_dim + 1, self.max_dim + 1))
        self.k = 0
        self.coupling = np.zeros(self.max_dim + 1)
        self.tridiagonal = True
        self.exhausted = False
        self.locked = _VecStore(n)
        self.locked_M = _VecStore(n)
        # deflated directions must be in place before the start vector is drawn
        for vec, mvec in locked_pairs:
            self.lock(vec, mvec)

        if start is None:
            if not self._fresh_direction():
                self.exhausted = True
        else:
            self.r = np.asarray(start, dtype=np.float64).copy()
            self.Mr = self._mv(self.r)
            nrm = math.sqrt(max(float(self.r @ self.Mr), 0.0))
            if nrm <= 0:
                raise ValueError("start vector has zero mass norm")
            self.r /= nrm
            self.Mr /= nrm

    # -- inner product plumbing ------------------------------------------

    def _mv(self, v: np.ndarray) -> np.ndarray:
        if self.mass is None:
            return v.copy()
        return mass_matvec(self.mass, v, self.counters)

    def _orthogonalize(self, r: np.ndarray, passes: int = 2) -> None:
        """Remove basis and locked components from r (in place)."""
        for _ in range(passes):
            if self.k:
                coef = self.MV[: self.k] @ r
                r -= self.V[: self.k].T @ coef
            if self.locked.count:
                coef = self.locked_M.view() @ r
                r -= self.locked.view().T @ coef

    def _fresh_direction(self, tries: int = 3) -> bool:
        """Random M-normalized direction orthogonal to V and locked."""
        for _ in range(tries):
            r = self.rng.standard_normal(self.n)
            ref = math.sqrt(max(float(r @ self._mv(r)), 0.0))
            self._orthogonalize(r)
            Mr = self._mv(r)
            nrm = math.sqrt(max(float(r @ Mr), 0.0))
            if nrm > 1e-8 * max(ref, 1e-300):
                self.r = r / nrm
                self.Mr = Mr / nrm
                self.coupling[: self.k] = 0.0
                return True
        return False

    def lock(self, vector: np.ndarray, mvector: np.ndarray) -> None:
        self.locked.append(vector)
        self.locked_M.append(mvector)

    # -- recurrence -------------------------------------------------------

    def step(self) -> bool:
        """One Lanczos step; False when the subspace is exhausted."""
        if self.exhausted or self.k >= self.max_dim:
            return False
        k = self.k
        v, Mv = self.r, self.Mr
        self.V[k] = v
        self.MV[k] = Mv
        w = self.apply_op(v)
        wnorm = float(np.linalg.norm(w))
        alpha = float(Mv @ w)
        self.T[k, k] = alpha
        self.T[:k, k] = self.coupling[:k]
        self.T[k, :k] = self.coupling[:k]
        r = w
        r -= alpha * v
        if k:
            r -= self.V[:k].T @ self.coupling[:k]
        self.k = k + 1
        self._orthogonalize(r)
        Mr = self._mv(r)
        beta = math.sqrt(max(float(r @ Mr), 0.0))
        # relative test: a remnant at roundoff scale of ||Hv|| is an
        # invariant subspace, and normalizing it would corrupt the basis
        if beta <= max(self.breakdown_tol, 1e-13 * wnorm):
            if not self._fresh_direction():
                self.exhausted = True
                return False
            return True
        self.r = r / beta
        self.Mr = Mr / beta
        self.coupling[: self.k] = 0.0
        self.coupling[self.k - 1] = beta
        return True

    def lift(self, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Basis combination x = V w and its cached product M x."""
        x = self.V[: self.k].T @ weights
        mx = self.MV[: self.k].T @ weights
        return x, mx

    def check_invariants(self) -> None:
        g = self.V[: self.k] @ self.MV[: self.k].T
        off = g - np.diag(np.diag(g))
        if np.abs(off).max(initial=0.0) >= 1e-8:
            raise AssertionError(f"basis lost M-orthogonality: {np.abs(off).max():.3e}")
        if np.abs(np.diag(g) - 1.0).max(initial=0.0) >= 1e-8:
            raise AssertionError("basis vectors are not M-normalized")


def lanczos_extend(state: LanczosState, steps: int | None = None) -> LanczosState:
    """Run the three-term recurrence until the basis reaches ``steps``.

    The operator application lives in the state; extension stops early on
    subspace exhaustion.  Returns the state for chaining.
    """
    limit = state.max_dim if steps is None else min(steps, state.max_dim)
    while state.k < limit:
        if not state.step():
            break
    return state


def rayleigh_ritz(state: LanczosState) -> list[RitzPair]:
    """Ritz pairs of the projected operator, values ascending.

    The convergence flag tests the Lanczos residual estimate
    |coupling . w| <= tol * |theta| (the coupling reduces to the last
    beta times the trailing weight while T is tridiagonal).
    """
    k = state.k
    if k == 0:
        return []
    T = state.T[:k, :k]
    if state.tridiagonal:
        omega, W = tridiag_eig(np.diag(T).copy(), np.diag(T, -1).copy())
    else:
        omega, W = np.linalg.eigh(T)
    pairs = []
    for j in range(k):
        theta = float(omega[j])
        res = abs(float(state.coupling[:k] @ W[:, j]))
        if theta == 0.0:
            # cannot occur for an SPD pencil with a finite spectrum
            pairs.append(RitzPair(theta, math.inf, res, False, W[:, j]))
            continue
        lam = state.shift + 1.0 / theta
        pairs.append(RitzPair(theta, lam, res, res <= state.tol * abs(theta), W[:, j]))
    return pairs


def thick_restart(state: LanczosState, keep) -> LanczosState:
    """Restart with selected Ritz vectors plus the residual direction.

    ``keep`` is either a number of Ritz pairs (then chosen by residual
    estimate) or an explicit list of RitzPairs from ``rayleigh_ritz``.
    The retained pairs enter T as its diagonal, coupled to the
    continuation vector through the arrowhead row; with an empty keep
    set this is a plain restart from the residual direction.
    """
    if isinstance(keep, int):
        pairs = sorted(rayleigh_ritz(state), key=lambda rp: rp.residual)[:keep]
    else:
        pairs = list(keep)
    c = len(pairs)
    if c >= state.max_dim:
        raise ValueError("keep count must stay below the basis limit")
    if c:
        W = np.column_stack([rp.weights for rp in pairs])
        coup = state.coupling[: state.k] @ W
        newV = (state.V[: state.k].T @ W).T
        newMV = (state.MV[: state.k].T @ W).T
        state.V[:c] = newV
        state.MV[:c] = newMV
        state.T[:c, :c] = np.diag([rp.theta for rp in pairs])
        state.coupling[:c] = coup
        state.tridiagonal = False
    else:
        state.tridiagonal = True
    state.k = c
    if DEBUG_INVARIANTS and c:
        state.check_invariants()
    return state


# ---------------------------------------------------------------------------
# slicing driver
# ---------------------------------------------------------------------------


class _Pencil:
    """Factorization access for one (K, M) system with one shared ordering."""

    def __init__(self, system: DiscreteSystem, counters: CostCounters):
        self.system = system
        self.K = system.K.csr
        self.M = system.M.csr
        self.n = system.dof_count
        self.perm = separator_ordering(system)
        self.counters = counters

    def factor(self, sigma: float, scale: float) -> tuple[float, LDLFactorization]:
        """Factor K - sigma M, nudging sigma off eigenvalues if needed."""
        pert = 1e-8 * scale
        for _ in range(12):
            try:
                fact = factor_ldl(self.K - sigma * self.M, self.perm, self.counters)
                return sigma, fact
            except ZeroPivot:
                self.counters.retries += 1
                sigma += pert
                pert *= 10.0
        raise ZeroPivot(f"could not move shift {sigma} off the spectrum")


@dataclass
class _Boundary:
    sigma: float
    nu: int
    fact: LDLFactorization


@dataclass
class _Pool:
    """Accepted eigenpairs of one run."""

    lams: list[float] = field(default_factory=list)
    vecs: list[np.ndarray] = field(default_factory=list)

    def count_in(self, lo: float, hi: float) -> int:
        return sum(1 for lam in self.lams if lo < lam <= hi)

    def add(self, lam: float, vec: np.ndarray, mvec: np.ndarray) -> bool:
        """Insert unless an M-parallel pair at the same eigenvalue exists.

        A pair can converge at two neighbouring shifts when it lies beyond
        one shift's deflation window; the angle test keeps one copy while
        letting genuinely distinct members of a degenerate cluster in.
        """
        close_tol = 1e-7 * max(abs(lam), 1.0)
        for i, known in enumerate(self.lams):
            if abs(known - lam) <= close_tol and abs(float(self.vecs[i] @ mvec)) > 0.1:
                return False
        self.lams.append(lam)
        self.vecs.append(vec)
        return True

    def window(self, lo: float, hi: float) -> list[int]:
        w = max(hi - lo, 1e-12 * max(abs(lo), abs(hi), 1.0))
        return [i for i, lam in enumerate(self.lams) if lo - w <= lam <= hi + w]


def _sweep(
    pencil: _Pencil,
    boundary: _Boundary,
    lo: float,
    hi: float,
    needed: int,
    pool: _Pool,
    opts: SolverOptions,
    rng: np.random.Generator,
) -> int:
    """Restarted Lanczos at one shift until ``needed`` pairs in (lo, hi] lock.

    Converged pairs beyond ``hi`` are pooled as well (they are validated
    eigenpairs and pre-pay later slices); pairs below ``lo`` only deflate.
    Returns the number of new pairs inside the slice.
    """
    counters = pencil.counters
    fact = boundary.fact
    # deflate against anything already found on or near the slice
    window_idx = pool.window(lo, hi)
    deflated = set(window_idx)
    window = [
        (pool.vecs[i], mass_matvec(pencil.M, pool.vecs[i], counters))
        for i in window_idx
    ]
    state = LanczosState(
        lambda v: operator_apply(fact, pencil.M, v, counters),
        pencil.n,
        mass=pencil.M,
        shift=boundary.sigma,
        max_dim=opts.m,
        counters=counters,
        rng=rng,
        tol=opts.tol,
        breakdown_tol=opts.breakdown_tol,
        locked_pairs=window,
    )

    def rank(rp: RitzPair):
        inside = rp.theta > 0 and rp.lam <= hi
        return (0 if inside else (1 if rp.theta > 0 else 2), rp.residual)

    found = 0
    stall = 0
    restarts = 0
    while found < needed and not state.exhausted:
        k_before = state.k
        lanczos_extend(state)
        counters.nit += 1
        counters.steps_per_iteration.append(state.k - k_before)
        pairs = rayleigh_ritz(state)
        if DEBUG_INVARIANTS:
            state.check_invariants()

        new_inside = 0
        keepers: list[RitzPair] = []
        for rp in pairs:
            if rp.converged and np.isfinite(rp.lam):
                if DEBUG_INVARIANTS:
                    assert abs(rp.theta * (rp.lam - state.shift) - 1.0) < 1e-8
                x, mx = state.lift(rp.weights)
                nrm = math.sqrt(max(float(x @ mx), 0.0))
                if nrm <= 0.0:
                    continue
                x /= nrm
                mx /= nrm
                # A pair at an eigenvalue already represented outside the
                # deflation window converges as a mixture with the known
                # member(s) of its eigenspace.  Projecting those out keeps
                # x an eigenvector and the deflation family orthonormal;
                # what survives is the genuinely new direction, if any.
                lam_tol = 1e-7 * max(abs(rp.lam), 1.0)
                pulled = [
                    (pool.vecs[i], mass_matvec(pencil.M, pool.vecs[i], counters))
                    for i, known in enumerate(pool.lams)
                    if abs(known - rp.lam) <= lam_tol and i not in deflated
                ]
                if pulled or state.locked.count:
                    for _ in range(2):
                        if state.locked.count:
                            c = state.locked_M.view() @ x
                            x -= state.locked.view().T @ c
                            mx -= state.locked_M.view().T @ c
                        for pv, pmv in pulled:
                            c = float(pmv @ x)
                            x -= c * pv
                            mx -= c * pmv
                    nrm = math.sqrt(max(float(x @ mx), 0.0))
                    if nrm < 0.3:  # it was a copy of something known
                        continue
                    x /= nrm
                    mx /= nrm
                state.lock(x, mx)
                if rp.lam > lo and pool.add(rp.lam, x, mx):
                    deflated.add(len(pool.lams) - 1)
                    if rp.lam <= hi:
                        new_inside += 1
            else:
                keepers.append(rp)
        found += new_inside
        stall = stall + 1 if new_inside == 0 else 0
        restarts += 1
        if found >= needed or state.exhausted:
            break
        if stall >= opts.stall_restarts or restarts >= opts.max_restarts:
            break
        keepers.sort(key=rank)
        thick_restart(state, keepers[: min(opts.keep, opts.m - 2)])
    return found


def _solve_interval(
    pencil: _Pencil,
    lob: _Boundary,
    hib: _Boundary,
    pool: _Pool,
    opts: SolverOptions,
    rng: np.random.Generator,
    scale: float,
    depth: int = 0,
) -> None:
    """Complete the slice (lo, hi]: pool must end up with its full count."""
    lo, hi = lob.sigma, hib.sigma
    expected = hib.nu - lob.nu
    needed = expected - pool.count_in(lo, hi)
    if needed <= 0:
        return
    _sweep(pencil, lob, lo, hi, needed, pool, opts, rng)
    needed = expected - pool.count_in(lo, hi)
    if needed <= 0:
        return
    if depth >= opts.max_bisect or hi - lo <= 1e-13 * scale:
        raise CountMismatch(
            f"slice ({lo:.6g}, {hi:.6g}] expected {expected} eigenvalues, "
            f"found {expected - needed}",
            interval=(lo, hi),
            expected=expected,
            found=expected - needed,
        )
    sig, fact = pencil.factor(0.5 * (lo + hi), scale)
    pencil.counters.nsh += 1
    midb = _Boundary(sig, fact.n_negative, fact)
    _solve_interval(pencil, lob, midb, pool, opts, rng, scale, depth + 1)
    _solve_interval(pencil, midb, hib, pool, opts, rng, scale, depth + 1)


def _make_boundary(pencil: _Pencil, sigma: float, scale: float) -> _Boundary:
    sig, fact = pencil.factor(sigma, scale)
    pencil.counters.nsh += 1
    return _Boundary(sig, fact.n_negative, fact)


def _march(
    pencil: _Pencil,
    start: _Boundary,
    stop: _Boundary | None,
    count_goal: int | None,
    width0: float,
    pool: _Pool,
    opts: SolverOptions,
    rng: np.random.Generator,
    scale: float,
) -> list[tuple[float, float, int]]:
    """March slices upward from ``start`` until the goal is met.

    Slice widths track the measured eigenvalue density so each slice
    targets about ``opts.target`` eigenvalues.  Every accepted boundary
    is one shift; discarded probes count as retries.
    """
    counters = pencil.counters
    target = opts.target
    slices: list[tuple[float, float, int]] = []
    cur = start
    width = width0
    while True:
        if count_goal is not None and cur.nu - start.nu >= count_goal:
            break
        if stop is not None and cur.sigma >= stop.sigma:
            break
        width = max(width, 1e-12 * scale)
        nxt = None
        if stop is not None and stop.nu - cur.nu <= 4 * target:
            nxt = stop  # tail is one modest slice; its boundary is counted
        else:
            for _ in range(30):
                trial = cur.sigma + width
                if stop is not None and trial >= stop.sigma:
                    trial = 0.5 * (cur.sigma + stop.sigma)
                    width = trial - cur.sigma
                sig, fact = pencil.factor(trial, scale)
                nxt = _Boundary(sig, fact.n_negative, fact)
                cnt = nxt.nu - cur.nu
                if cnt <= 4 * target:
                    break
                counters.retries += 1
                width *= max(0.05, 0.5 * target / cnt)
            counters.nsh += 1
        _solve_interval(pencil, cur, nxt, pool, opts, rng, scale)
        cnt = nxt.nu - cur.nu
        slices.append((cur.sigma, nxt.sigma, cnt))
        span = nxt.sigma - cur.sigma
        if cnt > 0:
            width = min(max(span * target / cnt, 0.25 * span), 4.0 * span)
        else:
            width = 4.0 * span
        cur = nxt
    return slices


def solve_slice(system: DiscreteSystem, interval, seed: int = 0, **kwargs) -> SliceResult:
    """All eigenpairs in one interval, validated by endpoint inertia."""
    opts = SolverOptions(**kwargs)
    counters = CostCounters()
    rng = np.random.default_rng(seed)
    pencil = _Pencil(system, counters)
    lo_req, hi_req = float(interval[0]), float(interval[1])
    if not lo_req < hi_req:
        raise ValueError("empty interval")
    scale = hi_req - lo_req
    lob = _make_boundary(pencil, lo_req, scale)
    hib = _make_boundary(pencil, hi_req, scale)
    pool = _Pool()
    _solve_interval(pencil, lob, hib, pool, opts, rng, scale)
    idx = sorted(
        (i for i, lam in enumerate(pool.lams) if lob.sigma < lam <= hib.sigma),
        key=lambda i: pool.lams[i],
    )
    lams = np.array([pool.lams[i] for i in idx])
    vecs = (
        np.array([pool.vecs[i] for i in idx])
        if idx
        else np.empty((0, system.dof_count))
    )
    return SliceResult(lob.sigma, hib.sigma, hib.nu - lob.nu, lams, vecs, counters)


def _lambda1_upper_bound(system: DiscreteSystem) -> float:
    """min_i K_ii / M_ii >= lambda_1 by the minimax principle."""
    kd = system.K.csr.diagonal()
    md = system.M.csr.diagonal()
    return float(np.min(kd / md))


def _dedup_and_orthonormalize(lams, vecs, M):
    """Drop genuine duplicates and re-orthonormalize degenerate clusters.

    Eigenvectors of well-separated eigenvalues are M-orthogonal by
    symmetry; only near-degenerate clusters can mix, and those get a
    symmetric (Loewdin) orthonormalization that preserves their span.
    """
    order = np.argsort(lams, kind="stable")
    lams = [lams[i] for i in order]
    vecs = [vecs[i] for i in order]
    scale = max((abs(l) for l in lams), default=1.0)
    out_l, out_v = [], []
    i = 0
    while i < len(lams):
        j = i + 1
        while j < len(lams) and lams[j] - lams[j - 1] <= 1e-8 * max(scale, abs(lams[j])):
            j += 1
        cluster = list(range(i, j))
        if len(cluster) > 1:
            X = np.array([vecs[t] for t in cluster])
            G = X @ (M @ X.T)
            dupes = set()
            for a in range(len(cluster)):
                if a in dupes:
                    continue
                for b in range(a + 1, len(cluster)):
                    if abs(G[a, b]) > 1.0 - 1e-9:
                        dupes.add(b)
            if dupes:
                cluster = [c for t, c in enumerate(cluster) if t not in dupes]
                X = np.array([vecs[t] for t in cluster])
                G = X @ (M @ X.T)
            if len(cluster) > 1 and np.abs(G - np.eye(len(cluster))).max() > 1e-10:
                evals, evecs = np.linalg.eigh(G)
                evals = np.clip(evals, 1e-30, None)
                X = (evecs @ np.diag(evals**-0.5) @ evecs.T) @ X
                for t, c in enumerate(cluster):
                    vecs[c] = X[t]
        for c in cluster:
            out_l.append(lams[c])
            out_v.append(vecs[c])
        i = j
    return out_l, out_v


def solve_spectrum(
    system: DiscreteSystem,
    count: int | None = None,
    interval=None,
    seed: int = 0,
    **kwargs,
) -> EigenResult:
    """Lowest ``count`` eigenpairs or every eigenpair in ``interval``.

    Shifts are placed dynamically from the measured eigenvalue density;
    every slice is validated against the inertia of its endpoint
    factorizations, so the returned set is complete with multiplicities.
    Solver knobs (m, keep, tol, ...) are SolverOptions fields.
    """
    if (count is None) == (interval is None):
        raise ValueError("request either the lowest `count` or an `interval`")
    opts = SolverOptions(**kwargs)
    counters = CostCounters()
    rng = np.random.default_rng(seed)
    pencil = _Pencil(system, counters)
    pool = _Pool()

    if interval is not None:
        lo_req, hi_req = float(interval[0]), float(interval[1])
        if not lo_req < hi_req:
            raise ValueError("empty interval")
        scale = hi_req - lo_req
        lob = _make_boundary(pencil, lo_req, scale)
        hib = _make_boundary(pencil, hi_req, scale)
        total = hib.nu - lob.nu
        if total == 0:
            slices = [(lob.sigma, hib.sigma, 0)]
        else:
            width0 = (hib.sigma - lob.sigma) * min(1.0, opts.target / total)
            slices = _march(pencil, lob, hib, None, width0, pool, opts, rng, scale)
        sel = [
            (lam, v)
            for lam, v in zip(pool.lams, pool.vecs)
            if lob.sigma < lam <= hib.sigma
        ]
        want = total
    else:
        if not 1 <= count <= system.dof_count:
            raise ValueError(f"requested {count} of {system.dof_count} eigenpairs")
        lam1 = _lambda1_upper_bound(system)
        scale = lam1
        sigma0 = -0.1 * lam1
        for _ in range(8):
            sigma0, f0 = pencil.factor(sigma0, scale)
            if f0.n_negative == 0:
                break
            counters.retries += 1
            sigma0 *= 10.0
        counters.nsh += 1
        start = _Boundary(sigma0, f0.n_negative, f0)
        width0 = lam1 * max(2, opts.target)
        slices = _march(pencil, start, None, count, width0, pool, opts, rng, scale)
        sel = sorted(zip(pool.lams, pool.vecs), key=lambda t: t[0])[:count]
        want = count

    lams = [t[0] for t in sel]
    vecs = [t[1] for t in sel]
    lams, vecs = _dedup_and_orthonormalize(lams, vecs, pencil.M)
    if len(lams) != want:
        raise CountMismatch(
            f"deduplication changed the validated count: kept {len(lams)} of {want}",
            expected=want,
            found=len(lams),
        )

    n = system.dof_count
    X = np.array(vecs).T if lams else np.empty((n, 0))
    lams_arr = np.array(lams)
    residuals = np.empty(lams_arr.size)
    for i in range(lams_arr.size):
        kx = pencil.K @ X[:, i]
        residuals[i] = np.linalg.norm(kx - lams_arr[i] * (pencil.M @ X[:, i]))
        residuals[i] /= max(np.linalg.norm(kx), 1e-300)
    if slices:
        bounds = np.array([s[1] for s in slices])
        slice_ids = np.searchsorted(bounds, lams_arr, side="left")
        slice_ids = np.minimum(slice_ids, len(slices) - 1)
    else:
        slice_ids = np.zeros(lams_arr.size, dtype=int)
    return EigenResult(lams_arr, X, residuals, slice_ids, slices, counters)
