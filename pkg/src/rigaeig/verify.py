"""Exact Laplace spectra, eigenfunction evaluation, and error metrics.

The exact eigenpairs on the unit box with zero boundary values are
lambda = pi^2 * (i^2 + j^2 + ...) with products of normalized sine
eigenfunctions.  Discrete pairs are matched positionally after sorting
(inertia-complete solves cannot skip modes, which also makes the
min-max bound lambda_h >= lambda exact per position), and the error
measures are

    EV  = (lambda_h - lambda) / lambda
    EFL = || u_h - u ||_L2^2
    EFE = EV + EFL        (the Pythagorean identity, used as definition)

with the independently integrated energy seminorm available for
checking that identity.  Eigenfunction errors are only meaningful for
modes whose exact eigenfunction is unique up to sign: equal-index
(diagonal) modes outside any degenerate cluster.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .assembly import DiscreteSystem, gauss_points
from .bspline import element_spans, eval_basis

PI2 = math.pi * math.pi


@dataclass(frozen=True)
class ExactMode:
    """One continuous eigenmode: index tuple and eigenvalue."""

    indices: tuple[int, ...]
    lam: float
    cluster_id: int
    cluster_size: int
    cluster_rank: int

    @property
    def diagonal(self) -> bool:
        return len(set(self.indices)) == 1

    @property
    def unique_eigenfunction(self) -> bool:
        """True when the eigenfunction is determined up to sign."""
        return self.diagonal and self.cluster_size == 1


def exact_spectrum(d: int, count: int | None = None, interval=None) -> list[ExactMode]:
    """Exact eigenvalues ascending, ties broken lexicographically.

    Either the first ``count`` modes or all modes with eigenvalue inside
    the closed ``interval``.  The enumeration bound is grown until it
    provably covers the request (any tuple left out exceeds the cut).
    """
    if d not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {d}")
    if (count is None) == (interval is None):
        raise ValueError("request either `count` or `interval`")

    if interval is not None:
        lo, hi = float(interval[0]), float(interval[1])
        kmax = int(math.sqrt(max(hi / PI2 - (d - 1), 0.0))) + 1
        raw = [
            (PI2 * sum(i * i for i in idx), idx)
            for idx in itertools.product(range(1, kmax + 1), repeat=d)
        ]
        raw = [(lam, idx) for lam, idx in raw if lo <= lam <= hi]
        raw.sort()
    else:
        kmax = max(2, int(round(count ** (1.0 / d))) + 2)
        while True:
            raw = [
                (PI2 * sum(i * i for i in idx), idx)
                for idx in itertools.product(range(1, kmax + 1), repeat=d)
            ]
            # a tuple outside the bound has some index >= kmax+1
            safe = PI2 * ((kmax + 1) ** 2 + (d - 1))
            raw = [(lam, idx) for lam, idx in raw if lam < safe]
            if len(raw) >= count:
                raw.sort()
                raw = raw[:count]
                break
            kmax *= 2

    modes: list[ExactMode] = []
    i = 0
    cluster_id = 0
    while i < len(raw):
        j = i + 1
        while j < len(raw) and abs(raw[j][0] - raw[i][0]) < 1e-9 * raw[i][0]:
            j += 1
        for rank, (lam, idx) in enumerate(raw[i:j]):
            modes.append(ExactMode(idx, lam, cluster_id, j - i, rank))
        cluster_id += 1
        i = j
    return modes


def exact_eigenfunction(mode: ExactMode, axes: list[np.ndarray]) -> np.ndarray:
    """Exact eigenfunction on the tensor grid of ``axes`` (x first).

    Returns an array indexed grid-style, last axis fastest (x), matching
    the layout of the discrete evaluations.
    """
    d = len(mode.indices)
    out = np.ones([len(a) for a in reversed(axes)])
    for t, (k, ax) in enumerate(zip(mode.indices, axes)):
        vals = math.sqrt(2.0) * np.sin(k * math.pi * ax)
        shape = [1] * d
        shape[d - 1 - t] = len(ax)
        out = out * vals.reshape(shape)
    return out


def exact_eigenfunction_deriv(mode: ExactMode, axes: list[np.ndarray], t: int) -> np.ndarray:
    """Partial derivative of the exact eigenfunction along direction t."""
    d = len(mode.indices)
    out = np.ones([len(a) for a in reversed(axes)])
    for s, (k, ax) in enumerate(zip(mode.indices, axes)):
        if s == t:
            vals = math.sqrt(2.0) * k * math.pi * np.cos(k * math.pi * ax)
        else:
            vals = math.sqrt(2.0) * np.sin(k * math.pi * ax)
        shape = [1] * d
        shape[d - 1 - s] = len(ax)
        out = out * vals.reshape(shape)
    return out


def _embed_coefficients(system: DiscreteSystem, coeffs: np.ndarray) -> np.ndarray:
    """Reduced coefficient vector to the full control tensor (zeros on the
    eliminated boundary layers); axes ordered (z, y, x)."""
    if coeffs.shape != (system.dof_count,):
        raise ValueError(
            f"coefficient vector has shape {coeffs.shape}, expected ({system.dof_count},)"
        )
    red_shape = [s.basis_count - 2 for s in reversed(system.spaces)]
    full_shape = [s.basis_count for s in reversed(system.spaces)]
    U = np.zeros(full_shape)
    inner = tuple(slice(1, n - 1) for n in full_shape)
    U[inner] = coeffs.reshape(red_shape)
    return U


def evaluate_eigenfunction(system: DiscreteSystem, coeffs, points) -> np.ndarray:
    """Discrete eigenfunction values at arbitrary points in [0,1]^d.

    ``points`` is (npts, d) or a flat array in 1D.  The coefficient
    vector is the Dirichlet-reduced one returned by the solver.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    U = _embed_coefficients(system, coeffs)
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if system.dim == 1 and pts.shape[0] == 1 and pts.shape[1] != 1:
        pts = pts.T
    if pts.shape[1] != system.dim:
        raise ValueError(f"points have dimension {pts.shape[1]}, system is {system.dim}D")
    out = np.empty(pts.shape[0])
    d = system.dim
    for q, x in enumerate(pts):
        evs = [eval_basis(system.spaces[t], float(x[t])) for t in range(d)]
        block = U
        for t in reversed(range(d)):  # axes of U are (z, y, x)
            ev = evs[t]
            sl = [slice(None)] * block.ndim
            sl[block.ndim - 1 - t] = slice(ev.first_index, ev.first_index + len(ev.values))
            block = block[tuple(sl)]
        acc = block
        for t in reversed(range(d)):
            acc = np.tensordot(acc, evs[t].values, axes=([acc.ndim - 1 - t], [0]))
        out[q] = float(acc)
    return out


class ErrorEvaluator:
    """Amortized quadrature machinery for eigenfunction error integrals.

    Builds per-direction Gauss rules (default degree+2 points per
    element) and dense collocation matrices once, then evaluates L2 and
    energy error integrals per mode with small matrix products.
    """

    def __init__(self, system: DiscreteSystem, n_quad: int | None = None):
        self.system = system
        d = system.dim
        self.axes: list[np.ndarray] = []
        self.weights: list[np.ndarray] = []
        self.bval: list[np.ndarray] = []
        self.bder: list[np.ndarray] = []
        for space in system.spaces:
            nq = (space.degree + 2) if n_quad is None else n_quad
            pts_all, wts_all = [], []
            for _, a, b in element_spans(space):
                pts, wts = gauss_points(nq, a, b)
                pts_all.append(pts)
                wts_all.append(wts)
            pts = np.concatenate(pts_all)
            wts = np.concatenate(wts_all)
            nb = space.basis_count
            bv = np.zeros((len(pts), nb))
            bd = np.zeros((len(pts), nb))
            for q, x in enumerate(pts):
                ev = eval_basis(space, float(x))
                bv[q, ev.first_index : ev.first_index + len(ev.values)] = ev.values
                bd[q, ev.first_index : ev.first_index + len(ev.values)] = ev.derivs
            self.axes.append(pts)
            self.weights.append(wts)
            self.bval.append(bv)
            self.bder.append(bd)
        self.dim = d

    def _contract(self, U: np.ndarray, mats: list[np.ndarray]) -> np.ndarray:
        # U axes (z, y, x); mats indexed by direction t (x = 0)
        out = U
        for t in range(self.dim):  # contract the last axis each time
            out = np.tensordot(out, mats[t], axes=([self.dim - 1], [1]))
            out = np.moveaxis(out, -1, 0)
        # axes rotated d times: back to (z_pts, y_pts, x_pts)
        return out

    def uh_values(self, coeffs: np.ndarray) -> np.ndarray:
        U = _embed_coefficients(self.system, coeffs)
        return self._contract(U, self.bval)

    def uh_deriv(self, coeffs: np.ndarray, t: int) -> np.ndarray:
        U = _embed_coefficients(self.system, coeffs)
        mats = [self.bder[s] if s == t else self.bval[s] for s in range(self.dim)]
        return self._contract(U, mats)

    def integrate(self, grid: np.ndarray) -> float:
        out = grid
        for t in range(self.dim):
            out = np.tensordot(out, self.weights[t], axes=([out.ndim - 1], [0]))
        return float(out)

    def l2_error_sq(self, coeffs: np.ndarray, mode: ExactMode) -> float:
        diff = self.uh_values(coeffs) - exact_eigenfunction(mode, self.axes)
        return self.integrate(diff * diff)

    def energy_error_sq(self, coeffs: np.ndarray, mode: ExactMode) -> float:
        total = 0.0
        for t in range(self.dim):
            diff = self.uh_deriv(coeffs, t) - exact_eigenfunction_deriv(mode, self.axes, t)
            total += self.integrate(diff * diff)
        return total

    def inner_with_exact(self, coeffs: np.ndarray, mode: ExactMode) -> float:
        return self.integrate(self.uh_values(coeffs) * exact_eigenfunction(mode, self.axes))


@dataclass
class AlignedMode:
    """Discrete pair matched to its exact mode, unit L2 norm, sign fixed."""

    mode: ExactMode
    position: int  # zero-based rank in the sorted spectrum
    lam_h: float
    coeffs: np.ndarray | None  # None when no eigenfunction comparison applies


@dataclass
class ErrorRecord:
    """Eigenvalue and (where defined) eigenfunction errors of one mode."""

    position: int
    indices: tuple[int, ...]
    ev: float
    efl: float  # NaN when the exact eigenfunction is not unique
    efe: float
    diagonal: bool


def match_and_normalize(
    eigenvalues,
    vectors,
    modes: list[ExactMode],
    system: DiscreteSystem,
    evaluator: ErrorEvaluator | None = None,
) -> list[AlignedMode]:
    """Positionally match sorted discrete pairs to the exact modes.

    Eigenvectors are scaled to unit L2 norm (through the mass matrix)
    and signed so the inner product with the exact eigenfunction is
    nonnegative; both steps are skipped for modes without a unique
    exact eigenfunction (degenerate clusters and off-diagonal modes),
    whose coefficient slot is None.
    """
    lams = np.asarray(eigenvalues, dtype=np.float64)
    n = min(lams.size, len(modes))
    need_funcs = any(modes[i].unique_eigenfunction for i in range(n))
    if evaluator is None and need_funcs:
        evaluator = ErrorEvaluator(system)
    M = system.M.csr
    out = []
    for i in range(n):
        mode = modes[i]
        if not mode.unique_eigenfunction:
            out.append(AlignedMode(mode, i, float(lams[i]), None))
            continue
        c = np.asarray(vectors[:, i], dtype=np.float64).copy()
        nrm = math.sqrt(max(float(c @ (M @ c)), 0.0))
        if nrm > 0:
            c /= nrm
        if evaluator.inner_with_exact(c, mode) < 0:
            c = -c
        out.append(AlignedMode(mode, i, float(lams[i]), c))
    return out


def error_metrics(
    aligned: AlignedMode,
    system: DiscreteSystem,
    evaluator: ErrorEvaluator | None = None,
) -> ErrorRecord:
    """EV always; EFL and EFE when the exact eigenfunction is unique."""
    mode = aligned.mode
    ev = (aligned.lam_h - mode.lam) / mode.lam
    if aligned.coeffs is None:
        return ErrorRecord(aligned.position, mode.indices, ev, math.nan, math.nan, mode.diagonal)
    if evaluator is None:
        evaluator = ErrorEvaluator(system)
    efl = evaluator.l2_error_sq(aligned.coeffs, mode)
    return ErrorRecord(aligned.position, mode.indices, ev, efl, ev + efl, mode.diagonal)


def error_table(result_eigenvalues, result_vectors, system: DiscreteSystem) -> list[ErrorRecord]:
    """Error records for a whole solve against the exact spectrum."""
    lams = np.asarray(result_eigenvalues)
    modes = exact_spectrum(system.dim, count=lams.size)
    evaluator = ErrorEvaluator(system)
    aligned = match_and_normalize(lams, result_vectors, modes, system, evaluator)
    return [error_metrics(a, system, evaluator) for a in aligned]
