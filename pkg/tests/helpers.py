"""Shared oracles for the test suite."""

import numpy as np
import scipy.linalg


def dense_pencil_eig(system, vectors=False):
    """Dense generalized symmetric eigensolve of (K, M), values ascending."""
    K = system.K.toarray()
    M = system.M.toarray()
    if vectors:
        return scipy.linalg.eigh(K, M, driver="gvd")
    return scipy.linalg.eigh(K, M, eigvals_only=True, driver="gvd")


def naive_cox_de_boor(knots, i, p, x):
    """Direct evaluation of the basis recursion (right-continuous).

    Independent scalar oracle; x must lie strictly inside (0, 1) so the
    right-end limit convention never enters.
    """
    if p == 0:
        return 1.0 if knots[i] <= x < knots[i + 1] else 0.0
    out = 0.0
    den = knots[i + p] - knots[i]
    if den > 0.0:
        out += (x - knots[i]) / den * naive_cox_de_boor(knots, i, p - 1, x)
    den = knots[i + p + 1] - knots[i + 1]
    if den > 0.0:
        out += (knots[i + p + 1] - x) / den * naive_cox_de_boor(knots, i + 1, p - 1, x)
    return out


def cluster_slices(values, rel=1e-8):
    """Consecutive index ranges of near-equal values (for degenerate sets)."""
    out = []
    i = 0
    vals = np.asarray(values)
    while i < len(vals):
        j = i + 1
        while j < len(vals) and vals[j] - vals[j - 1] <= rel * max(abs(vals[j]), 1.0):
            j += 1
        out.append(slice(i, j))
        i = j
    return out


def subspace_angle(X, Y, M):
    """Largest principal angle between two M-orthonormal column spans."""
    A = X.T @ (M @ Y)
    s = np.linalg.svd(A, compute_uv=False)
    smin = min(s.min(), 1.0)
    return float(np.arccos(smin))
