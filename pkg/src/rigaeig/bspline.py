"""Open-knot B-spline spaces on [0,1] and C0 separator refinement.

All spaces live on the unit interval with uniform elements.  A space is
refined by raising the multiplicity of selected interior knots to the
polynomial degree, which makes the basis interpolatory (C0) there and
splits the mesh into independent macroelement blocks.  Knot coordinates
are exact binary fractions so refinement matches existing breakpoints
without any floating-point tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class KnotVector:
    """Open knot vector given as distinct breakpoints plus multiplicities."""

    breakpoints: tuple[float, ...]
    multiplicities: tuple[int, ...]
    degree: int

    def __post_init__(self):
        p = self.degree
        if p < 1:
            raise ValueError(f"degree must be >= 1, got {p}")
        if len(self.breakpoints) != len(self.multiplicities):
            raise ValueError("breakpoints and multiplicities differ in length")
        if len(self.breakpoints) < 2:
            raise ValueError("need at least the two boundary breakpoints")
        b = self.breakpoints
        if b[0] != 0.0 or b[-1] != 1.0:
            raise ValueError("knot vector must span [0, 1]")
        if any(x >= y for x, y in zip(b, b[1:])):
            raise ValueError("breakpoints must be strictly ascending")
        m = self.multiplicities
        if m[0] != p + 1 or m[-1] != p + 1:
            raise ValueError("boundary breakpoints must have multiplicity degree+1")
        if any(not 1 <= mi <= p for mi in m[1:-1]):
            raise ValueError("interior multiplicities must lie in [1, degree]")

    @cached_property
    def array(self) -> np.ndarray:
        """Expanded knot sequence with repeated entries."""
        return np.repeat(self.breakpoints, self.multiplicities)

    @property
    def basis_count(self) -> int:
        # total knots = n + p + 1
        return int(sum(self.multiplicities)) - self.degree - 1


@dataclass(frozen=True)
class SplineSpace:
    """Univariate spline space: knots, degree, and partitioning metadata.

    ``level`` counts the recursive C0 bisections applied to the element
    mesh; level 0 is the maximum-continuity space, level s (with
    ``elements`` = 2**s) is the fully decoupled C0 space.
    """

    knots: KnotVector
    degree: int
    basis_count: int
    level: int
    elements: int

    def __post_init__(self):
        if self.basis_count != self.knots.basis_count:
            raise ValueError("basis_count inconsistent with knot vector")


@dataclass(frozen=True)
class BasisEval:
    """Values and first derivatives of the degree+1 bases active at a point."""

    first_index: int
    values: np.ndarray
    derivs: np.ndarray


def make_open_uniform_knots(ne: int, p: int) -> KnotVector:
    """Open uniform knot vector for ``ne`` equal elements and degree ``p``.

    Interior breakpoints ``i/ne`` carry multiplicity one, so the basis has
    the maximum continuity ``C^(p-1)`` across every element interface.
    """
    if ne < 1:
        raise ValueError(f"element count must be >= 1, got {ne}")
    if p < 1:
        raise ValueError(f"degree must be >= 1, got {p}")
    breakpoints = tuple(i / ne for i in range(ne + 1))
    multiplicities = (p + 1,) + (1,) * (ne - 1) + (p + 1,)
    return KnotVector(breakpoints, multiplicities, p)


def open_uniform_space(ne: int, p: int) -> SplineSpace:
    """Unrefined (level 0) space over ``ne`` uniform elements."""
    kv = make_open_uniform_knots(ne, p)
    return SplineSpace(kv, p, kv.basis_count, 0, ne)


def insert_separators(space: SplineSpace, level: int) -> SplineSpace:
    """Raise the knots at j*2**-level (j = 1..2**level - 1) to multiplicity p.

    Requires the element count to be a power of two so the separator
    positions coincide with existing breakpoints.  Each raised knot adds
    p-1 basis functions; level 0 returns the space unchanged.
    """
    ne = space.elements
    s = ne.bit_length() - 1
    if ne != 1 << s:
        raise ValueError(f"element count {ne} is not a power of two")
    if not 0 <= level <= s:
        raise ValueError(f"level must lie in [0, {s}], got {level}")
    if space.level != 0:
        raise ValueError("separators can only be inserted into a level-0 space")
    if level == 0:
        return space
    p = space.degree
    separators = {j * 2 ** (s - level) for j in range(1, 2**level)}  # element index of breakpoint
    mult = list(space.knots.multiplicities)
    for j in separators:
        mult[j] = p
    kv = KnotVector(space.knots.breakpoints, tuple(mult), p)
    return SplineSpace(kv, p, kv.basis_count, level, ne)


def make_spline_space(ne: int, p: int, level: int = 0) -> SplineSpace:
    """Convenience constructor: uniform space with ``level`` C0 bisections."""
    return insert_separators(open_uniform_space(ne, p), level)


def _find_span(knots: np.ndarray, p: int, n: int, x: float) -> int:
    """Index mu of the nonempty span with knots[mu] <= x < knots[mu+1].

    At x = 1 the last nonempty span is returned (left-limit convention);
    elsewhere evaluation is right-continuous.
    """
    if x >= knots[n]:  # right end of the domain
        mu = n - 1
        while knots[mu] == knots[mu + 1]:
            mu -= 1
        return mu
    mu = int(np.searchsorted(knots, x, side="right")) - 1
    return max(mu, p)


def eval_basis(space: SplineSpace, x: float) -> BasisEval:
    """Evaluate the p+1 locally supported bases and derivatives at ``x``.

    The returned values follow the Cox-De Boor recursion; derivatives use
    the exact degree-reduction formula rather than numerical
    differentiation.  Raises ``ValueError`` outside [0, 1].
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"evaluation point {x} outside [0, 1]")
    p = space.degree
    n = space.basis_count
    U = space.knots.array
    mu = _find_span(U, p, n, x)

    # triangular recursion (values of all degrees up to p on this span)
    N = np.zeros(p + 1)
    N[0] = 1.0
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    lower = np.zeros(p)  # degree p-1 values, saved one level early
    for j in range(1, p + 1):
        left[j] = x - U[mu + 1 - j]
        right[j] = U[mu + j] - x
        if j == p:
            lower[:] = N[:p]
        saved = 0.0
        for r in range(j):
            temp = N[r] / (right[r + 1] + left[j - r])
            N[r] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        N[j] = saved

    # B'_{i,p} = p * ( B_{i,p-1}/(U[i+p]-U[i]) - B_{i+1,p-1}/(U[i+p+1]-U[i+1]) )
    derivs = np.zeros(p + 1)
    first = mu - p
    for r in range(p + 1):
        i = first + r
        acc = 0.0
        if r >= 1:
            den = U[i + p] - U[i]
            if den > 0.0:
                acc += lower[r - 1] / den
        if r <= p - 1:
            den = U[i + p + 1] - U[i + 1]
            if den > 0.0:
                acc -= lower[r] / den
        derivs[r] = p * acc

    return BasisEval(first, N, derivs)


def continuity_at(space: SplineSpace, breakpoint_index: int) -> int:
    """Smoothness exponent k of C^k at an interior breakpoint (= p - mult)."""
    nb = len(space.knots.breakpoints)
    if not 1 <= breakpoint_index <= nb - 2:
        raise ValueError(f"breakpoint index {breakpoint_index} is not interior")
    return space.degree - space.knots.multiplicities[breakpoint_index]


def element_spans(space: SplineSpace) -> list[tuple[int, float, float]]:
    """Nonempty knot spans as (span index mu, left, right) triples."""
    U = space.knots.array
    n = space.basis_count
    out = []
    for mu in range(space.degree, n):
        if U[mu] < U[mu + 1]:
            out.append((mu, float(U[mu]), float(U[mu + 1])))
    return out


def separator_basis_indices(space: SplineSpace) -> np.ndarray:
    """Indices of bases interpolatory at multiplicity-p interior breakpoints.

    For a breakpoint whose copies occupy knot positions q..q+p-1, the
    single basis with index q-1 takes the value one there; these are the
    C0 interface degrees of freedom created by ``insert_separators``.
    """
    p = space.degree
    out = []
    pos = 0
    mults = space.knots.multiplicities
    for k, m in enumerate(mults):
        if 0 < k < len(mults) - 1 and m == p:
            out.append(pos - 1)
        pos += m
    return np.asarray(out, dtype=np.int64)
