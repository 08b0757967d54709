import numpy as np
import pytest

from helpers import naive_cox_de_boor
from rigaeig.bspline import (
    continuity_at,
    eval_basis,
    insert_separators,
    make_open_uniform_knots,
    make_spline_space,
    open_uniform_space,
    separator_basis_indices,
)


def test_open_uniform_ne4_p2():
    kv = make_open_uniform_knots(4, 2)
    assert kv.breakpoints == (0.0, 0.25, 0.5, 0.75, 1.0)
    assert kv.multiplicities == (3, 1, 1, 1, 3)
    assert kv.basis_count == 6


def test_open_uniform_ne8_p3():
    kv = make_open_uniform_knots(8, 3)
    assert len(kv.array) == 15
    assert kv.basis_count == 11


def test_open_uniform_single_element():
    kv = make_open_uniform_knots(1, 1)
    assert kv.breakpoints == (0.0, 1.0)
    assert kv.multiplicities == (2, 2)
    assert kv.basis_count == 2


@pytest.mark.parametrize("ne,p", [(0, 2), (4, 0), (-1, 1)])
def test_open_uniform_rejects(ne, p):
    with pytest.raises(ValueError):
        make_open_uniform_knots(ne, p)


def test_insert_separators_single_level():
    space = make_spline_space(8, 3, 1)
    k = space.knots.breakpoints.index(0.5)
    assert space.knots.multiplicities[k] == 3
    assert open_uniform_space(8, 3).basis_count == 11
    assert space.basis_count == 13


def test_insert_separators_full_fea():
    space = make_spline_space(8, 3, 3)
    assert all(m == 3 for m in space.knots.multiplicities[1:-1])
    for k in range(1, 8):
        assert continuity_at(space, k) == 0


def test_insert_separators_identity():
    base = open_uniform_space(8, 3)
    assert insert_separators(base, 0) is base


def test_insert_separators_rejects():
    with pytest.raises(ValueError):
        insert_separators(open_uniform_space(8, 3), 4)  # level > s
    with pytest.raises(ValueError):
        insert_separators(open_uniform_space(12, 2), 1)  # not a power of two


def test_eval_hat_midpoint():
    be = eval_basis(make_spline_space(1, 1), 0.5)
    np.testing.assert_allclose(be.values, [0.5, 0.5])


def test_eval_rejects_outside():
    space = make_spline_space(4, 2)
    for x in (-0.1, 1.1):
        with pytest.raises(ValueError):
            eval_basis(space, x)


def test_left_limit_at_one():
    for ne, p, lv in [(4, 2, 0), (8, 3, 2), (16, 4, 1)]:
        space = make_spline_space(ne, p, lv)
        be = eval_basis(space, 1.0)
        assert be.first_index + p == space.basis_count - 1
        np.testing.assert_allclose(be.values[-1], 1.0)


@pytest.mark.parametrize("ne,p,lv", [(4, 2, 0), (8, 3, 1), (8, 3, 3), (16, 5, 2), (32, 1, 0)])
def test_partition_of_unity(ne, p, lv):
    space = make_spline_space(ne, p, lv)
    rng = np.random.default_rng(42)
    for x in rng.uniform(0.0, 1.0, size=1000):
        be = eval_basis(space, float(x))
        assert abs(be.values.sum() - 1.0) < 1e-13
        assert (be.values >= -1e-15).all()


def test_matches_naive_recursion():
    space = make_spline_space(4, 2)
    U = space.knots.array
    be = eval_basis(space, 0.1)
    for r, val in enumerate(be.values):
        ref = naive_cox_de_boor(U, be.first_index + r, 2, 0.1)
        np.testing.assert_allclose(val, ref, atol=1e-15)

    rng = np.random.default_rng(3)
    for ne, p, lv in [(8, 3, 0), (8, 3, 2), (16, 4, 1)]:
        space = make_spline_space(ne, p, lv)
        U = space.knots.array
        for x in rng.uniform(0.0, 1.0, size=40):
            be = eval_basis(space, float(x))
            full = np.array([naive_cox_de_boor(U, i, p, float(x)) for i in range(space.basis_count)])
            dense = np.zeros(space.basis_count)
            dense[be.first_index : be.first_index + p + 1] = be.values
            np.testing.assert_allclose(dense, full, atol=1e-13)


@pytest.mark.parametrize("ne,p,lv", [(8, 2, 0), (8, 3, 1), (16, 4, 2)])
def test_derivative_matches_finite_difference(ne, p, lv):
    space = make_spline_space(ne, p, lv)
    rng = np.random.default_rng(7)
    h = 1e-6
    for x in rng.uniform(2 * h, 1.0 - 2 * h, size=50):
        be = eval_basis(space, float(x))
        plus = eval_basis(space, float(x + h))
        minus = eval_basis(space, float(x - h))
        if plus.first_index != be.first_index or minus.first_index != be.first_index:
            continue  # straddles a breakpoint; the stencil is not aligned
        fd = (plus.values - minus.values) / (2 * h)
        np.testing.assert_allclose(be.derivs, fd, atol=1e-6)


def test_dimension_law():
    for s in range(1, 7):
        ne = 2**s
        for p in range(1, 6):
            for lv in range(s + 1):
                space = make_spline_space(ne, p, lv)
                assert space.basis_count == ne + p + (2**lv - 1) * (p - 1)


def test_local_support_off_knots():
    rng = np.random.default_rng(11)
    for ne, p, lv in [(8, 3, 0), (8, 3, 3), (16, 2, 2)]:
        space = make_spline_space(ne, p, lv)
        breaks = set(space.knots.breakpoints)
        count = 0
        while count < 30:
            x = float(rng.uniform(0, 1))
            if any(abs(x - b) < 1e-9 for b in breaks):
                continue
            be = eval_basis(space, x)
            assert np.count_nonzero(be.values > 1e-14) == p + 1
            count += 1


def test_continuity_classes():
    iga = make_spline_space(8, 3, 0)
    assert continuity_at(iga, 1) == 2  # C^{p-1}

    riga = make_spline_space(8, 3, 2)
    bp = riga.knots.breakpoints
    assert continuity_at(riga, bp.index(0.25)) == 0
    assert continuity_at(riga, bp.index(0.125)) == 2

    with pytest.raises(ValueError):
        continuity_at(iga, 0)  # boundary breakpoint is not interior


def test_separator_basis_indices_interpolate():
    space = make_spline_space(8, 3, 2)
    for i in separator_basis_indices(space):
        x_span = None
        # the separator basis takes the value one at its breakpoint
        for bp, mult in zip(space.knots.breakpoints[1:-1], space.knots.multiplicities[1:-1]):
            if mult == 3:
                be = eval_basis(space, bp)
                dense = np.zeros(space.basis_count)
                dense[be.first_index : be.first_index + 4] = be.values
                if abs(dense[i] - 1.0) < 1e-14:
                    x_span = bp
        assert x_span is not None
