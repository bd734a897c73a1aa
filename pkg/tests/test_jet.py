import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oplab.errors import JetMismatchError, PoleError
from oplab.jet import (
    Jet,
    jet_add,
    jet_compose,
    jet_const,
    jet_div,
    jet_ipow,
    jet_mul,
    jet_sub,
    jet_var,
)


def jet_from(coeffs, z0=0j) -> Jet:
    return Jet(np.asarray(z0, dtype=complex), np.asarray(coeffs, dtype=complex))


def jet_from_derivs(derivs, z0=0j) -> Jet:
    return jet_from([d / math.factorial(k) for k, d in enumerate(derivs)], z0)


small = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)
coeff_lists = st.lists(small, min_size=5, max_size=5)


def test_jet_const_is_constant():
    j = jet_const(5, 0, 2)
    np.testing.assert_array_equal(j.coeffs, [5, 0, 0])
    assert j.derivative(1) == 0


def test_zero_const_is_additive_identity():
    x = jet_from([1 + 2j, -3, 0.5j, 4], 0.3)
    z = jet_const(0, 0.3, 3)
    np.testing.assert_array_equal(jet_add(x, z).coeffs, x.coeffs)


def test_jet_var():
    np.testing.assert_array_equal(jet_var(0.5, 3).coeffs, [0.5, 1, 0, 0])
    with pytest.raises(ValueError):
        jet_var(0.5, 0)


def test_square_of_variable():
    a = 0.3 - 0.4j
    sq = jet_mul(jet_var(a, 2), jet_var(a, 2))
    np.testing.assert_allclose(sq.coeffs, [a * a, 2 * a, 1])
    assert sq.derivative(2) == 2


def test_one_plus_h_times_one_minus_h():
    p = jet_mul(jet_from([1, 1, 0]), jet_from([1, -1, 0]))
    np.testing.assert_allclose(p.coeffs, [1, 0, -1])


def test_self_subtraction_is_zero():
    x = jet_from([1, 2, 3, 4j])
    assert np.all(jet_sub(x, x).coeffs == 0)


@pytest.mark.parametrize("abar,z0", [(0.3 - 0.2j, 0.1j), (0.9, -0.5), (-0.6j, 0.7)])
def test_geometric_series_division(abar, z0):
    n = 7
    one = jet_const(1, z0, n)
    den = jet_from([1 - abar * z0, -abar] + [0] * (n - 1), z0)
    q = jet_div(one, den)
    want = [abar**k / (1 - abar * z0) ** (k + 1) for k in range(n + 1)]
    np.testing.assert_allclose(q.coeffs, want, rtol=1e-13)


def test_division_by_vanishing_constant_term():
    with pytest.raises(PoleError):
        jet_div(jet_const(1, 0, 2), jet_var(0, 2))


def test_mismatched_pairs_are_rejected():
    with pytest.raises(JetMismatchError):
        jet_add(jet_var(0.1, 2), jet_var(0.2, 2))
    with pytest.raises(JetMismatchError):
        jet_mul(jet_var(0.1, 2), jet_var(0.1, 3))


def test_compose_second_derivative_chain_rule():
    # f = exp-like data at w, phi with arbitrary derivatives at z0.
    fd = [0.7, -1.3 + 0.2j, 2.1, 0.4j]
    gd = [0.25 + 0.1j, 0.8 - 0.3j, -0.6j, 1.1]
    outer = jet_from_derivs(fd[:3], gd[0])
    inner = jet_from_derivs(gd[:3], 0.1)
    got = jet_compose(outer, inner).derivative(2)
    want = fd[2] * gd[1] ** 2 + fd[1] * gd[2]
    assert abs(got - want) < 1e-13


def test_compose_with_identity_inner():
    outer = jet_from([1, 2j, -3, 0.5], 0.4)
    out = jet_compose(outer, jet_var(0.4, 3))
    np.testing.assert_allclose(out.coeffs, outer.coeffs)


def test_compose_square_of_half():
    # f(z) = z^2 at phi(0) = 0, phi(z) = z/2.
    outer = jet_mul(jet_var(0, 2), jet_var(0, 2))
    inner = jet_from([0, 0.5, 0])
    assert abs(jet_compose(outer, inner).derivative(2) - 0.5) < 1e-15


def test_compose_requires_matching_center():
    with pytest.raises(JetMismatchError):
        jet_compose(jet_var(0.1, 2), jet_from([0.3, 1, 0]))


@settings(max_examples=50, deadline=None)
@given(coeff_lists, coeff_lists)
def test_faa_di_bruno_through_order_four(f_derivs, g_derivs):
    f, g = f_derivs, g_derivs
    outer = jet_from_derivs(f, g[0])
    inner = jet_from_derivs(g, 0j)
    got = jet_compose(outer, inner).derivatives()
    want = [
        f[0],
        f[1] * g[1],
        f[2] * g[1] ** 2 + f[1] * g[2],
        f[3] * g[1] ** 3 + 3 * f[2] * g[1] * g[2] + f[1] * g[3],
        f[4] * g[1] ** 4 + 6 * f[3] * g[1] ** 2 * g[2] + 3 * f[2] * g[2] ** 2 + 4 * f[2] * g[1] * g[3] + f[1] * g[4],
    ]
    scale = 1 + max(abs(w) for w in want)
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-10 * scale)


def test_ipow_basics():
    x = jet_from([1, 1, 0, 0])
    np.testing.assert_allclose(jet_ipow(x, 3).coeffs, [1, 3, 3, 1])
    y = jet_from([0.2j, -1, 0.5, 3])
    assert jet_ipow(y, 1) is y
    chain = y
    for _ in range(4):
        chain = jet_mul(chain, y)
    np.testing.assert_allclose(jet_ipow(y, 5).coeffs, chain.coeffs, rtol=1e-14, atol=1e-15)
    with pytest.raises(ValueError):
        jet_ipow(y, 0)


@settings(max_examples=40, deadline=None)
@given(coeff_lists, coeff_lists, coeff_lists)
def test_ring_laws(a, b, c):
    x, y, z = jet_from(a), jet_from(b), jet_from(c)
    np.testing.assert_allclose(jet_add(x, y).coeffs, jet_add(y, x).coeffs)
    np.testing.assert_allclose(jet_mul(x, y).coeffs, jet_mul(y, x).coeffs, rtol=1e-12, atol=1e-12)
    lhs = jet_mul(x, jet_add(y, z)).coeffs
    rhs = jet_add(jet_mul(x, y), jet_mul(x, z)).coeffs
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_derivative_is_factorial_times_coefficient():
    x = jet_from([1, 2, 3, 4, 5])
    assert [x.derivative(k) for k in range(5)] == [1, 2, 6, 24, 120]
    with pytest.raises(ValueError):
        x.derivative(5)


def test_batched_jets_match_scalar_jets():
    pts = np.array([0.1, -0.3j, 0.5 + 0.5j])
    batch = jet_ipow(jet_add(jet_var(pts, 4), jet_const(2, pts, 4)), 3)
    for i, p in enumerate(pts):
        single = jet_ipow(jet_add(jet_var(p, 4), jet_const(2, p, 4)), 3)
        np.testing.assert_allclose(batch.coeffs[:, i], single.coeffs)
