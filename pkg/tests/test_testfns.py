from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oplab.errors import DeltaSystemError, DomainError
from oplab.funcspace import QuadConfig, TestFn, b1_surrogate_norm, eval_jet
from oplab.testfns import (
    DeltaSystem,
    default_basis,
    g_ia,
    index_set,
    paper_three_term,
    pochhammer,
    solve_delta_coeffs,
    verify_delta,
)


def test_pochhammer_examples():
    assert [pochhammer(j, 0) for j in (1, 5, 9)] == [1, 1, 1]
    assert pochhammer(1, 3) == 6
    assert pochhammer(3, 2) == 12


@given(st.integers(1, 12), st.integers(0, 10))
def test_pochhammer_matches_gamma_ratio(j, k):
    import math

    assert pochhammer(j, k) == math.factorial(j + k - 1) // math.factorial(j - 1)


@pytest.mark.parametrize(
    "m,want",
    [(1, (0, 1, 2, 3)), (2, (0, 1, 2, 3, 4)), (3, (0, 1, 2, 3, 4, 5)), (4, (0, 1, 2, 4, 5, 6))],
)
def test_index_set_merges_collisions(m, want):
    assert index_set(m) == want
    assert len(default_basis(m)) == len(want)


def test_worked_three_by_three_solve():
    sol = solve_delta_coeffs(0, 2, basis_js=(1, 2, 3), rows=(0, 1, 2))
    assert sol.exact == (Fraction(3), Fraction(-3), Fraction(1))
    assert sol.residual == 0
    a = 0.4 + 0.3j
    jet = eval_jet(3 * TestFn(1, a) - 3 * TestFn(2, a) + TestFn(3, a), a, 2)
    np.testing.assert_allclose([complex(jet.derivative(k)) for k in range(3)], [1, 0, 0], atol=1e-13)


def test_matrix_entries_are_pochhammer():
    sys = DeltaSystem.build(4)
    assert sys.index_set == (0, 1, 2, 4, 5, 6)
    assert sys.basis_js == (1, 2, 3, 5, 6, 7)
    for r, k in enumerate(sys.index_set):
        for c, j in enumerate(sys.basis_js):
            assert sys.matrix[r, c] == pochhammer(j, k)


@pytest.mark.parametrize("m", [1, 2, 3, 4, 6])
def test_square_system_residuals(m):
    for i in index_set(m):
        sol = solve_delta_coeffs(i, m)
        assert sol.residual <= 1e-10
        row_i = [pochhammer(j, i) for j in sol.basis_js]
        assert sum(c * p for c, p in zip(sol.exact, row_i)) == 1


def test_non_square_system_rejected():
    with pytest.raises(DeltaSystemError):
        solve_delta_coeffs(0, 4, basis_js=(1, 2, 3))


def test_singular_system_rejected():
    with pytest.raises(DeltaSystemError):
        solve_delta_coeffs(0, 1, basis_js=(1, 1, 2, 3))


@pytest.mark.parametrize("n", range(1, 11))
def test_factorial_vandermonde_invertible(n):
    sol = solve_delta_coeffs(0, 1, basis_js=tuple(range(1, n + 1)), rows=tuple(range(n)))
    assert sol.residual == 0


def test_solution_linear_in_target():
    m = 4
    sols = [solve_delta_coeffs(i, m) for i in index_set(m)]
    weights = [Fraction(2), Fraction(-1), Fraction(1, 2), Fraction(3), Fraction(0), Fraction(1)]
    combo = [sum(w * s.exact[c] for w, s in zip(weights, sols)) for c in range(len(weights))]
    mat = DeltaSystem.build(m).matrix
    assert [sum(p * c for p, c in zip(row, combo)) for row in mat] == weights
    # the double-rounded coefficients satisfy the same identity to rounding level
    combo_f = np.sum([float(w) * np.array(s.coeffs) for w, s in zip(weights, sols)], axis=0)
    scale = np.abs(mat.astype(float)) @ np.abs(combo_f)
    assert np.all(np.abs(mat.astype(float) @ combo_f - [float(w) for w in weights]) <= 1e-12 * scale)


def test_g_at_parameter_for_i_zero():
    a = 0.7 * np.exp(1j * np.pi / 5)
    assert abs(complex(eval_jet(g_ia(0, a, 4), a, 0).value) - 1) < 1e-10


def test_verify_delta_for_all_indices_m4():
    a = 0.7 * np.exp(1j * np.pi / 5)
    for i in index_set(4):
        rep = verify_delta(g_ia(i, a, 4), i, a, 4)
        assert rep.passed, rep.mismatches


@pytest.mark.parametrize("m", [1, 2])
def test_verify_delta_merged_small_m(m):
    a = -0.5 + 0.6j
    for i in index_set(m):
        rep = verify_delta(g_ia(i, a, m), i, a, m)
        assert rep.passed and len(rep.index_set) == m + 3


def test_single_testfn_fails_first_order_condition():
    a = 0.5 + 0.2j
    rep = verify_delta(TestFn(1, a), 0, a, 1, ks=(0, 1))
    assert rep.satisfied == (0,)
    assert not rep.passed
    assert abs(rep.mismatches[1] - abs(a)) < 1e-12


def test_g_rejects_origin_and_outside():
    with pytest.raises(DomainError):
        g_ia(0, 0, 3)
    with pytest.raises(DomainError):
        g_ia(0, 1.0, 3)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.9), st.floats(0, 2 * np.pi), st.sampled_from([3, 5]))
def test_coefficients_independent_of_parameter(r, theta, m):
    a = r * np.exp(1j * theta)
    for i in index_set(m):
        assert verify_delta(g_ia(i, a, m), i, a, m).passed


def test_three_term_combinations_report_gap():
    m = 4
    a = 0.6j
    sol = paper_three_term(0, m)
    assert sol.exact == (Fraction(3), Fraction(-3), Fraction(1))
    from oplab.testfns import g_from_coeffs

    rep = verify_delta(g_from_coeffs(sol.exact, sol.basis_js, a), 0, a, m)
    assert set(rep.satisfied) >= {0, 1, 2}
    assert not rep.passed  # higher orders are not interpolated
    with pytest.raises(ValueError):
        paper_three_term(0, 2)


def test_g_surrogate_norm_stays_bounded():
    quad = QuadConfig(levels=1)
    vals = [b1_surrogate_norm(g_ia(0, r, 3), quad).value for r in (0.5, 0.9, 0.99)]
    assert max(vals) < 2 * vals[0] + 50
