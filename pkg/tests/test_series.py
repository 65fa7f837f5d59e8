import json
import warnings
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from gonodyn.core import GonosomalParams
from gonodyn.series import (
    BranchError,
    InvariantCurve,
    PowerSeries,
    ResonanceError,
    SeriesDivergenceWarning,
    SeriesError,
    c1_for_intercept,
    compose_series,
    convolution_residuals,
    forced_c2,
    full_residual_series,
    printed_recurrence_residuals,
    solve_case1,
    solve_case2,
    verify_invariant_curve,
)

EQUAL = GonosomalParams(Fraction(1, 2), Fraction(1, 2))
P_DOWN = GonosomalParams.from_ratios(2.0, 0.5)
A = sp.symbols("alpha")


def sympy_coeffs(expr, n):
    poly = sp.Poly(sp.expand(expr), A)
    return [poly.coeff_monomial(A**k) for k in range(1, n + 1)]


def direct_residual(f, p1, p2, alpha):
    """Both sides of the general functional equation evaluated pointwise."""
    fa = f(alpha)
    ffa = f(fa)
    lhs = fa * (alpha - fa) * (1 - alpha) * (1 + (p1 - 1) * ffa)
    rhs = alpha * (fa - ffa) * (1 + (p2 - 1) * alpha + (p1 - p2) * fa)
    return lhs, rhs


def curve_invariance(f, p1, p2, alpha):
    """``|beta' - g(alpha')|`` for ``beta = g(alpha)`` with the map written out."""
    g = lambda t: (1 - f(t) / t) / (1 + (p1 - 1) * f(t))
    beta = g(alpha)
    na = alpha * (1 - beta) / (1 + (p1 - 1) * alpha * beta)
    nb = beta * (1 - alpha) / (1 + (p2 - 1) * alpha * beta)
    return abs(nb - g(na))


# -- composition ---------------------------------------------------------------

def test_compose_identity():
    f = PowerSeries((Fraction(1),) + (Fraction(0),) * 5, "rational")
    assert list(compose_series(f).coefficients) == [1, 0, 0, 0, 0, 0]


def test_compose_quadratic_against_symbolic():
    f = PowerSeries((Fraction(2), Fraction(-1), Fraction(0), Fraction(0)), "rational")
    g = 2 * A - A**2
    want = sympy_coeffs(g.subs(A, g), 4)
    assert want == [4, -6, 4, -1]
    assert list(compose_series(f, 4).coefficients) == want


def test_compose_monomial():
    f = PowerSeries((0, 1, 0, 0), "rational")
    assert list(compose_series(f, 4).coefficients) == [0, 0, 0, 1]


def test_compose_order_overflow():
    f = PowerSeries((1, 0), "rational")
    with pytest.raises(SeriesError):
        compose_series(f, 5)


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=5))
def test_compose_matches_symbolic(coeffs):
    f = PowerSeries(tuple(Fraction(c) for c in coeffs), "rational")
    n = len(coeffs)
    poly = sum(c * A ** (k + 1) for k, c in enumerate(coeffs))
    want = sympy_coeffs(poly.subs(A, poly), 2 * n * n)[:n] if poly != 0 else [0] * n
    assert list(compose_series(f).coefficients) == want


# -- equal-ratio case -----------------------------------------------------------

def test_branch_a_is_identity():
    f = solve_case1("A", K=50)
    assert list(f.coefficients) == [1] + [0] * 49
    assert all(isinstance(c, Fraction) for c in f.coefficients)


@pytest.mark.parametrize("theta", [Fraction(0), Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2)])
def test_branch_b_is_quadratic(theta):
    f = solve_case1("B", K=50, theta=theta)
    assert list(f.coefficients) == [theta, -1] + [0] * 48


def test_branch_b_polynomial_identity():
    theta = sp.Symbol("theta")
    f = theta * A - A**2
    lhs = f * (A - f) * (1 - A)
    rhs = A * (f - f.subs(A, f))
    assert sp.expand(lhs - rhs) == 0


def test_branch_float_backend():
    f = solve_case1("B", K=10, theta=1.5, backend="float")
    assert list(f.coefficients) == [1.5, -1.0] + [0.0] * 8
    assert all(isinstance(c, float) for c in f.coefficients)


@pytest.mark.parametrize(
    "branch, theta",
    [("A", Fraction(3, 2)), ("B", None), ("C", Fraction(1))],
)
def test_branch_errors(branch, theta):
    with pytest.raises(BranchError):
        solve_case1(branch, K=10, theta=theta)


def test_order_too_small():
    with pytest.raises(ValueError):
        solve_case1("A", K=2)


# -- general case ---------------------------------------------------------------

def test_case2_residual_against_direct_evaluation():
    beta0 = 0.5
    c1 = c1_for_intercept(beta0)
    sol = solve_case2(P_DOWN, c1, K=20)
    r = sol.validity_radius
    assert r > 0
    worst = 0.0
    for i in range(100):
        lhs, rhs = direct_residual(sol.series, P_DOWN.p1, P_DOWN.p2, r * i / 99)
        worst = max(worst, abs(lhs - rhs))
    assert worst <= 1e-8
    assert sol.residual <= 1e-8
    grid = [r * i / 99 for i in range(1, 100)]
    assert max(curve_invariance(sol.series, P_DOWN.p1, P_DOWN.p2, t) for t in grid) <= 1e-8


def test_case2_forced_c2_note():
    sol = solve_case2(P_DOWN, 0.5, -0.1, K=12)
    want = forced_c2(P_DOWN.p1, P_DOWN.p2, 0.5)
    assert sol.series.coefficients[1] == pytest.approx(want)
    assert len(sol.warnings) == 1 and "forced" in sol.warnings[0]


def test_case2_consistent_c2_no_note():
    want = forced_c2(P_DOWN.p1, P_DOWN.p2, 0.5)
    sol = solve_case2(P_DOWN, 0.5, want, K=12)
    assert sol.warnings == ()


def test_case2_full_series_vanishes_in_rationals():
    p = GonosomalParams.from_ratios(Fraction(2), Fraction(1, 2))
    sol = solve_case2(p, Fraction(1, 2), K=12, backend="rational")
    c = sol.series.padded(12)
    assert all(x == 0 for x in full_residual_series(c, p.p1, p.p2, 13)[:13])


@pytest.mark.parametrize("theta", [Fraction(1, 2), Fraction(3, 2), Fraction(2)])
def test_equal_case_reproduces_branch_b(theta):
    sol = solve_case2(EQUAL, theta, Fraction(-1), K=20, backend="rational")
    assert sol.series.coefficients == solve_case1("B", K=20, theta=theta).coefficients


def test_equal_case_reproduces_branch_a():
    sol = solve_case2(EQUAL, Fraction(1), K=20, backend="rational")
    assert sol.series.coefficients == solve_case1("A", K=20).coefficients


def test_identity_series_has_zero_residual():
    f = PowerSeries((1.0,))
    for alpha in (0.0, 0.3, 0.9):
        lhs, rhs = direct_residual(f, 2.0, 0.5, alpha)
        assert lhs == rhs == 0.0
    c = [0, Fraction(1)] + [0] * 8
    assert all(x == 0 for x in full_residual_series(c, Fraction(2), Fraction(1, 2), 10))


@pytest.mark.parametrize("c1, c2, k", [(1.0, 0.3, 3), (0.0, None, 2), (-1.0, None, 3)])
def test_resonance_names_order(c1, c2, k):
    with pytest.raises(ResonanceError) as info:
        solve_case2(P_DOWN, c1, c2, K=10)
    assert info.value.k == k
    assert f"k={k}" in str(info.value)


def test_divergence_warning():
    with pytest.warns(SeriesDivergenceWarning):
        sol = solve_case2(P_DOWN, 1 - 1e-9, K=10)
    assert any("diverge" in w for w in sol.warnings)


def test_no_warning_for_tame_series():
    with warnings.catch_warnings():
        warnings.simplefilter("error", SeriesDivergenceWarning)
        solve_case2(P_DOWN, 0.5, K=20)


@pytest.mark.parametrize("c1", [Fraction(1, 2), Fraction(1, 5), Fraction(1, 1000)])
def test_convolution_form_is_exact_printed_form_is_not(c1):
    p = GonosomalParams.from_ratios(Fraction(2), Fraction(1, 2))
    sol = solve_case2(p, c1, K=10, backend="rational")
    c = sol.series.padded(10)
    assert set(convolution_residuals(c, p.p1, p.p2)) == {0}
    assert any(x != 0 for x in printed_recurrence_residuals(c, p.p1, p.p2))


def test_solution_json():
    sol = solve_case2(P_DOWN, 0.5, K=8)
    doc = json.loads(sol.dumps())
    assert set(doc) >= {"p1", "p2", "c", "validity_radius", "residual"}
    assert len(doc["c"]) == 8 and doc["p1"] == 2.0 and doc["p2"] == 0.5


# -- invariant curves -----------------------------------------------------------

@pytest.mark.parametrize("theta", [Fraction(13, 10), Fraction(1), Fraction(1, 4)])
def test_line_is_exactly_invariant(theta):
    assert verify_invariant_curve(EQUAL, InvariantCurve.line(theta), grid=100) == 0


def test_line_rejects_theta_outside_range():
    with pytest.raises(ValueError):
        InvariantCurve.line(Fraction(5, 2))


def test_numeric_curve_invariant():
    sol = solve_case2(P_DOWN, 0.5, K=20)
    curve = InvariantCurve.from_solution(sol)
    assert verify_invariant_curve(P_DOWN, curve, grid=100) <= 1e-8


fractions01 = st.fractions(min_value=0, max_value=1)


@given(fractions01, fractions01)
def test_lines_partition_the_square(alpha, beta):
    theta = alpha - beta + 1
    assert 0 <= theta <= 2
    assert InvariantCurve.line(theta).g(alpha) == beta
    other = theta + Fraction(1, 7) if theta < 1 else theta - Fraction(1, 7)
    assert InvariantCurve.line(other).g(alpha) != beta
