from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given

from conftest import float_params, interior_points, rational_params, rational_points
from gonodyn.core import DomainError, GonosomalParams, InheritanceTensor, SimplexPoint, reduce
from gonodyn.operators import (
    apply,
    apply_general,
    apply_reduced,
    apply_W,
    closed_form_image,
    commute_check,
    lift,
    reduced_map,
)


def w_oracle(p, x, y, u, v):
    # operator written out term by term from the coefficient table
    a, b, s1, s2 = p.a, p.b, p.sigma1, p.sigma2
    d = (x + y) * (u + v)
    return (
        a * x * u / d,
        (s1 * x * v + a * y * u + a * y * v) / d,
        (s2 * x * v + b * x * u + b * y * u) / d,
        b * y * v / d,
    )


@given(rational_params(), rational_points())
def test_apply_w_matches_oracle_exactly(p, s):
    assert tuple(apply_W(p, SimplexPoint(s))) == w_oracle(p, *s)


@given(rational_params(), rational_points())
def test_general_operator_agrees_with_w(p, s):
    t = InheritanceTensor.from_params(p)
    assert apply_general(t, SimplexPoint(s)) == apply_W(p, SimplexPoint(s))
    assert apply(t, SimplexPoint(s)) == apply(p, SimplexPoint(s))


@given(float_params(), interior_points())
def test_image_stays_on_simplex(p, s):
    img = apply_W(p, SimplexPoint(s))
    assert min(img) >= 0 and abs(sum(img) - 1) <= 1e-12


@given(rational_params(), rational_points())
def test_reduction_commutes_exactly(p, s):
    assert commute_check(p, SimplexPoint(s)) == 0


def test_apply_rejects_mismatched_shape():
    t = InheritanceTensor.from_params(GonosomalParams(0.5, 0.5))
    with pytest.raises(DomainError):
        apply_general(t, SimplexPoint((0.2, 0.3, 0.1, 0.2, 0.2), 3, 2))


def test_general_three_by_two_tensor():
    # females of three types, males of two; offspring split uniformly
    n, nu = 3, 2
    gf = [[[0.1] * n for _ in range(nu)] for _ in range(n)]
    gm = [[[0.35] * nu for _ in range(nu)] for _ in range(n)]
    s = SimplexPoint((0.2, 0.2, 0.1, 0.25, 0.25), n, nu)
    img = apply_general(InheritanceTensor(gf, gm), s)
    assert np.allclose(img.coords, [0.1, 0.1, 0.1, 0.35, 0.35])


def test_reduced_map_case1_conserves_difference():
    a, b = Fraction(7, 10), Fraction(2, 5)
    na, nb = reduced_map(1, 1, a, b)
    assert na - nb == a - b


def test_apply_reduced_and_lift():
    p = GonosomalParams(Fraction(1, 3), Fraction(2, 3))
    r = apply_reduced(p, (Fraction(1, 2), Fraction(1, 2)))
    s = lift(p, Fraction(1, 2), Fraction(1, 2))
    assert reduce(apply_W(p, s)) == apply_reduced(p, reduce(s))
    assert r.alpha == Fraction(1, 2) * Fraction(1, 2) / (1 + Fraction(1, 4))
    assert tuple(s) == closed_form_image(p, Fraction(1, 2), Fraction(1, 2))


def test_reduced_map_vectorises():
    alpha = np.linspace(0, 1, 5)
    na, nb = reduced_map(2.0, 0.5, alpha, alpha[::-1])
    assert na.shape == (5,) and np.all(na <= alpha) and np.all(nb <= alpha[::-1])
