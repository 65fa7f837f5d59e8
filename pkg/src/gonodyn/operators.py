"""The gonosomal evolution operators and the reduced planar map."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .core import (
    DomainError,
    GonosomalParams,
    InheritanceTensor,
    NumericalDegeneracyError,
    ReducedPoint,
    SimplexPoint,
    reduce,
)

UNDERFLOW = 1e-300

OperatorSpec = Union[InheritanceTensor, GonosomalParams]


def _denominator(female_sum, male_sum):
    den = female_sum * male_sum
    if den == 0:
        raise DomainError("a block sum is zero: the operator is undefined on O")
    if not isinstance(den, Fraction) and abs(den) < UNDERFLOW:
        raise NumericalDegeneracyError(f"(x+y)(u+v) = {den!r} underflows")
    return den


def apply_general(t: InheritanceTensor, s: SimplexPoint) -> SimplexPoint:
    """Normalized gonosomal operator for an arbitrary inheritance tensor.

    Straight triple summation; fine at the sizes this package targets.
    """
    n, nu = t.female_count, t.male_count
    if (s.female_count, s.male_count) != (n, nu):
        raise DomainError(f"point has shape ({s.female_count},{s.male_count}), tensor ({n},{nu})")
    xs, ys = s.female, s.male
    den = _denominator(sum(xs), sum(ys))
    zero = den * 0
    female = [zero] * n
    male = [zero] * nu
    for i in range(n):
        for k in range(nu):
            w = xs[i] * ys[k]
            if w == 0:
                continue
            gf, gm = t.gamma_f[i][k], t.gamma_m[i][k]
            for j in range(n):
                female[j] += gf[j] * w
            for l in range(nu):
                male[l] += gm[l] * w
    return SimplexPoint(tuple(c / den for c in female + male), n, nu)


def w_raw(p: GonosomalParams, x, y, u, v):
    """``W`` on bare numbers, no simplex checks.  Used for derivatives and tight loops."""
    den = (x + y) * (u + v)
    xv = x * v
    return (
        p.a * x * u / den,
        (p.sigma1 * xv + p.a * y * (u + v)) / den,
        (p.sigma2 * xv + p.b * u * (x + y)) / den,
        p.b * y * v / den,
    )


def apply_W(p: GonosomalParams, s: SimplexPoint) -> SimplexPoint:
    """The two-by-two operator ``W`` on ``(x, y, u, v)``."""
    x, y, u, v = tuple(s)
    _denominator(x + y, u + v)
    return SimplexPoint(w_raw(p, x, y, u, v))


def apply(spec: OperatorSpec, s: SimplexPoint) -> SimplexPoint:
    if isinstance(spec, GonosomalParams):
        return apply_W(spec, s)
    return apply_general(spec, s)


def reduced_map(p1, p2, alpha, beta):
    """One step of the planar map on bare numbers (scalars or numpy arrays)."""
    ab = alpha * beta
    if np.ndim(p1) == 0 and np.ndim(p2) == 0 and p1 == 1 and p2 == 1:
        return alpha - ab, beta - ab
    return alpha * (1 - beta) / (1 + (p1 - 1) * ab), beta * (1 - alpha) / (1 + (p2 - 1) * ab)


def apply_reduced(p: GonosomalParams, r: ReducedPoint | Sequence) -> ReducedPoint:
    """The planar map ``(alpha, beta) -> (alpha', beta')``.

    Denominators stay within ``[min(1, p), max(1, p)]`` on the unit square, so
    no guard is needed.
    """
    alpha, beta = tuple(r)
    na, nb = reduced_map(p.p1, p.p2, alpha, beta)
    return ReducedPoint(na, nb)


def closed_form_image(p: GonosomalParams, alpha, beta) -> tuple:
    """``W(s)`` written through the reduced coordinates of ``s``."""
    ab = alpha * beta
    return (
        p.a * alpha * (1 - beta),
        p.sigma1 * ab + p.a * (1 - alpha),
        p.sigma2 * ab + p.b * (1 - beta),
        p.b * beta * (1 - alpha),
    )


def lift(p: GonosomalParams, alpha, beta) -> SimplexPoint:
    """The point of the simplex reached in one step from any state with reduced coordinates ``(alpha, beta)``."""
    return SimplexPoint(closed_form_image(p, alpha, beta))


def commute_check(p: GonosomalParams, s: SimplexPoint):
    """Max-norm discrepancy of ``reduce . W`` vs ``V . reduce`` and of ``W`` vs its closed form.

    Exactly zero under the rational backend.
    """
    image = apply_W(p, s)
    r = reduce(s)
    lhs = reduce(image)
    rhs = apply_reduced(p, r)
    closed = closed_form_image(p, r.alpha, r.beta)
    diffs = [abs(lhs.alpha - rhs.alpha), abs(lhs.beta - rhs.beta)]
    diffs += [abs(c - w) for c, w in zip(closed, image)]
    return max(diffs)
