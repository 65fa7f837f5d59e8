"""Power-series solutions of the invariant-curve functional equations.

An invariant curve ``beta = g(alpha)`` of the reduced map corresponds to a
function ``f(alpha) = alpha (1 - g) / (1 + (p1 - 1) alpha g)`` solving

    f (alpha - f) (1 - alpha) [1 + (p1 - 1) f(f)]
        = alpha (f - f(f)) [1 + (p2 - 1) alpha + (p1 - p2) f]

which collapses to ``f (alpha - f)(1 - alpha) = alpha (f - f(f))`` when
``p1 = p2 = 1``.  With ``f = sum c_k alpha^k`` the coefficients are found
order by order.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .core import GonodynError, GonosomalParams, to_number
from .operators import reduced_map

TAIL_TOL = 1e-10
DIVERGENCE_ROOT = 1e3


class SeriesError(GonodynError, ArithmeticError):
    pass


class ResonanceError(SeriesError):
    """The leading factor ``c1 (c1^(k-1) - 1)`` vanishes at order ``k``."""

    def __init__(self, k: int, c1):
        super().__init__(f"resonance at order k={k}: leading factor vanishes for c1={c1}")
        self.k = k


class BranchError(SeriesError, ValueError):
    pass


class SeriesDivergenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class PowerSeries:
    """``f(alpha) = sum_{k=1}^{K} c_k alpha^k``; no constant term."""

    coefficients: tuple
    backend: str = "float"

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(self.coefficients))

    @property
    def order(self) -> int:
        return len(self.coefficients)

    def padded(self, n: int) -> list:
        """``[0, c_1, ..., c_n]`` with zeros beyond the order."""
        c = [0] + list(self.coefficients[:n])
        return c + [0] * (n + 1 - len(c))

    def __call__(self, alpha):
        acc = 0
        for c in reversed(self.coefficients):
            acc = (acc + c) * alpha
        return acc

    def over_alpha(self, alpha):
        """``f(alpha) / alpha``, regular at zero."""
        acc = 0
        for c in reversed(self.coefficients):
            acc = acc * alpha + c
        return acc


# -- truncated series arithmetic on lists indexed by power ------------------

def _mul(a: Sequence, b: Sequence, n: int) -> list:
    out = [0] * (n + 1)
    for i in range(min(len(a), n + 1)):
        ai = a[i]
        if ai == 0:
            continue
        for j in range(min(len(b), n + 1 - i)):
            bj = b[j]
            if bj != 0:
                out[i + j] += ai * bj
    return out


def _add(*terms) -> list:
    n = max(len(t) for t in terms)
    return [sum(t[i] for t in terms if i < len(t)) for i in range(n)]


def _scale(s, a: Sequence) -> list:
    return [s * x for x in a]


def _power_sums(c: Sequence, weights: Callable[[int], object], n: int) -> list:
    """``sum_l weights(l) f^l`` truncated at order ``n``, with ``f = sum c_k alpha^k``."""
    f = [0] + [c[k] if k < len(c) else 0 for k in range(1, n + 1)]
    out = [0] * (n + 1)
    power = f
    for l in range(1, n + 1):
        w = weights(l)
        if w != 0:
            for i, x in enumerate(power):
                if x != 0:
                    out[i] += w * x
        power = _mul(power, f, n)
        if not any(power):
            break
    return out


def compose_coefficients(c: Sequence, n: int) -> list:
    """Coefficients ``d_0..d_n`` of ``f(f(alpha))`` for ``c = [0, c_1, ...]``."""
    return _power_sums(c, lambda l: c[l] if l < len(c) else 0, n)


def compose_series(f: PowerSeries, order: Optional[int] = None) -> PowerSeries:
    """``f . f`` truncated at ``order`` (default: the order of ``f``).

    ``d_k = sum_l c_l sum_{i_1 + ... + i_l = k} c_{i_1} ... c_{i_l}``.
    """
    K = f.order if order is None else order
    if K > f.order:
        raise SeriesError(f"order {K} exceeds the series order {f.order}")
    d = compose_coefficients(f.padded(K), K)
    return PowerSeries(tuple(d[1:]), f.backend)


# -- residuals of the two functional equations ------------------------------

def divided_residual(c: Sequence, j: int):
    """Order-``j`` coefficient of ``(1 - f/alpha)(1 - alpha) - (1 - f(f)/f)``.

    This is the equal-ratio equation divided by ``alpha f``; it equals
    ``(c_j - c_{j+1}) + d'_j`` for ``j >= 2`` where
    ``d'_j = sum_l c_{l+1} [alpha^j] f^l``.
    """
    def cc(k):
        return c[k] if 0 <= k < len(c) else 0

    lhs = (1 if j == 0 else 0) - (1 if j == 1 else 0) - cc(j + 1) + (cc(j) if j >= 1 else 0)
    if j == 0:
        return lhs - (1 - cc(1))
    dprime = _power_sums(c, lambda l: cc(l + 1), j)[j]
    return lhs + dprime


def full_residual_series(c: Sequence, p1, p2, n: int) -> list:
    """Coefficients up to ``alpha^n`` of LHS minus RHS of the general equation."""
    f = [0] + [c[k] if k < len(c) else 0 for k in range(1, n + 1)]
    ff = compose_coefficients(c, n)
    alpha = [0, 1]
    a_minus_f = _add(alpha, _scale(-1, f))
    f_minus_ff = _add(f, _scale(-1, ff))
    lhs = _mul(_mul(f, a_minus_f, n), [1, -1], n)
    if p1 != 1:
        lhs = _mul(lhs, _add([1], _scale(p1 - 1, ff)), n)
    rhs = _mul(alpha, f_minus_ff, n)
    if p1 != 1 or p2 != 1:
        rhs = _mul(rhs, _add([1, p2 - 1], _scale(p1 - p2, f)), n)
    return _add(lhs, _scale(-1, rhs))[: n + 1]


def equation_residual(f: PowerSeries, p1, p2, alpha):
    """Pointwise LHS minus RHS of the functional equation at ``alpha``."""
    fa = f(alpha)
    ffa = f(fa)
    lhs = fa * (alpha - fa) * (1 - alpha) * (1 + (p1 - 1) * ffa)
    rhs = alpha * (fa - ffa) * (1 + (p2 - 1) * alpha + (p1 - p2) * fa)
    return lhs - rhs


# -- order-by-order matching ------------------------------------------------

def _is_zero(v, exact: bool, scale=1.0) -> bool:
    return v == 0 if exact else abs(v) <= 1e-12 * max(1.0, abs(scale))


def _determined(rows, unknowns, exact):
    """Unknowns fixed uniquely by the affine rows ``grad . x + r0 = 0``."""
    m = [list(g) + [-r0] for g, r0 in rows]
    if exact:
        m = [[Fraction(x) for x in row] for row in m]
    n = len(unknowns)
    pivots = []
    r = 0
    for col in range(n):
        if exact:
            piv = next((i for i in range(r, len(m)) if m[i][col] != 0), None)
        else:
            cand = [(abs(m[i][col]), i) for i in range(r, len(m))]
            best = max(cand, default=(0, None))
            piv = best[1] if best[0] > 1e-14 else None
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        pv = m[r][col]
        m[r] = [x / pv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][col] != 0:
                fac = m[i][col]
                m[i] = [x - fac * y for x, y in zip(m[i], m[r])]
        pivots.append((r, col))
        r += 1
    pivot_cols = {col for _, col in pivots}
    out = {}
    for row, col in pivots:
        if all(_is_zero(m[row][k], exact) for k in range(n) if k not in pivot_cols):
            out[unknowns[col]] = m[row][n]
    return out


def match_coefficients(
    fixed: dict,
    K: int,
    residual_at: Callable[[list, int], object],
    new_index: Callable[[int], int],
    first_order: int,
    exact: bool,
    leading_factor: Optional[Callable[[int], object]] = None,
) -> list:
    """Solve ``residual_at(c, order) = 0`` for ``order = first_order, ...``.

    At each order one more coefficient (``new_index(order)``) enters, normally
    with a nonzero leading factor so it is solved immediately.  When that
    factor vanishes the coefficient stays pending and is fixed by a later
    order, which is how the equal-ratio equation resolves ``c_1 = +-1``.
    Passing ``leading_factor(k)``, the exact coefficient of ``c_k`` at its
    first order, solves each order by one division and turns any resonance
    into a :class:`ResonanceError` instead.
    """
    values = dict(fixed)
    pending: list = []
    orders: list = []
    order = first_order
    while True:
        k = new_index(order)
        if k > K and not any(i <= K for i in pending):
            break
        if k > K + 6:
            raise BranchError(f"coefficients {sorted(pending)} are not determined by the equation")
        if leading_factor is not None:
            # the new coefficient enters linearly with exactly this factor, so
            # dividing beats probing, which cancels badly near resonance
            base = [values.get(i, 0) for i in range(max(list(values) + [k]) + 1)]
            if k not in values:
                lead = leading_factor(k)
                if _is_zero(lead, exact):
                    raise ResonanceError(k, values.get(1))
                base[k] = 0
                values[k] = -residual_at(base, order) / lead
            else:
                r0 = residual_at(base, order)
                if not _is_zero(r0, exact):
                    raise BranchError(f"order {order} cannot be satisfied: residual {r0}")
            order += 1
            continue
        if k not in values:
            pending.append(k)
        orders.append(order)
        while True:
            top = max(list(values) + pending + [order + 2])
            base = [values.get(i, 0) for i in range(top + 1)]
            rows = []
            for o in orders:
                r0 = residual_at(base, o)
                grads = []
                for idx in pending:
                    trial = list(base)
                    trial[idx] = 1
                    g = residual_at(trial, o) - r0
                    trial[idx] = 2
                    if not _is_zero(residual_at(trial, o) - r0 - 2 * g, exact, g):
                        raise SeriesError(f"order {o} is not affine in c_{idx}")
                    grads.append(g)
                if all(_is_zero(g, exact) for g in grads):
                    if not _is_zero(r0, exact):
                        raise BranchError(f"order {o} cannot be satisfied: residual {r0}")
                    continue
                rows.append((grads, r0, o))
            orders = [o for _, _, o in rows]
            solved = _determined([(g, r0) for g, r0, _ in rows], pending, exact) if rows else {}
            if not solved:
                break
            values.update(solved)
            pending = [i for i in pending if i not in solved]
        order += 1
    return [values.get(i, 0) for i in range(K + 1)]


# -- equal-ratio case -------------------------------------------------------

def solve_case1(branch: str, K: int = 30, theta=None, backend: str = "rational") -> PowerSeries:
    """Coefficients of the equal-ratio solution on ``branch``.

    Branch ``"A"`` starts from ``c_1 = 1, c_2 = 0`` (``f = alpha``) and branch
    ``"B"`` from ``c_1 = theta, c_2 = -1`` (``f = theta alpha - alpha^2``); the
    higher coefficients are computed by the recurrence
    ``c_k (1 - c_1^(k-1)) = c_{k-1} + sum_{l=1}^{k-2} c_{l+1} [alpha^(k-1)] f^l``.
    """
    if K < 3:
        raise ValueError("order must be at least 3")
    branch = branch.upper()
    if branch == "A":
        if theta is not None and theta != 1:
            raise BranchError("branch A has c1 = 1; theta does not apply")
        c1, c2 = 1, 0
    elif branch == "B":
        if theta is None:
            raise BranchError("branch B needs theta")
        c1, c2 = theta, -1
    else:
        raise BranchError(f"unknown branch {branch!r}")
    c1, c2 = to_number(c1, backend), to_number(c2, backend)
    exact = backend == "rational"
    c = match_coefficients(
        {1: c1, 2: c2}, K, divided_residual, new_index=lambda j: j + 1, first_order=1, exact=exact
    )
    return PowerSeries(tuple(to_number(x, backend) for x in c[1:]), backend)


# -- general case -----------------------------------------------------------

def forced_c2(p1, p2, c1):
    """``c_2`` implied by the order-3 equation when ``c_1`` is not 0 or 1."""
    return c1 * c1 * (p1 - 1) - c1 * (p1 - p2) - p2


def c1_for_intercept(beta0):
    """``c_1`` of the curve meeting the beta-axis at ``(0, beta0)``: ``g(0) = 1 - c_1``."""
    return 1 - beta0


def printed_recurrence_residuals(c: Sequence, p1, p2, relative: bool = False) -> list:
    """Residual of the closed-form recurrence as typeset, reading the missing operator as ``+``.

    The coefficients come from direct expansion, so nonzero entries measure
    how far the typeset display is from the equation it summarises.
    """
    K = len(c) - 1

    def powers_coeff(weight, j):
        return _power_sums(c, weight, j)[j] if j >= 1 else 0

    def cc(k):
        return c[k] if 0 <= k <= K else 0

    d = [powers_coeff(lambda l: cc(l), j) for j in range(K + 1)]
    dp = [powers_coeff(lambda l: cc(l + 1), j) for j in range(K + 1)]
    out = []
    for k in range(3, K + 1):
        rhs = sum(
            (cc(k - j - 1) - cc(k - j)) * (p1 - 1) * d[j] + (p1 - p2) * cc(k - j) * dp[j] for j in range(1, k - 1)
        )
        rhs += cc(k - 1) - (p1 - 1) * d[k - 2] + (1 - cc(1)) * (p1 - 1) * d[k - 1]
        rhs += (1 - cc(1)) * (p1 - p2) * cc(k) + (p2 - 1) * dp[k - 2]
        full = _power_sums(c, lambda l: cc(l + 1) if l <= k - 1 else 0, k)[k]
        rhs -= full
        lhs = cc(k) * (1 - cc(1) ** (k - 1))
        out.append((lhs - rhs) / max(1.0, abs(float(lhs)), abs(float(rhs))) if relative else lhs - rhs)
    return out


def convolution_residuals(c: Sequence, p1, p2, relative: bool = False) -> list:
    """``a_k - b_k`` with ``a_k = sum e_j q_{k-j}`` and ``b_k = sum n_j m_{k-j}``, ``k = 0..K-1``.

    ``sum e_j alpha^j = (f - f(f))/f``, ``sum q_j alpha^j = 1 + (p2-1) alpha + (p1-p2) f``,
    ``sum n_j alpha^j = 1 + (p1-1) f(f)`` and ``sum m_j alpha^j = (1 - f/alpha)(1 - alpha)``,
    so ``a_k = b_k`` is the general equation divided by ``alpha f``.  Orders
    whose ``m_k`` needs ``c_{K+1}`` are omitted.
    """
    K = len(c) - 1

    def cc(k):
        return c[k] if 0 <= k <= K else 0

    n = K - 1
    e = [1 - cc(1)] + [-x for x in _power_sums(c, lambda l: cc(l + 1), n)[1:]]
    q = [1, (p2 - 1) + (p1 - p2) * cc(1)] + [(p1 - p2) * cc(j) for j in range(2, n + 1)]
    nn = [1] + [(p1 - 1) * x for x in compose_coefficients(c, n)[1:]]
    m = [1 - cc(1), -1 + cc(1) - cc(2)] + [cc(j) - cc(j + 1) for j in range(2, n + 1)]
    out = []
    for k in range(n + 1):
        left = [e[j] * q[k - j] for j in range(k + 1)]
        right = [nn[j] * m[k - j] for j in range(k + 1)]
        diff = sum(left) - sum(right)
        if relative:
            diff = diff / max(1.0, sum(abs(float(t)) for t in left + right))
        out.append(diff)
    return out


@dataclass(frozen=True)
class SeriesSolution:
    series: PowerSeries
    p1: object
    p2: object
    validity_radius: float
    residual: float
    printed_recurrence_residual: float
    convolution_residual: float
    warnings: tuple = field(default_factory=tuple)

    def to_json(self) -> dict:
        return {
            "p1": float(self.p1),
            "p2": float(self.p2),
            "c": [_plain(x) for x in self.series.coefficients],
            "validity_radius": self.validity_radius,
            "residual": self.residual,
            "printed_recurrence_residual": self.printed_recurrence_residual,
            "convolution_residual": self.convolution_residual,
            "warnings": list(self.warnings),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _plain(x):
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else float(x)
    return x + 0.0


def validity_radius(f: PowerSeries, tail_tol: float = TAIL_TOL, grid: int = 1000) -> float:
    """Radius ``r <= 1`` on which the truncated series, and ``f(f)``, can be trusted.

    First the largest ``r`` with ``|c_j| r^j <= tail_tol`` for the last three
    coefficients; then ``r`` shrinks until ``|f| <= r`` on ``[0, r]`` so that
    the composition stays inside the same interval.
    """
    K = f.order
    r = 1.0
    for j in range(max(1, K - 2), K + 1):
        cj = abs(float(f.coefficients[j - 1]))
        if cj > 0:
            r = min(r, (tail_tol / cj) ** (1.0 / j))
    fp = PowerSeries(tuple(float(x) for x in f.coefficients))
    for i in range(1, grid + 1):
        t = r * i / grid
        if abs(fp(t)) > r:
            return r * (i - 1) / grid
    return r


def grid_residual(f: PowerSeries, p1, p2, radius: float, grid: int = 100) -> float:
    fp = PowerSeries(tuple(float(x) for x in f.coefficients))
    return max(abs(equation_residual(fp, float(p1), float(p2), radius * i / (grid - 1))) for i in range(grid))


def solve_case2(p: GonosomalParams, c1, c2=None, K: int = 30, backend: str = "float") -> SeriesSolution:
    """Series solution of the general equation for ``p1 != p2``, given ``c_1``.

    The order-3 equation forces ``c_2`` once ``c_1`` is neither 0 nor 1; a
    caller-supplied ``c2`` that disagrees is replaced by the forced value and
    noted in ``warnings``.  Higher coefficients come from direct expansion of
    both sides, one new coefficient per order.  For ``p1 = p2 = 1`` the same
    expansion is run with the resonant cases resolved as in :func:`solve_case1`.
    """
    if K < 3:
        raise ValueError("order must be at least 3")
    p1, p2 = to_number(p.p1, backend), to_number(p.p2, backend)
    c1 = to_number(c1, backend)
    exact = backend == "rational"
    notes = []
    equal = p.case_tag == "Equal"

    fixed = {1: c1}
    if c2 is not None:
        c2 = to_number(c2, backend)
        if not _is_zero(c1 * (c1 - 1), exact):
            want = forced_c2(p1, p2, c1)
            if not _is_zero(c2 - want, exact, want):
                notes.append(f"c2={float(c2)!r} is inconsistent with order 3; using forced c2={float(want)!r}")
                c2 = want
        fixed[2] = c2
    elif equal and c1 == 1:
        fixed[2] = to_number(0, backend)

    def residual_at(c, o):
        return full_residual_series(c, p1, p2, o)[o]

    leading = None if equal else (lambda k: c1 * (c1 ** (k - 1) - 1))
    c = match_coefficients(
        fixed, K, residual_at, new_index=lambda o: o - 1, first_order=3, exact=exact, leading_factor=leading
    )
    series = PowerSeries(tuple(to_number(x, backend) for x in c[1:]), backend)

    roots = [abs(float(x)) ** (1.0 / k) for k, x in enumerate(series.coefficients, start=1) if x != 0]
    if roots and max(roots) > DIVERGENCE_ROOT:
        msg = f"coefficients grow like {max(roots):.3g}^k; the series may diverge"
        notes.append(msg)
        warnings.warn(msg, SeriesDivergenceWarning, stacklevel=2)

    radius = validity_radius(series)
    printed = printed_recurrence_residuals(c, p1, p2, relative=True)
    conv = convolution_residuals(c, p1, p2, relative=True)
    return SeriesSolution(
        series=series,
        p1=p1,
        p2=p2,
        validity_radius=radius,
        residual=grid_residual(series, p1, p2, radius),
        printed_recurrence_residual=max((abs(float(x)) for x in printed), default=0.0),
        convolution_residual=max((abs(float(x)) for x in conv), default=0.0),
        warnings=tuple(notes),
    )


# -- invariant curves -------------------------------------------------------

@dataclass(frozen=True)
class InvariantCurve:
    """``beta = g(alpha)``: a line ``alpha + 1 - theta`` or a curve from a series solution."""

    kind: str
    theta: object = None
    series: Optional[PowerSeries] = None
    p1: object = 1
    p2: object = 1
    interval: tuple = (0, 1)

    @classmethod
    def line(cls, theta) -> "InvariantCurve":
        if not 0 <= theta <= 2:
            raise ValueError("theta must lie in [0, 2]")
        return cls("line", theta=theta, interval=(max(theta * 0, theta - 1), min(theta * 0 + 1, theta)))

    @classmethod
    def from_solution(cls, sol: SeriesSolution) -> "InvariantCurve":
        return cls("numeric", series=sol.series, p1=sol.p1, p2=sol.p2, interval=(0.0, sol.validity_radius))

    def g(self, alpha):
        if self.kind == "line":
            return alpha + 1 - self.theta
        h = self.series.over_alpha(alpha)
        return (1 - h) / (1 + (self.p1 - 1) * self.series(alpha))


def verify_invariant_curve(p: GonosomalParams, curve: InvariantCurve, grid: int = 100):
    """Max of ``|beta' - g(alpha')|`` over grid points of the curve inside the unit square.

    Exact when ``p``, the curve and its interval are rational.
    """
    lo, hi = curve.interval
    exact = isinstance(lo, (Fraction, int)) and isinstance(hi, (Fraction, int)) and p.backend == "rational"
    worst = 0
    for i in range(grid):
        t = Fraction(i, grid - 1) if exact else i / (grid - 1)
        alpha = lo + (hi - lo) * t
        beta = curve.g(alpha)
        if not 0 <= beta <= 1:
            continue
        na, nb = reduced_map(p.p1, p.p2, alpha, beta)
        worst = max(worst, abs(nb - curve.g(na)))
    return worst
