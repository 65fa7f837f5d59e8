"""Fixed points, their spectra, trajectories and basins of the two-by-two operator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .core import (
    DomainError,
    GonosomalParams,
    NumericalDegeneracyError,
    SimplexPoint,
    reduce,
    to_number,
)
from .operators import UNDERFLOW, apply_W, closed_form_image, reduced_map, w_raw

FAMILIES = ("F11", "F12")
BASINS = ("T0", "T1", "T2")

BASIN_DELTA = 1e-6
DEFAULT_MAX_ITER = 10**6
DEFAULT_TOL = 1e-12
PRODUCT_TOL = 1e-10
FD_STEP = 1e-6
FIXED_TOL = 1e-10

# rounding noise on a difference of two numbers in [0, 1]
_NOISE = 4e-16


class NotAFixedPointError(DomainError):
    pass


@dataclass(frozen=True)
class FixedPointDescriptor:
    family: str
    free_parameter: object
    point: SimplexPoint
    eigenvalues: tuple

    @property
    def hyperbolic(self) -> bool:
        return classify_fixed_point(self.eigenvalues) != "non-hyperbolic"


@dataclass(frozen=True)
class TrajectoryRecord:
    """Outcome of :func:`iterate`.

    ``states`` is thinned: iterates 0..99 and then every power of two, plus
    the last one; ``indices`` holds the matching iteration numbers.
    ``residual`` is the fixed-point residual of the extrapolated ``limit`` and
    ``error_estimate`` the predicted distance still to travel in
    ``alpha - beta`` when the run stopped.
    """

    states: tuple
    indices: tuple
    iteration_count: int
    converged: bool
    limit: SimplexPoint
    basin: str
    residual: float
    error_estimate: float
    alpha_limit: float
    beta_limit: float
    xv_products: tuple = field(repr=False, default=())

    @property
    def final_xv(self) -> float:
        return self.xv_products[-1]


@dataclass(frozen=True)
class BasinResult:
    basin: str
    limit: SimplexPoint
    theta: Optional[object] = None
    method: str = "analytic"
    record: Optional[TrajectoryRecord] = field(default=None, repr=False)


# -- fixed points -----------------------------------------------------------

def f11_point(p: GonosomalParams, u) -> SimplexPoint:
    """``(0, a, u, b - u)``, ``u`` in ``[0, b]``."""
    return SimplexPoint((p.a * 0, p.a, u, p.b - u))


def f12_point(p: GonosomalParams, x) -> SimplexPoint:
    """``(x, a - x, b, 0)``, ``x`` in ``[0, a]``."""
    return SimplexPoint((x, p.a - x, p.b, p.a * 0))


def family_eigenvalues(p: GonosomalParams, family: str, point) -> tuple:
    x, _, _, v = tuple(point)
    third = 1 - v / p.b if family == "F11" else 1 - x / p.a
    return tuple(sorted((third * 0, third, third * 0 + 1)))


def enumerate_fixed_points(p: GonosomalParams, samples: int, families=FAMILIES) -> list:
    """``samples`` evenly spaced fixed points from each family, each checked by one application of ``W``.

    With ``samples == 1`` the midpoint of each family is returned.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    exact = p.backend == "rational"
    out = []
    for family in families:
        span = p.b if family == "F11" else p.a
        if samples == 1:
            params = [span / 2]
        elif exact:
            params = [span * Fraction(i, samples - 1) for i in range(samples)]
        else:
            params = [span * i / (samples - 1) for i in range(samples)]
        for t in params:
            point = f11_point(p, t) if family == "F11" else f12_point(p, t)
            residual = fixed_point_residual(p, point)
            if residual > (0 if exact else 1e-14):
                raise ArithmeticError(f"{family} point {point} is not fixed (residual {residual})")
            out.append(FixedPointDescriptor(family, t, point, family_eigenvalues(p, family, point)))
    return out


def fixed_point_residual(p: GonosomalParams, s) -> object:
    image = apply_W(p, s) if isinstance(s, SimplexPoint) else w_raw(p, *s)
    return max(abs(i - c) for i, c in zip(image, s))


def family_residual(p: GonosomalParams, s, family: str) -> float:
    """Max-norm distance of ``s`` from the defining equations of ``family``."""
    x, y, u, v = (float(c) for c in s)
    a, b = float(p.a), float(p.b)
    if family == "F11":
        return max(abs(x), abs(y - a), abs(u + v - b))
    if family == "F12":
        return max(abs(v), abs(u - b), abs(x + y - a))
    raise ValueError(f"unknown family {family!r}")


def boundary_sets(s, tol: float = 0.0) -> tuple:
    """Names of the boundary pieces ``E1..E4`` (x, y, u or v vanishing) containing ``s``."""
    return tuple(f"E{i + 1}" for i, c in enumerate(s) if abs(c) <= tol)


# -- spectra ----------------------------------------------------------------

def jacobian_tangent(p: GonosomalParams, s, h: float = FD_STEP) -> np.ndarray:
    """Central-difference Jacobian of ``W`` in the chart ``(x, y, u)``, ``v = 1 - x - y - u``."""
    pf = p.converted("float")
    base = np.array([float(c) for c in tuple(s)[:3]])

    def chart(z):
        x, y, u = z
        return np.array(w_raw(pf, x, y, u, 1.0 - x - y - u)[:3])

    jac = np.empty((3, 3))
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        jac[:, k] = (chart(base + e) - chart(base - e)) / (2 * h)
    return jac


def jacobian_full(p: GonosomalParams, s, h: float = FD_STEP) -> np.ndarray:
    """Central-difference Jacobian of ``W`` on all four coordinates, off the simplex."""
    pf = p.converted("float")
    base = np.array([float(c) for c in s])
    jac = np.empty((4, 4))
    for k in range(4):
        e = np.zeros(4)
        e[k] = h
        jac[:, k] = (np.array(w_raw(pf, *(base + e))) - np.array(w_raw(pf, *(base - e)))) / (2 * h)
    return jac


def _sorted_real(values) -> tuple:
    return tuple(sorted(float(np.real(v)) for v in values))


def eigenvalues_at(p: GonosomalParams, s, h: float = FD_STEP) -> tuple:
    """Spectrum of ``W`` restricted to the simplex at a fixed point, sorted ascending."""
    residual = float(fixed_point_residual(p.converted("float"), tuple(float(c) for c in s)))
    if residual > FIXED_TOL:
        raise NotAFixedPointError(f"not a fixed point: residual {residual:.3g}")
    return _sorted_real(np.linalg.eigvals(jacobian_tangent(p, s, h)))


def full_spectrum(p: GonosomalParams, s, h: float = FD_STEP) -> tuple:
    """Spectrum of the unrestricted 4x4 Jacobian.  Reported only; it carries extra zeros
    from the invariance of ``W`` under rescaling each block."""
    return _sorted_real(np.linalg.eigvals(jacobian_full(p, s, h)))


def classify_fixed_point(eigenvalues, tol: float = 1e-8) -> str:
    mods = [abs(e) for e in eigenvalues]
    if any(abs(m - 1) <= tol for m in mods):
        return "non-hyperbolic"
    if all(m < 1 for m in mods):
        return "attracting"
    if all(m > 1 for m in mods):
        return "repelling"
    return "saddle"


# -- trajectories -----------------------------------------------------------

def aitken(x0, x1, x2):
    """Delta-squared extrapolation of three consecutive terms; ``x2`` if the second difference vanishes."""
    d1, d2 = x1 - x0, x2 - x1
    dd = d2 - d1
    if dd == 0:
        return x2
    return x2 - d2 * d2 / dd


def _tail(d_prev, d_cur, scale):
    """Predicted remaining movement of a sequence from its last two increments."""
    noise = _NOISE * max(1.0, scale)
    if abs(d_cur) <= noise:
        return 0.0
    if d_prev is None or abs(d_prev) <= noise:
        return math.inf
    r = d_cur / d_prev
    if r >= 1 or r <= -1:
        return math.inf
    return abs(d_cur) / (1 - r) if r >= 0 else abs(d_cur)


def _limit_from_difference(p: GonosomalParams, diff: float, delta: float = BASIN_DELTA):
    """Fixed point with ``alpha - beta = diff``: the limit satisfies ``alpha * beta = 0``."""
    alpha_inf, beta_inf = max(diff, 0.0), max(-diff, 0.0)
    a, b = float(p.a), float(p.b)
    if a * alpha_inf <= delta:
        alpha_inf = 0.0
    if b * beta_inf <= delta:
        beta_inf = 0.0
    limit = SimplexPoint(closed_form_image(p.converted("float"), alpha_inf, beta_inf))
    basin = "T1" if alpha_inf > 0 else "T2" if beta_inf > 0 else "T0"
    return alpha_inf, beta_inf, limit, basin


def _recorded(m: int) -> bool:
    return m < 100 or (m & (m - 1)) == 0


def iterate(
    p: GonosomalParams,
    s0: SimplexPoint,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    product_tol: float = PRODUCT_TOL,
) -> TrajectoryRecord:
    """Iterate ``W`` from ``s0`` in double precision and extrapolate the limit.

    Near the corner fixed point ``(0, a, b, 0)`` the reduced coordinates decay
    like ``1/m``, so raw step sizes say little about the distance to the
    limit.  The difference ``alpha - beta`` converges much faster (it is
    conserved when ``p1 = p2 = 1``) and the limit has ``alpha * beta = 0``, so
    the run tracks ``alpha - beta``, applies Aitken's delta-squared to it and
    stops once the predicted remaining change is below ``tol`` and
    ``x * v <= product_tol``.  Exhausting ``max_iter`` is reported through
    ``converged=False``, not raised.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not isinstance(s0, SimplexPoint):
        s0 = SimplexPoint(tuple(s0))
    pf = p.converted("float")
    a, s1, b, s2 = pf.a, pf.sigma1, pf.b, pf.sigma2
    x, y, u, v = s0.as_float()

    states, indices, products = [s0], [0], [x * v]
    alpha, beta = x / (x + y), v / (u + v)
    diffs = [alpha - beta]  # last three values of alpha - beta
    d_prev = None
    tail = math.inf
    converged = False
    m = 0
    while m < max_iter:
        m += 1
        fem, mal = x + y, u + v
        den = fem * mal
        if den < UNDERFLOW:
            raise NumericalDegeneracyError(f"(x+y)(u+v) = {den!r} underflows at step {m}")
        xv = x * v
        x, y, u, v = a * x * u / den, (s1 * xv + a * y * mal) / den, (s2 * xv + b * u * fem) / den, b * y * v / den
        alpha, beta = x / (x + y), v / (u + v)
        diff = alpha - beta
        d_cur = diff - diffs[-1]
        diffs = diffs[-2:] + [diff]
        tail = _tail(d_prev, d_cur, abs(diff))
        d_prev = d_cur
        product = x * v
        if _recorded(m):
            states.append((x, y, u, v))
            indices.append(m)
            products.append(product)
        if tail <= tol and product <= product_tol:
            converged = True
            break

    if indices[-1] != m:
        states.append((x, y, u, v))
        indices.append(m)
        products.append(x * v)
    states = [states[0]] + [SimplexPoint(st) for st in states[1:]]

    # a stalled difference is exact up to rounding; extrapolating noise only adds error
    estimate = aitken(*diffs) if len(diffs) == 3 and tail > 0 else diffs[-1]
    alpha_inf, beta_inf, limit, basin = _limit_from_difference(p, estimate)
    residual = float(fixed_point_residual(pf, limit.coords))
    return TrajectoryRecord(
        states=tuple(states),
        indices=tuple(indices),
        iteration_count=m,
        converged=converged,
        limit=limit,
        basin=basin,
        residual=residual,
        error_estimate=tail,
        alpha_limit=alpha_inf,
        beta_limit=beta_inf,
        xv_products=tuple(products),
    )


def analytic_limit(p: GonosomalParams, s0):
    """Closed-form limit when ``p1 = p2 = 1``: returns ``(basin, limit, theta)``.

    ``theta = x/(x+y) - v/(u+v) + 1`` labels the invariant surface through
    ``s0``; the basin follows the sign of ``x u - y v``.
    """
    if p.case_tag != "Equal":
        raise ValueError("the closed form needs sigma1 == a")
    x, y, u, v = tuple(s0)
    r = reduce(s0)
    theta = r.alpha - r.beta + 1
    a, b = p.a, p.b
    sign = x * u - y * v
    if sign == 0:
        return "T0", SimplexPoint((a * 0, a, b, a * 0)), theta
    if sign > 0:
        return "T1", SimplexPoint((a * (theta - 1), a * (2 - theta), b, a * 0)), theta
    return "T2", SimplexPoint((a * 0, a, b * theta, b * (1 - theta))), theta


def classify_basin(p: GonosomalParams, s0, **iterate_kwargs) -> BasinResult:
    """Basin tag and limit of ``s0``; closed form when ``p1 = p2 = 1``, numerical otherwise."""
    if not isinstance(s0, SimplexPoint):
        s0 = SimplexPoint(tuple(s0))
    if p.case_tag == "Equal":
        basin, limit, theta = analytic_limit(p, s0)
        return BasinResult(basin, limit, theta, "analytic")
    record = iterate(p, s0, **iterate_kwargs)
    return BasinResult(record.basin, record.limit, None, "numeric", record)


# -- batched reduced dynamics ----------------------------------------------

def reduced_limits(
    p1,
    p2,
    alpha,
    beta,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    product_tol: float = PRODUCT_TOL,
):
    """Limits of many reduced-map trajectories at once.

    Same stopping rule as :func:`iterate`, applied to ``alpha * beta`` instead
    of ``x * v``.  Returns ``(limit_alpha, limit_beta, converged, steps)``;
    cells are independent, so the result does not depend on their order.
    """
    shape = np.shape(alpha)
    alpha = np.array(alpha, dtype=float, copy=True).ravel()
    beta = np.array(beta, dtype=float, copy=True).ravel()
    count = alpha.size
    p1, p2 = float(p1), float(p2)

    diff = alpha - beta
    estimate = diff.copy()
    steps = np.zeros(count, dtype=np.int64)
    converged = np.zeros(count, dtype=bool)
    d_prev = np.full(count, np.nan)
    active = np.arange(count)
    a, b, dprev, dlast = alpha, beta, d_prev, diff.copy()
    m = 0
    while active.size and m < max_iter:
        m += 1
        a, b = reduced_map(p1, p2, a, b)
        new = a - b
        d_cur = new - dlast
        noise = _NOISE * np.maximum(1.0, np.abs(new))
        with np.errstate(divide="ignore", invalid="ignore"):
            r = d_cur / dprev
            tail = np.where(r >= 0, np.abs(d_cur) / (1 - r), np.abs(d_cur))
        tail = np.where((r >= 1) | (r <= -1) | ~np.isfinite(r), np.inf, tail)
        tail = np.where(np.abs(d_cur) <= noise, 0.0, tail)
        dd = d_cur - dprev
        with np.errstate(divide="ignore", invalid="ignore"):
            aitk = np.where((dd != 0) & np.isfinite(dd) & (tail > 0), new - d_cur * d_cur / dd, new)
        estimate[active] = aitk
        steps[active] = m
        done = (tail <= tol) & (a * b <= product_tol)
        if done.any():
            converged[active[done]] = True
            keep = ~done
            active, a, b, new, d_cur = active[keep], a[keep], b[keep], new[keep], d_cur[keep]
        dprev, dlast = d_cur, new

    lim_a = np.maximum(estimate, 0.0)
    lim_b = np.maximum(-estimate, 0.0)
    return lim_a.reshape(shape), lim_b.reshape(shape), converged.reshape(shape), steps.reshape(shape)


def reduced_basins(p: GonosomalParams, alpha, beta, delta: float = BASIN_DELTA, **kwargs):
    """Basin tags and reduced limits on arrays of initial points.

    Uses the closed form ``(max(alpha - beta, 0), max(beta - alpha, 0))`` when
    ``p1 = p2 = 1``.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if p.case_tag == "Equal":
        diff = alpha - beta
        lim_a, lim_b = np.maximum(diff, 0.0), np.maximum(-diff, 0.0)
        converged = np.ones(alpha.shape, dtype=bool)
    else:
        lim_a, lim_b, converged, _ = reduced_limits(p.p1, p.p2, alpha, beta, **kwargs)
    lim_a = np.where(lim_a <= delta, 0.0, lim_a)
    lim_b = np.where(lim_b <= delta, 0.0, lim_b)
    tags = np.where(lim_a > 0, "T1", np.where(lim_b > 0, "T2", "T0"))
    return tags, lim_a, lim_b, converged


def to_backend_point(coords, backend: str) -> SimplexPoint:
    return SimplexPoint(tuple(to_number(c, backend) for c in coords))
