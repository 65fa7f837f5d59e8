"""Numerical invariant curves and basin sweeps of the reduced map.

The reduced map keeps the south-east order: ``alpha'`` grows with ``alpha``
and shrinks with ``beta``, and the reverse holds for ``beta'``.  The limit
``L = lim (alpha_m - beta_m)`` is therefore monotone, constant along orbits,
and increasing along every anti-diagonal ``alpha + beta = s``.  An invariant
curve is a level set of ``L``.  It meets each anti-diagonal at most once,
which is how points are placed on it.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, TextIO

import numpy as np

from .analysis import BASIN_DELTA, reduced_basins, reduced_limits
from .core import DomainError, GonosomalParams, NonConvergenceError, ReducedPoint, ValidationError
from .operators import reduced_map

AXIS_TOL = 1e-8
BISECT_TOL = 1e-10
TUBE_RADIUS = 1e-4
SWEEP_MARGIN = 1e-3
MAX_STEPS = 100_000


def fmt(x) -> str:
    return format(float(x), ".17g")


def level_values(p: GonosomalParams, alpha, beta, max_iter: int = 10**6) -> np.ndarray:
    """``L = lim (alpha_m - beta_m)`` for arrays of starting points."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if p.case_tag == "Equal":
        return alpha - beta
    la, lb, converged, _ = reduced_limits(p.p1, p.p2, alpha, beta, max_iter=max_iter)
    if not np.all(converged):
        raise NonConvergenceError(f"{int(np.sum(~converged))} reduced trajectories did not converge")
    return la - lb


def _antidiagonal_span(s):
    return np.maximum(0.0, s - 1.0), np.minimum(1.0, s)


def solve_on_antidiagonals(p: GonosomalParams, s, target: float, tol: float = BISECT_TOL):
    """Points with ``alpha + beta = s`` and ``L = target``, by bisection in ``alpha``."""
    s = np.asarray(s, dtype=float)
    lo, hi = _antidiagonal_span(s)
    for _ in range(max(1, math.ceil(math.log2(1.0 / tol)))):
        mid = 0.5 * (lo + hi)
        below = level_values(p, mid, s - mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    alpha = 0.5 * (lo + hi)
    return alpha, s - alpha


def _brackets(p: GonosomalParams, s, target: float) -> np.ndarray:
    lo, hi = _antidiagonal_span(s)
    return (level_values(p, lo, s - lo) <= target) & (target <= level_values(p, hi, s - hi))


@dataclass(frozen=True)
class TracedCurve:
    """Polyline on an invariant curve, ordered toward its terminal fixed point."""

    alpha: np.ndarray
    beta: np.ndarray
    params: GonosomalParams
    seed: ReducedPoint
    level: float
    terminal: ReducedPoint
    residual: float
    orbit_steps: int = 0
    notes: tuple = field(default_factory=tuple)

    @property
    def points(self) -> list:
        return [ReducedPoint(float(a), float(b)) for a, b in zip(self.alpha, self.beta)]

    def __len__(self):
        return len(self.alpha)

    def write_csv(self, out: TextIO) -> None:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["alpha", "beta"])
        for a, b in zip(self.alpha, self.beta):
            w.writerow([fmt(a), fmt(b)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def _subsample(a, b, spacing, last):
    """Arc points at least ``spacing`` apart, also from the point ``last``."""
    keep_a, keep_b = [], []
    la, lb = last
    for x, y in zip(a, b):
        if math.hypot(x - la, y - lb) >= spacing:
            keep_a.append(x)
            keep_b.append(y)
            la, lb = x, y
    return keep_a, keep_b, (la, lb)


def trace_curve(
    p: GonosomalParams,
    seed,
    samples: int = 200,
    extend: bool = False,
    max_steps: int = MAX_STEPS,
) -> TracedCurve:
    """Invariant curve through ``seed``.

    The arc between the seed and its image is filled with ``samples`` points
    of the same level, found by bisection on anti-diagonals.  The images of
    that arc under the map then tile the rest of the curve down to the
    terminal fixed point on an axis.  With ``extend`` the curve is also
    continued from the seed away from the terminal point up to the edge of the
    unit square.
    """
    if samples < 1:
        raise ValidationError("samples must be positive")
    a0, b0 = (float(x) for x in seed)
    if not (0 < a0 < 1 and 0 < b0 < 1):
        raise ValidationError(f"seed must lie in (0,1)^2, got ({a0}, {b0})")
    if min(a0, b0) < AXIS_TOL:
        raise DomainError(f"seed ({a0}, {b0}) is within {AXIS_TOL} of an axis")
    p1, p2 = float(p.p1), float(p.p2)
    target = float(np.ravel(level_values(p, a0, b0))[0])
    ta, tb = max(target, 0.0), max(-target, 0.0)
    if ta <= BASIN_DELTA:
        ta = 0.0
    if tb <= BASIN_DELTA:
        tb = 0.0

    a1, b1 = reduced_map(p1, p2, a0, b0)
    spacing = math.hypot(a0 - a1, b0 - b1) / samples
    s0, s1 = a0 + b0, a1 + b1
    fa, fb = solve_on_antidiagonals(p, s1 + (s0 - s1) * np.arange(samples, 0, -1) / samples, target)
    fa[0], fb[0] = a0, b0

    head_a: list = []
    head_b: list = []
    if extend:
        head_a, head_b = _extension(p, s0, target, spacing, samples)

    # the map need not preserve order along the curve, so images of the first
    # arc can overlap; the level set is a graph over alpha + beta, so sorting
    # by that sum restores the polyline order
    chunks_a, chunks_b = [fa], [fb]
    A, B = fa, fb
    steps = 0
    while np.max(np.hypot(A - ta, B - tb)) > spacing:
        if steps >= max_steps:
            raise NonConvergenceError(f"curve did not reach its terminal point within {max_steps} steps")
        A, B = reduced_map(p1, p2, A, B)
        steps += 1
        arc = float(np.sum(np.hypot(np.diff(A), np.diff(B))))
        stride = max(1, int(spacing * len(A) / arc)) if arc > 0 else len(A)
        chunks_a.append(A[::stride])
        chunks_b.append(B[::stride])
    all_a, all_b = np.concatenate(chunks_a), np.concatenate(chunks_b)
    order = np.argsort(-(all_a + all_b), kind="stable")
    out_a, out_b, last = _subsample(all_a[order], all_b[order], spacing, (math.inf, math.inf))
    if math.hypot(last[0] - ta, last[1] - tb) > 0:
        out_a.append(ta)
        out_b.append(tb)

    alpha = np.array(head_a + out_a)
    beta = np.array(head_b + out_b)
    return TracedCurve(
        alpha=alpha,
        beta=beta,
        params=p,
        seed=ReducedPoint(a0, b0),
        level=target,
        terminal=ReducedPoint(ta, tb),
        residual=tube_residual(p, alpha, beta),
        orbit_steps=steps,
    )


def _extension(p: GonosomalParams, s0: float, target: float, spacing: float, samples: int):
    """Level-set points with ``alpha + beta > s0`` up to the edge of the square, far end first."""
    ds = max(spacing, 0.5 / samples)
    grid = s0 + ds * np.arange(1, int((2.0 - s0) / ds) + 1)
    grid = grid[grid < 2.0]
    if grid.size == 0:
        return [], []
    ok = _brackets(p, grid, target)
    bad = np.flatnonzero(~ok)
    end = bad[0] if bad.size else grid.size
    inner = grid[:end]
    if bad.size:
        lo = inner[-1] if inner.size else s0
        hi = grid[end]
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if _brackets(p, np.array([mid]), target)[0]:
                lo = mid
            else:
                hi = mid
        inner = np.append(inner, lo)
    else:
        inner = np.append(inner, 2.0) if _brackets(p, np.array([2.0]), target)[0] else inner
    ea, eb = solve_on_antidiagonals(p, inner[::-1], target)
    return list(ea), list(eb)


def _segment_distance(px, py, ax, ay, bx, by):
    dx, dy = bx - ax, by - ay
    ll = dx * dx + dy * dy
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(ll > 0, ((px - ax) * dx + (py - ay) * dy) / ll, 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(px - (ax + t * dx), py - (ay + t * dy))


def tube_residual(p: GonosomalParams, alpha, beta) -> float:
    """Max distance from the image of a polyline vertex to the polyline.

    Vertices are ordered by decreasing ``alpha + beta`` and the map lowers
    that sum, so only segments near the image's anti-diagonal are examined.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if alpha.size < 2:
        return 0.0
    ia, ib = reduced_map(float(p.p1), float(p.p2), alpha, beta)
    key = -(alpha + beta)
    pos = np.searchsorted(key, -(ia + ib))
    best = np.full(alpha.size, np.inf)
    nseg = alpha.size - 1
    for off in (-2, -1, 0, 1):
        j = np.clip(pos + off, 0, nseg - 1)
        d = _segment_distance(ia, ib, alpha[j], beta[j], alpha[j + 1], beta[j + 1])
        best = np.minimum(best, d)
    return float(best.max())


def polylines_intersect(a_alpha, a_beta, b_alpha, b_beta) -> bool:
    """Whether two polylines share a point (proper crossings or touching)."""
    p = np.stack([a_alpha, a_beta], axis=1)
    q = np.stack([b_alpha, b_beta], axis=1)
    p0, p1 = p[:-1, None, :], p[1:, None, :]
    q0, q1 = q[None, :-1, :], q[None, 1:, :]

    def cross(o, a, b):
        return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - (a[..., 1] - o[..., 1]) * (b[..., 0] - o[..., 0])

    d1, d2 = cross(q0, q1, p0), cross(q0, q1, p1)
    d3, d4 = cross(p0, p1, q0), cross(p0, p1, q1)
    proper = (d1 * d2 < 0) & (d3 * d4 < 0)
    if proper.any():
        return True
    return min_distance(a_alpha, a_beta, b_alpha, b_beta) == 0.0


def min_distance(a_alpha, a_beta, b_alpha, b_beta) -> float:
    """Smallest vertex-to-segment distance between two polylines, both ways."""
    a_alpha, a_beta, b_alpha, b_beta = (np.asarray(x, dtype=float) for x in (a_alpha, a_beta, b_alpha, b_beta))

    def one_way(xa, ya, xb, yb):
        if xb.size < 2:
            return float(np.min(np.hypot(xa - xb[0], ya - yb[0])))
        d = _segment_distance(xa[:, None], ya[:, None], xb[None, :-1], yb[None, :-1], xb[None, 1:], yb[None, 1:])
        return float(d.min())

    return min(one_way(a_alpha, a_beta, b_alpha, b_beta), one_way(b_alpha, b_beta, a_alpha, a_beta))


def is_monotone_graph(curve: TracedCurve, tol: float = 1e-12) -> bool:
    """Both coordinates non-increasing along the curve, so it is a non-decreasing graph."""
    return bool(np.all(np.diff(curve.alpha) <= tol) and np.all(np.diff(curve.beta) <= tol))


@dataclass(frozen=True)
class SweepResult:
    """Basin tags and limits on a ``grid x grid`` lattice, ``alpha0``-major order."""

    alpha0: np.ndarray
    beta0: np.ndarray
    basin: np.ndarray
    limit_alpha: np.ndarray
    limit_beta: np.ndarray
    converged: np.ndarray

    def write_csv(self, out: TextIO) -> None:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["alpha0", "beta0", "basin", "limit_alpha", "limit_beta"])
        for a, b, t, la, lb in zip(self.alpha0, self.beta0, self.basin, self.limit_alpha, self.limit_beta):
            w.writerow([fmt(a), fmt(b), str(t), fmt(la), fmt(lb)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def basin_sweep(p: GonosomalParams, grid: int, margin: float = SWEEP_MARGIN, **kwargs) -> SweepResult:
    """Classify every cell of an interior lattice ``[margin, 1 - margin]^2``.

    All cells are advanced together as one vectorised batch; each cell's
    result lands in its own slot, so the output order is fixed.
    """
    if grid < 2:
        raise ValidationError("grid must be at least 2")
    axis = np.linspace(margin, 1.0 - margin, grid)
    aa, bb = np.meshgrid(axis, axis, indexing="ij")
    aa, bb = aa.ravel(), bb.ravel()
    tags, la, lb, converged = reduced_basins(p, aa, bb, **kwargs)
    return SweepResult(aa, bb, tags, la, lb, converged)
