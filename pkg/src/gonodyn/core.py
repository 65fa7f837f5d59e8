"""Domain types, validation and the arithmetic policy shared by the package.

Two backends are supported.  ``"rational"`` keeps every coordinate as a
:class:`fractions.Fraction`, which makes fixed-point and algebraic identity
checks exact.  ``"float"`` uses doubles and is the only sensible choice for
long trajectories.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Iterable, Sequence

BACKENDS = ("rational", "float")

SUM_TOL = 1e-12
RENORM_TOL = 1e-9
TENSOR_TOL = 1e-12


class GonodynError(Exception):
    """Base class for all package errors."""


class ValidationError(GonodynError, ValueError):
    """Invalid parameters, tensor or configuration."""


class DomainError(GonodynError, ValueError):
    """A point lies outside the domain of an operation."""


class NumericalDegeneracyError(DomainError):
    """A float denominator underflowed; the result would be Inf or NaN."""


class NonConvergenceError(GonodynError, ArithmeticError):
    """An iteration hit its budget before meeting the stopping rule."""


def default_backend() -> str:
    backend = os.environ.get("GONODYN_BACKEND", "float").strip().lower()
    if backend not in BACKENDS:
        raise ValidationError(f"GONODYN_BACKEND must be one of {BACKENDS}, got {backend!r}")
    return backend


def to_number(value, backend: str):
    """Convert ``value`` to the scalar type of ``backend``.

    Strings and floats become exact decimals under the rational backend, so
    ``"0.3"`` and ``0.3`` both give ``Fraction(3, 10)``.
    """
    if backend == "rational":
        if isinstance(value, Fraction):
            return value
        if isinstance(value, float):
            return Fraction(repr(value))
        return Fraction(value)
    if backend == "float":
        return float(value)
    raise ValidationError(f"unknown backend {backend!r}")


def backend_of(values: Iterable) -> str:
    return "rational" if all(isinstance(v, (Fraction, int)) for v in values) else "float"


@dataclass(frozen=True)
class SimplexPoint:
    """A state on the simplex: female block ``x_1..x_n`` then male block ``y_1..y_nu``.

    Float inputs whose sum is within ``1e-9`` of one are renormalised; anything
    further away is rejected.  Points with an empty female or male block (the
    set where the operator is undefined) are rejected with :class:`DomainError`.
    """

    coords: tuple
    female_count: int = 2
    male_count: int = 2

    def __post_init__(self):
        coords = tuple(self.coords)
        n, nu = self.female_count, self.male_count
        if n < 1 or nu < 1:
            raise ValidationError("female_count and male_count must be positive")
        if len(coords) != n + nu:
            raise ValidationError(f"expected {n + nu} coordinates, got {len(coords)}")
        rational = backend_of(coords) == "rational"
        if rational:
            coords = tuple(Fraction(c) for c in coords)
        else:
            coords = tuple(float(c) for c in coords)
            if not all(math.isfinite(c) for c in coords):
                raise ValidationError(f"non-finite coordinate in {coords}")
            # float drift may leave tiny negatives behind
            coords = tuple(0.0 if -SUM_TOL <= c < 0 else c for c in coords)
        for i, c in enumerate(coords):
            if c < 0:
                raise ValidationError(f"coordinate {i + 1} is negative: {c}")
        total = sum(coords)
        if abs(total - 1) > RENORM_TOL:
            raise ValidationError(f"coordinates sum to {total}, not 1")
        if total != 1:
            coords = tuple(c / total for c in coords)
        if sum(coords[:n]) == 0:
            raise DomainError("female block is zero: the point lies in the excluded set O")
        if sum(coords[n:]) == 0:
            raise DomainError("male block is zero: the point lies in the excluded set O")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def of(cls, x, y, u, v) -> "SimplexPoint":
        """Two-by-two point ``(x, y, u, v)``."""
        return cls((x, y, u, v))

    @property
    def female(self) -> tuple:
        return self.coords[: self.female_count]

    @property
    def male(self) -> tuple:
        return self.coords[self.female_count :]

    @property
    def backend(self) -> str:
        return "rational" if isinstance(self.coords[0], Fraction) else "float"

    def as_float(self) -> tuple:
        return tuple(float(c) for c in self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __len__(self):
        return len(self.coords)

    def __getitem__(self, i):
        return self.coords[i]


@dataclass(frozen=True)
class GonosomalParams:
    """Coefficients ``a`` and ``sigma1`` of the two-by-two operator.

    ``b = 1 - a`` and ``sigma2 = 1 - sigma1``; the ratios ``p1 = sigma1 / a``
    and ``p2 = sigma2 / b`` select the dynamical regime.
    """

    a: Real
    sigma1: Real

    def __post_init__(self):
        for name in ("a", "sigma1"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (Real, Fraction)):
                raise ValidationError(f"{name} must be a real number, got {value!r}")
            if not 0 < value < 1:
                raise ValidationError(f"{name} must lie in (0, 1), got {value}")

    @classmethod
    def from_ratios(cls, p1, p2) -> "GonosomalParams":
        """Parameters with the given ``p1 != p2``; ``a = (1 - p2) / (p1 - p2)``."""
        if p1 == p2:
            raise ValidationError("p1 == p2 does not determine a; pass a and sigma1 directly")
        a = (1 - p2) / (p1 - p2)
        return cls(a, p1 * a)

    @property
    def b(self):
        return 1 - self.a

    @property
    def sigma2(self):
        return 1 - self.sigma1

    @property
    def p1(self):
        return self.sigma1 / self.a

    @property
    def p2(self):
        return self.sigma2 / self.b

    @property
    def case_tag(self) -> str:
        if self.sigma1 == self.a:
            return "Equal"
        return "P1Dominant" if self.sigma1 > self.a else "P2Dominant"

    @property
    def backend(self) -> str:
        return backend_of((self.a, self.sigma1))

    def converted(self, backend: str) -> "GonosomalParams":
        return GonosomalParams(to_number(self.a, backend), to_number(self.sigma1, backend))


@dataclass(frozen=True)
class ReducedPoint:
    """``(alpha, beta)`` in the unit square: type-1 share among females, type-2 share among males."""

    alpha: Real
    beta: Real

    def __post_init__(self):
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ValidationError(f"{name} must lie in [0, 1], got {value}")

    def __iter__(self):
        return iter((self.alpha, self.beta))


@dataclass(frozen=True)
class InheritanceTensor:
    """Offspring probabilities for each parental pair ``(i, k)``.

    ``gamma_f[i][k][j]`` is the probability of a type-``j`` daughter and
    ``gamma_m[i][k][l]`` that of a type-``l`` son.  Construction does not
    validate; call :func:`validate_tensor`.
    """

    gamma_f: tuple
    gamma_m: tuple

    def __post_init__(self):
        object.__setattr__(self, "gamma_f", _freeze(self.gamma_f))
        object.__setattr__(self, "gamma_m", _freeze(self.gamma_m))

    @property
    def female_count(self) -> int:
        return len(self.gamma_f)

    @property
    def male_count(self) -> int:
        return len(self.gamma_f[0]) if self.gamma_f else 0

    @classmethod
    def from_params(cls, p: GonosomalParams) -> "InheritanceTensor":
        """The two-by-two coefficient table that defines the operator ``W``."""
        a, b, s1, s2 = p.a, p.b, p.sigma1, p.sigma2
        z = a * 0
        gamma_f = (
            ((a, z), (z, s1)),
            ((z, a), (z, a)),
        )
        gamma_m = (
            ((b, z), (s2, z)),
            ((b, z), (z, b)),
        )
        return cls(gamma_f, gamma_m)

    def to_json(self) -> dict:
        def plain(block):
            return [[[_json_number(v) for v in row] for row in plane] for plane in block]

        return {"gamma_f": plain(self.gamma_f), "gamma_m": plain(self.gamma_m)}

    @classmethod
    def from_json(cls, data: dict, backend: str = "float") -> "InheritanceTensor":
        try:
            gf, gm = data["gamma_f"], data["gamma_m"]
        except (KeyError, TypeError) as exc:
            raise ValidationError("tensor JSON needs 'gamma_f' and 'gamma_m'") from exc

        def conv(block):
            try:
                return [[[to_number(v, backend) for v in row] for row in plane] for plane in block]
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"malformed tensor entry: {exc}") from exc

        return cls(conv(gf), conv(gm))


def _freeze(block):
    if isinstance(block, (list, tuple)):
        return tuple(_freeze(b) for b in block)
    return block


def _json_number(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else int(v)
    return v


@dataclass(frozen=True)
class TensorIssue:
    kind: str  # "dimension" | "negative" | "sum"
    index: tuple
    residual: float = 0.0
    message: str = ""


@dataclass(frozen=True)
class TensorValidation:
    issues: tuple = field(default_factory=tuple)

    @property
    def valid(self) -> bool:
        return not self.issues

    def __bool__(self):
        return self.valid

    def describe(self) -> str:
        return "valid" if self.valid else "; ".join(i.message for i in self.issues)


def validate_tensor(t: InheritanceTensor, tol: float = TENSOR_TOL) -> TensorValidation:
    """Check non-negativity and that every parental pair's offspring probabilities sum to 1.

    Indices in the report are 1-based, matching the usual ``gamma_{ik,j}`` notation.
    """
    issues = []
    n = len(t.gamma_f)
    nu = len(t.gamma_f[0]) if n else 0
    if n == 0 or nu == 0 or len(t.gamma_m) != n:
        return TensorValidation((TensorIssue("dimension", (), message="empty or mismatched tensor blocks"),))
    for i in range(n):
        if len(t.gamma_f[i]) != nu or len(t.gamma_m[i]) != nu:
            issues.append(TensorIssue("dimension", (i + 1,), message=f"row {i + 1} has the wrong male dimension"))
            continue
        for k in range(nu):
            if len(t.gamma_f[i][k]) != n or len(t.gamma_m[i][k]) != nu:
                issues.append(
                    TensorIssue("dimension", (i + 1, k + 1), message=f"pair ({i + 1},{k + 1}) has wrong offspring dimension")
                )
    if issues:
        return TensorValidation(tuple(issues))

    for i in range(n):
        for k in range(nu):
            for j, g in enumerate(t.gamma_f[i][k]):
                if g < 0:
                    issues.append(
                        TensorIssue("negative", ("f", i + 1, k + 1, j + 1), float(g),
                                    f"gamma_f[{i + 1},{k + 1},{j + 1}] = {g} is negative")
                    )
            for l, g in enumerate(t.gamma_m[i][k]):
                if g < 0:
                    issues.append(
                        TensorIssue("negative", ("m", i + 1, k + 1, l + 1), float(g),
                                    f"gamma_m[{i + 1},{k + 1},{l + 1}] = {g} is negative")
                    )
            residual = sum(t.gamma_f[i][k]) + sum(t.gamma_m[i][k]) - 1
            if abs(residual) > tol:
                issues.append(
                    TensorIssue("sum", (i + 1, k + 1), float(residual),
                                f"pair ({i + 1},{k + 1}) sums to 1{float(residual):+.3g}")
                )
    return TensorValidation(tuple(issues))


def reduce(s: SimplexPoint | Sequence) -> ReducedPoint:
    """Map ``(x, y, u, v)`` to ``(x / (x + y), v / (u + v))``."""
    x, y, u, v = tuple(s)
    if x + y == 0:
        raise DomainError("female block is zero: cannot reduce")
    if u + v == 0:
        raise DomainError("male block is zero: cannot reduce")
    return ReducedPoint(x / (x + y), v / (u + v))
