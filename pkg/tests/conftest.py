from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from gonodyn.core import GonosomalParams

settings.register_profile("default", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list = []


@pytest.fixture
def acceptance():
    """Records one PASS/FAIL line per criterion; printed in the terminal summary."""

    def record(number: int, ok: bool, detail: str) -> bool:
        ACCEPTANCE_LINES.append((number, f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}: {detail}"))
        print(ACCEPTANCE_LINES[-1][1])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


unit = st.floats(min_value=0.02, max_value=0.98, allow_nan=False)


@st.composite
def float_params(draw):
    return GonosomalParams(draw(unit), draw(unit))


@st.composite
def rational_params(draw):
    den = draw(st.integers(min_value=2, max_value=60))
    a = draw(st.integers(min_value=1, max_value=den - 1))
    s = draw(st.integers(min_value=1, max_value=den - 1))
    return GonosomalParams(Fraction(a, den), Fraction(s, den))


@st.composite
def interior_points(draw):
    w = [draw(st.floats(min_value=1e-3, max_value=1.0)) for _ in range(4)]
    total = sum(w)
    return tuple(x / total for x in w)


@st.composite
def rational_points(draw, zero=None):
    """Rational simplex points; ``zero`` forces that coordinate to vanish."""
    w = [Fraction(draw(st.integers(min_value=1, max_value=50))) for _ in range(4)]
    if zero is not None:
        w[zero] = Fraction(0)
    total = sum(w)
    return tuple(x / total for x in w)
