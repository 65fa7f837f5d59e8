"""Minimal standalone SVG plots of the reduced unit square.

Output is plain text built from fixed-precision numbers, so identical input
gives identical bytes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import GonodynError

SIZE = 480
PAD = 48
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
BASIN_COLORS = {"T0": "#7f7f7f", "T1": "#d62728", "T2": "#1f77b4"}

TRAJECTORY_HEADER = ("m", "x", "y", "u", "v", "alpha", "beta", "xv_product")
CURVE_HEADER = ("alpha", "beta")
SWEEP_HEADER = ("alpha0", "beta0", "basin", "limit_alpha", "limit_beta")
HEADERS = {"trajectory": TRAJECTORY_HEADER, "curves": CURVE_HEADER, "sweep": SWEEP_HEADER}


class CsvFormatError(GonodynError, ValueError):
    pass


@dataclass(frozen=True)
class Table:
    name: str
    columns: dict


def read_table(path: str, kind: str) -> Table:
    """Read a CSV produced by this package and check its header."""
    want = HEADERS[kind]
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise CsvFormatError(f"{path}: {exc.strerror}") from exc
    if not rows:
        raise CsvFormatError(f"{path}: empty file")
    header = tuple(c.strip() for c in rows[0])
    if header != want:
        raise CsvFormatError(f"{path}: expected header {','.join(want)}, got {','.join(header)}")
    body = [r for r in rows[1:] if r]
    if not body:
        raise CsvFormatError(f"{path}: no data rows")
    cols = {name: [] for name in want}
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(want):
            raise CsvFormatError(f"{path}:{lineno}: expected {len(want)} fields, got {len(row)}")
        for name, cell in zip(want, row):
            if name == "basin":
                cols[name].append(cell.strip())
                continue
            try:
                cols[name].append(float(cell))
            except ValueError as exc:
                raise CsvFormatError(f"{path}:{lineno}: bad number {cell!r} in column {name}") from exc
    return Table(path, cols)


def _x(a: float) -> str:
    return f"{PAD + a * (SIZE - 2 * PAD):.3f}"


def _y(b: float) -> str:
    return f"{SIZE - PAD - b * (SIZE - 2 * PAD):.3f}"


def _frame(title: str) -> list:
    lo, hi = PAD, SIZE - PAD
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>',
        f'<rect x="{lo}" y="{lo}" width="{hi - lo}" height="{hi - lo}" fill="none" stroke="black" stroke-width="1"/>',
    ]
    for t in (0.0, 0.5, 1.0):
        out.append(f'<text x="{_x(t)}" y="{hi + 16}" font-size="11" text-anchor="middle">{t:g}</text>')
        out.append(f'<text x="{lo - 8}" y="{_y(t)}" font-size="11" text-anchor="end" dominant-baseline="middle">{t:g}</text>')
    out.append(f'<text x="{SIZE / 2:g}" y="{SIZE - 12}" font-size="13" text-anchor="middle">alpha</text>')
    out.append(f'<text x="14" y="{SIZE / 2:g}" font-size="13" text-anchor="middle" transform="rotate(-90 14 {SIZE / 2:g})">beta</text>')
    out.append(f'<text x="{SIZE / 2:g}" y="24" font-size="14" text-anchor="middle">{_escape(title)}</text>')
    return out


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _polyline(alpha: Sequence[float], beta: Sequence[float], color: str) -> str:
    pts = " ".join(f"{_x(a)},{_y(b)}" for a, b in zip(alpha, beta))
    return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'


def _marker(a: float, b: float, color: str) -> str:
    return f'<circle cx="{_x(a)}" cy="{_y(b)}" r="3.5" fill="{color}" stroke="black" stroke-width="0.5"/>'


def plot_curves(tables: Iterable[Table], title: str = "invariant curves") -> str:
    """One polyline per table with a marker at its last point."""
    out = _frame(title)
    for i, t in enumerate(tables):
        color = PALETTE[i % len(PALETTE)]
        a, b = t.columns["alpha"], t.columns["beta"]
        out.append(_polyline(a, b, color))
        out.append(_marker(a[-1], b[-1], color))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_trajectories(tables: Iterable[Table], title: str = "trajectory") -> str:
    """Reduced coordinates of recorded iterates, start and end marked."""
    out = _frame(title)
    for i, t in enumerate(tables):
        color = PALETTE[i % len(PALETTE)]
        a, b = t.columns["alpha"], t.columns["beta"]
        out.append(_polyline(a, b, color))
        out.append(f'<circle cx="{_x(a[0])}" cy="{_y(b[0])}" r="2.5" fill="white" stroke="{color}" stroke-width="1"/>')
        out.append(_marker(a[-1], b[-1], color))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_sweep(table: Table, title: str = "basins") -> str:
    """Lattice cells coloured by basin tag."""
    out = _frame(title)
    a0, b0, tags = table.columns["alpha0"], table.columns["beta0"], table.columns["basin"]
    n = max(2, round(len(a0) ** 0.5))
    cell = (SIZE - 2 * PAD) / n
    for a, b, tag in zip(a0, b0, tags):
        color = BASIN_COLORS.get(tag, "#000000")
        x = float(_x(a)) - cell / 2
        y = float(_y(b)) - cell / 2
        out.append(f'<rect x="{x:.3f}" y="{y:.3f}" width="{cell:.3f}" height="{cell:.3f}" fill="{color}" fill-opacity="0.7"/>')
    for i, (tag, color) in enumerate(sorted(BASIN_COLORS.items())):
        y = PAD + 14 * i
        out.append(f'<rect x="{SIZE - PAD + 6}" y="{y}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="{SIZE - PAD + 20}" y="{y + 9}" font-size="11">{tag}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render(kind: str, tables: Sequence[Table], title: str = "") -> str:
    if kind == "curves":
        return plot_curves(tables, title or "invariant curves")
    if kind == "trajectory":
        return plot_trajectories(tables, title or "trajectory")
    if kind == "sweep":
        if len(tables) != 1:
            raise CsvFormatError("sweep plots take exactly one CSV")
        return plot_sweep(tables[0], title or "basins")
    raise ValueError(f"unknown plot kind {kind!r}")
