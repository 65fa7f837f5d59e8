"""Command-line front end: ``gonodyn <subcommand> ...``.

Exit codes: 0 ok, 2 configuration error, 3 domain error, 4 non-convergence,
5 I/O or parse error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Optional

from . import analysis, explore, series, svg
from .core import (
    BACKENDS,
    DomainError,
    GonosomalParams,
    InheritanceTensor,
    NonConvergenceError,
    SimplexPoint,
    ValidationError,
    default_backend,
    reduce,
    to_number,
    validate_tensor,
)

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_NONCONV, EXIT_IO = 0, 2, 3, 4, 5


class ParseError(Exception):
    """Unreadable or malformed input file."""


@dataclass
class RunConfig:
    a: Optional[str] = None
    sigma1: Optional[str] = None
    tensor_path: Optional[str] = None
    backend: Optional[str] = None
    max_iter: int = analysis.DEFAULT_MAX_ITER
    tol: float = analysis.DEFAULT_TOL
    output: Optional[str] = None

    def params(self) -> GonosomalParams:
        if self.tensor_path is not None:
            raise ValidationError("this command needs a and sigma1, not a tensor file")
        if self.a is None or self.sigma1 is None:
            raise ValidationError("both a and sigma1 are required")
        try:
            a, s1 = to_number(self.a, self.backend), to_number(self.sigma1, self.backend)
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"bad parameter value: {exc}") from exc
        return GonosomalParams(a, s1)

    def has_params(self) -> bool:
        return self.a is not None or self.sigma1 is not None


def load_config(args: argparse.Namespace) -> RunConfig:
    """JSON config file first, then command-line flags on top."""
    cfg = RunConfig()
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ParseError(f"{args.config}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"{args.config}: invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError("config must be a JSON object")
        known = {f.name for f in fields(RunConfig)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
        for key, value in data.items():
            setattr(cfg, key, value)
    for key in ("a", "sigma1", "backend", "max_iter", "tol", "output"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "tensor", None) is not None:
        cfg.tensor_path = args.tensor
    if cfg.backend is None:
        cfg.backend = default_backend()
    if cfg.backend not in BACKENDS:
        raise ValidationError(f"backend must be one of {BACKENDS}, got {cfg.backend!r}")
    if cfg.tensor_path is not None and cfg.has_params():
        raise ValidationError("give either a and sigma1 or a tensor file, not both")
    if not isinstance(cfg.max_iter, int) or cfg.max_iter < 1:
        raise ValidationError("max_iter must be a positive integer")
    if not isinstance(cfg.tol, (int, float)) or cfg.tol <= 0:
        raise ValidationError("tol must be positive")
    return cfg


def _write(cfg: RunConfig, text: str) -> None:
    if cfg.output is None or cfg.output == "-":
        sys.stdout.write(text)
        return
    tmp = f"{cfg.output}.tmp{os.getpid()}"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, cfg.output)


def _report(cfg: RunConfig, line: str) -> None:
    # keep stdout clean when it carries the data
    stream = sys.stderr if cfg.output in (None, "-") else sys.stdout
    print(line, file=stream)


def _num(x):
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else str(x)
    return float(x)


def _fmt(x) -> str:
    return explore.fmt(x)


def _point(values, backend: str) -> SimplexPoint:
    try:
        coords = tuple(to_number(v, backend) for v in values)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"bad coordinate: {exc}") from exc
    return SimplexPoint(coords)


# -- subcommands ------------------------------------------------------------

def cmd_validate(cfg: RunConfig, args) -> int:
    if cfg.tensor_path is not None:
        try:
            with open(cfg.tensor_path) as fh:
                tensor = InheritanceTensor.from_json(json.load(fh), cfg.backend)
        except OSError as exc:
            raise ParseError(f"{cfg.tensor_path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"{cfg.tensor_path}: invalid JSON: {exc}") from exc
        result = validate_tensor(tensor)
        print(result.describe())
        return EXIT_OK if result.valid else EXIT_CONFIG
    p = cfg.params()
    result = validate_tensor(InheritanceTensor.from_params(p))
    print(result.describe())
    print(f"case={p.case_tag} p1={_num(p.p1)} p2={_num(p.p2)}")
    return EXIT_OK if result.valid else EXIT_CONFIG


def trajectory_csv(record: analysis.TrajectoryRecord) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(svg.TRAJECTORY_HEADER)
    for m, st in zip(record.indices, record.states):
        x, y, u, v = (float(c) for c in st)
        r = reduce((x, y, u, v))
        w.writerow([m] + [_fmt(c) for c in (x, y, u, v, r.alpha, r.beta, x * v)])
    return buf.getvalue()


def cmd_iterate(cfg: RunConfig, args) -> int:
    p = cfg.params()
    s0 = _point(args.init, cfg.backend)
    record = analysis.iterate(p, s0, max_iter=cfg.max_iter, tol=cfg.tol)
    _write(cfg, trajectory_csv(record))
    limit = ",".join(_fmt(c) for c in record.limit)
    _report(cfg, f"limit={limit} basin={record.basin} residual={record.residual:.3g} iterations={record.iteration_count}")
    if not record.converged:
        _report(cfg, f"error: no convergence within {cfg.max_iter} iterations")
        return EXIT_NONCONV
    return EXIT_OK


def cmd_fixed_points(cfg: RunConfig, args) -> int:
    p = cfg.params()
    if args.samples < 1:
        raise ValidationError("samples must be positive")
    out = [
        {"family": d.family, "point": [_num(c) for c in d.point], "eigenvalues": [_num(e) for e in d.eigenvalues]}
        for d in analysis.enumerate_fixed_points(p, args.samples)
    ]
    _write(cfg, json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def cmd_eigen(cfg: RunConfig, args) -> int:
    p = cfg.params()
    s = _point(args.point, cfg.backend)
    eigs = analysis.eigenvalues_at(p, s)
    out = {
        "point": [_num(c) for c in s],
        "eigenvalues": list(eigs),
        "classification": analysis.classify_fixed_point(eigs),
        "full_spectrum": list(analysis.full_spectrum(p, s)),
    }
    for family in analysis.FAMILIES:
        if analysis.family_residual(p, s, family) <= 1e-12:
            out.setdefault("families", []).append(family)
            out.setdefault("predicted", {})[family] = [float(e) for e in analysis.family_eigenvalues(p, family, s)]
    _write(cfg, json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def cmd_classify(cfg: RunConfig, args) -> int:
    p = cfg.params()
    s0 = _point(args.init, cfg.backend)
    res = analysis.classify_basin(p, s0, max_iter=cfg.max_iter, tol=cfg.tol)
    out = {"basin": res.basin, "limit": [_num(c) for c in res.limit], "method": res.method}
    if res.theta is not None:
        out["theta"] = _num(res.theta)
    if res.record is not None:
        out["iterations"] = res.record.iteration_count
        out["residual"] = res.record.residual
        out["converged"] = res.record.converged
    _write(cfg, json.dumps(out, indent=2) + "\n")
    if res.record is not None and not res.record.converged:
        return EXIT_NONCONV
    return EXIT_OK


def cmd_series(cfg: RunConfig, args) -> int:
    backend = cfg.backend
    if args.case == 1:
        if cfg.has_params() and cfg.params().case_tag != "Equal":
            raise ValidationError("case mismatch: case 1 needs sigma1 == a")
        theta = None if args.theta is None else to_number(args.theta, backend)
        f = series.solve_case1(args.branch, args.order, theta, backend=backend)
        out = {
            "p1": 1,
            "p2": 1,
            "c": [series._plain(c) for c in f.coefficients],
            "validity_radius": 1.0,
            "residual": series.grid_residual(f, 1, 1, 1.0),
        }
    else:
        p = cfg.params()
        if p.case_tag == "Equal":
            raise ValidationError("case mismatch: case 2 needs sigma1 != a (p1 != p2)")
        if (args.c1 is None) == (args.beta0 is None):
            raise ValidationError("case 2 needs exactly one of --c1 or --beta0")
        c1 = args.c1 if args.c1 is not None else series.c1_for_intercept(to_number(args.beta0, backend))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", series.SeriesDivergenceWarning)
            sol = series.solve_case2(p.converted(backend), c1, args.c2, args.order, backend=backend)
        for note in sol.warnings:
            print(f"warning: {note}", file=sys.stderr)
        out = sol.to_json()
    _write(cfg, json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def cmd_trace_curve(cfg: RunConfig, args) -> int:
    p = cfg.params().converted("float")
    curve = explore.trace_curve(p, tuple(args.seed), samples=args.samples, extend=args.extend)
    _write(cfg, curve.to_csv())
    t = curve.terminal
    _report(
        cfg,
        f"terminal={_fmt(t.alpha)},{_fmt(t.beta)} points={len(curve)} tube_residual={curve.residual:.3g}",
    )
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    p = cfg.params().converted("float")
    result = explore.basin_sweep(p, args.grid, margin=args.margin)
    _write(cfg, result.to_csv())
    if not result.converged.all():
        _report(cfg, f"error: {int((~result.converged).sum())} cells did not converge")
        return EXIT_NONCONV
    return EXIT_OK


def cmd_plot(cfg: RunConfig, args) -> int:
    tables = [svg.read_table(path, args.kind) for path in args.inputs]
    _write(cfg, svg.render(args.kind, tables, args.title or ""))
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    common.add_argument("--a", help="coefficient a in (0, 1)")
    common.add_argument("--sigma1", help="coefficient sigma1 in (0, 1)")
    common.add_argument("--tensor", help="general inheritance tensor as JSON (validate only)")
    common.add_argument("--backend", choices=BACKENDS, help="arithmetic (default: $GONODYN_BACKEND or float)")
    common.add_argument("--max-iter", dest="max_iter", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("-o", "--output", help="output file (default: stdout)")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gonodyn", description="Dynamics of the two-type gonosomal operator.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()

    sub.add_parser("validate", parents=[common], help="check parameters or an inheritance tensor")

    p = sub.add_parser("iterate", parents=[common], help="iterate W and write the trajectory CSV")
    p.add_argument("--init", nargs=4, required=True, metavar=("X", "Y", "U", "V"))

    p = sub.add_parser("fixed-points", parents=[common], help="sample both fixed-point families")
    p.add_argument("--samples", type=int, default=3)

    p = sub.add_parser("eigen", parents=[common], help="finite-difference spectrum at a fixed point")
    p.add_argument("--point", nargs=4, required=True, metavar=("X", "Y", "U", "V"))

    p = sub.add_parser("classify", parents=[common], help="basin and limit of an initial point")
    p.add_argument("--init", nargs=4, required=True, metavar=("X", "Y", "U", "V"))

    p = sub.add_parser("series", parents=[common], help="power-series invariant curves")
    p.add_argument("--case", type=int, choices=(1, 2), required=True)
    p.add_argument("--branch", choices=("A", "B"), default="B", help="case 1 branch")
    p.add_argument("--theta", help="case 1 branch B: c1 = theta")
    p.add_argument("--c1", type=float)
    p.add_argument("--c2", type=float)
    p.add_argument("--beta0", help="case 2: beta-axis intercept, sets c1 = 1 - beta0")
    p.add_argument("--order", type=int, default=30)

    p = sub.add_parser("trace-curve", parents=[common], help="trace an invariant curve through a seed")
    p.add_argument("--seed", nargs=2, type=float, required=True, metavar=("ALPHA", "BETA"))
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--extend", action="store_true", help="continue past the seed to the square's edge")

    p = sub.add_parser("sweep", parents=[common], help="basin tags on an interior lattice")
    p.add_argument("--grid", type=int, default=21)
    p.add_argument("--margin", type=float, default=explore.SWEEP_MARGIN)

    p = sub.add_parser("plot", parents=[common], help="SVG from trajectory, curve or sweep CSVs")
    p.add_argument("--kind", choices=tuple(svg.HEADERS), required=True)
    p.add_argument("--title")
    p.add_argument("inputs", nargs="+")
    return parser


COMMANDS = {
    "validate": cmd_validate,
    "iterate": cmd_iterate,
    "fixed-points": cmd_fixed_points,
    "eigen": cmd_eigen,
    "classify": cmd_classify,
    "series": cmd_series,
    "trace-curve": cmd_trace_curve,
    "sweep": cmd_sweep,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg, args)
    except (ValidationError, series.BranchError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, series.ResonanceError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NonConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    except (ParseError, svg.CsvFormatError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
