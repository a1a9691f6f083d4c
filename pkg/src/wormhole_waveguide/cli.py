"""
Command-line front end.

    wormhole-waveguide potential --b0 1 --L 0 --r-range 0:10:100
    wormhole-waveguide transmit  --b0 1 --k-range 0.1:10:200 --resonances 3
    wormhole-waveguide born      --b0 1 --x-range 0.05:5:200 --figure2
    wormhole-waveguide heun

Output is CSV (default) or JSON, to stdout or ``-o PATH``. Every file starts
with '#' lines echoing the tool version, the units and the full
configuration. Floats are written with 17 significant digits.

Exit codes: 0 success, 1 numerical or acceptance failure, 2 usage error.
The default quadrature tolerance can be overridden with the environment
variable WORMHOLE_WAVEGUIDE_TOL.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .born import (
    born_amplitude,
    cross_section,
    dcs_zero_energy,
    eq15_roots,
    figure2_data,
    sigma_closed,
)
from .errors import DomainError, NonConvergenceError, NumericalError
from .heun import residual_report
from .potential import ScatterContext, WormholeGeometry, v_eff, v_fourier_closed, v_fourier_numeric
from .transmission import SolverOptions, resonance_comparison, transmission_scan

TOL_ENV = "WORMHOLE_WAVEGUIDE_TOL"
UNITS = "hbar = 2 m0 = 1 (hbar^2/(2 m0) = 1, E = k^2)"
FT_CHECK_THRESHOLD = 1e-6
CONVERGED_FRACTION = 0.99
EQ15_SCAN = (1e-3, 50.0, 1000)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class Table:
    name: str
    columns: list
    rows: list = field(default_factory=list)


# -----------------------------------------------------------------------------
# Argument types
# -----------------------------------------------------------------------------

def positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not (math.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"must be positive and finite, got {text}")
    return value


def nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not (math.isfinite(value) and value >= 0):
        raise argparse.ArgumentTypeError(f"must be non-negative and finite, got {text}")
    return value


def nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def positive_int(text: str) -> int:
    value = nonneg_int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def parse_range(text: str) -> tuple[float, float, int]:
    """Parse ``start:stop:count`` (inclusive endpoints)."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"range must be start:stop:count, got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"range must be start:stop:count, got {text!r}")
    if not (math.isfinite(start) and math.isfinite(stop)):
        raise argparse.ArgumentTypeError("range endpoints must be finite")
    if count < 1:
        raise argparse.ArgumentTypeError("range count must be >= 1")
    if count > 1 and stop <= start:
        raise argparse.ArgumentTypeError("range stop must exceed start")
    return start, stop, count


def expand_range(spec: tuple[float, float, int], log: bool, name: str) -> np.ndarray:
    start, stop, count = spec
    if log:
        if start <= 0:
            raise UsageError(f"--{name}: log spacing needs a positive start")
        return np.geomspace(start, stop, count)
    return np.linspace(start, stop, count)


def default_tol() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return 1e-10
    try:
        value = float(raw)
    except ValueError:
        raise UsageError(f"{TOL_ENV} must be a number, got {raw!r}")
    if not (math.isfinite(value) and 0 < value < 1):
        raise UsageError(f"{TOL_ENV} must lie in (0, 1), got {raw!r}")
    return value


# -----------------------------------------------------------------------------
# Output
# -----------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def render(command: str, config: dict, tables: list[Table], notes: list[str], fmt: str) -> str:
    header = [
        f"wormhole-waveguide {__version__}",
        f"command: {command}",
        f"units: {UNITS}",
        "config: " + json.dumps(config, sort_keys=True),
    ] + list(notes)
    if fmt == "json":
        doc = {
            "header": header,
            "tables": {
                t.name: {
                    "columns": t.columns,
                    "rows": [[_json_value(v) for v in row] for row in t.rows],
                }
                for t in tables
            },
        }
        return json.dumps(doc, indent=1) + "\n"

    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    for i, table in enumerate(tables):
        if len(tables) > 1:
            if i:
                buf.write("\n")
            buf.write(f"# table: {table.name}\n")
        buf.write(",".join(table.columns) + "\n")
        for row in table.rows:
            buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def emit(args, command: str, tables: list[Table], notes: list[str] = ()) -> None:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "output")}
    text = render(command, config, tables, list(notes), args.format)
    if args.output in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write output file {args.output!r}: {exc.strerror}")


# -----------------------------------------------------------------------------
# Subcommands
# -----------------------------------------------------------------------------

def cmd_potential(args) -> int:
    geom = WormholeGeometry(args.b0)
    if args.r_range is None and args.q_range is None:
        raise UsageError("potential needs --r-range and/or --q-range")
    tables = []
    status = EXIT_OK
    notes = []
    if args.r_range is not None:
        r = expand_range(args.r_range, args.log, "r-range")
        t = Table("potential", ["r", "v_eff"])
        t.rows = [[float(ri), v_eff(float(ri), geom, args.L)] for ri in r]
        tables.append(t)
    if args.q_range is not None:
        q = expand_range(args.q_range, args.log, "q-range")
        if np.any(q < 0):
            raise UsageError("--q-range must be non-negative")
        tol = args.tol if args.tol is not None else default_tol()
        cols = ["q", "v_closed"] + (["v_numeric", "v_numeric_err", "rel_err"] if args.check_ft else [])
        t = Table("fourier", cols)
        worst = 0.0
        for qi in q:
            closed = v_fourier_closed(float(qi), geom, args.L)
            row = [float(qi), closed]
            if args.check_ft:
                try:
                    est = v_fourier_numeric(float(qi), geom, args.L, tol)
                    value, err = est.value, est.error
                except NumericalError as exc:
                    value, err = exc.estimate, exc.error
                    status = EXIT_FAIL
                rel = abs(value - closed) / abs(closed) if closed else abs(value)
                worst = max(worst, rel)
                row += [value, err, rel]
            t.rows.append(row)
        if args.check_ft:
            notes.append(f"max rel_err: {_fmt(worst)} (threshold {FT_CHECK_THRESHOLD:g})")
            if worst > FT_CHECK_THRESHOLD:
                status = EXIT_FAIL
        tables.append(t)
    emit(args, "potential", tables, notes)
    return status


def cmd_transmit(args) -> int:
    if args.L != 0 and not args.experimental_L:
        raise UsageError(
            "--L >= 1 transmission is experimental (1/r^2 tail spoils plane-wave asymptotics); "
            "pass --experimental-L to run it anyway"
        )
    geom = WormholeGeometry(args.b0)
    spec = args.k_range or (0.1 / geom.b0, 10.0 / geom.b0, 200)
    ks = expand_range(spec, args.log, "k-range")
    if np.any(ks <= 0):
        raise UsageError("--k-range must be strictly positive")
    opts = SolverOptions(
        unitarity_threshold=args.unitarity_threshold,
        experimental=args.experimental_L,
        domain_halfwidth=args.domain_halfwidth,
    )
    scan = transmission_scan(geom, args.L, ks, opts, max_workers=args.workers)
    t = Table("transmission", ["k", "L", "T", "R", "unitarity_defect", "domain_halfwidth", "status"])
    for res in scan.results:
        row = res.as_row()
        t.rows.append([row["k"], row["L"], row["T"], row["R"], row["unitarity_defect"],
                       row["domain_halfwidth"], "ok" if res.converged else "nonconverged"])
    tables = [t]

    peaks = Table("peaks", ["k", "T", "nearest_n", "k_predicted", "offset"])
    peaks.rows = [[p.k, p.T, p.nearest_n, p.k_predicted, p.offset] for p in scan.peaks]
    notes = []
    if args.resonances:
        tables.append(peaks)
        comp = Table("resonances", ["n", "wavelength", "k_predicted", "T_at_prediction",
                                    "validity_ratio", "validity_warning", "nearest_peak_k", "peak_offset"])
        for row in resonance_comparison(geom, args.resonances, scan, opts):
            comp.rows.append([row.n, row.wavelength, row.k_predicted, row.T_at_prediction,
                              row.validity_ratio, row.validity_warning, row.nearest_peak_k,
                              row.peak_offset])
        tables.append(comp)
        notes.append("resonance prediction: wavelength = 4 n b0, k_n = pi/(2 n b0); "
                     "validity_warning marks validity_ratio = 1/(b0 k)^2 > 0.1")
    n_ok = sum(res.converged for res in scan.results)
    notes.append(f"converged: {n_ok}/{len(scan.results)}")
    emit(args, "transmit", tables, notes)
    if scan.results and n_ok < CONVERGED_FRACTION * len(scan.results):
        return EXIT_FAIL
    return EXIT_OK


def cmd_born(args) -> int:
    geom = WormholeGeometry(args.b0)
    tol = args.tol if args.tol is not None else default_tol()
    tables, notes = [], []
    status = EXIT_OK
    if not (args.figure2 or args.dcs or args.eq15_roots or args.cross_section):
        raise UsageError("born needs at least one of --figure2, --cross-section, --dcs, --eq15-roots")

    if args.figure2 or args.cross_section:
        if args.x_range is None:
            raise UsageError("--figure2/--cross-section need --x-range")
        xs = expand_range(args.x_range, args.log, "x-range")
        if np.any(xs <= 0):
            raise UsageError("--x-range must be strictly positive")

    if args.figure2:
        t = Table("figure2", ["x", "sigma_quad", "sigma_quad_err", "sigma_closed", "rel_discrepancy"])
        for row in figure2_data(geom, xs, tol):
            t.rows.append([row.x, row.sigma_quad, row.sigma_quad_err, row.sigma_closed, row.rel_discrepancy])
            if not row.ok:
                status = EXIT_FAIL
        tables.append(t)

    if args.cross_section:
        t = Table("cross_section", ["x", "L", "sigma_quad", "sigma_quad_err", "sigma_closed",
                                    "rel_discrepancy", "sigma_closed_as_printed",
                                    "rel_discrepancy_as_printed"])
        for x in xs:
            ctx = ScatterContext(float(x) / geom.b0, args.L)
            try:
                cs = cross_section(ctx, geom, tol)
            except NumericalError as exc:
                notes.append(f"x={_fmt(x)}: {exc}")
                status = EXIT_FAIL
                continue
            printed = sigma_closed(ctx, geom, as_printed=True)
            t.rows.append([float(x), args.L, cs.sigma_quad, cs.sigma_quad_err, cs.sigma_closed,
                           cs.discrepancy, printed, abs(printed - cs.sigma_quad) / cs.sigma_quad])
        tables.append(t)

    if args.dcs:
        k = args.k if args.k is not None else 0.0
        ctx = ScatterContext(k, args.L)
        t = Table("dcs", ["theta", "amplitude", "dcs"])
        for theta in np.linspace(0.0, math.pi, args.theta_count):
            a = born_amplitude(float(theta), ctx, geom)
            t.rows.append([float(theta), a, a * a])
        if k == 0:
            notes.append(f"zero-energy dcs: {_fmt(dcs_zero_energy(args.L, geom))}")
        tables.append(t)

    if args.eq15_roots:
        lo, hi, n = EQ15_SCAN
        roots = eq15_roots(geom, lo, hi, n)
        t = Table("eq15_roots", ["root"])
        t.rows = [[r] for r in roots]
        tables.append(t)
        if roots:
            notes.append(f"{len(roots)} root(s) found on (0, {hi:g}]")
        else:
            notes.append(f"no roots found on (0, {hi:g}]")
        print(notes[-1], file=sys.stderr)

    emit(args, "born", tables, notes)
    return status


def cmd_heun(args) -> int:
    geom = WormholeGeometry(args.b0)
    kb0 = args.kb0 if args.kb0 else [0.0, 0.5, 1.0, 2.0]
    Ls = args.L if args.L else [0, 1, 2]
    rows = residual_report(geom, kb0, Ls, eta_shift=args.perturb_eta)
    t = Table("heun_residuals", ["k", "L", "branch", "max_residual", "truncation_order"])
    t.rows = [[r.k, r.L, r.branch, r.max_residual, r.truncation_order] for r in rows]
    worst = max(rows, key=lambda r: r.max_residual)
    notes = [f"threshold: {_fmt(args.threshold)}",
             f"worst: k={_fmt(worst.k)} L={worst.L} branch={worst.branch} residual={_fmt(worst.max_residual)}"]
    emit(args, "heun", [t], notes)
    if worst.max_residual > args.threshold:
        print(f"residual above threshold: k={worst.k:g} L={worst.L} branch={worst.branch} "
              f"residual={worst.max_residual:.3e}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# -----------------------------------------------------------------------------
# Parser
# -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wormhole-waveguide",
        description="Transmission, Born scattering and exact interior solutions for a static wormhole throat.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--b0", type=positive_float, default=1.0, help="throat radius (default 1)")
        p.add_argument("-o", "--output", default=None, help="output file (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("potential", help="tabulate V(r) and its Fourier transform")
    common(p)
    p.add_argument("--L", type=nonneg_int, default=0)
    p.add_argument("--r-range", type=parse_range)
    p.add_argument("--q-range", type=parse_range)
    p.add_argument("--log", action="store_true", help="log-spaced ranges")
    p.add_argument("--check-ft", action="store_true", help="add the quadrature transform and its relative error")
    p.add_argument("--tol", type=positive_float, default=None)
    p.set_defaults(func=cmd_potential)

    p = sub.add_parser("transmit", help="exact transmission spectrum")
    common(p)
    p.add_argument("--L", type=nonneg_int, default=0)
    p.add_argument("--k-range", type=parse_range, help="default 0.1/b0:10/b0:200")
    p.add_argument("--log", action="store_true")
    p.add_argument("--resonances", type=positive_int, default=None, metavar="N_MAX",
                   help="append predicted resonances n = 1..N_MAX and the nearest scan peaks")
    p.add_argument("--experimental-L", action="store_true", help="allow L >= 1 (not validated)")
    p.add_argument("--unitarity-threshold", type=positive_float, default=1e-8)
    p.add_argument("--domain-halfwidth", type=positive_float, default=None)
    p.add_argument("--workers", type=positive_int, default=None)
    p.set_defaults(func=cmd_transmit)

    p = sub.add_parser("born", help="first Born amplitudes and cross-sections")
    common(p)
    p.add_argument("--L", type=nonneg_int, default=0)
    p.add_argument("--k", type=nonneg_float, default=None)
    p.add_argument("--x-range", type=parse_range, help="x = b0 k grid")
    p.add_argument("--log", action="store_true")
    p.add_argument("--figure2", action="store_true", help="L = 0 total cross-section table")
    p.add_argument("--cross-section", action="store_true",
                   help="closed form (corrected and as printed) vs quadrature for --L")
    p.add_argument("--dcs", action="store_true", help="A(theta) and |A|^2 at fixed --k")
    p.add_argument("--theta-count", type=positive_int, default=181)
    p.add_argument("--eq15-roots", action="store_true", help="search sigma(x) = 0 on (0, 50]")
    p.add_argument("--tol", type=positive_float, default=None)
    p.set_defaults(func=cmd_born)

    p = sub.add_parser("heun", help="residual check of the exact interior solution")
    common(p)
    p.add_argument("--kb0", type=nonneg_float, action="append", help="k b0 value (repeatable)")
    p.add_argument("--L", type=nonneg_int, action="append", help="L value (repeatable)")
    p.add_argument("--perturb-eta", type=float, default=0.0)
    p.add_argument("--threshold", type=positive_float, default=1e-8)
    p.set_defaults(func=cmd_heun)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, DomainError) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonConvergenceError, NumericalError) as exc:
        print(f"{parser.prog} {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
