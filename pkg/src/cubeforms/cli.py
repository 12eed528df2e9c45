"""Command-line pipeline: compute, certify, audit, verify.

Exit codes are uniform across subcommands:

    0   success
    1   precondition or parse failure (bad JSON, form not closed, ...)
    2   verification failure (certificate or threshold check did not hold)

Every command takes explicit flags (no config files) and can echo a
self-contained run report with ``--report``; reports embed the parameters
and input digests needed to reproduce the run.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from fractions import Fraction

from . import __version__
from .forms import Cube, FormsError, PolyForm
from .gridforms import StagnationError, default_schedule, iterative_primitive
from .poincare import NotClosedError, bounded_primitive, closed_approx, verify_certificate
from .simplices import flatness_check
from .supnorm import sup_norm
from . import serialize as ser

EXIT_OK = 0
EXIT_PRECONDITION = 1
EXIT_VERIFICATION = 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_PRECONDITION):
        super().__init__(message)
        self.code = code


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise CliError(f"no such file: {path}")
    except json.JSONDecodeError as exc:
        raise CliError(f"malformed JSON in {path} at line {exc.lineno} col {exc.colno}: {exc.msg}")


def _load_polyform(path: str) -> PolyForm:
    try:
        return ser.polyform_from_json(_load_json(path))
    except ser.ParseError as exc:
        raise CliError(f"{path}: {exc}")


def _load_gridform(path: str):
    try:
        return ser.gridform_from_json(_load_json(path))
    except ser.ParseError as exc:
        raise CliError(f"{path}: {exc}")


def _parse_cube(spec: str | None, n: int) -> Cube:
    """Parse '--cube lo:hi,lo:hi,...' (rationals); default is the unit box."""
    if spec is None:
        return Cube.unit(n)
    try:
        lo, hi = [], []
        for part in spec.split(","):
            a, b = part.split(":")
            lo.append(Fraction(a))
            hi.append(Fraction(b))
        cube = Cube(tuple(lo), tuple(hi))
    except (ValueError, ZeroDivisionError, FormsError) as exc:
        raise CliError(f"bad --cube {spec!r}: {exc}")
    if cube.n != n:
        raise CliError(f"--cube has {cube.n} axes but the form lives on R^{n}")
    return cube


class _Run:
    """Collects report data for --report."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.args = args
        self.started = time.time()
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}
        self.facts: dict = {}

    def input(self, path: str):
        self.inputs[path] = _digest(path)

    def output(self, path: str):
        self.outputs[path] = _digest(path)

    def write(self):
        report_path = getattr(self.args, "report", None)
        if not report_path:
            return
        ser.write_json(report_path, {
            "kind": "run_report",
            "command": self.command,
            "argv": sys.argv[1:],
            "version": __version__,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "facts": self.facts,
            "elapsed_s": time.time() - self.started,
        })


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_d(args) -> int:
    run = _Run("d", args)
    w = _load_polyform(args.input)
    run.input(args.input)
    ser.write_json(args.output, ser.polyform_to_json(w.d()))
    run.output(args.output)
    run.write()
    return EXIT_OK


def cmd_primitive(args) -> int:
    run = _Run("primitive", args)
    w = _load_polyform(args.input)
    run.input(args.input)
    cube = _parse_cube(args.cube, w.n)
    try:
        theta, cert = bounded_primitive(w, cube)
    except NotClosedError as exc:
        raise CliError(f"input is not closed: {exc}")
    except FormsError as exc:
        raise CliError(str(exc))
    ser.write_json(args.output, ser.polyform_to_json(theta))
    run.output(args.output)
    if args.cert:
        ser.write_json(args.cert, ser.certificate_to_json(cert))
        run.output(args.cert)
    ok, report = verify_certificate(cert)
    run.facts["certificate_verified"] = ok
    run.write()
    print(report)
    return EXIT_OK if ok else EXIT_VERIFICATION


def cmd_closed_approx(args) -> int:
    run = _Run("closed-approx", args)
    w = _load_polyform(args.input)
    run.input(args.input)
    cube = _parse_cube(args.cube, w.n)
    tau_candidates = None
    if args.tau_scan:
        n = w.n
        width = cube.width(n)
        tau_candidates = [cube.lo[n - 1] + width * Fraction(j, args.tau_scan + 1)
                          for j in range(1, args.tau_scan + 1)]
    wprime, cert, trace = closed_approx(w, cube, tau_candidates=tau_candidates)
    ser.write_json(args.output, ser.polyform_to_json(wprime))
    run.output(args.output)
    if args.cert:
        ser.write_json(args.cert, ser.certificate_to_json(cert))
        run.output(args.cert)
    if args.trace:
        ser.write_json(args.trace, ser.trace_to_json(trace))
        run.output(args.trace)
    ok, report = verify_certificate(cert)
    run.facts["certificate_verified"] = ok
    run.write()
    print(report)
    return EXIT_OK if ok else EXIT_VERIFICATION


def cmd_supnorm(args) -> int:
    run = _Run("supnorm", args)
    w = _load_polyform(args.input)
    run.input(args.input)
    cube = _parse_cube(args.cube, w.n)
    bound = sup_norm(w, cube, grid_per_axis=args.grid, subdivisions=args.subdivisions)
    payload = ser.normbound_to_json(bound)
    if args.output:
        ser.write_json(args.output, payload)
        run.output(args.output)
    else:
        print(json.dumps(payload, indent=2))
    run.write()
    return EXIT_OK


def cmd_flat_check(args) -> int:
    run = _Run("flat-check", args)
    w = _load_gridform(args.input)
    run.input(args.input)
    try:
        a, b = (float(s) for s in args.scales.split(","))
    except ValueError:
        raise CliError(f"bad --scales {args.scales!r}; expected 'a,b'")
    report = flatness_check(w, args.simplices, args.seed, (a, b), nprime=args.nprime)
    ser.write_json(args.output, ser.flatness_report_to_json(report))
    run.output(args.output)
    run.facts["max_ratio"] = report.max_ratio
    run.write()
    print(f"max ratio {report.max_ratio:.6g} over {len(report.samples)} simplices; "
          f"coefficient bound {report.coefficient_bound:.6g}")
    if args.nprime is not None and report.max_ratio > args.nprime:
        print(f"flatness threshold exceeded: {report.max_ratio:.6g} > {args.nprime:.6g}")
        for d in report.scale_deciles:
            print(f"  scale [{d['scale_lo']:.4g}, {d['scale_hi']:.4g}]  "
                  f"count {d['count']:4d}  median {d['median']:.4g}  max {d['max']:.4g}")
        return EXIT_VERIFICATION
    return EXIT_OK


def cmd_mollify_solve(args) -> int:
    run = _Run("mollify-solve", args)
    w = _load_gridform(args.input)
    run.input(args.input)
    stages = args.stages
    if args.radii:
        radii = [float(r) for r in args.radii.split(",")]
        if len(radii) < stages:
            raise CliError(f"--radii lists {len(radii)} values for {stages} stages")
    else:
        radii, _ = default_schedule(stages)
    if args.degrees:
        degrees = [int(d) for d in args.degrees.split(",")]
        if len(degrees) < stages:
            raise CliError(f"--degrees lists {len(degrees)} values for {stages} stages")
    else:
        _, degrees = default_schedule(stages)
    try:
        theta, history = iterative_primitive(w, stages, radii, degrees,
                                             closedness_tol=args.closedness_tol)
    except StagnationError as exc:
        ser.write_json(args.history, ser.history_to_json(exc.history))
        print(f"stagnation: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    except FormsError as exc:
        raise CliError(str(exc))
    ser.write_json(args.output, ser.gridform_to_json(theta))
    run.output(args.output)
    ser.write_json(args.history, ser.history_to_json(history))
    run.output(args.history)
    run.write()
    for s in history.stages:
        print(f"stage {s.stage}: radius {s.radius:.5g}  degree {s.fit_degree}  "
              f"residual {s.residual:.5g} (full {s.residual_full:.5g})")
    return EXIT_OK


def cmd_verify(args) -> int:
    obj = _load_json(args.input)
    kind = obj.get("kind") if isinstance(obj, dict) else None
    if kind == "certificate":
        cert = ser.certificate_from_json(obj)
        ok, report = verify_certificate(cert)
        print(report)
        return EXIT_OK if ok else EXIT_VERIFICATION
    if kind == "recursion_trace":
        trace = ser.trace_from_json(obj)
        ok = True
        for lv in trace.levels:
            composed_ok = lv.defect_upper == lv.fiber_term_upper + lv.sub_defect_upper
            ledger_ok = lv.defect_upper <= lv.constant * lv.d_input_upper
            print(f"level n={lv.n} k={lv.k}: defect {lv.defect_upper} "
                  f"= fiber {lv.fiber_term_upper} + sub {lv.sub_defect_upper} "
                  f"[{'OK' if composed_ok else 'BROKEN'}]; "
                  f"<= C*|dw| = {lv.constant * lv.d_input_upper} "
                  f"[{'OK' if ledger_ok else 'VIOLATED'}]")
            ok = ok and composed_ok and ledger_ok
        return EXIT_OK if ok else EXIT_VERIFICATION
    if kind == "flatness_report":
        rep = ser.flatness_report_from_json(obj)
        recomputed = max((s.ratio for s in rep.samples), default=0.0)
        ok = abs(recomputed - rep.max_ratio) <= 1e-12 * max(1.0, abs(recomputed))
        for s in rep.samples:
            if s.volume > 0 and abs(s.ratio - abs(s.boundary_integral) / s.volume) \
                    > 1e-9 * max(1.0, s.ratio):
                ok = False
        if rep.nprime is not None:
            ok = ok and (rep.verdict == (rep.max_ratio <= rep.nprime))
        print(f"flatness report: max ratio {rep.max_ratio:.6g}, "
              f"{len(rep.samples)} samples, internally {'consistent' if ok else 'INCONSISTENT'}")
        return EXIT_OK if ok else EXIT_VERIFICATION
    if kind == "residual_history":
        hist = ser.history_from_json(obj)
        residuals = hist.residuals()
        ok = all(b <= a for a, b in zip(residuals, residuals[1:]))
        print(f"residual history: {len(residuals)} stages, "
              f"{'non-increasing' if ok else 'NOT monotone'}: "
              + " -> ".join(f"{r:.4g}" for r in residuals))
        return EXIT_OK if ok else EXIT_VERIFICATION
    raise CliError(f"cannot verify: unknown kind {kind!r}")


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cubeforms",
        description="Exact exterior calculus on boxes with certified sup-norm "
                    "inequalities, plus a numerical flat-form pipeline.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("d", help="exterior derivative of a polynomial form")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--report")
    p.set_defaults(func=cmd_d)

    p = sub.add_parser("primitive", help="bounded primitive of a closed form")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--cert", help="write the norm certificate here")
    p.add_argument("--cube", help="box as 'lo:hi,lo:hi,...' (default unit)")
    p.add_argument("--report")
    p.set_defaults(func=cmd_primitive)

    p = sub.add_parser("closed-approx", help="closed approximation with defect certificate")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--cert")
    p.add_argument("--trace", help="write the recursion trace here")
    p.add_argument("--tau-scan", type=int, default=0, metavar="N",
                   help="scan N interior anchor candidates at the top level")
    p.add_argument("--cube")
    p.add_argument("--report")
    p.set_defaults(func=cmd_closed_approx)

    p = sub.add_parser("supnorm", help="two-sided sup seminorm bound")
    p.add_argument("input")
    p.add_argument("--out", dest="output")
    p.add_argument("--grid", type=int, default=3, help="sample grid points per axis")
    p.add_argument("--subdivisions", type=int, default=0)
    p.add_argument("--cube")
    p.add_argument("--report")
    p.set_defaults(func=cmd_supnorm)

    p = sub.add_parser("flat-check", help="Whitney flatness audit of a grid form")
    p.add_argument("input")
    p.add_argument("--simplices", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--scales", required=True, help="'min,max' simplex scales")
    p.add_argument("--nprime", type=float, help="flatness constant to test against")
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_flat_check)

    p = sub.add_parser("mollify-solve", help="iterative primitive of a grid form")
    p.add_argument("input")
    p.add_argument("--stages", type=int, required=True)
    p.add_argument("--radii", help="comma-separated mollifier radii")
    p.add_argument("--degrees", help="comma-separated fit degrees")
    p.add_argument("--closedness-tol", type=float, default=1e-6)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--history", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_mollify_solve)

    p = sub.add_parser("verify", help="re-check a certificate or report file")
    p.add_argument("input")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except NotClosedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except FormsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
