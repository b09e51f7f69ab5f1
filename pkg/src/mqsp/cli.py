"""Command-line front end.

Every subcommand reads JSON (a path, or ``-`` for stdin), writes JSON or CSV
to stdout unless ``-o`` is given, and exits with

    0  success / all checks pass
    1  a check failed, no decomposition exists, or the search found nothing
    2  usage error or malformed input
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from fractions import Fraction

import numpy as np

from .conditions import InvalidRange, Variant, check_conditions, forced_zero_trace
from .counterexample import (
    InvalidSpec,
    NotFound,
    SearchSpec,
    analyze_lift,
    lift,
    search_nonrealizable,
)
from .decompose import NotDecomposable, PrecondViolated, decompose
from .laurent import EXACT, FLOAT, BackendMismatch, FormatError
from .protocol import PolyPair, Protocol, UnitPhase, build

log = logging.getLogger(__name__)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def sample_grid(pair: PolyPair, resolution: int) -> list[tuple[float, float, float, float, float]]:
    """``(theta_a, theta_b, |P|^2, |Q|^2, sum)`` on the ``resolution x resolution`` torus grid."""
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    theta = 2 * np.pi * np.arange(resolution) / resolution
    p2 = np.abs(pair.p.evaluate_grid(theta, theta)) ** 2
    q2 = np.abs(pair.q.evaluate_grid(theta, theta)) ** 2
    total = p2 + q2
    return [
        (float(theta[r]), float(theta[c]), float(p2[r, c]), float(q2[r, c]), float(total[r, c]))
        for r in range(resolution)
        for c in range(resolution)
    ]


# -- I/O --------------------------------------------------------------------


def _load_json(path: str):
    try:
        if path == "-":
            text = sys.stdin.read()
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError("$", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _load_pair(path: str, mode: str | None) -> PolyPair:
    pair = PolyPair.from_json(_load_json(path))
    if mode == FLOAT:
        return pair.to_float()
    if mode == EXACT and pair.backend != EXACT:
        raise UsageError("--mode exact requested but the pair has float coefficients")
    return pair


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(text)


def _emit_json(obj, out: str | None) -> None:
    _emit(json.dumps(obj, indent=2) + "\n", out)


def _phase_from_args(args, default: UnitPhase | None = None) -> UnitPhase:
    if args.phase_angle is not None:
        if args.phase_re is not None or args.phase_im is not None:
            raise UsageError("give either --phase-angle or --phase-re/--phase-im, not both")
        return UnitPhase.from_angle(args.phase_angle)
    if args.phase_re is None and args.phase_im is None:
        if default is None:
            raise UsageError("a lift phase is required")
        return default
    try:
        re = Fraction(args.phase_re or "0")
        im = Fraction(args.phase_im or "0")
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad phase component: {exc}") from exc
    if re * re + im * im != 1:
        raise UsageError(f"phase {re} + {im}i is not on the unit circle")
    return UnitPhase.exact(re, im)


# -- subcommands --------------------------------------------------------------


def cmd_build(args) -> int:
    prot = Protocol.from_json(_load_json(args.protocol))
    if args.mode == EXACT and prot.backend != EXACT:
        raise UsageError("--mode exact requested but the protocol has float phases")
    pair = build(prot, args.mode)
    _emit_json(pair.to_json(), args.output)
    return EXIT_OK


def cmd_check(args) -> int:
    pair = _load_pair(args.pair, args.mode)
    report = check_conditions(pair, Variant(args.variant), args.tolerance)
    _emit_json(report.to_json(), args.output)
    return EXIT_OK if report.overall else EXIT_FAIL


def cmd_decompose(args) -> int:
    pair = _load_pair(args.pair, args.mode)
    try:
        result = decompose(pair, args.tolerance, explore_shifted_root=args.explore_shifted_root)
    except PrecondViolated as exc:
        _emit_json({"error": "PrecondViolated", "report": exc.report.to_json()}, args.output)
        return EXIT_FAIL
    except NotDecomposable as exc:
        _emit_json({"error": "NotDecomposable", "trace": [e.to_json() for e in exc.trace]}, args.output)
        return EXIT_FAIL
    if args.trace:
        _emit_json(result.to_json(), args.output)
    else:
        _emit_json(result.protocol.to_json(), args.output)
    return EXIT_OK


def cmd_demo_contradiction(args) -> int:
    try:
        trace = forced_zero_trace(args.n, args.m, Variant(args.variant))
    except InvalidRange as exc:
        raise UsageError(str(exc)) from exc
    _emit_json(trace.to_json(), args.output)
    return EXIT_OK if trace.complete else EXIT_FAIL


def _spec_from_args(args) -> SearchSpec:
    try:
        return SearchSpec(
            n=args.n,
            m=args.m,
            seed=args.seed,
            budget=args.budget,
            residual_tol=args.residual_tol,
            violation_margin=args.violation_margin,
        )
    except InvalidSpec as exc:
        raise UsageError(str(exc)) from exc


def cmd_find_counterexample(args) -> int:
    spec = _spec_from_args(args)
    try:
        pair = search_nonrealizable(spec)
    except NotFound as exc:
        print(f"mqsp: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _emit_json(pair.to_json(), args.output)
    return EXIT_OK


def cmd_lift(args) -> int:
    base = _load_pair(args.pair, args.mode)
    phase = _phase_from_args(args)
    if phase.backend == FLOAT and base.backend == EXACT:
        if args.mode == EXACT:
            raise UsageError("--mode exact requested but the lift phase is a float angle")
        base = base.to_float()
    _emit_json(lift(base, phase).to_json(), args.output)
    return EXIT_OK


def cmd_insufficiency(args) -> int:
    phase = _phase_from_args(args, UnitPhase.exact(Fraction(3, 5), Fraction(4, 5)))
    spec = _spec_from_args(args)
    try:
        base = search_nonrealizable(spec)
    except NotFound as exc:
        print(f"mqsp: {exc}", file=sys.stderr)
        return EXIT_FAIL
    report = analyze_lift(base, phase)
    out = report.to_json()
    out["search"] = {"n": spec.n, "m": spec.m, "seed": spec.seed, "budget": spec.budget}
    _emit_json(out, args.output)
    return EXIT_OK if report.is_counterexample else EXIT_FAIL


def cmd_sample(args) -> int:
    if args.resolution < 2:
        raise UsageError("--resolution must be at least 2")
    pair = _load_pair(args.pair, None)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["theta_a", "theta_b", "abs_P2", "abs_Q2", "sum"])
    # csv formats floats with repr, i.e. the shortest string that round-trips
    writer.writerows(sample_grid(pair, args.resolution))
    _emit(buf.getvalue(), args.output)
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def _add_output(p):
    p.add_argument("-o", "--output", help="write here instead of stdout")


def _add_mode(p, choices=(EXACT, FLOAT)):
    p.add_argument("--mode", choices=choices, default=None, help="coefficient backend (default: keep input's)")


def _add_phase(p):
    p.add_argument("--phase-re", help="real part of an exact unit phase, e.g. 3/5")
    p.add_argument("--phase-im", help="imaginary part of an exact unit phase, e.g. 4/5")
    p.add_argument("--phase-angle", type=float, help="phase angle in radians (float mode)")


def _add_search(p):
    p.add_argument("-n", type=int, default=4, help="total degree (default 4)")
    p.add_argument("-m", type=int, default=2, help="degree in a (default 2)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--budget", type=int, default=50, help="number of restarts (default 50)")
    p.add_argument("--residual-tol", type=float, default=1e-10)
    p.add_argument("--violation-margin", type=float, default=1e-3)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mqsp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("build", help="multiply out a protocol into a polynomial pair")
    p.add_argument("-p", "--protocol", required=True, help="protocol JSON")
    _add_mode(p)
    _add_output(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("check", help="evaluate the necessary conditions on a pair")
    p.add_argument("pair")
    p.add_argument("--variant", choices=[v.value for v in Variant], default=Variant.REVISED.value)
    p.add_argument("--tolerance", type=float, help="absolute tolerance for float pairs")
    _add_mode(p)
    _add_output(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("decompose", help="recover a protocol from a pair")
    p.add_argument("pair")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--explore-shifted-root", action="store_true", help="also branch on phi + pi")
    p.add_argument("--trace", action="store_true", help="emit the search trace alongside the protocol")
    _add_mode(p)
    _add_output(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("demo-contradiction", help="forced-zero deduction under the original conditions")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-m", type=int, required=True)
    p.add_argument("--variant", choices=[v.value for v in Variant], default=Variant.ORIGINAL.value)
    _add_output(p)
    p.set_defaults(func=cmd_demo_contradiction)

    p = sub.add_parser("find-counterexample", help="search a pair passing (i)-(iv) but failing (v')")
    _add_search(p)
    _add_output(p)
    p.set_defaults(func=cmd_find_counterexample)

    p = sub.add_parser("lift", help="append an A signal with the given phase")
    p.add_argument("pair")
    _add_phase(p)
    _add_mode(p)
    _add_output(p)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("insufficiency", help="search, lift and try to decompose")
    _add_search(p)
    _add_phase(p)
    _add_output(p)
    p.set_defaults(func=cmd_insufficiency)

    p = sub.add_parser("sample", help="|P|^2 + |Q|^2 on a torus grid, as CSV")
    p.add_argument("pair")
    p.add_argument("--resolution", type=int, default=64)
    _add_output(p)
    p.set_defaults(func=cmd_sample)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"mqsp: malformed input: {exc}", file=sys.stderr)
    except (UsageError, BackendMismatch) as exc:
        print(f"mqsp: {exc}", file=sys.stderr)
    return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
