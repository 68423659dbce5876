"""Command-line front end: ``servicebond audit|grade|simulate|molecule``.

Exit codes: 0 on success, 2 on usage or parse errors, 3 when inputs parse
but do not fit together (mismatched metrics, intervals outside the trace).
"""
from __future__ import annotations

import argparse
import json
import sys

from . import io as sbio
from .bond_fabric import bond_grade, communities
from .distances import PBd, PId, RBd, RXd, RXdSpatial, distance
from .errors import ParseError, ServiceBondError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INCOMPATIBLE = 3

KINDS = ("rbd", "pbd", "pid", "rxd", "rxd-spatial")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


class _UsageError(Exception):
    pass


def _duration(text):
    try:
        return sbio.parse_duration(text)
    except ParseError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _region(text):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad region {text!r}") from None
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("region needs x0,y0,x1,y1")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="servicebond", description="Service-bond audits, grading and simulation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("audit", help="distance of a delivered trace or signal from an SLO")
    a.add_argument("--slo", required=True, help="e.g. ds=25mbps,us=3mbps; use <= for lower-is-better")
    a.add_argument("--input", required=True, help="trace CSV, signal JSON or bundled fixture name")
    a.add_argument("--kind", required=True, choices=KINDS)
    a.add_argument("--period", type=_duration, default=900.0, help="sampling period (default 15m)")
    a.add_argument("--phase", type=_duration, default=0.0, help="grid offset (default 0)")
    a.add_argument("--interest", action="append", default=[],
                   help="daily clock interval such as 19:00-22:00; repeatable")
    a.add_argument("--region", type=_region, action="append", default=[],
                   help="x0,y0,x1,y1 rectangle for rxd-spatial; repeatable")

    g = sub.add_parser("grade", help="bonded share of a schedule file")
    g.add_argument("schedule")

    s = sub.add_parser("simulate", help="run a scenario and write metrics.csv and summary.json")
    s.add_argument("scenario", help="scenario JSON or bundled name such as smarthouse.default")
    s.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    s.add_argument("--out", default="out", help="output directory (default ./out)")

    m = sub.add_parser("molecule", help="communities of a bond-list file")
    m.add_argument("bonds")
    return p


def _kind(args, signal):
    if args.kind in ("rbd", "pbd", "pid"):
        cls = {"rbd": RBd, "pbd": PBd, "pid": PId}[args.kind]
        return cls(args.period, args.phase)
    if not args.interest:
        raise _UsageError(f"--kind {args.kind} needs at least one --interest interval")
    clock = [sbio.parse_clock_interval(i) for i in args.interest]
    interest = sbio.daily_intervals(clock, signal.start, signal.end)
    if args.kind == "rxd":
        return RXd(interest, args.period)
    if not args.region:
        raise _UsageError("--kind rxd-spatial needs at least one --region")
    return RXdSpatial(interest, args.period, tuple(args.region))


def format_report(d) -> str:
    """Compact JSON with every fraction rounded to 12 significant digits."""
    return json.dumps({k: float(f"{v:.12g}") for k, v in d.as_dict().items()}, separators=(",", ":"))


def cmd_audit(args) -> int:
    slo = sbio.parse_slo(args.slo)
    signal = sbio.read_signal(sbio.resolve_input(args.input))
    signal = sbio.reorder_signal(signal, slo.names)
    print(format_report(distance(signal, slo, _kind(args, signal))))
    return EXIT_OK


def cmd_grade(args) -> int:
    schedule = sbio.parse_schedule(sbio.resolve_input(args.schedule))
    print(f"{bond_grade(schedule):.6f}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        raise _UsageError("--seed must be an unsigned 64-bit integer")
    report = sbio.run_config(sbio.load_config(args.scenario), args.seed)
    report.write(args.out)
    print(report.digest)
    return EXIT_OK


def cmd_molecule(args) -> int:
    molecule = sbio.parse_bond_list(sbio.resolve_input(args.bonds))
    comps = [sorted(c) for c in communities(molecule)]
    print(json.dumps(comps, separators=(",", ":")))
    return EXIT_OK


COMMANDS = {"audit": cmd_audit, "grade": cmd_grade, "simulate": cmd_simulate, "molecule": cmd_molecule}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"servicebond: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ServiceBondError as exc:
        print(f"servicebond: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE


if __name__ == "__main__":
    sys.exit(main())
