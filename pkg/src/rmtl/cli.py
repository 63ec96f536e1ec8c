"""Command-line driver: ``rmtl simulate|truth-table|verify|report``.

Exit status is 0 on success, 1 when a circuit disagrees with its oracle
(or yields a contradictory truth table) and 2 on unreadable, malformed or
structurally invalid input.
"""
from __future__ import annotations

import argparse
import sys

from .circuit import PulseSource
from .dsl import NetlistDocument, NetlistError, load, parse_value
from .engine import Mode, SimConfig, StepTooLarge, UnvalidatedNetlist, WritePhaseTooShort, simulate
from .report import (ContradictoryRows, MissingCoefficient, cost_report, export_csv,
                     extract_truth_table, load_coefficients, write_csv)
from .verify import ORACLES, Oracle, verify

EXIT_OK, EXIT_MISMATCH, EXIT_INPUT = 0, 1, 2


def _time(text: str) -> float:
    try:
        value = parse_value(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive time, got {text}")
    return value


def _names(text: str) -> list[str]:
    return [n.strip() for n in text.split(",") if n.strip()]


def default_t_end(doc: NetlistDocument) -> float:
    """Two periods of the slowest pulse source, else one frame, else 1 us."""
    periods = [el.period + el.delay for el in doc.elements if isinstance(el, PulseSource)]
    if periods:
        return 2 * max(periods)
    if doc.schedule is not None:
        return doc.schedule.frame_period
    return 1e-6


def _config(args, doc: NetlistDocument) -> SimConfig:
    return SimConfig(t_end=args.t_end or default_t_end(doc), dt_read=args.dt_read,
                     dt_write=args.dt_write, mode=Mode(args.mode))


def cmd_simulate(args, out) -> int:
    doc = load(args.file)
    traces = simulate(doc.to_netlist(), _config(args, doc), probes=doc.probes or None)
    if args.out:
        export_csv(traces, args.out)
        print(f"wrote {len(traces.times)} samples x {len(traces)} signals to {args.out}", file=out)
    else:
        write_csv(traces, out)
    return EXIT_OK


def cmd_truth_table(args, out) -> int:
    doc = load(args.file)
    inputs = _names(args.inputs)
    probes = list(dict.fromkeys([*inputs, args.output]))
    traces = simulate(doc.to_netlist(), _config(args, doc), probes=probes)
    table = extract_truth_table(traces, inputs, args.output)
    out.write((table.to_csv() if args.csv else table.format() + "\n"))
    return EXIT_OK


def cmd_verify(args, out) -> int:
    doc = load(args.file)
    oracle = ORACLES[args.oracle]
    if args.inputs or args.outputs:
        oracle = Oracle(tuple(_names(args.inputs)) if args.inputs else oracle.inputs,
                        tuple(_names(args.outputs)) if args.outputs else oracle.outputs,
                        oracle.fn)
    result = verify(doc.to_netlist(), oracle, Mode(args.mode))
    for bits, want, got in result.mismatches[:10]:
        print(f"mismatch: inputs {''.join(map(str, bits))} expected {want} got {got}", file=out)
    print(result.summary(), file=out)
    return EXIT_OK if result.ok else EXIT_MISMATCH


def cmd_report(args, out) -> int:
    doc = load(args.file)
    coeffs = load_coefficients(args.coefficients)
    families = tuple(_names(args.families))
    if len(families) != 2:
        raise ValueError("--families takes exactly two names, e.g. rmtl,cmos")
    print(cost_report(doc.to_netlist(), coeffs, families).format(), file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rmtl", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def sim_opts(sp, mode="physical"):
        sp.add_argument("file")
        sp.add_argument("--t-end", type=_time, default=None)
        sp.add_argument("--dt-read", type=_time, default=10e-9)
        sp.add_argument("--dt-write", type=_time, default=None)
        sp.add_argument("--mode", choices=[m.value for m in Mode], default=mode)

    sp = sub.add_parser("simulate", help="run a transient simulation and emit CSV")
    sim_opts(sp)
    sp.add_argument("--out", help="CSV path (default: stdout)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("truth-table", help="extract a truth table from a simulation")
    sim_opts(sp)
    sp.add_argument("--inputs", required=True, help="comma-separated input signals")
    sp.add_argument("--output", required=True)
    sp.add_argument("--csv", action="store_true", help="print CSV instead of a text table")
    sp.set_defaults(func=cmd_truth_table)

    sp = sub.add_parser("verify", help="check every input vector against an oracle")
    sp.add_argument("file")
    sp.add_argument("--oracle", required=True, choices=sorted(ORACLES))
    sp.add_argument("--mode", choices=[m.value for m in Mode], default="physical")
    sp.add_argument("--inputs", help="override the oracle's input node names")
    sp.add_argument("--outputs", help="override the oracle's output node names")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("report", help="gate-count cost comparison")
    sp.add_argument("file")
    sp.add_argument("--coefficients", help="coefficient file (default: bundled values)")
    sp.add_argument("--families", default="rmtl,cmos")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except FileNotFoundError as exc:
        print(f"rmtl: error: file not found: {exc.filename}", file=err)
    except NetlistError as exc:
        print(f"{args.file}:{exc.line}:{exc.col}: {exc.kind}: {exc.message}", file=err)
    except (UnvalidatedNetlist, WritePhaseTooShort, StepTooLarge, MissingCoefficient,
            KeyError, ValueError) as exc:
        if isinstance(exc, ContradictoryRows):
            print(f"rmtl: contradictory truth table: {exc}", file=err)
            return EXIT_MISMATCH
        print(f"rmtl: error: {exc}", file=err)
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
