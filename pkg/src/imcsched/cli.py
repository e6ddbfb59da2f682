"""Command-line front end: schedule, verify, compare, oracle, gen."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .energy import EnergyParams, load_energy_table
from .memory import CapacityError, ISFormatError, MemLayout, dump_json, dump_text, load_is
from .report import SCHEDULERS, compare, format_table, run_scheduler, to_csv
from .validate import equivalence_check, make_vectors, validate_is
from .xmg import NetlistError, random_netlist, read_netlist, write_netlist

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_CAPACITY = 2
EXIT_USAGE = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _int_list(text):
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("need at least one positive integer")
    return values


def _layout_args(p):
    p.add_argument("--netlist", required=True, help="netlist file (.inputs/.node/.outputs format)")
    p.add_argument("--rows", type=_positive, required=True, help="rows per array")
    p.add_argument("--arrays", type=_positive, required=True, help="number of arrays")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="imcsched", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("schedule", help="compile a netlist into an instruction sequence")
    _layout_args(p)
    p.add_argument("--restarts", type=_positive, default=500,
                   help="randomised runs, also the improvement pass budget (default: 500)")
    p.add_argument("--seed", type=int, default=0, help="master seed (default: 0)")
    p.add_argument("--improve", action=argparse.BooleanOptionalAction, default=True,
                   help="run the order-perturbation improvement loop (default: on)")
    p.add_argument("--scheduler", choices=SCHEDULERS, default="masim")
    p.add_argument("--out", required=True,
                   help="instruction sequence output; .json gives the structured form, '-' is stdout")
    p.add_argument("--stats", help="write a JSON summary here")
    p.add_argument("--threads", type=_positive, default=1, help="worker processes (output does not depend on it)")
    p.add_argument("--no-timing", action="store_true",
                   help="write runtime_ms as null so stats files are byte-reproducible")

    p = sub.add_parser("verify", help="check an instruction sequence against its netlist")
    _layout_args(p)
    p.add_argument("--is", dest="is_path", required=True, help="instruction sequence (text or JSON)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--vectors", type=_positive, help="number of random input vectors")
    g.add_argument("--exhaustive", action="store_true", help="all 2^PIs input vectors")
    p.add_argument("--seed", type=int, default=0, help="seed for random vectors (default: 0)")

    p = sub.add_parser("compare", help="run several schedulers and tabulate copies and energy")
    _layout_args(p)
    p.add_argument("--schedulers", default=",".join(SCHEDULERS), help="comma-separated subset of masim,naive,greedy")
    p.add_argument("--sweep-rows", type=_int_list, help="comma-separated rows-per-array values to sweep")
    p.add_argument("--seeds", type=_int_list, default=[0], help="comma-separated seeds (default: 0)")
    p.add_argument("--restarts", type=_positive, default=500, help="MASIM restarts (default: 500)")
    p.add_argument("--improve", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--vectors", type=_positive, help="random equivalence vectors (default: exhaustive up to 10 PIs)")
    p.add_argument("--energy-table", help="JSON map rows -> {e_compute, e_copy}")
    p.add_argument("--csv", help="also write one CSV row per run here")
    p.add_argument("--no-timing", action="store_true", help="omit the runtime column from the table")
    p.add_argument("--threads", type=_positive, default=1)

    p = sub.add_parser("oracle", help="exact minimum copy count for tiny instances")
    _layout_args(p)
    p.add_argument("--max-states", type=_positive, default=2_000_000)
    p.add_argument("--out", help="write the optimal instruction sequence here instead of stdout")

    p = sub.add_parser("gen", help="write a random netlist")
    p.add_argument("--pis", type=_positive, required=True)
    p.add_argument("--nodes", type=_positive, required=True)
    p.add_argument("--pos", type=_positive, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output path, '-' for stdout")
    return parser


def _emit(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load(args):
    try:
        net = read_netlist(args.netlist)
    except OSError as exc:
        raise UsageError(f"cannot read netlist: {exc}") from None
    except NetlistError as exc:
        raise UsageError(f"{args.netlist}: {exc}") from None
    return net, MemLayout(args.rows, args.arrays)


def _cmd_schedule(args) -> int:
    net, layout = _load(args)
    t0 = time.perf_counter()
    res = run_scheduler(args.scheduler, net, layout, args.seed, args.restarts, args.improve, args.threads)
    elapsed = (time.perf_counter() - t0) * 1000
    fmt = dump_json if args.out.endswith(".json") else dump_text
    _emit(args.out, fmt(net, layout, res.instructions))
    if args.stats:
        stats = {
            "scheduler": args.scheduler,
            "copies": res.copies,
            "computes": res.computes,
            "arrays_used": res.arrays_used,
            "energy": EnergyParams().energy(res.computes, res.copies),
            "seed": args.seed,
            "runtime_ms": None if args.no_timing else round(elapsed, 3),
            "rows_per_array": layout.rows_per_array,
            "num_arrays": layout.num_arrays,
            "netlist_hash": net.digest(),
        }
        _emit(args.stats, json.dumps(stats, indent=1, sort_keys=True) + "\n")
    print(f"{args.scheduler}: {res.copies} copies, {res.computes} computes", file=sys.stderr)
    return EXIT_OK


def _cmd_verify(args) -> int:
    net, layout = _load(args)
    try:
        text = Path(args.is_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read instruction sequence: {exc}") from None
    try:
        head, instrs = load_is(net, text)
    except (ISFormatError, ValueError, KeyError) as exc:
        print(f"malformed instruction sequence: {exc}", file=sys.stderr)
        return EXIT_INVALID
    status = EXIT_OK
    for key, want in (("rows_per_array", layout.rows_per_array), ("num_arrays", layout.num_arrays),
                      ("netlist_hash", net.digest())):
        if key in head and head[key] != want:
            print(f"header mismatch: {key}={head[key]} but expected {want}", file=sys.stderr)
            status = EXIT_INVALID
    report = validate_is(net, instrs, layout)
    for v in report.violations:
        print(v, file=sys.stderr)
    if not report.ok:
        print(f"invalid: {len(report.violations)} violation(s)", file=sys.stderr)
        return EXIT_INVALID
    if args.exhaustive:
        if net.num_pis > 24:
            raise UsageError(f"--exhaustive needs 2^{net.num_pis} vectors; use --vectors")
        vecs = make_vectors(net.num_pis, None, args.seed, exhaustive_limit=net.num_pis)
    elif args.vectors:
        vecs = make_vectors(net.num_pis, args.vectors, args.seed)
    else:
        vecs = make_vectors(net.num_pis, None, args.seed)
    eq = equivalence_check(net, instrs, layout, vecs)
    if not eq.ok:
        print(f"not equivalent on inputs {eq.witness}: expected {eq.expected}, got {eq.got}", file=sys.stderr)
        return EXIT_INVALID
    print(f"ok: {len(instrs)} instructions, {eq.vectors} vectors", file=sys.stderr)
    return status


def _cmd_compare(args) -> int:
    net, layout = _load(args)
    names = [s.strip() for s in args.schedulers.split(",") if s.strip()]
    unknown = [s for s in names if s not in SCHEDULERS]
    if unknown or not names:
        raise UsageError(f"unknown scheduler(s) {unknown}; choose from {', '.join(SCHEDULERS)}")
    table = None
    if args.energy_table:
        try:
            table = load_energy_table(args.energy_table)
        except (OSError, ValueError, TypeError) as exc:
            raise UsageError(f"bad energy table: {exc}") from None
    records = compare(net, layout, names, args.seeds, args.vectors, args.restarts, args.improve,
                      table, Path(args.netlist).stem, args.sweep_rows, args.threads)
    sys.stdout.write(format_table(records, timing=not args.no_timing))
    if args.csv:
        Path(args.csv).write_text(to_csv(records), encoding="utf-8")
    for rec in records:
        if rec.error:
            print(f"{rec.scheduler} r={rec.rows_per_array} seed={rec.seed}: {rec.error}", file=sys.stderr)
    if any(rec.valid is False or rec.equivalent is False for rec in records):
        return EXIT_INVALID
    if records and all(rec.error for rec in records):
        return EXIT_CAPACITY
    return EXIT_OK


def _cmd_oracle(args) -> int:
    from .oracle import Infeasible, ResourceLimit, min_copies

    net, layout = _load(args)
    try:
        res = min_copies(net, layout, max_states=args.max_states)
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except ResourceLimit as exc:
        raise UsageError(f"oracle limit: {exc}") from None
    print(f"# optimum copies: {res.optimum} ({res.states} states expanded)")
    fmt = dump_json if args.out and args.out.endswith(".json") else dump_text
    _emit(args.out or "-", fmt(net, layout, res.witness))
    return EXIT_OK


def _cmd_gen(args) -> int:
    if args.pos > args.nodes:
        raise UsageError("--pos cannot exceed --nodes")
    net = random_netlist(args.pis, args.nodes, args.pos, args.seed)
    _emit(args.out, write_netlist(net))
    return EXIT_OK


COMMANDS = {
    "schedule": _cmd_schedule,
    "verify": _cmd_verify,
    "compare": _cmd_compare,
    "oracle": _cmd_oracle,
    "gen": _cmd_gen,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"capacity: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
