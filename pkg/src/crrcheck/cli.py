"""Command-line front end.

Exit codes: 10 counterexample, 20 property holds, 30 resource out,
1 usage or input error, 0 success for the non-checking commands.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bench
from .checker import COUNTEREXAMPLE, RESOURCE_OUT, CheckConfig, mc_crr
from .model import CounterSpec, ModelError, abstract_counter, counter_aig, load_aiger
from .sat import DEFAULT_CONFLICT_BUDGET, Budget

EXIT_CEX, EXIT_HOLDS, EXIT_RESOURCE, EXIT_USAGE = 10, 20, 30, 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_counter(text: str) -> CounterSpec:
    """``k=3,d=2`` or ``k=3,d=2,perm=7``."""
    fields = {}
    for part in text.split(","):
        key, sep, val = part.partition("=")
        if not sep:
            raise UsageError(f"bad counter field {part!r}")
        try:
            fields[key.strip()] = int(val)
        except ValueError:
            raise UsageError(f"counter field {key!r} needs an integer") from None
    unknown = set(fields) - {"k", "d", "perm"}
    if unknown or not {"k", "d"} <= set(fields):
        raise UsageError("counter needs k and d, optionally perm")
    try:
        return CounterSpec(fields["k"], fields["d"], fields.get("perm"))
    except ValueError as e:
        raise UsageError(str(e)) from None


def _on_off(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return text == "on"


def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="crrcheck", description="Bounded safety checking by range reduction.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="check a model for n transitions")
    c.add_argument("model", nargs="?", help="ASCII AIGER file")
    c.add_argument("--counter", help="built-in counter, e.g. k=3,d=2[,perm=7]")
    c.add_argument("--n", type=_positive_int, required=True)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--conflicts", type=_positive_int, default=DEFAULT_CONFLICT_BUDGET)
    c.add_argument("--wall-secs", type=_positive_float, default=None)
    c.add_argument("--engine", choices=("crr", "bmc"), default="crr")
    c.add_argument("--expand-clauses", type=_on_off, default=False, metavar="on|off")
    c.add_argument("--format", choices=("json",), default="json")
    c.add_argument("--out", help="write the verdict here instead of stdout")
    c.add_argument("--stimulus", help="write the witness as AIGER input stimulus")

    b = sub.add_parser("bench", help="run the PQE/QE experiment over a manifest")
    b.add_argument("manifest")
    b.add_argument("--out", help="CSV output path (default stdout)")
    b.add_argument("--summary", help="summary JSON path (default stderr)")
    b.add_argument("--format", choices=("csv",), default="csv")
    b.add_argument("--fraction", type=float, default=0.7)
    b.add_argument("--queries", type=_positive_int, default=bench.ExperimentConfig.max_queries)
    b.add_argument("--conflicts", type=_positive_int, default=bench.ExperimentConfig.conflicts)
    b.add_argument("--wall-secs", type=_positive_float, default=bench.ExperimentConfig.wall_secs)

    g = sub.add_parser("gen-counter", help="write an abstract counter as ASCII AIGER")
    g.add_argument("--counter", required=True, help="k=..,d=..[,perm=SEED]")
    g.add_argument("--out", required=True)
    return p


def _write(text: str, path: str | None, stream=None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        (stream or sys.stdout).write(text)


def cmd_check(args) -> int:
    if bool(args.model) == bool(args.counter):
        raise UsageError("give exactly one of a model file or --counter")
    if args.counter:
        ts = abstract_counter(parse_counter(args.counter))
    else:
        try:
            ts = load_aiger(args.model)
        except OSError as e:
            raise UsageError(f"cannot read {args.model}: {e.strerror}") from None
        except ModelError as e:
            raise UsageError(f"{args.model}: {e}") from None
    if args.engine == "bmc":
        budget = Budget.with_wall(args.wall_secs, conflicts_per_call=args.conflicts)
        v = bench.bmc(ts, args.n, budget)
    else:
        cfg = CheckConfig(seed=args.seed, conflicts=args.conflicts, wall_secs=args.wall_secs,
                          expand_clauses=args.expand_clauses)
        v = mc_crr(ts, args.n, cfg)
    _write(v.to_json() + "\n", args.out)
    if args.stimulus and v.fails:
        Path(args.stimulus).write_text(v.trace.stimulus(len(ts.inputs)))
    if v.kind == COUNTEREXAMPLE:
        return EXIT_CEX
    if v.kind == RESOURCE_OUT:
        return EXIT_RESOURCE
    return EXIT_HOLDS


def cmd_bench(args) -> int:
    try:
        entries = bench.read_manifest(args.manifest)
    except (OSError, ValueError) as e:
        raise UsageError(f"cannot read manifest {args.manifest}: {e}") from None
    cfg = bench.ExperimentConfig(fraction=args.fraction, max_queries=args.queries,
                                 wall_secs=args.wall_secs, conflicts=args.conflicts)
    rows, summary = bench.run_experiment(entries, cfg)
    _write(bench.csv_text(rows), args.out)
    _write(bench.summary_json(summary) + "\n", args.summary, sys.stderr)
    return 0


def cmd_gen_counter(args) -> int:
    spec = parse_counter(args.counter)
    Path(args.out).write_text(counter_aig(spec).to_ascii())
    return 0


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:     # argparse usage errors and --help
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    handler = {"check": cmd_check, "bench": cmd_bench, "gen-counter": cmd_gen_counter}[args.cmd]
    try:
        return handler(args)
    except UsageError as e:
        print(f"crrcheck: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
