"""Command line front end.

Subcommands: run one scenario, sweep seeds, check determinism, render
plots from a run directory. Exit codes: 0 success, 2 simulation fault,
3 configuration error, 4 determinism check failed.
"""

import argparse
import json
import os
import sys

from . import harness, scenario
from .faults import ConfigError
from .telemetry import read_jsonl

EXIT_OK = 0
EXIT_FAULT = 2
EXIT_CONFIG = 3
EXIT_CHECK_FAILED = 4


def parse_seeds(text: str) -> list:
    """Seed list syntax: comma-separated integers and inclusive A..B spans."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, _, hi = part.partition("..")
            try:
                lo, hi = int(lo), int(hi)
            except ValueError:
                raise ConfigError(f"bad seed span {part!r}")
            if hi < lo:
                raise ConfigError(f"empty seed span {part!r}")
            seeds.extend(range(lo, hi + 1))
        else:
            try:
                seeds.append(int(part))
            except ValueError:
                raise ConfigError(f"bad seed {part!r}")
    return seeds


def _cmd_run(args) -> int:
    report = harness.run_scenario(args.scenario, seed=args.seed,
                                  out_dir=args.out)
    m = report.metrics
    print(f"scenario    {report.scenario}")
    print(f"seed        {report.seed}")
    print(f"fingerprint {report.fingerprint}")
    print(f"hash        {report.analysis_hash}")
    print(f"events      {m['events_executed']}")
    print(f"speedup     {m['speedup']:.0f}x "
          f"({m['sim_seconds']:.0f} s simulated in {m['wall_seconds']:.3f} s)")
    if args.out:
        print(f"wrote       {args.out}")
    if report.fault is not None:
        f = report.fault
        print(f"FAULT {f['type']} in {f['process']} at {f['time_ns']} ns: "
              f"{f['reason']}")
        return EXIT_FAULT
    return EXIT_OK


def _cmd_mc(args) -> int:
    seeds = parse_seeds(args.seeds)
    agg = harness.monte_carlo(args.scenario, seeds, metric=args.metric)
    print(f"scenario {agg['scenario']}: {agg['n']} runs, "
          f"{agg['faults']['count']} faulted")
    if agg["faults"]["count"]:
        print(f"fault types {agg['faults']['by_type']}")
    if agg.get("values"):
        print(f"{args.metric}: mean {agg['mean']:.6g} std {agg['std']:.6g} "
              f"over {len(agg['values'])} clean runs")
    if agg["fingerprint_collisions"]:
        print("warning: fingerprint collision inside sweep")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "mc_report.json")
        with open(path, "w") as fh:
            json.dump(agg, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {path}")
        if agg.get("histogram"):
            hist = agg["histogram"]
            path = os.path.join(args.out, "histogram.csv")
            with open(path, "w") as fh:
                fh.write("bin_lo,bin_hi,count\n")
                for i, count in enumerate(hist["counts"]):
                    fh.write(f"{hist['edges'][i]},{hist['edges'][i + 1]},"
                             f"{count}\n")
            print(f"wrote {path}")
    return EXIT_OK


def _cmd_check(args) -> int:
    result = harness.check_determinism(args.scenario, seed=args.seed,
                                       runs=args.runs,
                                       wallclock_probe=args.inject_wallclock)
    if result["pass"]:
        print(f"PASS {args.runs} identical runs, fingerprint "
              f"{result['fingerprints'][0]}, hash {result['hashes'][0]}")
        return EXIT_OK
    print(f"FAIL fingerprints {result['fingerprints']}")
    div = result["divergence"]
    if div is not None:
        print(f"first divergence in run {div['run']} at record "
              f"{div['record']}:")
        print(f"  expected {div['expected']}")
        print(f"  actual   {div['actual']}")
    return EXIT_CHECK_FAILED


def _cmd_plot(args) -> int:
    from . import plotting
    path = os.path.join(args.indir, args.telemetry)
    if not os.path.exists(path):
        raise ConfigError(f"no telemetry file {path}")
    records = read_jsonl(path)
    out_dir = args.out or args.indir
    os.makedirs(out_dir, exist_ok=True)
    written = plotting.render_all(records, out_dir)
    for p in written:
        print(f"wrote {p}")
    if not written:
        print("no plottable record kinds found")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sim",
        description="Deterministic spacecraft swarm simulation harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario")
    p.add_argument("--scenario", required=True,
                   help="scenario file path or bundled name")
    p.add_argument("--seed", type=int, default=None,
                   help="override the scenario seed")
    p.add_argument("--out", default=None,
                   help="directory for telemetry.jsonl and report.json")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("mc", help="Monte Carlo seed sweep")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seeds", required=True,
                   help="e.g. 0..99 (inclusive) or 3,17,42")
    p.add_argument("--metric", default=None,
                   help="dotted metric path, e.g. dv_total.sc0")
    p.add_argument("--out", default=None,
                   help="directory for mc_report.json and histogram.csv")
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("check", help="repeat one run and compare evidence")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--runs", type=int, default=3)
    p.add_argument("--inject-wallclock", action="store_true",
                   help="plant a wall-clock record mid-run (negative "
                        "control; makes the check fail)")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("plot", help="render plots from a run directory")
    p.add_argument("--in", dest="indir", required=True,
                   help="directory holding the telemetry file")
    p.add_argument("--telemetry", default="telemetry.jsonl")
    p.add_argument("--out", default=None,
                   help="plot output directory (default: --in)")
    p.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
