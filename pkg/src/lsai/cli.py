"""Command line entry point.

Subcommands: run, sweep, verify, replay. Exit codes: 0 success,
1 runtime failure, 2 configuration error. Progress output is
line-oriented key=value pairs.
"""

import argparse
import os
import sys

from . import experiment, verify as verify_mod, world as world_mod
from .config import ConfigError, load_scenario

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _build_parser():
    p = argparse.ArgumentParser(prog="lsai",
                                description="Multi-robot cooperative sensing simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute one mission")
    run.add_argument("--config", required=True)
    run.add_argument("--method", choices=experiment.METHODS)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", required=True)
    run.add_argument("--timing", action="store_true",
                     help="record real wall time in the CSV (breaks byte-identical reruns)")

    sw = sub.add_parser("sweep", help="methods x robot counts x seeds grid")
    sw.add_argument("--config", required=True)
    sw.add_argument("--robots", required=True,
                    help="comma-separated robot counts, e.g. 4,8,12")
    sw.add_argument("--seeds", type=int, required=True,
                    help="number of seeds (0..N-1)")
    sw.add_argument("--method", default="all",
                    help="one of %s or 'all'" % (experiment.METHODS,))
    sw.add_argument("--out", required=True)
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--timing", action="store_true")

    sub.add_parser("verify", help="run the oracle/property suites")

    rp = sub.add_parser("replay", help="recheck a recorded world trace")
    rp.add_argument("--trace", required=True)
    return p


def _cmd_run(args):
    try:
        scenario = load_scenario(args.config,
                                 {"method": args.method} if args.method else None)
    except ConfigError as exc:
        print(f"error=config key={exc.path} detail={exc}", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(args.out, exist_ok=True)
    mcfg = scenario.method
    print(f"command=run method={mcfg.method} seed={args.seed} out={args.out}")
    try:
        trace = os.path.join(args.out, "trace.txt")
        row, reports = _run_with_trace(mcfg, scenario.world, args.seed, trace,
                                       args.timing)
    except Exception as exc:  # noqa: BLE001
        print(f"error=runtime detail={exc}", file=sys.stderr)
        return EXIT_RUNTIME
    experiment.write_results_csv([row], os.path.join(args.out, "results.csv"))
    experiment.write_round_reports(reports, os.path.join(args.out, "round_reports.jsonl"))
    experiment.write_packet_log(reports, os.path.join(args.out, "packets.csv"))
    print(f"rows=1 accuracy={row['sensing_accuracy']} "
          f"response_time_s={row['response_time_s']} bytes={row['bytes_transmitted']}")
    return EXIT_OK


def _run_with_trace(mcfg, world_cfg, seed, trace_path, timing):
    import time

    t0 = time.perf_counter()
    metrics, reports = experiment.run_method(mcfg, world_cfg, seed, trace_path)
    wall = int((time.perf_counter() - t0) * 1000) if timing else 0
    return experiment._row(mcfg, world_cfg, seed, metrics, len(reports), wall), reports


def _cmd_sweep(args):
    try:
        scenario = load_scenario(args.config)
    except ConfigError as exc:
        print(f"error=config key={exc.path} detail={exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        robots = [int(tok) for tok in args.robots.split(",") if tok.strip()]
    except ValueError:
        print("error=config key=robots detail=not an integer list", file=sys.stderr)
        return EXIT_CONFIG
    if not robots or args.seeds < 1:
        print("error=config key=robots/seeds detail=empty sweep", file=sys.stderr)
        return EXIT_CONFIG
    if args.method == "all":
        methods = list(experiment.METHODS)
    elif args.method in experiment.METHODS:
        methods = [args.method]
    else:
        print(f"error=config key=method detail=unknown method {args.method!r}",
              file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(args.out, exist_ok=True)
    print(f"command=sweep methods={','.join(methods)} robots={args.robots} "
          f"seeds={args.seeds} jobs={args.jobs}")

    def progress(row):
        print(f"done scenario={row['scenario_id']} "
              f"accuracy={row.get('sensing_accuracy', '')}")

    try:
        rows, summary = experiment.sweep(
            methods, robots, list(range(args.seeds)), scenario.world,
            scenario.method, timing=args.timing, jobs=args.jobs,
            progress=progress if args.jobs == 1 else None)
    except Exception as exc:  # noqa: BLE001
        print(f"error=runtime detail={exc}", file=sys.stderr)
        return EXIT_RUNTIME
    experiment.write_results_csv(rows, os.path.join(args.out, "results.csv"))
    experiment.write_summary_json(summary, os.path.join(args.out, "summary.json"))
    failed = [r for r in rows if r["scenario_id"].endswith("_failed")]
    print(f"rows={len(rows)} failed={len(failed)}")
    if failed and len(failed) == len(rows):
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_verify(_args):
    ok = verify_mod.run_all()
    print(f"verify={'pass' if ok else 'fail'}")
    return EXIT_OK if ok else EXIT_RUNTIME


def _cmd_replay(args):
    try:
        ok, message = world_mod.verify_trace(args.trace)
    except OSError as exc:
        print(f"error=config key=trace detail={exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"replay={'pass' if ok else 'fail'} detail={message}")
    return EXIT_OK if ok else EXIT_RUNTIME


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "sweep": _cmd_sweep,
               "verify": _cmd_verify, "replay": _cmd_replay}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
