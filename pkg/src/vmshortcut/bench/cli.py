"""Benchmark harness CLI.

One subcommand per experiment; all emit the stable CSV schema.  Exit status
is nonzero when any embedded correctness check fails.
"""

from __future__ import annotations

import argparse
import sys

from .config import BenchConfig
from .recorder import BenchCorrectnessError, Recorder

EXPERIMENTS = ("motivation", "creation", "fanin", "shootdown", "workloads", "enginecmp")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scale", choices=("desk", "paper"), default="desk")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--backend", choices=("real", "emulated"), default="real")
    p.add_argument("--out", default=None, help="CSV output path (default <experiment>.csv)")
    p.add_argument("--cores", default=None,
                   help="comma-separated core ids to pin threads to (e.g. 0,1)")
    p.add_argument("--fanin-threshold", type=int, default=8)
    p.add_argument("--poll-ms", type=float, default=None,
                   help="mapper poll interval (default: 25 at paper scale, 1 at desk scale)")
    p.add_argument("--hti-batch", type=int, default=128)
    p.add_argument("--reps", type=int, default=3)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shortcut-bench",
        description="Benchmarks for page-table shortcuts and shortcut-enhanced "
        "extendible hashing",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        _add_common(sub.add_parser(name))
    return parser


def run_experiment(config: BenchConfig, rec: Recorder) -> dict:
    from . import creation, enginecmp, fanin, motivation, shootdown, workloads

    runners = {
        "motivation": motivation.run,
        "creation": creation.run,
        "fanin": fanin.run,
        "shootdown": shootdown.run,
        "workloads": workloads.run,
        "enginecmp": enginecmp.run,
    }
    return runners[config.experiment](config, rec)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cores = [int(c) for c in args.cores.split(",")] if args.cores else []
    try:
        config = BenchConfig(
            experiment=args.experiment,
            scale=args.scale,
            seed=args.seed,
            backend=args.backend,
            out=args.out or f"{args.experiment}.csv",
            cores=cores,
            fanin_threshold=args.fanin_threshold,
            poll_ms=args.poll_ms,
            hti_batch=args.hti_batch,
            repetitions=args.reps,
        )
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rec = Recorder()
    try:
        summary = run_experiment(config, rec)
    except BenchCorrectnessError as exc:
        rec.write(config.out)
        print(f"CORRECTNESS FAILURE: {exc}", file=sys.stderr)
        return 1
    except MemoryError:
        print(
            f"out of memory at scale '{config.scale}': rerun with --scale desk "
            "or on a machine with more RAM",
            file=sys.stderr,
        )
        return 3
    except RuntimeError as exc:
        print(f"skipped: {exc}", file=sys.stderr)
        return 3
    rec.write(config.out)
    print(f"{config.experiment}: {len(rec.rows)} rows -> {config.out}")
    _print_summary(config.experiment, summary)
    return 0


def _print_summary(experiment: str, summary: dict) -> None:
    if experiment in ("motivation", "fanin"):
        for param, d in summary.items():
            print(f"  {param:>8}: traditional {d['traditional'] / 1e6:9.2f} ms | "
                  f"shortcut {d['shortcut'] / 1e6:9.2f} ms")
    elif experiment == "creation":
        for variant, phases in summary.items():
            pretty = ", ".join(f"{p}={v:,.1f}ns" for p, v in phases.items())
            print(f"  {variant}: {pretty}")
    elif experiment == "shootdown":
        for readers, d in summary.items():
            during = sum(d["read_during"]) / len(d["read_during"]) if d["read_during"] else 0
            print(f"  readers={readers}: remap {d['remap']:.0f} ns/page, "
                  f"read-during {during:.0f} ns/page")
    elif experiment == "workloads":
        for name, ns in summary["insert_total"].items():
            print(f"  insert {name}: {ns / 1e9:.3f} s")
        for name, ns in summary["lookup"].items():
            print(f"  lookup {name}: {ns / 1e6:.1f} ms")
    elif experiment == "enginecmp":
        for k, v in summary.items():
            if isinstance(v, dict):
                print(f"  {k}: insert {v['insert'] / 1e6:.1f} ms, lookup {v['lookup'] / 1e6:.1f} ms")
        print(f"  speedup: insert {summary['speedup_insert']:.1f}x, "
              f"lookup {summary['speedup_lookup']:.1f}x")


if __name__ == "__main__":
    raise SystemExit(main())
