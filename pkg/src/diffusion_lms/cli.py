"""Command-line front end.

Subcommands
-----------
run         execute the experiment in a JSON config and write CSV + manifest
topology    emit the experiment's network as a JSON document
complexity  per-iteration operation counts of one algorithm
bound       largest mean-stable step size from a pilot-run step-size snapshot

Exit status: 0 on success, 1 for configuration or usage errors, 2 for
runtime failures.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .analysis import stability_bound
from .filters import COUNTABLE, op_counts
from .harness import (
    ConfigError,
    build_topology,
    emit_csv,
    load_config,
    pilot_alpha,
    realize_models,
    run_experiment,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diffusion-lms",
        description="Diffusion adaptive filtering over sensor networks.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    run = sub.add_parser("run", help="run the experiment described by a config file")
    run.add_argument("config", help="path to a JSON experiment config")
    run.add_argument("--seed", type=int, default=None,
                     help="override the config's master seed")
    run.add_argument("--workers", type=int, default=None,
                     help="override the config's worker count")
    run.add_argument("-o", "--output", default=None,
                     help="override the config's output directory")

    topo = sub.add_parser("topology", help="emit the experiment topology as JSON")
    topo.add_argument("config", help="path to a JSON experiment config")
    topo.add_argument("--seed", type=int, default=None,
                      help="override the config's master seed")
    topo.add_argument("-o", "--output", default=None,
                      help="write the document here instead of stdout")

    comp = sub.add_parser("complexity",
                          help="per-iteration operation counts of one algorithm")
    comp.add_argument("--alg", required=True, metavar="NAME",
                      help=f"one of: {', '.join(COUNTABLE)}")
    comp.add_argument("-M", required=True, type=int, dest="filter_length",
                      help="filter length")
    comp.add_argument("-N", required=True, type=int, dest="node_count",
                      help="node count")

    bound = sub.add_parser("bound",
                           help="largest mean-stable step size from a pilot run")
    bound.add_argument("config", help="path to a JSON experiment config")
    bound.add_argument("--seed", type=int, default=None,
                       help="override the config's master seed")
    bound.add_argument("--pilot-iterations", type=int, default=500,
                       help="pilot run length (default 500)")
    bound.add_argument("--shared-measurements", action="store_true",
                       help="evaluate the variant whose adaptation aggregates "
                            "neighborhood measurements under the uniform rule "
                            "(the simulator itself adapts on own data only)")
    bound.add_argument("--literal-diagonal", action="store_true",
                       help="weight each covariance by its node's self-weight only")
    return parser


def _load(args) -> "ExperimentConfig":
    config = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    return config


def _cmd_run(args) -> int:
    config = _load(args)
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("workers: must be >= 1")
        config.workers = args.workers
    if args.output is not None:
        config.output_dir = args.output
    if config.output_dir is None:
        raise ConfigError("output_dir: set it in the config or pass --output")
    file_hash = hashlib.sha256(Path(args.config).read_bytes()).hexdigest()
    result = run_experiment(config)
    paths = emit_csv(result, config.output_dir, config_file_sha256=file_hash)
    for name, curve in result.curves.items():
        note = ""
        if result.diverged.get(name) is not None:
            note = f"  (diverged at iteration {result.diverged[name]})"
        print(f"{name}: final MSD {curve.values_db[-1]:+.2f} dB over "
              f"{config.runs} runs{note}")
    print(f"wrote {len(paths)} files to {config.output_dir} "
          f"in {result.wall_clock_seconds:.1f} s")
    return 0


def _cmd_topology(args) -> int:
    config = _load(args)
    topology, _ = build_topology(config)
    doc = topology.to_json()
    if args.output is None:
        print(doc)
    else:
        Path(args.output).write_text(doc + "\n")
        print(f"wrote {args.output}")
    return 0


def _cmd_complexity(args) -> int:
    counts = op_counts(args.alg, args.filter_length, args.node_count)
    qualifier = " (lower bound)" if counts.lower_bound else ""
    print(f"{args.alg.upper()} per-iteration cost at M={args.filter_length}, "
          f"N={args.node_count}:")
    print(f"multiplications: {counts.multiplications}{qualifier}")
    print(f"additions: {counts.additions}")
    print(f"absolute values: {counts.absolutes}")
    print(f"sign evaluations: {counts.signs}")
    return 0


def _cmd_bound(args) -> int:
    config = _load(args)
    if args.pilot_iterations < 2:
        raise ConfigError("pilot-iterations: must be >= 2")
    _, combination = build_topology(config)
    profile, _ = realize_models(config)
    alpha = pilot_alpha(config, args.pilot_iterations)
    covariances = [profile.covariance(n) for n in range(profile.node_count)]
    if args.shared_measurements:
        adaptation = combination
    else:
        # the simulated adaptation consumes each node's own measurement only
        adaptation = np.eye(profile.node_count)
    mu_max = stability_bound(alpha, adaptation, covariances,
                             literal_diagonal=args.literal_diagonal)
    print(f"pilot step-size snapshot (per node): "
          f"{' '.join(f'{a:.3e}' for a in alpha)}")
    print(f"mean-stable step-size bound: {mu_max:.6e}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "topology": _cmd_topology,
    "complexity": _cmd_complexity,
    "bound": _cmd_bound,
}


def cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help; usage errors become config errors.
        return 0 if exc.code == 0 else 1
    if args.command is None:
        parser.print_usage()
        print("error: a command is required", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 -- runtime failures exit 2
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
