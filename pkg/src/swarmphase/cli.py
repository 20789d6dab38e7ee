"""Command-line interface: simulate, analyze, run, isomap."""

from __future__ import annotations

import argparse
import sys

from .io import load_config_file
from .pipeline import (
    ConfigError,
    PipelineError,
    config_from_sources,
    run_isomap,
    run_pipeline,
    run_simulate,
)


def _add_common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="config file with key = value lines")
    parser.add_argument("--scenario", choices=["speed-switch", "noise-switch", "split-rejoin"])
    parser.add_argument("--input", dest="input_path", help="trajectory CSV to analyze")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--xi1", type=float, help="weight of the speed term")
    parser.add_argument("--xi2", type=float, help="weight of the polarization term")
    parser.add_argument("--epsilon-mode", dest="epsilon_mode", choices=["all_pairs", "nearest_neighbor"])
    parser.add_argument("--k", type=int, help="neighbor count for the isomap graph")
    parser.add_argument("--dmax", dest="d_max", type=int, help="largest embedding dimension tried")
    parser.add_argument("--threshold", type=float, help="residual-variance cutoff for the dimension estimate")
    parser.add_argument("--min-len", dest="min_len", type=int, help="minimum segment length in steps")
    parser.add_argument("--merge-tol", dest="merge_tol", type=float, help="mean-X tolerance for shared labels")
    parser.add_argument("--out", dest="out_dir", help="output directory (default: $SWARMPHASE_OUT or ./swarmphase-out)")
    parser.add_argument("--n-agents", dest="n_agents", type=int)
    parser.add_argument("--n-steps", dest="n_steps", type=int)
    parser.add_argument("--half-width", dest="half_width", type=float)
    parser.add_argument("--half-height", dest="half_height", type=float)
    parser.add_argument("--dt", type=float)
    parser.add_argument("--canonicalize", dest="canonicalize", action=argparse.BooleanOptionalAction)
    parser.add_argument("--prefer-unwrapped", dest="prefer_unwrapped", action=argparse.BooleanOptionalAction)
    parser.add_argument("--periodic-matching", dest="periodic_matching", action=argparse.BooleanOptionalAction)
    parser.add_argument("--literal-sigmoid", dest="literal_sigmoid", action=argparse.BooleanOptionalAction)
    parser.add_argument("--dump-correspondence", dest="dump_correspondence", action=argparse.BooleanOptionalAction)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmphase",
        description="Simulate collective motion and characterize its phases and manifolds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "generate a scenario trajectory and write it as CSV"),
        ("analyze", "run the analysis pipeline on an input trajectory CSV"),
        ("run", "full pipeline from a scenario or an input trajectory"),
        ("isomap", "isomap dimensionality report for a whole trajectory"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common_options(p)
    return parser


def _config_from_args(args: argparse.Namespace):
    file_values = load_config_file(args.config) if args.config else None
    overrides = {
        key: value
        for key, value in vars(args).items()
        if key not in ("command", "config") and value is not None
    }
    return config_from_sources(file_values, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
        if args.command == "simulate":
            artifacts = run_simulate(config)
        elif args.command == "isomap":
            artifacts = run_isomap(config)
        else:
            if args.command == "analyze" and config.input_path is None:
                raise ConfigError("input: the analyze command needs a trajectory file")
            result = run_pipeline(config)
            sys.stdout.write(result.summary)
            artifacts = result.artifacts
        for name in sorted(artifacts):
            sys.stdout.write(f"wrote {name}: {artifacts[name]}\n")
        return 0
    except (ConfigError, PipelineError, OSError, ValueError) as exc:
        sys.stderr.write(f"swarmphase: error: {exc}\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
