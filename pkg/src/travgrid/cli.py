"""Command-line entry point.

    travgrid <extract-gt|extract-features|train|predict|evaluate|bench>
             --config <path> [--seq N] [--frames A..B] [--geom-only]
             [--parallel]

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import sys

from .config import PipelineConfig, load_config
from .exceptions import ConfigError, DataError
from .io.artifacts import format_report
from .pipeline import (
    LATENCY_BUDGET_MS,
    run_bench,
    run_evaluate,
    run_extract_features,
    run_extract_gt,
    run_predict,
    run_train,
)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True,
                        help="pipeline config file (key = value lines)")
    common.add_argument("--seq", default=None, metavar="N",
                        help="sequence id, overrides the config")
    common.add_argument("--frames", default=None, metavar="A..B",
                        help="inclusive frame window, overrides the config")
    common.add_argument("--geom-only", action="store_true",
                        help="use the 21 geometric features only")
    common.add_argument("--parallel", action="store_true",
                        help="enable the multi-threaded feature path")

    parser = argparse.ArgumentParser(
        prog="travgrid",
        description="Traversability grids from LiDAR scans and camera "
                    "images on plain CPUs.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("extract-gt", parents=[common],
                   help="write per-frame ground-truth label grids")
    sub.add_parser("extract-features", parents=[common],
                   help="build the training feature table")
    sub.add_parser("train", parents=[common],
                   help="grid-search and train the SVM model")
    sub.add_parser("predict", parents=[common],
                   help="label the test frames with a trained model")
    sub.add_parser("evaluate", parents=[common],
                   help="score predictions against ground truth")
    sub.add_parser("bench", parents=[common],
                   help="measure per-stage latency")
    return parser


def configure(args) -> PipelineConfig:
    config = load_config(args.config)
    if args.seq is not None:
        config.sequence = args.seq
    if args.frames is not None:
        config.frames_override = args.frames
    if args.geom_only:
        config.feature_mode = "geometric_only"
    if args.parallel:
        config.parallel = True
    config.validate()
    return config


def _cmd_extract_gt(config) -> None:
    written = run_extract_gt(config)
    print(f"wrote {len(written)} ground-truth grids under "
          f"{config.output_dir}/gt")


def _cmd_extract_features(config) -> None:
    path = run_extract_features(config)
    print(f"wrote training table {path}")


def _cmd_train(config) -> None:
    path = run_train(config)
    print(f"saved model {path}")


def _cmd_predict(config) -> None:
    written = run_predict(config)
    print(f"wrote {len(written)} prediction grids under "
          f"{config.output_dir}/pred")


def _cmd_evaluate(config) -> None:
    report = run_evaluate(config)
    print(format_report(report, budget_ms=LATENCY_BUDGET_MS), end="")


def _cmd_bench(config) -> None:
    rows = run_bench(config)
    print(f"{'stage':<22} {'mean ms':>10} {'max ms':>10} {'frames':>7}")
    for stage, mean_ms, max_ms, frames in rows:
        print(f"{stage:<22} {mean_ms:>10.2f} {max_ms:>10.2f} {frames:>7}")
    for stage, mean_ms, _, _ in rows:
        if stage == "total":
            verdict = "PASS" if mean_ms < LATENCY_BUDGET_MS else "FAIL"
            print(f"budget {LATENCY_BUDGET_MS:.0f} ms: {verdict}")


_COMMANDS = {
    "extract-gt": _cmd_extract_gt,
    "extract-features": _cmd_extract_features,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = configure(args)
        _COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
