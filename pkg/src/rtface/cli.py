"""Command-line entry point: ``rtface run`` and ``rtface eval``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from . import ppm, runtime
from .errors import ConfigError, InvalidInputError, PipelineError
from .evaluation import evaluate
from .scheduler import CadencePolicy
from .synthetic import load_scenario
from .trace import read_trace, write_jsonl
from .tracker import TrackerConfig

OUTPUT_ENV = "RTFACE_OUTPUT_DIR"
DEFAULT_OUTPUT = "rtface_out"

EXIT_OK = 0
EXIT_BAD_SCENARIO = 2
EXIT_IO = 3
EXIT_MISMATCH = 4


def _err(msg: str) -> None:
    print(f"rtface: {msg}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rtface", description="Simulated real-time face analysis pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario and write trace.jsonl, annotated.jsonl and metrics.json")
    r.add_argument("scenario", type=Path, help="scenario JSON file")
    r.add_argument("--mode", choices=[runtime.VIRTUAL, runtime.REALTIME], default=runtime.VIRTUAL,
                   help="clock mode (default: virtual)")
    r.add_argument("--out", type=Path, default=None,
                   help=f"output directory (default: ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
    r.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    r.add_argument("--dump-frames", action="store_true", help="write frames/*.ppm, one per visualization tick")
    r.add_argument("--expression-every", type=int, default=None, metavar="N")
    r.add_argument("--age-every", type=int, default=None, metavar="N")
    r.add_argument("--gender-every", type=int, default=None, metavar="N")
    r.add_argument("--buffer-capacity", type=int, default=None, metavar="N")
    r.add_argument("--window", type=int, default=None, metavar="K", help="aggregation window length")
    r.add_argument("--max-match-distance", type=float, default=None, metavar="FRAC",
                   help="tracker gate as a fraction of the frame diagonal")
    r.add_argument("--expiry-misses", type=int, default=None, metavar="N")

    e = sub.add_parser("eval", help="evaluate a trace against its scenario; writes eval.json and table.csv")
    e.add_argument("trace", type=Path)
    e.add_argument("scenario", type=Path)
    e.add_argument("--out", type=Path, default=None, help="output directory (default: the trace's directory)")
    return parser


def _config(args, scenario) -> runtime.PipelineConfig:
    base = runtime.PipelineConfig.for_scenario(scenario, clock_mode=args.mode)
    overrides = {}
    cad = {k: getattr(args, k) for k in ("expression_every", "age_every", "gender_every")
           if getattr(args, k) is not None}
    if cad:
        c = base.cadence
        overrides["cadence"] = CadencePolicy(
            cad.get("expression_every", c.expression_every),
            cad.get("age_every", c.age_every),
            cad.get("gender_every", c.gender_every),
        )
    if args.buffer_capacity is not None:
        overrides["buffer_capacity"] = args.buffer_capacity
    if args.window is not None:
        overrides["window"] = args.window
    if args.max_match_distance is not None or args.expiry_misses is not None:
        t = base.tracker
        overrides["tracker"] = TrackerConfig(
            t.max_match_distance if args.max_match_distance is None else args.max_match_distance,
            t.expiry_misses if args.expiry_misses is None else args.expiry_misses,
        )
    return replace(base, **overrides)


def cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
        if args.seed is not None:
            scenario = replace(scenario, seed=args.seed)
        config = _config(args, scenario)
    except (PipelineError, ValueError) as e:
        _err(str(e))
        return EXIT_BAD_SCENARIO

    result = runtime.run(scenario, config)
    out = args.out or Path(os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT))
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_jsonl(out / "trace.jsonl", result.trace)
        write_jsonl(out / "annotated.jsonl", [a.to_dict() for a in result.annotated])
        (out / "metrics.json").write_text(json.dumps(result.metrics.to_dict(), indent=2) + "\n")
        if args.dump_frames:
            frames = out / "frames"
            frames.mkdir(exist_ok=True)
            for i, a in enumerate(result.annotated):
                ppm.write_ppm(frames / f"tick_{i:06d}.ppm", ppm.render(a.to_dict(), scenario.frame_size))
    except OSError as e:
        _err(f"cannot write outputs to {out}: {e}")
        return EXIT_IO
    print(result.metrics.summary())
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ConfigError as e:
        _err(str(e))
        return EXIT_BAD_SCENARIO
    try:
        report = evaluate(read_trace(args.trace), scenario)
    except OSError as e:
        _err(f"cannot read trace {args.trace}: {e}")
        return EXIT_MISMATCH
    except (InvalidInputError, KeyError, TypeError) as e:
        _err(f"trace does not match scenario: {e}")
        return EXIT_MISMATCH
    out = args.out or args.trace.parent
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "eval.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
        (out / "table.csv").write_text(report.to_csv())
    except OSError as e:
        _err(f"cannot write outputs to {out}: {e}")
        return EXIT_IO
    for stage, metric in report.table_rows():
        print(f"{stage:<11}{metric}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return cmd_eval(args)


if __name__ == "__main__":
    sys.exit(main())
