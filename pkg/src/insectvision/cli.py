"""Command-line entry point: generate scenes, run detection, sweep ROC curves
and measure tuning curves.

Exit codes: 0 success, 1 validation or usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

from . import io
from .core import ModelConfig, ValidationError, format_config, load_config
from .evaluation import (
    TUNING_ATTRIBUTES,
    candidates_to_detections,
    collect_candidates,
    match_and_score,
    roc_sweep,
    tuning_experiment,
)
from .pipeline import STAGES
from .stimulus import StimulusSpec, generate

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 1, 2
ATTRIBUTE_ALIASES = {"contrast": "weber_contrast"}

RUN_MANIFEST = "run_manifest.txt"
TIMING_FILE = "timing.txt"
CONFIG_SNAPSHOT = "config.txt"


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from None
    probe = out / ".write-test"
    try:
        probe.write_bytes(b"")
        probe.unlink()
    except OSError:
        raise OSError(f"output directory {out} is not writable") from None
    return out


def _write_run_files(out: Path, command, cfg: ModelConfig | None, extra, pipe=None, wall=None):
    """Run manifest (everything needed to re-run) plus a separate timing file,
    so that the reproducible outputs never contain wall-clock numbers."""
    items = [("command", command)] + list(extra)
    if cfg is not None:
        (out / CONFIG_SNAPSHOT).write_text(format_config(cfg), encoding="utf-8")
        items.append(("config", CONFIG_SNAPSHOT))
    items.append(("timing", TIMING_FILE))
    io.write_manifest(out / RUN_MANIFEST, items)
    timing = []
    if wall is not None:
        timing.append(("wall_seconds", wall))
    if pipe is not None:
        fps = pipe.frames_per_second()
        for name in STAGES:
            timing.append((f"{name}_seconds", pipe.timing[name]))
            timing.append((f"{name}_fps", fps[name]))
    io.write_manifest(out / TIMING_FILE, timing)


def _spec_from_args(args) -> StimulusSpec:
    if args.spec:
        spec = io.parse_stimulus_spec(Path(args.spec).read_text(encoding="utf-8"))
    else:
        spec = StimulusSpec()
    if args.seed is not None:
        spec.seed = args.seed
    return spec


def cmd_generate(args):
    spec = _spec_from_args(args)
    out = _out_dir(args.out)
    seq, truth = generate(spec)
    io.write_sequence(out, seq, truth if spec.target else None, spec)
    print(f"wrote {len(seq)} frames ({seq.width}x{seq.height}, {seq.sample_rate:g} fps) to {out}")
    return EXIT_OK


def _load_sequence(path):
    seq = io.SequenceDir(path)
    return seq, seq.truth()


def cmd_detect(args):
    cfg = load_config(args.config)
    beta = cfg.beta if args.beta is None else args.beta
    seq, truth = _load_sequence(args.sequence)
    out = _out_dir(args.out)
    start = time.perf_counter()
    cands = collect_candidates(seq, cfg)
    wall = time.perf_counter() - start
    peaks = cands.stmd if args.mode == "stmd" else cands.tsdn
    per_frame = candidates_to_detections(peaks, cfg.directions, beta)
    detections = [d for frame in per_frame for d in frame]
    io.write_detections_csv(out / "detections.csv", detections)
    summary = [
        ("mode", args.mode),
        ("beta", float(beta)),
        ("frame_count", len(seq)),
        ("warmup_frames", cands.warmup),
        ("detection_count", len(detections)),
    ]
    if truth is not None:
        report = match_and_score(per_frame, truth, warmup=cands.warmup)
        summary += [("detection_rate", report.detection_rate), ("false_alarm_rate", report.false_alarm_rate)]
    io.write_manifest(out / "summary.txt", summary)
    _write_run_files(
        out,
        "detect",
        cfg,
        [("sequence", str(Path(args.sequence).resolve())), ("mode", args.mode), ("beta", float(beta))],
        cands.pipeline,
        wall,
    )
    fps = len(seq) / wall if wall > 0 else math.inf
    print(f"{len(detections)} detections over {len(seq)} frames ({fps:.1f} frames/s); see {out}")
    return EXIT_OK


def cmd_roc(args):
    cfg = load_config(args.config)
    grid = io.parse_grid(args.beta_grid, allow_inf=True)
    seq, truth = _load_sequence(args.sequence)
    if truth is None:
        raise ValidationError(f"{args.sequence}: ROC needs a ground-truth CSV")
    out = _out_dir(args.out)
    start = time.perf_counter()
    cands = collect_candidates(seq, cfg)
    wall = time.perf_counter() - start
    for mode, peaks in (("stmd", cands.stmd), ("tsdn", cands.tsdn)):
        io.write_roc_csv(out / f"roc_{mode}.csv", roc_sweep(peaks, truth, grid, warmup=cands.warmup))
    _write_run_files(
        out,
        "roc",
        cfg,
        [("sequence", str(Path(args.sequence).resolve())), ("beta_grid", args.beta_grid)],
        cands.pipeline,
        wall,
    )
    print(f"ROC over {len(grid)} thresholds written to {out}")
    return EXIT_OK


def cmd_tune(args):
    attribute = ATTRIBUTE_ALIASES.get(args.attribute, args.attribute)
    if attribute not in TUNING_ATTRIBUTES:
        names = ", ".join(sorted(set(TUNING_ATTRIBUTES) | set(ATTRIBUTE_ALIASES)))
        raise UsageError(f"unknown attribute {args.attribute!r}; choose from {names}")
    cfg = load_config(args.config)
    grid = io.parse_grid(args.grid)
    out = _out_dir(args.out)
    start = time.perf_counter()
    curve = tuning_experiment(attribute, grid, cfg=cfg)
    wall = time.perf_counter() - start
    io.write_tuning_csv(out / "tuning.csv", curve)
    _write_run_files(out, "tune", cfg, [("attribute", attribute), ("grid", args.grid)], wall=wall)
    print(f"tuning curve for {attribute} ({len(grid)} points) written to {out}")
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="insectvision", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="render a synthetic scene to PGM frames")
    p.add_argument("spec", nargs="?", help="stimulus description file (key = value); defaults built in")
    p.add_argument("--seed", type=int, help="override the stimulus seed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("detect", help="run the model on a PGM sequence")
    p.add_argument("sequence", help="directory holding manifest.txt and frames")
    p.add_argument("--config", help="model parameter file (key = value)")
    p.add_argument("--mode", choices=("stmd", "tsdn"), default="tsdn")
    p.add_argument("--beta", type=float, help="detection threshold (default: config beta)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("roc", help="sweep the detection threshold for both modes")
    p.add_argument("sequence")
    p.add_argument("--config")
    p.add_argument("--beta-grid", required=True, help="a:b:step or an ascending comma list (inf allowed)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_roc)

    p = sub.add_parser("tune", help="measure a tuning curve on a clutter-free scene")
    p.add_argument("--attribute", required=True, help="contrast, weber_contrast, velocity, width or height")
    p.add_argument("--grid", required=True, help="a:b:step or an ascending comma list")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tune)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
