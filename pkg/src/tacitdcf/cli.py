"""Command-line interface.

Subcommands:
  track   run one sequence, write boxes.csv + report.json (+ figures)
  bench   run every sequence under a root directory and aggregate
  ablate  run the regularizer x weight-mode grid on synthetic scenarios
  synth   render a synthetic sequence to disk

Exit codes: 0 success, 1 runtime failure, 2 bad usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from tacitdcf import harness, plots
from tacitdcf.config import dump_config, load_config
from tacitdcf.metrics import MetricReport
from tacitdcf.sequences import (
    SCENARIOS,
    ScenarioSpec,
    Sequence,
    load_otb_sequence,
    synth_sequence,
    write_sequence,
)
from tacitdcf.tracker import TrackerConfig


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tacitdcf",
        description="multi-layer correlation-filter tracker and evaluation harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    track = sub.add_parser("track", help="track one sequence directory")
    track.add_argument("--seq", required=True, help="sequence directory (img/ + groundtruth_rect.txt)")
    track.add_argument("--config", help="key=value config file")
    track.add_argument("--out", required=True, help="output directory")
    track.add_argument("--features", help="directory of per-frame .tfs feature stacks")
    track.add_argument("--overlay", action="store_true", help="dump frames with boxes drawn")
    track.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    bench = sub.add_parser("bench", help="run every sequence under a root directory")
    bench.add_argument("--root", required=True)
    bench.add_argument("--config")
    bench.add_argument("--out", required=True)
    bench.add_argument("--no-plots", action="store_true")

    ablate = sub.add_parser("ablate", help="regularizer / weight-mode ablation grid")
    ablate.add_argument("--scenario", choices=SCENARIOS + ("suite",), default="suite")
    ablate.add_argument("--seed", type=int, default=0)
    ablate.add_argument("--frames", type=int, default=40)
    ablate.add_argument("--config")
    ablate.add_argument("--out", required=True)
    ablate.add_argument("--no-plots", action="store_true")

    synth = sub.add_parser("synth", help="render a synthetic sequence to disk")
    synth.add_argument("--scenario", choices=SCENARIOS, required=True)
    synth.add_argument("--out", required=True)
    synth.add_argument("--frames", type=int, default=50)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--frame-width", type=int, default=240)
    synth.add_argument("--frame-height", type=int, default=160)
    synth.add_argument("--target-size", type=int, default=32)
    synth.add_argument("--dx", type=float, default=3.0)
    synth.add_argument("--dy", type=float, default=0.0)
    synth.add_argument("--zoom-rate", type=float, default=1.01)
    synth.add_argument("--flicker", type=float, default=0.0)

    dump = sub.add_parser("default-config", help="print the default config file")
    dump.set_defaults(command="default-config")
    return parser


def _load_tracker_config(path: str | None, parser: argparse.ArgumentParser) -> TrackerConfig:
    if path is None:
        return TrackerConfig()
    p = Path(path)
    if not p.is_file():
        parser.error(f"--config: file not found: {p}")
    try:
        return load_config(p)
    except ValueError as exc:
        parser.error(f"--config: {exc}")


def _write_boxes_csv(boxes, path: Path) -> None:
    lines = [
        f"{i},{b[0]:.3f},{b[1]:.3f},{b[2]:.3f},{b[3]:.3f}"
        for i, b in enumerate(boxes)
    ]
    path.write_text("\n".join(lines) + "\n")


def _write_json(payload: dict, path: Path) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_overlays(seq: Sequence, boxes, out_dir: Path) -> None:
    from PIL import Image, ImageDraw

    overlay_dir = out_dir / "overlay"
    overlay_dir.mkdir(parents=True, exist_ok=True)
    for i in range(len(seq)):
        frame = np.clip(seq.frame(i) * 255.0, 0, 255).astype(np.uint8)
        img = Image.fromarray(frame)
        draw = ImageDraw.Draw(img)
        gx, gy, gw, gh = seq.ground_truth[i]
        draw.rectangle([gx, gy, gx + gw, gy + gh], outline=(255, 220, 0), width=1)
        px, py, pw, ph = boxes[i]
        draw.rectangle([px, py, px + pw, py + ph], outline=(255, 40, 40), width=2)
        img.save(overlay_dir / f"{i + 1:04d}.png")


def cmd_track(args, parser) -> int:
    seq_dir = Path(args.seq)
    if not seq_dir.is_dir():
        parser.error(f"--seq: directory not found: {seq_dir}")
    config = _load_tracker_config(args.config, parser)
    seq = load_otb_sequence(seq_dir)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.features:
        feat_dir = Path(args.features)
        if not feat_dir.is_dir():
            parser.error(f"--features: directory not found: {feat_dir}")
        from tacitdcf.featuredriver import track_stack_files

        box_objs, _ = track_stack_files(feat_dir, config)
        boxes = [b.as_tuple() for b in box_objs]
        if len(boxes) != len(seq):
            print(
                f"warning: {len(boxes)} feature stacks vs {len(seq)} frames; "
                f"evaluating the overlap",
                file=sys.stderr,
            )
    else:
        box_objs, _ = harness.track_sequence(seq, config)
        boxes = [b.as_tuple() for b in box_objs]

    n = min(len(boxes), len(seq))
    report = MetricReport.evaluate(seq.name, boxes[:n], seq.ground_truth[:n])
    _write_boxes_csv(boxes, out_dir / "boxes.csv")
    _write_json(report.to_dict(), out_dir / "report.json")
    if args.overlay:
        _write_overlays(seq, boxes[:n], out_dir)
    if not args.no_plots:
        plots.save_report_figures(report, out_dir)
    print(f"{seq.name}: mean IoU {float(np.mean(report.ious)):.3f}, "
          f"AUC {report.auc:.3f}, precision@20 {report.precision_at_20:.3f}")
    return 0


def cmd_bench(args, parser) -> int:
    root = Path(args.root)
    if not root.is_dir():
        parser.error(f"--root: directory not found: {root}")
    seq_dirs = sorted(d for d in root.iterdir() if (d / "img").is_dir())
    if not seq_dirs:
        parser.error(f"--root: no sequence directories under {root}")
    config = _load_tracker_config(args.config, parser)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def run_one(d: Path) -> MetricReport:
        return harness.evaluate_sequence(load_otb_sequence(d), config)

    with ThreadPoolExecutor(max_workers=harness.worker_cap()) as pool:
        reports = list(pool.map(run_one, seq_dirs))

    payload = {
        "sequences": [r.to_dict() for r in reports],
        "aggregate": {
            "mean_iou": float(np.mean([np.mean(r.ious) for r in reports])),
            "auc": float(np.mean([r.auc for r in reports])),
            "precision_at_20": float(np.mean([r.precision_at_20 for r in reports])),
            "mean_scale_ratio": float(np.mean([r.mean_scale_ratio for r in reports])),
            "scale_jitter": float(np.mean([r.scale_jitter for r in reports])),
        },
    }
    _write_json(payload, out_dir / "bench.json")
    if not args.no_plots:
        for r in reports:
            plots.save_report_figures(r, out_dir / r.name)
    print(f"benchmarked {len(reports)} sequences; "
          f"mean AUC {payload['aggregate']['auc']:.3f}")
    return 0


def cmd_ablate(args, parser) -> int:
    config = _load_tracker_config(args.config, parser)
    scenario = None if args.scenario == "suite" else args.scenario
    result = harness.run_ablation(config, scenario, seed=args.seed, frames=args.frames)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(result, out_dir / "ablation.json")
    if not args.no_plots:
        plots.save_ablation_figure(result, out_dir)
    best = max(result["rows"], key=lambda r: r["mean_iou"])
    print(f"ablation grid done ({len(result['rows'])} cells); "
          f"best: {best['subset']} / {best['weight_mode']} "
          f"mean IoU {best['mean_iou']:.3f}")
    return 0


def cmd_synth(args, parser) -> int:
    spec = ScenarioSpec(
        scenario=args.scenario,
        frames=args.frames,
        frame_size=(args.frame_width, args.frame_height),
        target_size=(args.target_size, args.target_size),
        dx=args.dx,
        dy=args.dy,
        zoom_rate=args.zoom_rate,
        flicker=args.flicker,
        seed=args.seed,
    )
    try:
        seq = synth_sequence(spec)
    except ValueError as exc:
        parser.error(str(exc))
    out = write_sequence(seq, args.out)
    print(f"wrote {len(seq)} frames to {out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "track":
            return cmd_track(args, parser)
        if args.command == "bench":
            return cmd_bench(args, parser)
        if args.command == "ablate":
            return cmd_ablate(args, parser)
        if args.command == "synth":
            return cmd_synth(args, parser)
        if args.command == "default-config":
            print(dump_config(TrackerConfig()), end="")
            return 0
        parser.error(f"unknown command {args.command}")
    except SystemExit:
        raise
    except Exception as exc:  # runtime failure, not usage
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
