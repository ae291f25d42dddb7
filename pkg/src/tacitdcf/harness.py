"""Sequence-level runs, the regularizer/weight-mode ablation grid, and
benchmark aggregation over sequence directories.

Worker count for concurrent runs is capped by the TACITDCF_THREADS
environment variable (default: CPU count).
"""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable

from tacitdcf import tracker
from tacitdcf.filters import RegularizationWeights
from tacitdcf.metrics import MetricReport
from tacitdcf.sequences import ScenarioSpec, Sequence, synth_sequence
from tacitdcf.tracker import BoundingBox, TrackerConfig

# regularizer on/off grid: progressively enabled components, matching the
# usual mask -> style -> temporal -> st-style build-up
ABLATION_SUBSETS: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("base", ()),
    ("mask", ("mask",)),
    ("style", ("style",)),
    ("temporal", ("temporal",)),
    ("mask+style", ("mask", "style")),
    ("mask+style+temporal", ("mask", "style", "temporal")),
    ("mask+style+temporal+st", ("mask", "style", "temporal", "st_style")),
)

WEIGHT_MODES = ("uniform", "random", "adaptive")


def worker_cap() -> int:
    env = os.environ.get("TACITDCF_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"TACITDCF_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def track_sequence(
    seq: Sequence, config: TrackerConfig
) -> tuple[list[BoundingBox], list[tracker.StepDiagnostics]]:
    """Run the tracker over a sequence, initialized from ground truth."""
    gx, gy, gw, gh = seq.ground_truth[0]
    state = tracker.init(seq.frame(0), BoundingBox(gx, gy, gw, gh), config)
    boxes = [state.box]
    diags: list[tracker.StepDiagnostics] = []
    for i in range(1, len(seq)):
        state, box, diag = tracker.step(state, seq.frame(i))
        boxes.append(box)
        diags.append(diag)
    return boxes, diags


def evaluate_sequence(seq: Sequence, config: TrackerConfig) -> MetricReport:
    boxes, _ = track_sequence(seq, config)
    return MetricReport.evaluate(
        seq.name, [b.as_tuple() for b in boxes], seq.ground_truth
    )


def restrict_regularizers(
    config: TrackerConfig, enabled: Iterable[str]
) -> TrackerConfig:
    """Zero out every regularizer lambda not named in `enabled`."""
    enabled = set(enabled)
    base = config.reg
    reg = RegularizationWeights(
        mask=base.mask if "mask" in enabled else 0.0,
        style=base.style if "style" in enabled else 0.0,
        temporal=base.temporal if "temporal" in enabled else 0.0,
        st_style=base.st_style if "st_style" in enabled else 0.0,
    )
    return dataclasses.replace(config, reg=reg)


def ablation_scenarios(seed: int, frames: int = 40) -> list[ScenarioSpec]:
    """The five-scenario suite. Illumination flicker, position dither, and a
    wide occluder keep the scenarios hard enough that layer weighting has
    something to trade off."""
    return [
        ScenarioSpec(scenario="static", frames=frames, flicker=0.15, seed=seed),
        ScenarioSpec(scenario="translate", frames=frames, dx=4.0,
                     flicker=0.1, seed=seed + 1),
        ScenarioSpec(scenario="zoom", frames=frames, zoom_rate=1.01,
                     flicker=0.08, dither=0.7, seed=seed + 2),
        ScenarioSpec(scenario="occlude", frames=frames, occlude_span=(12, 30),
                     occluder_width=20, seed=seed + 3),
        ScenarioSpec(scenario="restyle", frames=frames,
                     restyle_frame=frames // 2, flicker=0.1, seed=seed + 4),
    ]


def run_ablation(
    config: TrackerConfig,
    scenario: str | None,
    seed: int,
    frames: int = 40,
    subsets=ABLATION_SUBSETS,
    modes=WEIGHT_MODES,
) -> dict:
    """Run the (regularizer subset x weight mode) grid.

    `scenario` selects a single synthetic scenario; None runs the 5-scenario
    suite and averages. Output has one row per grid cell, no missing cells,
    in deterministic order.
    """
    if scenario is None:
        specs = ablation_scenarios(seed, frames)
    else:
        specs = [s for s in ablation_scenarios(seed, frames) if s.scenario == scenario]
        if not specs:
            raise ValueError(f"unknown scenario {scenario!r}")
    sequences = [synth_sequence(spec) for spec in specs]

    jobs = []
    for subset_name, enabled in subsets:
        for mode in modes:
            run_config = dataclasses.replace(
                restrict_regularizers(config, enabled), weight_mode=mode, seed=seed
            )
            jobs.append((subset_name, mode, run_config))

    def run_cell(job):
        subset_name, mode, run_config = job
        reports = [evaluate_sequence(seq, run_config) for seq in sequences]
        mean_iou = sum(
            sum(r.ious) / len(r.ious) for r in reports
        ) / len(reports)
        return {
            "subset": subset_name,
            "weight_mode": mode,
            "mean_iou": mean_iou,
            "auc": sum(r.auc for r in reports) / len(reports),
            "precision_at_20": sum(r.precision_at_20 for r in reports) / len(reports),
            "mean_scale_ratio": sum(r.mean_scale_ratio for r in reports) / len(reports),
            "scale_jitter": sum(r.scale_jitter for r in reports) / len(reports),
        }

    with ThreadPoolExecutor(max_workers=worker_cap()) as pool:
        rows = list(pool.map(run_cell, jobs))
    return {
        "scenario": scenario or "suite",
        "seed": seed,
        "frames": frames,
        "rows": rows,
    }
