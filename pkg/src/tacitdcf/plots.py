"""Figure rendering for the report path.

Every CLI run that writes delimited output can also render the matching
matplotlib figures next to it (PNG). Kept separate from metric computation
so headless runs can skip it entirely.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from tacitdcf.metrics import PRECISION_THRESHOLDS, SUCCESS_THRESHOLDS, MetricReport


def save_report_figures(report: MetricReport, out_dir: str | Path) -> list[Path]:
    """Render success curve, precision curve, and scale-ratio trace."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(SUCCESS_THRESHOLDS, report.success, lw=2)
    ax.set_xlabel("overlap threshold")
    ax.set_ylabel("success rate")
    ax.set_title(f"{report.name}: success (AUC {report.auc:.3f})")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.grid(alpha=0.3)
    path = out_dir / "success_curve.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(PRECISION_THRESHOLDS, report.precision, lw=2)
    ax.axvline(20, color="gray", ls="--", lw=1)
    ax.set_xlabel("center error threshold (px)")
    ax.set_ylabel("precision")
    ax.set_title(f"{report.name}: precision (@20px {report.precision_at_20:.3f})")
    ax.set_ylim(0, 1.02)
    ax.grid(alpha=0.3)
    path = out_dir / "precision_curve.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.plot(report.ious, lw=1.5, label="IoU")
    ax.set_xlabel("frame")
    ax.set_ylabel("IoU")
    ax.set_ylim(0, 1.02)
    ax.set_title(
        f"{report.name}: per-frame overlap "
        f"(scale {report.mean_scale_ratio:.1f}% / jitter {report.scale_jitter:.2f}%)"
    )
    ax.grid(alpha=0.3)
    path = out_dir / "iou_trace.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(path)
    return written


def save_ablation_figure(result: dict, out_dir: str | Path) -> Path:
    """Grouped bars of mean IoU per regularizer subset, one group per
    weight mode."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = result["rows"]
    subsets = list(dict.fromkeys(r["subset"] for r in rows))
    modes = list(dict.fromkeys(r["weight_mode"] for r in rows))
    values = np.zeros((len(modes), len(subsets)))
    for r in rows:
        values[modes.index(r["weight_mode"]), subsets.index(r["subset"])] = r["mean_iou"]

    fig, ax = plt.subplots(figsize=(max(6, len(subsets) * 1.2), 4))
    width = 0.8 / len(modes)
    xs = np.arange(len(subsets))
    for i, mode in enumerate(modes):
        ax.bar(xs + (i - (len(modes) - 1) / 2) * width, values[i], width, label=mode)
    ax.set_xticks(xs)
    ax.set_xticklabels(subsets, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("mean IoU")
    ax.set_title(f"ablation on {result['scenario']} (seed {result['seed']})")
    ax.legend()
    ax.grid(axis="y", alpha=0.3)
    path = out_dir / "ablation.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path
