"""Tracking metrics: IoU, success/precision curves, scale-ratio statistics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SUCCESS_THRESHOLDS = np.round(np.linspace(0.0, 1.0, 101), 2)
PRECISION_THRESHOLDS = np.arange(0, 51)


def iou(a: tuple[float, float, float, float], b: tuple[float, float, float, float]) -> float:
    """Intersection over union of two (x, y, w, h) boxes."""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    if aw <= 0 or ah <= 0 or bw <= 0 or bh <= 0:
        raise ValueError(f"boxes must have positive size: {a}, {b}")
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    return inter / union


def center_error(a: tuple[float, float, float, float], b: tuple[float, float, float, float]) -> float:
    ax = a[0] + a[2] / 2.0
    ay = a[1] + a[3] / 2.0
    bx = b[0] + b[2] / 2.0
    by = b[1] + b[3] / 2.0
    return float(np.hypot(ax - bx, ay - by))


def success_curve(ious: list[float] | np.ndarray) -> tuple[np.ndarray, float]:
    """Fraction of frames with IoU strictly above each threshold in
    0.00..1.00 (step 0.01), plus the curve mean (AUC)."""
    vals = np.asarray(ious, dtype=float)
    if vals.size == 0:
        raise ValueError("empty IoU list")
    if np.any(vals < 0) or np.any(vals > 1):
        raise ValueError("IoU values must lie in [0, 1]")
    curve = np.array([float(np.mean(vals > t)) for t in SUCCESS_THRESHOLDS])
    return curve, float(curve.mean())


def precision_curve(center_errors: list[float] | np.ndarray) -> tuple[np.ndarray, float]:
    """Fraction of frames with center error <= threshold for 0..50 px,
    plus the value at 20 px."""
    vals = np.asarray(center_errors, dtype=float)
    if vals.size == 0:
        raise ValueError("empty center-error list")
    if np.any(vals < 0):
        raise ValueError("center errors must be >= 0")
    curve = np.array([float(np.mean(vals <= t)) for t in PRECISION_THRESHOLDS])
    return curve, float(curve[20])


def scale_stats(
    pred: list[tuple[float, float, float, float]],
    gt: list[tuple[float, float, float, float]],
) -> tuple[float, float]:
    """Mean and population standard deviation of the per-frame predicted-
    to-annotated box area ratio, in percent."""
    if len(pred) != len(gt):
        raise ValueError(f"length mismatch: {len(pred)} predictions vs {len(gt)} annotations")
    if not pred:
        raise ValueError("empty box lists")
    ratios = []
    for p, g in zip(pred, gt):
        if g[2] <= 0 or g[3] <= 0 or p[2] <= 0 or p[3] <= 0:
            raise ValueError("boxes must have positive area")
        ratios.append(100.0 * (p[2] * p[3]) / (g[2] * g[3]))
    arr = np.asarray(ratios)
    return float(arr.mean()), float(arr.std(ddof=0))


@dataclass
class MetricReport:
    """Full per-sequence evaluation summary."""

    name: str
    ious: list[float]
    center_errors: list[float]
    success: list[float] = field(default_factory=list)
    auc: float = 0.0
    precision: list[float] = field(default_factory=list)
    precision_at_20: float = 0.0
    mean_scale_ratio: float = 0.0
    scale_jitter: float = 0.0

    @classmethod
    def evaluate(
        cls,
        name: str,
        pred: list[tuple[float, float, float, float]],
        gt: list[tuple[float, float, float, float]],
    ) -> "MetricReport":
        ious = [iou(p, g) for p, g in zip(pred, gt)]
        errors = [center_error(p, g) for p, g in zip(pred, gt)]
        curve, auc = success_curve(ious)
        pcurve, p20 = precision_curve(errors)
        mean_ratio, jitter = scale_stats(pred, gt)
        return cls(
            name=name,
            ious=ious,
            center_errors=errors,
            success=curve.tolist(),
            auc=auc,
            precision=pcurve.tolist(),
            precision_at_20=p20,
            mean_scale_ratio=mean_ratio,
            scale_jitter=jitter,
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "mean_iou": float(np.mean(self.ious)),
            "auc": self.auc,
            "precision_at_20": self.precision_at_20,
            "mean_scale_ratio": self.mean_scale_ratio,
            "scale_jitter": self.scale_jitter,
            "ious": self.ious,
            "center_errors": self.center_errors,
            "success_curve": self.success,
            "precision_curve": self.precision,
        }
