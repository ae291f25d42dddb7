"""Per-layer importance weights and their boosting-style update.

Five weight families, one value per layer: `data` scales the correlation
data term, `mask` / `style` / `temporal` / `st_style` scale the four
regularizers. Each family is kept normalized to sum 1 across layers.

The update cascades the per-layer error tiers (each tier folds the
weighted previous tiers into its own raw term), then drops every layer's
weight in proportion to its share of the family error and renormalizes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from tacitdcf.filters import ObjectiveBreakdown

FAMILIES = ("data", "mask", "style", "temporal", "st_style")


@dataclass
class LayerWeights:
    layer_ids: tuple[int, ...]
    data: np.ndarray
    mask: np.ndarray
    style: np.ndarray
    temporal: np.ndarray
    st_style: np.ndarray

    @classmethod
    def uniform(cls, layer_ids: tuple[int, ...]) -> "LayerWeights":
        n = len(layer_ids)
        make = lambda: _normalize(np.full(n, 1.0 / n))
        return cls(tuple(layer_ids), make(), make(), make(), make(), make())

    @classmethod
    def random(cls, layer_ids: tuple[int, ...], rng: np.random.Generator) -> "LayerWeights":
        n = len(layer_ids)
        draws = [_normalize(rng.random(n) + 1e-12) for _ in FAMILIES]
        return cls(tuple(layer_ids), *draws)

    def family(self, name: str) -> np.ndarray:
        if name not in FAMILIES:
            raise KeyError(name)
        return getattr(self, name)

    def check(self, tol: float = 1e-9) -> None:
        for name in FAMILIES:
            v = self.family(name)
            if abs(float(v.sum()) - 1.0) > tol or np.any(v < 0) or np.any(v > 1):
                raise ValueError(f"family {name} violates weight invariants: {v}")


@dataclass
class CascadeErrors:
    """Accumulated per-layer error tiers feeding the weight update."""

    layer_ids: tuple[int, ...]
    data: np.ndarray
    mask: np.ndarray
    style: np.ndarray
    temporal: np.ndarray
    st_style: np.ndarray

    def family(self, name: str) -> np.ndarray:
        return getattr(self, name)


def error_cascade(breakdown: "ObjectiveBreakdown", weights: LayerWeights) -> CascadeErrors:
    """Accumulate the raw objective terms into per-layer error tiers.

    tier1 = data
    tier2 = a*tier1 + mask
    tier3 = a*tier1 + b*tier2 + style
    tier4 = a*tier1 + b*tier2 + c*tier3 + temporal
    tier5 = a*tier1 + b*tier2 + c*tier3 + d*tier4 + st_style
    (a..d are the current per-layer weights of the preceding families.)
    """
    if tuple(breakdown.layer_ids) != tuple(weights.layer_ids):
        raise ValueError(
            f"layer sets differ: breakdown {breakdown.layer_ids} "
            f"vs weights {weights.layer_ids}"
        )
    for name in FAMILIES:
        if np.any(breakdown.term(name) < 0):
            raise ValueError(f"negative raw {name} term in objective breakdown")
    t1 = breakdown.data.astype(float)
    t2 = weights.data * t1 + breakdown.mask
    t3 = weights.data * t1 + weights.mask * t2 + breakdown.style
    t4 = weights.data * t1 + weights.mask * t2 + weights.style * t3 + breakdown.temporal
    t5 = (
        weights.data * t1
        + weights.mask * t2
        + weights.style * t3
        + weights.temporal * t4
        + breakdown.st_style
    )
    return CascadeErrors(tuple(breakdown.layer_ids), t1, t2, t3, t4, t5)


def update_weights(
    weights: LayerWeights, errors: CascadeErrors, eta: float = 1e-4
) -> tuple[LayerWeights, tuple[str, ...]]:
    """Refresh every weight family from its error tier.

    Per layer: raw = 1 - (eta + err_l) / (eta + sum_l' err_l'), clamped at 0,
    then the family is renormalized to sum 1. A family whose raw weights all
    clamp to zero (single layer, or all-zero errors) falls back to uniform;
    the returned tuple names those families.
    """
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if tuple(weights.layer_ids) != tuple(errors.layer_ids):
        raise ValueError("layer sets differ between weights and errors")
    n = len(weights.layer_ids)
    fallbacks = []
    updated = {}
    for name in FAMILIES:
        err = errors.family(name)
        if not np.all(np.isfinite(err)):
            raise ValueError(f"non-finite cascade errors in family {name}")
        raw = 1.0 - (eta + err) / (eta + float(err.sum()))
        raw = np.maximum(raw, 0.0)
        total = float(raw.sum())
        if total <= 0.0:
            updated[name] = np.full(n, 1.0 / n)
            fallbacks.append(name)
        else:
            updated[name] = _normalize(raw)
    out = LayerWeights(tuple(weights.layer_ids), *(updated[name] for name in FAMILIES))
    out.check(tol=1e-12)
    return out, tuple(fallbacks)


def _normalize(v: np.ndarray) -> np.ndarray:
    """Normalize to sum exactly 1.0; a no-op on already-normalized input.

    After dividing by the sum, the last element is replaced by the exact
    complement of the others, which makes the re-summed total exactly 1.0
    (so normalizing twice equals normalizing once). The complement is only
    taken when non-negative; the rare all-but-last rounding overshoot
    retries after a plain renormalization.
    """
    out = np.asarray(v, dtype=float).copy()
    for _ in range(3):
        s = float(out.sum())
        if s == 1.0:
            return out
        out = out / s
        tail = 1.0 - float(np.sum(out[:-1]))
        if tail >= 0.0:
            out[-1] = tail
            return out
    return out
