"""Per-layer feature stacks: raw-pixel layer 0, a deterministic oriented
filter-bank pyramid, patch extraction, and cosine windowing.

The filter bank is a fixed, dependency-free stand-in for CNN conv layers:
each level convolves (circularly) with a small bank of oriented odd/even
kernels, rectifies, and 2x average-pools into the next level. Spatial
dimensions halve per level; stride bookkeeping maps every feature cell back
to a patch pixel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage


@dataclass(frozen=True)
class LayerSpec:
    """Identity and geometry of one stack layer."""

    layer_id: int
    name: str
    width: int
    height: int
    channels: int
    stride: int

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if min(self.width, self.height, self.channels) < 1:
            raise ValueError(f"degenerate layer dims: {self}")


@dataclass
class StackLayer:
    spec: LayerSpec
    data: np.ndarray  # (height, width, channels) float

    def __post_init__(self):
        expected = (self.spec.height, self.spec.width, self.spec.channels)
        if self.data.shape != expected:
            raise ValueError(
                f"layer {self.spec.layer_id} data shape {self.data.shape} "
                f"does not match spec {expected}"
            )


@dataclass
class FeatureStack:
    """Ordered per-layer tensors for one patch."""

    patch_size: int
    layers: list[StackLayer] = field(default_factory=list)

    def __post_init__(self):
        ids = [layer.spec.layer_id for layer in self.layers]
        if ids != sorted(ids) or len(set(ids)) != len(ids):
            raise ValueError(f"layer ids must be unique and ascending, got {ids}")

    def layer_ids(self) -> tuple[int, ...]:
        return tuple(layer.spec.layer_id for layer in self.layers)

    def layer(self, layer_id: int) -> StackLayer:
        for entry in self.layers:
            if entry.spec.layer_id == layer_id:
                return entry
        raise KeyError(f"no layer with id {layer_id}")


@dataclass(frozen=True)
class BankConfig:
    """Filter-bank pyramid configuration."""

    levels: int = 2
    orientations: int = 4
    phases: int = 2  # odd (edge) and even (ridge) kernels
    kernel_size: int = 3

    @property
    def filters_per_level(self) -> int:
        return self.orientations * self.phases


def extract_patch(
    image: np.ndarray,
    box: tuple[float, float, float, float],
    padding: float,
    out_size: int,
) -> np.ndarray:
    """Crop `box` expanded by `padding`, bilinearly resampled to a square
    (out_size, out_size, 3) patch in [0, 1]. Out-of-image samples replicate
    the nearest edge pixel.

    `box` is (x, y, w, h); the expanded region is centered on the box center
    with side (1 + padding) times the box side per axis.
    """
    img = np.asarray(image, dtype=float)
    if img.size == 0:
        raise ValueError("empty image")
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"image must be (H, W) or (H, W, 3), got {img.shape}")
    x, y, w, h = (float(v) for v in box)
    if w <= 0 or h <= 0:
        raise ValueError(f"box must have positive area, got w={w}, h={h}")
    if out_size < 1:
        raise ValueError("out_size must be >= 1")

    cx, cy = x + w / 2.0, y + h / 2.0
    rw, rh = w * (1.0 + padding), h * (1.0 + padding)
    # output sample centers in continuous image coords (pixel i spans [i, i+1))
    us = (cx - rw / 2.0) + (np.arange(out_size) + 0.5) * (rw / out_size) - 0.5
    vs = (cy - rh / 2.0) + (np.arange(out_size) + 0.5) * (rh / out_size) - 0.5
    return _bilinear_sample(img, vs, us)


def _bilinear_sample(img: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Sample img at the grid rows x cols with bilinear weights and edge clamp."""
    h, w = img.shape[:2]
    r0 = np.floor(rows).astype(int)
    c0 = np.floor(cols).astype(int)
    r0c = np.clip(r0, 0, h - 1)
    r1c = np.clip(r0 + 1, 0, h - 1)
    c0c = np.clip(c0, 0, w - 1)
    c1c = np.clip(c0 + 1, 0, w - 1)
    # clamp the fractional part together with the index so that samples
    # outside the image replicate the edge instead of blending across it
    fr = np.clip(np.clip(rows, 0, h - 1) - r0c, 0.0, 1.0)[:, None, None]
    fc = np.clip(np.clip(cols, 0, w - 1) - c0c, 0.0, 1.0)[None, :, None]
    top = img[r0c][:, c0c] * (1 - fc) + img[r0c][:, c1c] * fc
    bot = img[r1c][:, c0c] * (1 - fc) + img[r1c][:, c1c] * fc
    return top * (1 - fr) + bot * fr


def raw_layer(patch: np.ndarray) -> np.ndarray:
    """Per-channel zero-mean unit-variance standardization of the patch.

    Flat (zero-variance) channels map to all-zeros, so correlation against
    this layer behaves like normalized cross-correlation.
    """
    p = np.asarray(patch, dtype=float)
    if p.ndim == 2:
        p = p[:, :, None]
    out = np.empty_like(p)
    for k in range(p.shape[2]):
        ch = p[:, :, k]
        mu = ch.mean()
        sd = ch.std()
        if sd < 1e-12:
            out[:, :, k] = 0.0
        else:
            out[:, :, k] = (ch - mu) / sd
    return out


def oriented_kernels(config: BankConfig) -> list[np.ndarray]:
    """Fixed bank of oriented derivative-of-Gaussian kernels.

    For each orientation: an odd (first-derivative, edge) kernel and an even
    (second-derivative, ridge) kernel, L2-normalized. Deterministic.
    """
    size = config.kernel_size
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    dx, dy = np.meshgrid(coords, coords)
    r2 = dx * dx + dy * dy
    env = np.exp(-r2 / 2.0)
    kernels = []
    for o in range(config.orientations):
        theta = np.pi * o / config.orientations
        u = dx * np.cos(theta) + dy * np.sin(theta)
        for phase in range(config.phases):
            if phase % 2 == 0:
                k = -u * env
            else:
                k = (u * u - 1.0) * env
            k = k - k.mean()
            norm = np.sqrt(np.sum(k * k))
            kernels.append(k / norm if norm > 0 else k)
    return kernels


def filterbank_stack(patch: np.ndarray, config: BankConfig) -> FeatureStack:
    """Layer 0 (standardized raw pixels) plus `config.levels` filter-bank
    levels. Each level: circular convolution with the oriented bank on the
    channel-mean of the previous level, rectification, 2x average pooling.
    """
    p = np.asarray(patch, dtype=float)
    if p.ndim == 2:
        p = np.repeat(p[:, :, None], 3, axis=2)
    size = p.shape[0]
    if p.shape[0] != p.shape[1]:
        raise ValueError(f"patch must be square, got {p.shape}")
    if config.levels < 0:
        raise ValueError("levels must be >= 0")
    if config.levels > 0 and (size < 2 ** config.levels or size % (2 ** config.levels) != 0):
        raise ValueError(
            f"patch size {size} not divisible by 2^levels = {2 ** config.levels}"
        )

    base = raw_layer(p)
    layers = [
        StackLayer(
            LayerSpec(0, "input", width=size, height=size, channels=p.shape[2], stride=1),
            base,
        )
    ]
    kernels = oriented_kernels(config)
    current = base
    for level in range(1, config.levels + 1):
        signal = current.mean(axis=2)
        responses = [
            np.maximum(ndimage.correlate(signal, k, mode="wrap"), 0.0) for k in kernels
        ]
        stacked = np.stack(responses, axis=2)
        pooled = _avg_pool2(stacked)
        stride = 2 ** level
        spec = LayerSpec(
            level,
            f"bank{level}",
            width=pooled.shape[1],
            height=pooled.shape[0],
            channels=pooled.shape[2],
            stride=stride,
        )
        layers.append(StackLayer(spec, pooled))
        current = pooled
    return FeatureStack(patch_size=size, layers=layers)


def _avg_pool2(x: np.ndarray) -> np.ndarray:
    h, w, c = x.shape
    return x.reshape(h // 2, 2, w // 2, 2, c).mean(axis=(1, 3))


def apply_cosine_window(tensor: np.ndarray) -> np.ndarray:
    """Pointwise multiply each channel by a separable Hann window."""
    t = np.asarray(tensor, dtype=float)
    squeeze = t.ndim == 2
    if squeeze:
        t = t[:, :, None]
    h, w = t.shape[:2]
    win = np.outer(np.hanning(h), np.hanning(w))
    out = t * win[:, :, None]
    return out[:, :, 0] if squeeze else out


def feature_to_patch_coord(feature_coord: float, stride: int) -> float:
    """Map a feature-grid coordinate to the patch pixel at its cell center."""
    return feature_coord * stride + (stride - 1) / 2.0


def patch_to_feature_coord(patch_coord: float, stride: int) -> float:
    return (patch_coord - (stride - 1) / 2.0) / stride
