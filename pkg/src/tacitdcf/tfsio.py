"""TFS1 feature-stack file format.

Little-endian layout:
    magic "TFS1" | u32 version=1 | u32 patch_size | u32 layer_count
    per layer:
        u32 layer_id | u32 name_len | name bytes (UTF-8)
        u32 width | u32 height | u32 channels | u32 stride
        width*height*channels f32 values, row-major (y, x, k)
No padding between records. Tensor data is stored as float32; loading
returns float64 tensors carrying exactly the stored float32 values.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from tacitdcf.errors import StackFormatError
from tacitdcf.features import FeatureStack, LayerSpec, StackLayer

MAGIC = b"TFS1"
VERSION = 1
MAX_DIM = 1 << 20  # sanity cap on any single dimension


def write_feature_stack(stack: FeatureStack, path: str | Path) -> None:
    parts = [MAGIC, struct.pack("<III", VERSION, stack.patch_size, len(stack.layers))]
    for layer in stack.layers:
        spec = layer.spec
        name = spec.name.encode("utf-8")
        parts.append(struct.pack("<II", spec.layer_id, len(name)))
        parts.append(name)
        parts.append(
            struct.pack("<IIII", spec.width, spec.height, spec.channels, spec.stride)
        )
        parts.append(np.ascontiguousarray(layer.data, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.blob):
            raise StackFormatError(
                f"truncated file while reading {what} "
                f"({n} bytes needed, {len(self.blob) - self.pos} left)",
                offset=self.pos,
            )
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def load_feature_stack(path: str | Path) -> FeatureStack:
    blob = Path(path).read_bytes()
    r = _Reader(blob)
    magic = r.take(4, "magic")
    if magic != MAGIC:
        raise StackFormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    version = r.u32("version")
    if version != VERSION:
        raise StackFormatError(f"unsupported version {version}", offset=4)
    patch_size = r.u32("patch_size")
    layer_count = r.u32("layer_count")
    layers = []
    for index in range(layer_count):
        start = r.pos
        if r.pos >= len(blob):
            raise StackFormatError(
                f"header declares {layer_count} layers but layer {index} is missing",
                offset=start,
            )
        layer_id = r.u32(f"layer {index} id")
        name_len = r.u32(f"layer {index} name length")
        if name_len > MAX_DIM:
            raise StackFormatError(
                f"layer {index} name length {name_len} overflows", offset=r.pos - 4
            )
        name = r.take(name_len, f"layer {index} name").decode("utf-8")
        dims_at = r.pos
        width = r.u32(f"layer {index} width")
        height = r.u32(f"layer {index} height")
        channels = r.u32(f"layer {index} channels")
        stride = r.u32(f"layer {index} stride")
        if max(width, height, channels) > MAX_DIM or min(width, height, channels) == 0:
            raise StackFormatError(
                f"layer {index} dims {width}x{height}x{channels} out of range",
                offset=dims_at,
            )
        count = width * height * channels
        raw = r.take(4 * count, f"layer {index} data")
        data = np.frombuffer(raw, dtype="<f4").astype(float).reshape(height, width, channels)
        layers.append(
            StackLayer(
                LayerSpec(layer_id, name, width=width, height=height,
                          channels=channels, stride=stride),
                data,
            )
        )
    return FeatureStack(patch_size=patch_size, layers=layers)
