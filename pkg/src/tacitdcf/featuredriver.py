"""Tracking driven by precomputed feature-stack files.

Instead of extracting patches from frames, this driver consumes one TFS1
stack per frame, exported offline around a known box per frame (file names
carry the box: ``<frame>__<x>_<y>_<w>_<h>.tfs``). Localization happens
inside each patch: the fused response peak gives the target offset from the
patch center, and the predicted box is the file's box recentered at that
offset. Filters update with the label re-peaked at the localized position.
"""

from __future__ import annotations

import dataclasses
import re
from collections import deque
from pathlib import Path

import numpy as np

from tacitdcf.features import FeatureStack
from tacitdcf.filters import FilterBank, FilterLayerState, closed_form_update
from tacitdcf.fourier import dft2, gaussian_label
from tacitdcf.tfsio import load_feature_stack
from tacitdcf.tracker import (
    BoundingBox,
    HistoryEntry,
    TrackerConfig,
    TrackerState,
    _fused_response,
    _layer_label,
    _layer_penalty,
    _stack_grams,
    _wrapped_offset,
)
from tacitdcf.weights import LayerWeights

STACK_NAME_RE = re.compile(
    r"^(?P<frame>.+?)__(?P<x>-?[\d.]+)_(?P<y>-?[\d.]+)_(?P<w>[\d.]+)_(?P<h>[\d.]+)\.tfs$"
)


def parse_stack_filename(path: str | Path) -> tuple[str, BoundingBox]:
    m = STACK_NAME_RE.match(Path(path).name)
    if m is None:
        raise ValueError(f"stack file name {Path(path).name!r} does not carry a box")
    return m.group("frame"), BoundingBox(
        float(m.group("x")), float(m.group("y")), float(m.group("w")), float(m.group("h"))
    )


def list_stack_files(directory: str | Path) -> list[tuple[Path, str, BoundingBox]]:
    files = sorted(Path(directory).glob("*.tfs"))
    if not files:
        raise FileNotFoundError(f"no .tfs files in {directory}")
    return [(p, *parse_stack_filename(p)) for p in files]


def init_from_stack(
    stack: FeatureStack, box: BoundingBox, config: TrackerConfig
) -> TrackerState:
    """First-frame training on a prebuilt stack (no patch extraction)."""
    if stack.patch_size != config.patch_size:
        config = dataclasses.replace(config, patch_size=stack.patch_size)
    layers: dict[int, FilterLayerState] = {}
    penalties = {}
    for layer in stack.layers:
        spec = layer.spec
        label = _layer_label(spec, config)
        state = FilterLayerState.empty(spec, label)
        layers[spec.layer_id] = closed_form_update(
            state, dft2(layer.data), label, gamma=1.0, lam=config.lam
        )
        penalties[spec.layer_id] = _layer_penalty(spec, config)
    bank = FilterBank(layers=layers, learning_rate=config.gamma, lam=config.lam)
    grams = _stack_grams(stack)
    history: deque = deque(maxlen=config.history_len)
    history.append(HistoryEntry(stack=stack, grams=grams))
    return TrackerState(
        config=config,
        bank=bank,
        weights=LayerWeights.uniform(stack.layer_ids()),
        box=box,
        scale=1.0,
        initial_size=(box.width, box.height),
        frame_shape=(0, 0),
        history=history,
        initial_grams={k: g.copy() for k, g in grams.items()},
        penalties=penalties,
        rng=np.random.default_rng(config.seed),
    )


def step_on_stack(
    state: TrackerState, stack: FeatureStack, patch_box: BoundingBox
) -> BoundingBox:
    """Localize within one precomputed stack and update the filters.

    `patch_box` is the box the stack was exported around; the predicted box
    is that box recentered at the localized peak.
    """
    if stack.layer_ids() != state.bank.layer_ids():
        raise ValueError(
            f"stack layers {stack.layer_ids()} != tracker layers {state.bank.layer_ids()}"
        )
    config = state.config
    fused = _fused_response(state, stack)
    peak_flat = int(np.argmax(fused))
    py, px = divmod(peak_flat, fused.shape[1])
    dx = _wrapped_offset(px, fused.shape[1])
    dy = _wrapped_offset(py, fused.shape[0])
    region_w = patch_box.width * (1.0 + config.padding)
    region_h = patch_box.height * (1.0 + config.padding)
    pcx, pcy = patch_box.center()
    pred = BoundingBox.from_center(
        pcx + dx * region_w / config.patch_size,
        pcy + dy * region_h / config.patch_size,
        patch_box.width,
        patch_box.height,
    )

    # update with the label re-peaked at the localized position
    sigma_patch = config.sigma_ratio * config.patch_size / (1.0 + config.padding)
    for layer in stack.layers:
        lid = layer.spec.layer_id
        spec = layer.spec
        peak = (px / spec.stride % spec.width, py / spec.stride % spec.height)
        label = dft2(
            gaussian_label(spec.width, spec.height,
                           max(sigma_patch / spec.stride, 0.5), peak)
        )[:, :, 0]
        filt = state.bank.layers[lid]
        state.bank.layers[lid] = closed_form_update(
            filt, dft2(layer.data), label, gamma=config.gamma, lam=config.lam
        )
    state.history.append(HistoryEntry(stack=stack, grams=_stack_grams(stack)))
    state.box = pred
    state.frame_index += 1
    return pred


def track_stack_files(
    directory: str | Path, config: TrackerConfig
) -> tuple[list[BoundingBox], list[str]]:
    """Run the feature-file tracking loop over every stack in `directory`.

    Returns the per-frame predicted boxes (the first one is the export box
    of frame 0) and the frame names.
    """
    entries = list_stack_files(directory)
    boxes: list[BoundingBox] = []
    names: list[str] = []
    state = None
    for path, frame_name, box in entries:
        stack = load_feature_stack(path)
        if state is None:
            state = init_from_stack(stack, box, config)
            boxes.append(box)
        else:
            boxes.append(step_on_stack(state, stack, box))
        names.append(frame_name)
    return boxes, names
