"""Per-frame tracking orchestration.

Each step samples patches at several scales around the previous location,
computes per-layer correlation responses, fuses them on the patch grid with
the adaptive layer weights, penalizes each scale candidate by its style /
temporal / spatiotemporal-style mismatch, picks the best candidate, and then
updates the filters, the template history, and (in adaptive mode) the layer
weights from the objective breakdown.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from tacitdcf.features import (
    BankConfig,
    FeatureStack,
    apply_cosine_window,
    extract_patch,
    filterbank_stack,
)
from tacitdcf.filters import (
    FilterBank,
    FilterLayerState,
    ObjectiveBreakdown,
    RegularizationWeights,
    SpatialPenalty,
    apply_filter,
    closed_form_update,
    gauss_seidel_solve,
    make_spatial_penalty,
    objective_value,
    temporal_penalty_value,
)
from tacitdcf.fourier import dft2, gaussian_label
from tacitdcf.style import gram, st_style_distance, style_distance
from tacitdcf.weights import LayerWeights, error_cascade, update_weights

WEIGHT_MODES = ("uniform", "random", "adaptive")
SOLVER_MODES = ("closed-form", "gauss-seidel")


@dataclass
class BoundingBox:
    x: float
    y: float
    width: float
    height: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"box must have positive size: {self}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.width, self.height)

    def center(self) -> tuple[float, float]:
        return (self.x + self.width / 2.0, self.y + self.height / 2.0)

    @classmethod
    def from_center(cls, cx: float, cy: float, w: float, h: float) -> "BoundingBox":
        return cls(cx - w / 2.0, cy - h / 2.0, w, h)


@dataclass(frozen=True)
class TrackerConfig:
    bank: BankConfig = BankConfig()
    patch_size: int = 128
    padding: float = 1.0
    sigma_ratio: float = 1.0 / 16.0
    gamma: float = 0.025
    lam: float = 1e-2
    reg: RegularizationWeights = RegularizationWeights()
    eta: float = 1e-4
    scale_count: int = 5
    scale_step: float = 1.02
    weight_mode: str = "adaptive"
    solver: str = "closed-form"
    history_len: int = 10
    cosine_window: bool = True
    penalty_min: float = 0.1
    penalty_max: float = 3.0
    penalty_saturation: float = 3.0
    gs_max_iters: int = 50
    gs_tol: float = 1e-5
    gs_kernel_coeffs: int = 21
    seed: int = 0

    def __post_init__(self):
        if self.scale_count < 1 or self.scale_count % 2 == 0:
            raise ValueError(f"scale_count must be a positive odd number, got {self.scale_count}")
        if self.scale_step <= 1.0:
            raise ValueError(f"scale_step must exceed 1, got {self.scale_step}")
        if self.weight_mode not in WEIGHT_MODES:
            raise ValueError(f"weight_mode must be one of {WEIGHT_MODES}")
        if self.solver not in SOLVER_MODES:
            raise ValueError(f"solver must be one of {SOLVER_MODES}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if self.history_len < 1:
            raise ValueError("history_len must be >= 1")
        if self.padding < 0:
            raise ValueError("padding must be >= 0")


@dataclass
class HistoryEntry:
    stack: FeatureStack
    grams: dict[int, np.ndarray]


@dataclass
class CandidateScore:
    scale: float
    peak_value: float
    peak_x: float            # patch-grid coords of the fused response peak
    peak_y: float
    style_penalty: float
    temporal_penalty: float
    st_style_penalty: float

    @property
    def score(self) -> float:
        return self.peak_value - self.style_penalty - self.temporal_penalty - self.st_style_penalty


@dataclass
class StepDiagnostics:
    frame_index: int
    chosen_scale_index: int
    candidates: list[CandidateScore]
    breakdown: ObjectiveBreakdown | None = None
    weight_fallbacks: tuple[str, ...] = ()


@dataclass
class TrackerState:
    config: TrackerConfig
    bank: FilterBank
    weights: LayerWeights
    box: BoundingBox
    scale: float
    initial_size: tuple[float, float]
    frame_shape: tuple[int, int]
    history: deque
    initial_grams: dict[int, np.ndarray]
    penalties: dict[int, SpatialPenalty]
    rng: np.random.Generator
    frame_index: int = 0

    def template_grams(self) -> dict[int, np.ndarray]:
        """Element-wise mean of the initial and recent-history Gram matrices."""
        out = {}
        for lid, g0 in self.initial_grams.items():
            acc = g0.copy()
            for entry in self.history:
                acc += entry.grams[lid]
            out[lid] = acc / (1 + len(self.history))
        return out


def _target_patch_extent(config: TrackerConfig) -> float:
    """Side of the target inside the patch, in patch pixels (both axes)."""
    return config.patch_size / (1.0 + config.padding)


def _build_stack(frame: np.ndarray, box: BoundingBox, config: TrackerConfig) -> FeatureStack:
    patch = extract_patch(frame, box.as_tuple(), config.padding, config.patch_size)
    stack = filterbank_stack(patch, config.bank)
    if config.cosine_window:
        for layer in stack.layers:
            layer.data = apply_cosine_window(layer.data)
    return stack


def _layer_label(spec, config: TrackerConfig) -> np.ndarray:
    sigma_patch = config.sigma_ratio * _target_patch_extent(config)
    sigma = max(sigma_patch / spec.stride, 0.5)
    peak = (spec.width // 2, spec.height // 2)
    return dft2(gaussian_label(spec.width, spec.height, sigma, peak))[:, :, 0]


def _layer_penalty(spec, config: TrackerConfig) -> SpatialPenalty:
    extent = _target_patch_extent(config) / spec.stride
    return make_spatial_penalty(
        spec.width,
        spec.height,
        (extent, extent),
        config.penalty_min,
        config.penalty_max,
        config.penalty_saturation,
    )


def _stack_grams(stack: FeatureStack) -> dict[int, np.ndarray]:
    return {layer.spec.layer_id: gram(layer.data) for layer in stack.layers}


def init(frame: np.ndarray, box: BoundingBox, config: TrackerConfig) -> TrackerState:
    """Train first-frame filters and seed history/weights."""
    frame = np.asarray(frame, dtype=float)
    fh, fw = frame.shape[:2]
    if not (0 <= box.x and 0 <= box.y and box.x + box.width <= fw and box.y + box.height <= fh):
        raise ValueError(f"box {box} not inside {fw}x{fh} frame")

    stack = _build_stack(frame, box, config)
    layers: dict[int, FilterLayerState] = {}
    penalties: dict[int, SpatialPenalty] = {}
    for layer in stack.layers:
        spec = layer.spec
        label = _layer_label(spec, config)
        state = FilterLayerState.empty(spec, label)
        # first frame: full-weight update, no forgetting
        state = closed_form_update(state, dft2(layer.data), label, gamma=1.0, lam=config.lam)
        layers[spec.layer_id] = state
        penalties[spec.layer_id] = _layer_penalty(spec, config)

    bank = FilterBank(layers=layers, learning_rate=config.gamma, lam=config.lam)
    weights = LayerWeights.uniform(stack.layer_ids())
    grams = _stack_grams(stack)
    history: deque = deque(maxlen=config.history_len)
    history.append(HistoryEntry(stack=stack, grams=grams))
    return TrackerState(
        config=config,
        bank=bank,
        weights=weights,
        box=box,
        scale=1.0,
        initial_size=(box.width, box.height),
        frame_shape=(fh, fw),
        history=history,
        initial_grams={k: g.copy() for k, g in grams.items()},
        penalties=penalties,
        rng=np.random.default_rng(config.seed),
    )


def _upsample_response(resp: np.ndarray, stride: int, out_h: int, out_w: int) -> np.ndarray:
    """Periodic bilinear upsampling of a feature-grid response to the patch
    grid, honoring the stride's cell-center offset."""
    if stride == 1 and resp.shape == (out_h, out_w):
        return resp
    h, w = resp.shape
    rows = (np.arange(out_h) - (stride - 1) / 2.0) / stride
    cols = (np.arange(out_w) - (stride - 1) / 2.0) / stride
    r0 = np.floor(rows).astype(int)
    c0 = np.floor(cols).astype(int)
    fr = (rows - r0)[:, None]
    fc = (cols - c0)[None, :]
    r0 %= h
    c0 %= w
    r1 = (r0 + 1) % h
    c1 = (c0 + 1) % w
    top = resp[r0][:, c0] * (1 - fc) + resp[r0][:, c1] * fc
    bot = resp[r1][:, c0] * (1 - fc) + resp[r1][:, c1] * fc
    return top * (1 - fr) + bot * fr


def _fused_response(state: TrackerState, stack: FeatureStack) -> np.ndarray:
    size = stack.patch_size
    fused = np.zeros((size, size))
    for i, layer in enumerate(stack.layers):
        filt = state.bank.layers[layer.spec.layer_id]
        resp = apply_filter(filt, dft2(layer.data))
        fused += state.weights.data[i] * _upsample_response(
            resp, layer.spec.stride, size, size
        )
    return fused


def _wrapped_offset(peak: int, size: int) -> float:
    center = size // 2
    return float((peak - center + size // 2) % size - size // 2)


def _candidate_penalties(
    state: TrackerState, stack: FeatureStack, prev: HistoryEntry
) -> tuple[float, float, float]:
    reg = state.config.reg
    templates = state.template_grams()
    sty = tmp = sts = 0.0
    for i, layer in enumerate(stack.layers):
        lid = layer.spec.layer_id
        g = gram(layer.data)
        if reg.style > 0:
            sty += state.weights.style[i] * style_distance(g, templates[lid], layer.spec)
        if reg.temporal > 0:
            tmp += state.weights.temporal[i] * temporal_penalty_value(
                state.bank.layers[lid],
                dft2(layer.data),
                dft2(prev.stack.layer(lid).data),
            )
        if reg.st_style > 0:
            sts += state.weights.st_style[i] * st_style_distance(g, prev.grams[lid], layer.spec)
    return reg.style * sty, reg.temporal * tmp, reg.st_style * sts


def score_candidate(
    state: TrackerState,
    stack: FeatureStack,
    prev_stack: FeatureStack,
    scale: float,
) -> CandidateScore:
    """Score one candidate stack: fused response peak minus the weighted
    style / temporal / st-style penalties against `prev_stack`."""
    if stack.layer_ids() != state.bank.layer_ids():
        raise ValueError(
            f"stack layers {stack.layer_ids()} != tracker layers {state.bank.layer_ids()}"
        )
    fused = _fused_response(state, stack)
    peak_flat = int(np.argmax(fused))
    py, px = divmod(peak_flat, fused.shape[1])
    prev = HistoryEntry(stack=prev_stack, grams=_stack_grams(prev_stack))
    sty, tmp, sts = _candidate_penalties(state, stack, prev)
    return CandidateScore(
        scale=scale,
        peak_value=float(fused[py, px]),
        peak_x=float(px),
        peak_y=float(py),
        style_penalty=sty,
        temporal_penalty=tmp,
        st_style_penalty=sts,
    )


def _clamp_box(box: BoundingBox, fw: int, fh: int) -> BoundingBox:
    x = min(max(box.x, -box.width / 2.0), fw - box.width / 2.0)
    y = min(max(box.y, -box.height / 2.0), fh - box.height / 2.0)
    return BoundingBox(x, y, box.width, box.height)


def step(state: TrackerState, frame: np.ndarray) -> tuple[TrackerState, BoundingBox, StepDiagnostics]:
    """Track one frame: multi-scale search, candidate scoring, model update."""
    frame = np.asarray(frame, dtype=float)
    if frame.shape[:2] != state.frame_shape:
        raise ValueError(
            f"frame shape {frame.shape[:2]} != init frame shape {state.frame_shape}"
        )
    config = state.config
    mid = (config.scale_count - 1) // 2
    scale_factors = [config.scale_step ** (i - mid) for i in range(config.scale_count)]
    prev_entry = state.history[-1]
    penalties_active = (
        config.reg.style > 0 or config.reg.temporal > 0 or config.reg.st_style > 0
    )

    cx, cy = state.box.center()
    candidates: list[CandidateScore] = []
    candidate_boxes: list[BoundingBox] = []
    for s in scale_factors:
        w = state.box.width * s
        h = state.box.height * s
        sample_box = BoundingBox.from_center(cx, cy, w, h)
        stack = _build_stack(frame, sample_box, config)
        fused = _fused_response(state, stack)
        peak_flat = int(np.argmax(fused))
        py, px = divmod(peak_flat, fused.shape[1])
        dx = _wrapped_offset(px, fused.shape[1])
        dy = _wrapped_offset(py, fused.shape[0])
        # patch pixel -> image pixel at this scale
        region_w = w * (1.0 + config.padding)
        region_h = h * (1.0 + config.padding)
        img_dx = dx * region_w / config.patch_size
        img_dy = dy * region_h / config.patch_size
        cand_box = BoundingBox.from_center(cx + img_dx, cy + img_dy, w, h)
        cand_box = _clamp_box(cand_box, state.frame_shape[1], state.frame_shape[0])

        sty = tmp = sts = 0.0
        if penalties_active:
            cand_stack = _build_stack(frame, cand_box, config)
            sty, tmp, sts = _candidate_penalties(state, cand_stack, prev_entry)
        candidates.append(
            CandidateScore(
                scale=s,
                peak_value=float(fused[py, px]),
                peak_x=float(px),
                peak_y=float(py),
                style_penalty=sty,
                temporal_penalty=tmp,
                st_style_penalty=sts,
            )
        )
        candidate_boxes.append(cand_box)

    best = int(np.argmax([c.score for c in candidates]))
    new_box = candidate_boxes[best]
    state.scale *= scale_factors[best]
    state.box = new_box

    # model update on a fresh patch at the adopted location
    train_stack = _build_stack(frame, new_box, config)
    for layer in train_stack.layers:
        lid = layer.spec.layer_id
        filt = state.bank.layers[lid]
        state.bank.layers[lid] = closed_form_update(
            filt, dft2(layer.data), filt.label, gamma=config.gamma, lam=config.lam
        )
    if config.solver == "gauss-seidel":
        _resolve_filters(state, train_stack)

    breakdown = None
    fallbacks: tuple[str, ...] = ()
    if config.weight_mode == "adaptive":
        breakdown = objective_value(
            state.bank,
            train_stack,
            prev_entry.stack,
            state.template_grams(),
            state.weights,
            config.reg,
            state.penalties,
        )
        errors = error_cascade(breakdown, state.weights)
        state.weights, fallbacks = update_weights(state.weights, errors, config.eta)
    elif config.weight_mode == "random":
        state.weights = LayerWeights.random(state.bank.layer_ids(), state.rng)

    state.history.append(HistoryEntry(stack=train_stack, grams=_stack_grams(train_stack)))
    state.frame_index += 1
    diag = StepDiagnostics(
        frame_index=state.frame_index,
        chosen_scale_index=best,
        candidates=candidates,
        breakdown=breakdown,
        weight_fallbacks=fallbacks,
    )
    return state, new_box, diag


def _resolve_filters(state: TrackerState, current_stack: FeatureStack) -> None:
    """Periodic batch re-solve of every layer filter over the sample history
    with exponentially decaying weights."""
    config = state.config
    entries = list(state.history) + [HistoryEntry(stack=current_stack, grams={})]
    ages = np.arange(len(entries) - 1, -1, -1, dtype=float)
    alphas = (1.0 - config.gamma) ** ages
    alphas /= alphas.sum()
    for lid, filt in state.bank.layers.items():
        samples = [
            (dft2(entry.stack.layer(lid).data), float(a))
            for entry, a in zip(entries, alphas)
        ]
        result = gauss_seidel_solve(
            samples,
            filt.label,
            state.penalties[lid],
            config.reg.mask,
            max_iters=config.gs_max_iters,
            tol=config.gs_tol,
            init=filt,
            kernel_coeffs=config.gs_kernel_coeffs,
        )
        state.bank.layers[lid] = result.state
