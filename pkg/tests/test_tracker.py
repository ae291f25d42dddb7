import dataclasses

import numpy as np
import pytest

from tacitdcf.features import BankConfig
from tacitdcf.filters import RegularizationWeights
from tacitdcf.metrics import center_error, iou
from tacitdcf.sequences import ScenarioSpec, synth_sequence
from tacitdcf.tracker import (
    BoundingBox,
    TrackerConfig,
    _build_stack,
    init,
    score_candidate,
    step,
)

FAST = TrackerConfig(
    bank=BankConfig(levels=1),
    patch_size=64,
    scale_count=1,
    weight_mode="adaptive",
)


def _run(seq, config):
    gx, gy, gw, gh = seq.ground_truth[0]
    state = init(seq.frame(0), BoundingBox(gx, gy, gw, gh), config)
    boxes = [state.box]
    for i in range(1, len(seq)):
        state, box, _ = step(state, seq.frame(i))
        boxes.append(box)
    return state, boxes


class TestInit:
    def test_init_then_rescore_same_frame(self):
        seq = synth_sequence(ScenarioSpec(scenario="static", frames=2, seed=1))
        gx, gy, gw, gh = seq.ground_truth[0]
        state = init(seq.frame(0), BoundingBox(gx, gy, gw, gh), FAST)
        state, box, _ = step(state, seq.frame(0))
        assert abs(box.x - gx) <= 1.0 and abs(box.y - gy) <= 1.0
        assert state.scale == 1.0

    def test_history_capacity_one(self):
        cfg = dataclasses.replace(FAST, history_len=1)
        seq = synth_sequence(ScenarioSpec(scenario="static", frames=1, seed=2))
        gx, gy, gw, gh = seq.ground_truth[0]
        state = init(seq.frame(0), BoundingBox(gx, gy, gw, gh), cfg)
        assert len(state.history) == 1

    def test_all_black_frame_layer0_only(self):
        cfg = dataclasses.replace(FAST, bank=BankConfig(levels=0))
        frame = np.zeros((64, 96, 3))
        state = init(frame, BoundingBox(30, 20, 24, 24), cfg)
        assert state.bank.layer_ids() == (0,)
        layer0 = state.history[0].stack.layer(0)
        assert np.all(layer0.data == 0.0)

    def test_box_outside_frame_rejected(self):
        frame = np.zeros((32, 32, 3))
        with pytest.raises(ValueError):
            init(frame, BoundingBox(20, 20, 20, 20), FAST)


class TestStep:
    def test_static_sequence_no_drift(self):
        seq = synth_sequence(ScenarioSpec(scenario="static", frames=50, seed=3))
        _, boxes = _run(seq, FAST)
        gt = seq.ground_truth[0]
        for box in boxes:
            assert center_error(box.as_tuple(), gt) <= 1.0
        assert boxes[-1].width == gt[2]

    def test_translate_tracks_within_one_pixel(self):
        # default 128 patch: half-pixel response resolution over the region
        cfg = dataclasses.replace(FAST, patch_size=128)
        seq = synth_sequence(ScenarioSpec(scenario="translate", frames=20, dx=3.0, seed=4))
        _, boxes = _run(seq, cfg)
        for i in range(2, len(seq)):
            assert center_error(boxes[i].as_tuple(), seq.ground_truth[i]) <= 1.0

    def test_scale_count_one_freezes_scale(self):
        seq = synth_sequence(
            ScenarioSpec(scenario="zoom", frames=15, zoom_rate=1.02,
                         frame_size=(240, 200), seed=5)
        )
        state, boxes = _run(seq, FAST)
        assert state.scale == 1.0
        assert all(b.width == boxes[0].width for b in boxes)

    def test_frame_size_mismatch_rejected(self):
        seq = synth_sequence(ScenarioSpec(scenario="static", frames=1, seed=6))
        gx, gy, gw, gh = seq.ground_truth[0]
        state = init(seq.frame(0), BoundingBox(gx, gy, gw, gh), FAST)
        with pytest.raises(ValueError):
            step(state, np.zeros((10, 10, 3)))

    def test_weight_invariants_after_every_step(self):
        seq = synth_sequence(ScenarioSpec(scenario="translate", frames=10, seed=7))
        gx, gy, gw, gh = seq.ground_truth[0]
        state = init(seq.frame(0), BoundingBox(gx, gy, gw, gh), FAST)
        for i in range(1, len(seq)):
            state, _, _ = step(state, seq.frame(i))
            state.weights.check(tol=1e-12)

    def test_shift_equivariance_of_selection(self):
        spec = ScenarioSpec(scenario="static", frames=2, seed=8)
        seq = synth_sequence(spec)
        gx, gy, gw, gh = seq.ground_truth[0]
        shift = 4
        frame1 = seq.frame(1)
        shifted = np.roll(frame1, shift=shift, axis=1)

        state_a = init(seq.frame(0), BoundingBox(gx, gy, gw, gh), FAST)
        _, box_a, _ = step(state_a, frame1)
        state_b = init(seq.frame(0), BoundingBox(gx, gy, gw, gh), FAST)
        _, box_b, _ = step(state_b, shifted)
        assert abs((box_b.x - box_a.x) - shift) <= 1.0
        assert abs(box_b.y - box_a.y) <= 1.0


class TestDeterminism:
    @pytest.mark.parametrize("mode", ["uniform", "random", "adaptive"])
    def test_bitwise_identical_trajectories(self, mode):
        cfg = dataclasses.replace(FAST, weight_mode=mode, seed=11)
        seq = synth_sequence(ScenarioSpec(scenario="translate", frames=8, seed=9))
        _, boxes_a = _run(seq, cfg)
        _, boxes_b = _run(seq, cfg)
        assert [b.as_tuple() for b in boxes_a] == [b.as_tuple() for b in boxes_b]


class TestScoreCandidate:
    def _setup(self, seed=10):
        seq = synth_sequence(ScenarioSpec(scenario="translate", frames=3, seed=seed))
        gx, gy, gw, gh = seq.ground_truth[0]
        state = init(seq.frame(0), BoundingBox(gx, gy, gw, gh), FAST)
        stack1 = _build_stack(seq.frame(1), state.box, FAST)
        stack0 = state.history[0].stack
        return state, stack1, stack0

    def test_one_hot_fusion_follows_that_layer(self):
        state, stack, prev = self._setup()
        from tacitdcf.filters import apply_filter
        from tacitdcf.fourier import dft2
        from tacitdcf.tracker import _upsample_response

        for hot in range(len(state.weights.layer_ids)):
            onehot = np.zeros(len(state.weights.layer_ids))
            onehot[hot] = 1.0
            state.weights.data = onehot
            score = score_candidate(state, stack, prev, 1.0)
            layer = stack.layers[hot]
            resp = _upsample_response(
                apply_filter(state.bank.layers[layer.spec.layer_id], dft2(layer.data)),
                layer.spec.stride, stack.patch_size, stack.patch_size,
            )
            py, px = np.unravel_index(np.argmax(resp), resp.shape)
            assert (score.peak_y, score.peak_x) == (py, px)

    def test_identical_layer_responses_any_convex_fusion(self):
        state, stack, prev = self._setup(seed=12)
        # duplicate layer 0's tensor into layer 1 shape is not possible;
        # instead check: scaling the data weights by a convex re-split of
        # identical responses keeps the fused map equal to either response
        from tacitdcf.features import FeatureStack, StackLayer
        from tacitdcf.tracker import _fused_response

        layer0 = stack.layers[0]
        twin = FeatureStack(
            patch_size=stack.patch_size,
            layers=[
                StackLayer(layer0.spec, layer0.data.copy()),
                StackLayer(
                    dataclasses.replace(stack.layers[1].spec), stack.layers[1].data.copy()
                ),
            ],
        )
        state.weights.data = np.array([1.0, 0.0])
        full = _fused_response(state, twin)
        state.weights.data = np.array([0.6, 0.4])
        mixed_a = _fused_response(state, twin)
        state.weights.data = np.array([0.3, 0.7])
        mixed_b = _fused_response(state, twin)
        # with distinct layers the maps differ, but convexity keeps every
        # fused value between the two extreme single-layer maps
        state.weights.data = np.array([0.0, 1.0])
        other = _fused_response(state, twin)
        lo = np.minimum(full, other) - 1e-12
        hi = np.maximum(full, other) + 1e-12
        assert np.all(mixed_a >= lo) and np.all(mixed_a <= hi)
        assert np.all(mixed_b >= lo) and np.all(mixed_b <= hi)

    def test_zero_lambdas_rank_by_peak_only(self):
        cfg = dataclasses.replace(
            FAST, reg=RegularizationWeights(mask=0, style=0, temporal=0, st_style=0)
        )
        seq = synth_sequence(ScenarioSpec(scenario="translate", frames=3, seed=13))
        gx, gy, gw, gh = seq.ground_truth[0]
        state = init(seq.frame(0), BoundingBox(gx, gy, gw, gh), cfg)
        stack1 = _build_stack(seq.frame(1), state.box, cfg)
        stack2 = _build_stack(seq.frame(2), state.box, cfg)
        prev = state.history[0].stack
        s1 = score_candidate(state, stack1, prev, 1.0)
        s2 = score_candidate(state, stack2, prev, 1.0)
        assert s1.score == s1.peak_value
        assert s2.score == s2.peak_value
        assert (s1.score > s2.score) == (s1.peak_value > s2.peak_value)

    def test_layer_mismatch_rejected(self):
        state, stack, prev = self._setup(seed=14)
        from tacitdcf.features import FeatureStack

        shorter = FeatureStack(patch_size=stack.patch_size, layers=stack.layers[:1])
        with pytest.raises(ValueError):
            score_candidate(state, shorter, prev, 1.0)


class TestGaussSeidelMode:
    def test_in_loop_resolve_runs_and_tracks(self):
        cfg = TrackerConfig(
            bank=BankConfig(levels=1),
            patch_size=32,
            scale_count=1,
            solver="gauss-seidel",
            history_len=3,
            gs_max_iters=10,
            gs_tol=1e-4,
        )
        seq = synth_sequence(ScenarioSpec(scenario="translate", frames=6, dx=2.0, seed=15))
        _, boxes = _run(seq, cfg)
        for i in range(2, len(seq)):
            assert iou(boxes[i].as_tuple(), seq.ground_truth[i]) > 0.5
