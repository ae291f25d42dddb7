import json

import numpy as np
import pytest

from tacitdcf.cli import main
from tacitdcf.config import dump_config, parse_config
from tacitdcf.harness import run_ablation, worker_cap
from tacitdcf.sequences import ScenarioSpec, synth_sequence, write_sequence
from tacitdcf.tracker import TrackerConfig

TINY_CONFIG = """
bank_levels = 1
patch_size = 32
scale_count = 1
history_len = 3
"""


@pytest.fixture()
def tiny_seq_dir(tmp_path):
    seq = synth_sequence(ScenarioSpec(scenario="static", frames=4, seed=1))
    return write_sequence(seq, tmp_path / "static-fixture")


class TestConfig:
    def test_round_trip(self):
        cfg = TrackerConfig()
        assert parse_config(dump_config(cfg)) == cfg

    def test_partial_override(self):
        cfg = parse_config("gamma = 0.1\nlambda_style = 0.2\nbank_levels = 1\n")
        assert cfg.gamma == 0.1
        assert cfg.reg.style == 0.2
        assert cfg.bank.levels == 1
        assert cfg.patch_size == TrackerConfig().patch_size

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown key"):
            parse_config("warp_speed = 9\n")

    def test_bad_value_names_line(self):
        with pytest.raises(ValueError, match="line 2"):
            parse_config("gamma = 0.1\nscale_count = lots\n")

    def test_comments_and_blanks_ignored(self):
        cfg = parse_config("# a comment\n\ngamma = 0.5  # trailing\n")
        assert cfg.gamma == 0.5


class TestWorkerCap:
    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("TACITDCF_THREADS", "3")
        assert worker_cap() == 3

    def test_bad_env_rejected(self, monkeypatch):
        monkeypatch.setenv("TACITDCF_THREADS", "many")
        with pytest.raises(ValueError):
            worker_cap()


class TestTrackCommand:
    def test_smoke_writes_boxes_and_report(self, tiny_seq_dir, tmp_path):
        cfg_file = tmp_path / "cfg.txt"
        cfg_file.write_text(TINY_CONFIG)
        out = tmp_path / "out"
        code = main([
            "track", "--seq", str(tiny_seq_dir), "--config", str(cfg_file),
            "--out", str(out), "--no-plots",
        ])
        assert code == 0
        lines = (out / "boxes.csv").read_text().strip().splitlines()
        assert len(lines) == 4  # one line per frame
        report = json.loads((out / "report.json").read_text())
        assert len(report["ious"]) == 4
        # csv reparses to the report's source boxes
        first = lines[0].split(",")
        assert int(first[0]) == 0 and len(first) == 5

    def test_missing_seq_dir_exits_2_naming_flag(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["track", "--seq", str(tmp_path / "nope"), "--out", str(tmp_path / "o")])
        assert exc.value.code == 2
        err = capsys.readouterr().err
        assert "--seq" in err and "usage" in err

    def test_bad_flag_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["track", "--nonsense"])
        assert exc.value.code == 2

    def test_plots_rendered_by_default(self, tiny_seq_dir, tmp_path):
        cfg_file = tmp_path / "cfg.txt"
        cfg_file.write_text(TINY_CONFIG)
        out = tmp_path / "out"
        code = main([
            "track", "--seq", str(tiny_seq_dir), "--config", str(cfg_file),
            "--out", str(out),
        ])
        assert code == 0
        assert (out / "success_curve.png").is_file()
        assert (out / "precision_curve.png").is_file()
        assert (out / "iou_trace.png").is_file()


class TestSynthCommand:
    def test_writes_sequence(self, tmp_path):
        out = tmp_path / "seq"
        code = main([
            "synth", "--scenario", "translate", "--out", str(out),
            "--frames", "3", "--seed", "5",
        ])
        assert code == 0
        assert len(list((out / "img").glob("*.png"))) == 3
        assert (out / "groundtruth_rect.txt").read_text().count("\n") == 3

    def test_impossible_scenario_exits_2(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main([
                "synth", "--scenario", "translate", "--out", str(tmp_path / "x"),
                "--frames", "500", "--dx", "10",
            ])
        assert exc.value.code == 2


class TestAblateCommand:
    def test_grid_complete_and_deterministic(self, tmp_path):
        cfg_file = tmp_path / "cfg.txt"
        cfg_file.write_text(TINY_CONFIG)
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        for out in (out_a, out_b):
            code = main([
                "ablate", "--scenario", "translate", "--seed", "7",
                "--frames", "6", "--config", str(cfg_file),
                "--out", str(out), "--no-plots",
            ])
            assert code == 0
        blob_a = (out_a / "ablation.json").read_bytes()
        blob_b = (out_b / "ablation.json").read_bytes()
        assert blob_a == blob_b
        payload = json.loads(blob_a)
        assert len(payload["rows"]) == 7 * 3  # subsets x weight modes
        seen = {(r["subset"], r["weight_mode"]) for r in payload["rows"]}
        assert len(seen) == 21


class TestBenchCommand:
    def test_aggregates_multiple_sequences(self, tmp_path):
        root = tmp_path / "root"
        for i, scenario in enumerate(["static", "translate"]):
            seq = synth_sequence(ScenarioSpec(scenario=scenario, frames=3, seed=i))
            write_sequence(seq, root / f"{scenario}-{i}")
        cfg_file = tmp_path / "cfg.txt"
        cfg_file.write_text(TINY_CONFIG)
        out = tmp_path / "out"
        code = main([
            "bench", "--root", str(root), "--config", str(cfg_file),
            "--out", str(out), "--no-plots",
        ])
        assert code == 0
        payload = json.loads((out / "bench.json").read_text())
        assert len(payload["sequences"]) == 2
        assert 0.0 <= payload["aggregate"]["auc"] <= 1.0


def test_run_ablation_rows_have_no_missing_cells():
    cfg = TrackerConfig(patch_size=32, scale_count=1, history_len=2)
    result = run_ablation(cfg, "static", seed=3, frames=3)
    assert len(result["rows"]) == 21
    for row in result["rows"]:
        for key in ("mean_iou", "auc", "precision_at_20", "mean_scale_ratio", "scale_jitter"):
            assert np.isfinite(row[key])
