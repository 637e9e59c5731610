import json

import pytest

from polarsim.cli import main
from polarsim.harness import parse_results


def run(args):
    return main([str(a) for a in args])


def test_selftest_passes(tmp_path):
    assert run(["--out", tmp_path, "selftest"]) == 0


def test_construct_writes_descriptor(tmp_path):
    assert run(["--out", tmp_path, "construct"]) == 0
    desc = json.loads((tmp_path / "code.json").read_text())
    assert desc["N"] == 64
    assert desc["K"] == 26
    assert desc["C"] == 6
    assert len(desc["info_set"]) == 32


def test_config_file_overrides(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"code": {"N": 16, "K": 8, "C": 0}}))
    assert run(["--config", cfg, "--out", tmp_path, "construct"]) == 0
    desc = json.loads((tmp_path / "code.json").read_text())
    assert desc["N"] == 16
    assert desc["C"] == 0


def test_unknown_config_key_fails_cleanly(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"codez": {}}))
    assert run(["--config", cfg, "--out", tmp_path, "construct"]) == 2
    assert "error:" in capsys.readouterr().err


def test_gradcheck_passes(tmp_path):
    assert run(["--out", tmp_path, "gradcheck", "--seed", 3]) == 0


def test_sweep_decoder_emits_results(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "code": {"N": 16, "K": 8, "C": 0},
        "sweep": {"snr_list": [2.0, 6.0], "min_block_errors": 10,
                  "max_blocks": 400, "chunk": 200},
    }))
    assert run(["--config", cfg, "--out", tmp_path, "--seed", 1,
                "sweep-decoder"]) == 0
    rows = parse_results(tmp_path / "decoder_sweep.csv")
    assert [r["snr_db"] for r in rows] == [2.0, 6.0]
    assert rows[0]["bler"] >= rows[1]["bler"]
    meta = json.loads((tmp_path / "decoder_sweep.csv.meta.json").read_text())
    assert meta["bp"]["seed"] == 1


def test_train_decoder_small_run(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "code": {"N": 16, "K": 8, "C": 0},
        "training": {"loss_kind": "frozen_synd", "batch": 256,
                     "codewords_per_snr": 80, "microbatch": 128},
    }))
    assert run(["--config", cfg, "--out", tmp_path, "train-decoder",
                "--epochs", 2]) == 0
    report = json.loads((tmp_path / "train_report_frozen_synd.json").read_text())
    assert len(report["epochs"]) == 2
    weights = json.loads((tmp_path / "weights_frozen_synd.json").read_text())
    assert weights["N"] == 16
    assert weights["mode"] == "shared"
    assert len(weights["alpha"]) == 4 * 16


def test_train_equalizer_small_run(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "code": {"N": 16, "K": 8, "C": 0},
        "equalizer": {"blind_epochs": 10},
    }))
    assert run(["--config", cfg, "--out", tmp_path, "train-equalizer",
                "--loss", "frozen_synd", "--snr-db", 8.0, "--blocks", 20]) == 0
    out = json.loads((tmp_path / "equalizer_frozen_synd.json").read_text())
    assert len(out["coeffs"]) == 5
    assert len(out["channel_taps"]) == 3


def test_sweep_equalizer_small_run(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "code": {"N": 16, "K": 8, "C": 0},
        "equalizer": {"blind_epochs": 8, "lms_passes": 1, "cma_passes": 1,
                      "olr_passes": 1},
        "sweep": {"snr_list": [6.0], "scenario": "block_fading",
                  "n_channels": 1, "adapt_blocks": 10, "meas_blocks": 20,
                  "methods": ["no_eq", "mmse_ts"]},
    }))
    assert run(["--config", cfg, "--out", tmp_path, "sweep-equalizer"]) == 0
    rows = parse_results(tmp_path / "equalizer_sweep.csv")
    assert sorted(r["method"] for r in rows) == ["mmse_ts", "no_eq"]
