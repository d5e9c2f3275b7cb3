import csv
import json
import math

import numpy as np
import pytest

from ntnbeam.bench import config as cfgmod
from ntnbeam.bench.complexity import (
    REFERENCE_CNN_TOTAL,
    REFERENCE_FNO_TOTAL,
    cnn_ops,
    complexity_estimate,
    fno_ops,
    wmmse_ops,
)
from ntnbeam.bench.scenarios import CSV_COLUMNS, MissingCheckpoint, render_csv, run_scenario

TINY = ["train.hidden=16", "train.width=4", "train.episodes=2", "train.T=4", "eval.episodes=2", "eval.T=3"]


def _cfg(scenario, *extra, **top):
    return cfgmod.resolve({"preset": "desk", "scenario": scenario, **top}, TINY + list(extra))


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestComplexity:
    def test_wmmse_reference(self):
        assert wmmse_ops(16, 64, 100) == 421068800

    def test_fno_formula(self):
        want = 2 * (2 * 16 * 64 * 4 + 2 * 16 * 64 * 6 + 8 * 20 + 8)
        assert fno_ops(16, 64, 8, 20) == pytest.approx(want)

    def test_cnn_formula(self):
        assert cnn_ops(16, 64, 3, 2, 8) == 14 * 62 * 2 * 8 * 9

    def test_estimate_keys(self):
        est = complexity_estimate(16, 64)
        assert est["reference_fno_total"] == REFERENCE_FNO_TOTAL
        assert est["reference_cnn_total"] == REFERENCE_CNN_TOTAL
        assert est["fno_pipeline"] > est["fno_layer"]
        assert "cnn_layers" not in complexity_estimate(2, 2)

    def test_validation(self):
        with pytest.raises(ValueError):
            wmmse_ops(0, 4)
        with pytest.raises(ValueError):
            cnn_ops(2, 8, k=3)


class TestConfig:
    def test_defaults_valid(self):
        cfg = cfgmod.resolve()
        assert cfg["system"]["B"] == 4 and cfg["train"]["gamma"] == 0.4
        assert cfgmod.train_config(cfg).episodes == 200

    def test_preset_and_overrides(self):
        cfg = cfgmod.resolve({"preset": "desk"}, ["train.gamma=0.2", "system.csi=multiplicative"], seed=7)
        assert cfg["system"]["N_haps"] == 8 and cfg["train"]["gamma"] == 0.2
        assert cfg["system"]["csi"] == "multiplicative" and cfg["seed"] == 7
        assert cfgmod.train_config(cfg).seed == 7

    def test_parse_override(self):
        assert cfgmod.parse_override("a.b=[1, 2]") == (["a", "b"], [1, 2])
        assert cfgmod.parse_override("a=fno") == (["a"], "fno")
        with pytest.raises(cfgmod.ConfigError):
            cfgmod.parse_override("novalue")
        with pytest.raises(cfgmod.ConfigError):
            cfgmod.apply_overrides({"a": 1}, ["a.b=2"])

    @pytest.mark.parametrize("patch", [
        {"scenario": "nope"}, {"train": {"gamma": "x"}}, {"system": {"B": 2.5}}, {"extra": 1},
        {"xi": [1.5]}, {"train": {"lr": -1.0}}, {"system": {"N_laps": 0}},
    ])
    def test_rejects(self, patch):
        with pytest.raises(cfgmod.ConfigError):
            cfgmod.resolve(patch)

    def test_manifest_as_config(self):
        cfg = _cfg("complexity")
        assert cfgmod.resolve({"manifest_version": 1, "config": cfg}) == cfg

    def test_load_errors(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            cfgmod.load(tmp_path / "missing.json")
        (tmp_path / "bad.json").write_text("[1]")
        with pytest.raises(cfgmod.ConfigError):
            cfgmod.load(tmp_path / "bad.json")


class TestScenarios:
    def test_csv_format(self):
        text = render_csv([("s", "m", 1.0, 3, 0.1, 0.2, 5.0)], timing=False)
        lines = text.splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert lines[1] == "s,m,1,3,0.10000000000000001,0.20000000000000001,0"

    def test_baseline_only_reproducible(self, tmp_path):
        man = run_scenario(_cfg("baseline_only"), tmp_path / "a")
        rows = _rows(tmp_path / "a" / "baseline_only.csv")
        assert [r["method"] for r in rows] == ["wmmse", "zf", "mrt"]
        assert all(r["wall_s"] == "0" for r in rows)
        again = run_scenario(cfgmod.resolve(json.loads((tmp_path / "a" / "baseline_only.manifest.json").read_text())),
                             tmp_path / "b")
        assert again["csv_sha256"] == man["csv_sha256"]
        assert man["versions"]["fft_backend"] in ("cython", "python")

    def test_missing_checkpoint(self, tmp_path):
        with pytest.raises(MissingCheckpoint, match="train_curve"):
            run_scenario(_cfg("sweep_l", methods=["fno"]), tmp_path)

    def test_train_then_sweeps(self, tmp_path):
        man = run_scenario(_cfg("train_curve", methods=["fno"]), tmp_path)
        assert man["checkpoints"] == ["checkpoints/fno_xi1.json"]
        assert len(_rows(tmp_path / "train_curve.csv")) == 2
        run_scenario(_cfg("sweep_l", methods=["fno", "zf"], values=[2.0, 6.0]), tmp_path)
        rows = _rows(tmp_path / "sweep_l.csv")
        assert [(r["method"], r["param"]) for r in rows] == [("fno", "2"), ("fno", "6"), ("zf", "2"), ("zf", "6")]
        run_scenario(_cfg("rate_vs_slot", methods=["fno"]), tmp_path)
        assert [r["param"] for r in _rows(tmp_path / "rate_vs_slot.csv")] == ["1", "2", "3"]
        run_scenario(_cfg("transfer_compare", methods=["fno"]), tmp_path)
        got = {(r["method"], r["param"]) for r in _rows(tmp_path / "transfer_compare.csv")}
        assert got == {("fno-full", "network"), ("fno-full", "haps"), ("fno-transfer", "network"),
                       ("fno-transfer", "haps")}

    def test_zf_infeasible_gives_nan(self, tmp_path):
        man = run_scenario(_cfg("sweep_K", methods=["zf"], values=[2, 6]), tmp_path)
        rows = _rows(tmp_path / "sweep_K.csv")
        assert math.isfinite(float(rows[0]["value_bpshz"]))
        assert math.isnan(float(rows[1]["value_bpshz"]))
        assert any("infeasible" in n for n in man["notes"])

    def test_buffer_vs_regen(self, tmp_path):
        man = run_scenario(_cfg("buffer_vs_regen", methods=["fno"]), tmp_path)
        rows = _rows(tmp_path / "buffer_vs_regen.csv")
        assert {r["method"] for r in rows} == {"fno-buffer", "fno-regenerate"}
        tx = man["buffer_transactions"]
        assert tx["fno-regenerate_xi1"]["laps"] == 0 < tx["fno-buffer_xi1"]["laps"]

    def test_complexity_rows(self, tmp_path):
        run_scenario(_cfg("complexity"), tmp_path)
        rows = {r["method"]: float(r["value_bpshz"]) for r in _rows(tmp_path / "complexity.csv")}
        assert rows["wmmse"] == wmmse_ops(4, 8)

    def test_timing_column(self, tmp_path):
        run_scenario(_cfg("baseline_only", methods=["mrt"], timing=True), tmp_path)
        assert float(_rows(tmp_path / "baseline_only.csv")[0]["wall_s"]) > 0
