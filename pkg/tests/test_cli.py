"""Command-line contracts: config strictness, exit codes, reruns, round trips."""

import hashlib
import json
import os
import subprocess
import sys

import pytest

from ugcn.cli import main


def run_cli(args, env=None):
    """In-process invocation; returns (exit_code)."""
    return main(args)


def sha(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


GEN_ARGS = ["gen", "--task", "forecast", "--case", "ieee33", "--q", "2",
            "--seed", "7", "--t-total", "24",
            "--set", "ops_min=1", "--set", "ops_max=3"]


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = str(tmp_path_factory.mktemp("data") / "ds")
    assert run_cli(GEN_ARGS + ["--out", out]) == 0
    return out


class TestGen:
    def test_writes_expected_files(self, dataset):
        files = sorted(os.listdir(dataset))
        assert "manifest.json" in files
        assert sum(f.endswith(".ugcn.json") for f in files) == 2

    def test_rerun_is_byte_identical(self, dataset, tmp_path):
        out2 = str(tmp_path / "ds2")
        assert run_cli(GEN_ARGS + ["--out", out2]) == 0
        for name in sorted(os.listdir(dataset)):
            if name.endswith(".ugcn.json"):
                assert sha(os.path.join(dataset, name)) == sha(os.path.join(out2, name))

    def test_parallel_matches_serial(self, dataset, tmp_path):
        out2 = str(tmp_path / "dsj")
        assert run_cli(GEN_ARGS + ["--out", out2, "--jobs", "2"]) == 0
        for name in sorted(os.listdir(dataset)):
            if name.endswith(".ugcn.json"):
                assert sha(os.path.join(dataset, name)) == sha(os.path.join(out2, name))

    def test_unknown_config_key_exits_2(self, tmp_path):
        code = run_cli(GEN_ARGS + ["--out", str(tmp_path / "x"), "--set", "bogus_key=1"])
        assert code == 2

    def test_unknown_key_in_config_file_exits_2(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"q": 1, "mistyped": True}))
        assert run_cli(["gen", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2

    def test_generation_failure_exits_3(self, tmp_path):
        code = run_cli(["gen", "--task", "forecast", "--q", "1", "--t-total", "24",
                        "--set", "ops_min=1", "--set", "ops_max=2",
                        "--set", "node_min=500", "--set", "node_max=600",
                        "--out", str(tmp_path / "x")])
        assert code == 3

    def test_help_lists_defaults(self, capsys):
        with pytest.raises(SystemExit):
            main(["train", "--help"])
        out = capsys.readouterr().out
        assert "epochs=280" in out
        assert "lr=0.002" in out

    def test_env_seed_is_last_resort(self, tmp_path, monkeypatch):
        monkeypatch.setenv("UGCN_SEED", "7")
        out_env = str(tmp_path / "env")
        assert run_cli(["gen", "--task", "forecast", "--q", "1", "--t-total", "24",
                        "--set", "ops_min=1", "--set", "ops_max=2",
                        "--out", out_env]) == 0
        out_flag = str(tmp_path / "flag")
        assert run_cli(["gen", "--task", "forecast", "--q", "1", "--t-total", "24",
                        "--set", "ops_min=1", "--set", "ops_max=2",
                        "--seed", "7", "--out", out_flag]) == 0
        assert sha(os.path.join(out_env, "system_000.ugcn.json")) == \
            sha(os.path.join(out_flag, "system_000.ugcn.json"))


TRAIN_SETS = ["--set", "epochs=3", "--set", "batch_systems=2",
              "--set", "windows_per_system=2", "--set", "widths=[10,6,6]",
              "--set", "pooled_nodes=4", "--set", "hidden=12",
              "--set", "early_stop_patience=99"]


class TestTrainEval:
    def test_train_eval_report_round_trip(self, dataset, tmp_path):
        ckpt = str(tmp_path / "m.ckpt.json")
        assert run_cli(["train", "--task", "forecast", "--data", dataset,
                        "--out", ckpt, "--seed", "1"] + TRAIN_SETS) == 0
        assert os.path.exists(ckpt)
        hist = ckpt.replace(".json", "") + ".history.csv"
        hist = str(tmp_path / "m.ckpt.history.csv")
        assert os.path.exists(hist)
        lines = open(hist).read().strip().splitlines()
        assert lines[0] == "epoch,loss,val_loss"
        assert len(lines) == 4

        report = str(tmp_path / "rep.json")
        csv_out = str(tmp_path / "rep.csv")
        assert run_cli(["eval", "--checkpoint", ckpt, "--data", dataset,
                        "--out", report, "--csv", csv_out,
                        "--set", "horizons=[0,1]", "--set", "stride=8"]) == 0
        doc = json.loads(open(report).read())
        assert doc["task"] == "forecast"
        assert set(doc["horizons"]) == {"0", "1"}
        rows = open(csv_out).read().strip().splitlines()
        assert rows[0] == "model,horizon,mse"
        assert len(rows) == 3

        assert run_cli(["report", report, report, "--csv",
                        str(tmp_path / "merged.csv")]) == 0

    def test_resume_matches_uninterrupted(self, dataset, tmp_path):
        full = str(tmp_path / "full.ckpt.json")
        assert run_cli(["train", "--task", "forecast", "--data", dataset,
                        "--out", full, "--seed", "3", "--epochs", "4"]
                       + TRAIN_SETS[2:]) == 0
        part = str(tmp_path / "part.ckpt.json")
        assert run_cli(["train", "--task", "forecast", "--data", dataset,
                        "--out", part, "--seed", "3", "--epochs", "2"]
                       + TRAIN_SETS[2:]) == 0
        resumed = str(tmp_path / "resumed.ckpt.json")
        assert run_cli(["train", "--task", "forecast", "--data", dataset,
                        "--out", resumed, "--seed", "3", "--epochs", "4",
                        "--resume", part] + TRAIN_SETS[2:]) == 0
        a = json.loads(open(full).read())["payload"]["params"]
        b = json.loads(open(resumed).read())["payload"]["params"]
        assert a == b

    def test_missing_dataset_exits_2(self, tmp_path):
        assert run_cli(["train", "--data", str(tmp_path / "nope"),
                        "--out", str(tmp_path / "m.json")]) == 2

    def test_task_mismatch_exits_2(self, dataset, tmp_path):
        assert run_cli(["train", "--task", "fdi", "--data", dataset,
                        "--out", str(tmp_path / "m.json")] + TRAIN_SETS) == 2

    def test_model_flag_mismatch_exits_2(self, dataset, tmp_path):
        ckpt = str(tmp_path / "m.ckpt.json")
        assert run_cli(["train", "--task", "forecast", "--data", dataset,
                        "--out", ckpt, "--seed", "1"] + TRAIN_SETS) == 0
        assert run_cli(["eval", "--checkpoint", ckpt, "--data", dataset,
                        "--out", str(tmp_path / "r.json"),
                        "--model", "dense"]) == 2

    def test_dense_baseline_path(self, dataset, tmp_path):
        ckpt = str(tmp_path / "d.ckpt.json")
        assert run_cli(["train", "--task", "forecast", "--model", "dense",
                        "--data", dataset, "--out", ckpt, "--seed", "1",
                        "--set", "epochs=3", "--set", "windows_per_system=2",
                        "--set", "dense_hidden=16", "--set", "dense_depth=1"]) == 0
        report = str(tmp_path / "d.json")
        assert run_cli(["eval", "--checkpoint", ckpt, "--data", dataset,
                        "--out", report, "--set", "horizons=[1]",
                        "--set", "stride=8"]) == 0
        assert json.loads(open(report).read())["model"] == "dense"


class TestReportCmd:
    def test_not_a_report_exits_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        assert run_cli(["report", str(bad)]) == 2

    def test_entry_point_runs(self):
        out = subprocess.run([sys.executable, "-m", "ugcn.cli", "--help"],
                             capture_output=True, text=True)
        assert out.returncode == 0
        assert "gen" in out.stdout
