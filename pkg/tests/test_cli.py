import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from binfwd import cli
from binfwd.channels import channel_to_dict, example_channel
from binfwd.optimize import OptReport

DATA = Path(__file__).resolve().parent.parent / "data"


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def body(text):
    return "\n".join(line for line in text.splitlines() if not line.startswith("# manifest"))


class TestTable1:
    def test_csv(self, capsys):
        code, out, _ = run(["table1", "--alphas", "0,0.5,1"], capsys)
        assert code == 0
        lines = body(out).splitlines()
        assert lines[0] == "alpha,C_nocsi,C_c,C_nc"
        row = [float(x) for x in lines[2].split(",")]
        np.testing.assert_allclose(row, [0.5, 0.8623, 0.8633, 0.8644], atol=5e-4)
        assert out.startswith("# manifest: ")

    def test_json(self, capsys):
        code, out, _ = run(["table1", "--alphas", "0.5", "--format", "json"], capsys)
        doc = json.loads(out)
        assert doc["manifest"]["subcommand"] == "table1"
        assert doc["rows"][0]["C_nc"] == pytest.approx(0.8643856, abs=1e-6)

    def test_empty_alphas(self, capsys):
        code, out, _ = run(["table1", "--alphas", ""], capsys)
        assert code == 0
        assert body(out).strip() == "alpha,C_nocsi,C_c,C_nc"

    @pytest.mark.parametrize("argv", [["table1", "--alphas", "0.5,x"], ["table1", "--alphas", "1.5"],
                                      ["table1", "--p", "0"]])
    def test_bad_values(self, argv, capsys):
        code, _, err = run(argv, capsys)
        assert code == 2
        assert "binfwd: error:" in err

    def test_out_file(self, tmp_path, capsys):
        path = tmp_path / "t.csv"
        assert run(["table1", "--out", str(path)], capsys)[0] == 0
        assert "alpha,C_nocsi" in path.read_text()


class TestSeed:
    def test_env_seed(self, monkeypatch, capsys):
        monkeypatch.setenv("BINFWD_SEED", "17")
        _, out, _ = run(["table1", "--alphas", "0", "--format", "json"], capsys)
        assert json.loads(out)["manifest"]["seed"] == 17

    def test_flag_beats_env(self, monkeypatch, capsys):
        monkeypatch.setenv("BINFWD_SEED", "17")
        _, out, _ = run(["table1", "--alphas", "0", "--format", "json", "--seed", "3"], capsys)
        assert json.loads(out)["manifest"]["seed"] == 3

    def test_bad_env_seed(self, monkeypatch, capsys):
        monkeypatch.setenv("BINFWD_SEED", "abc")
        assert run(["table1"], capsys)[0] == 2


class TestCapacity:
    def test_ptp_se(self, capsys):
        code, out, _ = run(["capacity", "--model", "ptp-se", "--channel",
                            str(DATA / "example_channel_a05.json"), "--restarts", "8"], capsys)
        assert code == 0
        doc = json.loads(out)
        assert doc["report"]["best_value"] == pytest.approx(0.8643856, abs=1e-3)
        assert "trajectories" not in doc["report"]
        assert len(doc["manifest"]["inputs"]) == 1

    def test_model_mismatch(self, capsys):
        code, _, err = run(["capacity", "--model", "mac", "--channel",
                            str(DATA / "example_channel_a05.json")], capsys)
        assert code == 2
        assert "mac" in err

    def test_schema_error(self, tmp_path, capsys):
        doc = channel_to_dict(example_channel(0.5, 0.2))
        doc["p_state"] = [0.5, 0.6, 0.0]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        code, _, err = run(["capacity", "--model", "ptp-se", "--channel", str(path)], capsys)
        assert code == 2
        assert "p_state" in err

    def test_missing_file(self, tmp_path, capsys):
        assert run(["capacity", "--model", "ptp-se", "--channel", str(tmp_path / "nope.json")], capsys)[0] == 2

    def test_infeasible_exit(self, monkeypatch, capsys):
        monkeypatch.setattr(cli, "maximize", lambda obj, opts: OptReport(
            float("nan"), {}, None, 1, [], float("nan"), False))
        code, _, _ = run(["capacity", "--model", "ptp-se", "--channel",
                          str(DATA / "example_channel_a05.json")], capsys)
        assert code == 4

    def test_budget_exit(self, capsys):
        code, _, err = run(["capacity", "--model", "sdrc", "--channel", str(DATA / "toy_sdrc.json"),
                            "--grid-levels", "60", "--restarts", "1"], capsys)
        assert code == 3
        assert "grid" in err


class TestRegion:
    def test_weights(self, capsys):
        code, out, _ = run(["region", "--channel", str(DATA / "toy_mac.json"), "--weights", "1:0,0:1",
                            "--restarts", "4"], capsys)
        assert code == 0
        lines = body(out).splitlines()
        assert lines[0] == "w1,w2,R1,R2,value"
        assert len(lines) == 3

    def test_bad_weights(self, capsys):
        code, _, _ = run(["region", "--channel", str(DATA / "toy_mac.json"), "--weights", "1-0"], capsys)
        assert code == 2


class TestFmeCommand:
    def test_preset(self, capsys):
        code, out, _ = run(["fme", "--preset", "eq17"], capsys)
        assert code == 0
        assert "R <= I(X,X_r;Y|S)" in out

    def test_system_file(self, tmp_path, capsys):
        path = tmp_path / "s.sys"
        path.write_text("vars a b\na <= b\nb <= 1\n")
        code, out, _ = run(["fme", "--system", str(path), "--keep", "a"], capsys)
        assert code == 0
        assert "a <= 1" in out

    def test_parse_error(self, tmp_path, capsys):
        path = tmp_path / "s.sys"
        path.write_text("vars a\na <= H(X\n")
        code, _, err = run(["fme", "--system", str(path)], capsys)
        assert code == 2
        assert "line 2" in err

    def test_needs_one_source(self, capsys):
        assert run(["fme"], capsys)[0] == 2


class TestSimCommands:
    def test_sim(self, tmp_path, capsys):
        cfg = json.loads((DATA / "toy_sim.json").read_text())
        cfg["trials"] = 5
        for name in ("toy_sdrc.json", "toy_decision.json"):
            shutil.copy(DATA / name, tmp_path / name)
        (tmp_path / "cfg.json").write_text(json.dumps(cfg))
        code, out, _ = run(["sim", "--config", str(tmp_path / "cfg.json")], capsys)
        assert code == 0
        doc = json.loads(out)
        assert doc["report"]["trials"] == 5
        assert doc["manifest"]["seed"] == 1
        assert len(doc["manifest"]["inputs"]) == 3

    def test_sim_missing_field(self, tmp_path, capsys):
        (tmp_path / "cfg.json").write_text(json.dumps({"n": 8}))
        code, _, err = run(["sim", "--config", str(tmp_path / "cfg.json")], capsys)
        assert code == 2
        assert "missing" in err

    def test_sim_budget(self, tmp_path, capsys):
        cfg = json.loads((DATA / "toy_sim.json").read_text())
        cfg.update(n=40, trials=1)
        for name in ("toy_sdrc.json", "toy_decision.json"):
            shutil.copy(DATA / name, tmp_path / name)
        (tmp_path / "cfg.json").write_text(json.dumps(cfg))
        assert run(["sim", "--config", str(tmp_path / "cfg.json")], capsys)[0] == 3

    def test_covering(self, capsys):
        code, out, _ = run(["covering", "--kernel-file", str(DATA / "covering_uniform.json"), "--n", "10",
                            "--r", "0.6", "--rb", "0.8", "--trials", "5"], capsys)
        assert code == 0
        assert json.loads(out)["report"]["pass_fraction"] == 1.0

    def test_covering_budget(self, capsys):
        assert run(["covering", "--kernel-file", str(DATA / "covering_uniform.json"), "--n", "40",
                    "--r", "0.6", "--rb", "0.8"], capsys)[0] == 3


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "binfwd", "--version"], capture_output=True, text=True)
    assert r.returncode == 0
    assert "binfwd" in r.stdout
