import json

import numpy as np

from sbinfer import cli, env


def test_selftest_passes(capsys):
    assert cli.main(["selftest"]) == 0
    assert "[FAIL]" not in capsys.readouterr().out


def test_simulate_with_config(tmp_path, capsys):
    cfg = {"scenario": {"d": 15, "T": 40, "s0": 2, "seed": 1},
           "schedule": {"c_eps": 1.0, "gamma": 0.5}, "inference": {"n_coords": 4},
           "n_trials": 2, "keep_logs": 1}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    out = tmp_path / "out"
    assert cli.main(["simulate", "--config", str(tmp_path / "c.json"), "--out", str(out)]) == 0
    s = json.loads((out / "summary.json").read_text())
    assert s["method"] == "ipw" and s["n_trials"] == 2
    assert s["schedule"]["gamma"] == 0.5
    assert (out / "runtime.json").exists() and (out / "logs" / "trial_0000.npz").exists()
    # flags override the file
    assert cli.main(["simulate", "--config", str(tmp_path / "c.json"), "--exploration-free",
                     "--trials", "1", "--out", str(tmp_path / "o2")]) == 0
    s2 = json.loads((tmp_path / "o2" / "summary.json").read_text())
    assert s2["method"] == "aw" and s2["n_trials"] == 1


def test_same_seed_same_summary(tmp_path):
    cfg = {"scenario": {"d": 12, "T": 30, "s0": 2, "seed": 5}, "n_trials": 2, "keep_logs": 0}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    for name in ("a", "b"):
        assert cli.main(["simulate", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()


def test_bad_config_reports_error(tmp_path, capsys):
    (tmp_path / "c.json").write_text(json.dumps({"scenario": {"d": 5, "T": 5, "s0": 1, "colour": 1}}))
    assert cli.main(["simulate", "--config", str(tmp_path / "c.json")]) == 2
    assert "colour" in capsys.readouterr().err
    (tmp_path / "d.json").write_text("{not json")
    assert cli.main(["simulate", "--config", str(tmp_path / "d.json")]) == 2


def test_replay_command(tmp_path, capsys):
    X = np.random.default_rng(0).uniform(-1, 1, (60, 3))
    env.write_replay(tmp_path / "d.csv", X, np.arange(60) % 3)
    out = tmp_path / "out"
    assert cli.main(["replay", "--data", str(tmp_path / "d.csv"), "--d", "3", "--arms", "3", "--out", str(out)]) == 0
    assert (out / "accuracy.csv").exists()
    assert cli.main(["replay", "--data", str(tmp_path / "d.csv"), "--d", "3", "--arms", "3",
                     "--method", "ipw", "--out", str(out)]) == 2
    assert cli.main(["replay", "--data", str(tmp_path / "d.csv"), "--d", "3", "--arms", "2", "--out", str(out)]) == 2
