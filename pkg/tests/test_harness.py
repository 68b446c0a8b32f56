import csv
import json

import numpy as np
import pytest

from sbinfer import env, harness
from sbinfer.env import ReplayRow, ScenarioConfig
from sbinfer.harness import ExperimentConfig, InferenceConfig, LearnerSettings, TrajectoryLog
from sbinfer.inference import UnsupportedMethodError
from sbinfer.policy import ExplorationSchedule

SMALL = ScenarioConfig(d=20, T=60, s0=2, seed=77)
GREEDY = ExplorationSchedule(mode="exploration_free")
EPS = ExplorationSchedule(1.0, 1 / 3)


def _cfg(**kw):
    base = dict(scenario=SMALL, schedule=GREEDY, method="aw", n_trials=4, keep_logs=2)
    base.update(kw)
    return ExperimentConfig(**base)


def test_zero_horizon_rejected():
    with pytest.raises(ValueError):
        ScenarioConfig(d=5, T=0, s0=1)


def test_run_trial_deterministic():
    a, _ = harness.run_trial(SMALL, EPS, LearnerSettings(), "ipw", 1, trial=3)
    b, _ = harness.run_trial(SMALL, EPS, LearnerSettings(), "ipw", 1, trial=3)
    for name in ("X", "eps", "pv", "actions", "y", "regret"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    c, _ = harness.run_trial(SMALL, EPS, LearnerSettings(), "ipw", 1, trial=4)
    assert not np.array_equal(a.X, c.X)


def test_log_invariants_and_regret():
    log, _ = harness.run_trial(SMALL, EPS, LearnerSettings(), "ipw", 2)
    log.validate()
    assert np.array_equal(log.t, np.arange(1, SMALL.T + 1))
    assert np.all(log.regret >= 0)
    assert np.all(np.diff(np.cumsum(log.regret)) >= 0)
    assert np.all(log.regret[log.actions == log.optimal] == 0)


def test_ipw_needs_two_arms_and_exploration():
    with pytest.raises(UnsupportedMethodError):
        harness.run_trial(SMALL, GREEDY, LearnerSettings(), "ipw", 0)
    three = ScenarioConfig(d=5, T=10, s0=1, K=3, noise_sd=(0.5,) * 3)
    with pytest.raises(UnsupportedMethodError):
        harness.run_trial(three, EPS, LearnerSettings(), "ipw", 0)


def test_n_trials_one_matches_trial():
    res = harness.run_experiment(_cfg(n_trials=1), oracle_n=10**4)
    tr = res.trials[0]
    s = res.summary()
    assert s["final_mean_cum_regret"] == tr.cum_regret[-1]
    assert s["mean_value_hat"] == tr.value[0]
    assert np.array_equal(res.coverage, res.covered[0].astype(float))


def test_workers_do_not_change_results():
    r1 = harness.run_experiment(_cfg(workers=1), oracle_n=10**4)
    r2 = harness.run_experiment(_cfg(workers=2), oracle_n=10**4)
    assert r1.summary() == r2.summary()
    for name in ("point", "se", "cum_regret", "diffs"):
        assert np.array_equal(r1.stack(name), r2.stack(name))


def test_coverage_of_always_covering_interval():
    res = harness.run_experiment(_cfg(n_trials=2), oracle_n=10**4)
    for tr in res.trials:
        tr.ci_lo[:] = -np.inf
        tr.ci_hi[:] = np.inf
    assert np.all(res.coverage == 1.0)


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_export_schema_and_idempotence(tmp_path):
    res = harness.run_experiment(_cfg(), oracle_n=10**4)
    paths = harness.export(res, tmp_path / "a")
    est = _read_csv(tmp_path / "a" / "estimates.csv")
    assert est[0] == ["arm", "coord", "truth", "point_raw", "point_debiased", "se", "ci_lo", "ci_hi", "covered"]
    assert len(est) == 1 + 2 * SMALL.d
    assert _read_csv(tmp_path / "a" / "diffs.csv")[0] == ["coord", "arm_a", "arm_b", "point", "se", "z", "p"]
    reg = _read_csv(tmp_path / "a" / "regret.csv")
    assert reg[0] == ["t", "mean_cum_regret", "sd_cum_regret"] and len(reg) == 1 + SMALL.T
    val = _read_csv(tmp_path / "a" / "value.csv")
    assert val[0] == ["trial", "v_hat", "se", "ci_lo", "ci_hi", "oracle_value", "covered"] and len(val) == 5
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert 0 <= summary["coverage_mean"] <= 1
    assert sorted(p.name for p in (tmp_path / "a" / "logs").iterdir()) == ["trial_0000.npz", "trial_0001.npz"]
    before = {p.name: p.read_bytes() for p in paths}
    harness.export(res, tmp_path / "a")
    assert before == {p.name: p.read_bytes() for p in paths}
    harness.export(harness.run_experiment(_cfg(), oracle_n=10**4), tmp_path / "b")
    for p in paths:
        assert (tmp_path / "b" / p.name).read_bytes() == p.read_bytes()


def test_export_reports_unwritable_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    res = harness.run_experiment(_cfg(n_trials=1), oracle_n=10**4)
    with pytest.raises(OSError):
        harness.export(res, blocker / "sub")


@pytest.mark.parametrize("sched,method", [(EPS, "ipw"), (GREEDY, "aw")])
def test_report_replays_from_saved_log(tmp_path, sched, method):
    icfg = InferenceConfig(n_coords=8)
    log, state = harness.run_trial(SMALL, sched, LearnerSettings(), method, 9)
    rep = harness.infer(log, state, icfg)
    log.save(tmp_path / "log.npz")
    again = harness.infer(TrajectoryLog.load(tmp_path / "log.npz"), icfg=icfg)
    for name in ("raw", "point", "se", "ci_lo", "ci_hi", "z", "p"):
        assert np.abs(getattr(rep, name) - getattr(again, name)).max() <= 1e-9
    assert abs(rep.value.v_hat - again.value.v_hat) <= 1e-9
    assert abs(rep.value.se - again.value.se) <= 1e-9


def _rows(X, labels):
    return [ReplayRow(np.asarray(x, float), int(l)) for x, l in zip(X, labels)]


def test_replay_all_zero_labels_locks_on():
    X = np.random.default_rng(0).uniform(-1, 1, (50, 4))
    X[:, 0] = 1.0  # intercept column, so arm 0 can score above the untouched arm 1
    res = harness.run_replay(_rows(X, np.zeros(50)), 4, 2, GREEDY, LearnerSettings(), "aw")
    assert res.report.value.v_hat == 1.0
    assert np.all(res.log.regret == 0)


def test_replay_three_arm_rules():
    X = np.random.default_rng(1).uniform(-1, 1, (40, 3))
    rows = _rows(X, np.arange(40) % 3)
    with pytest.raises(UnsupportedMethodError):
        harness.run_replay(rows, 3, 3, EPS, LearnerSettings(), "ipw")
    res = harness.run_replay(rows, 3, 3, ExplorationSchedule(5.0, 1 / 3), LearnerSettings(), "aw")
    assert len(res.report.diffs) == 3 * 3
    with pytest.raises(ValueError):
        harness.run_replay(rows, 4, 3, GREEDY, LearnerSettings(), "aw")


def test_replay_oracle_labels_value_one():
    # a label that the greedy rule can always recover: label = 1 iff x1 > 0
    X = np.random.default_rng(2).uniform(-1, 1, (300, 2))
    labels = (X[:, 0] > 0).astype(int)
    log = TrajectoryLog(X, np.zeros(300), np.eye(2)[labels], labels, np.ones(300), labels, np.zeros(300),
                        {"method": "aw", "gamma": 0.0, "c_eps": 1.0, "s0": 1, "nu": 1.0, "s": 1,
                         "eta": 0.1, "step_cap": 1.0, "weighting": "plain"})
    assert harness.infer(log).value.v_hat == 1.0


def test_replay_export(tmp_path):
    X = np.random.default_rng(3).uniform(-1, 1, (30, 2))
    env.write_replay(tmp_path / "d.csv", X, (X[:, 0] > 0).astype(int))
    rows = env.load_replay(tmp_path / "d.csv", 2, 2)
    res = harness.run_replay(rows, 2, 2, GREEDY, LearnerSettings(), "aw")
    names = {p.name for p in harness.export_replay(res, tmp_path / "out")}
    assert {"estimates.csv", "accuracy.csv", "summary.json", "log.npz"} <= names
    acc = _read_csv(tmp_path / "out" / "accuracy.csv")
    assert len(acc) == 31 and float(acc[-1][1]) == pytest.approx(res.log.y.mean())
