"""Command-line entry point: ``sbinfer simulate | replay | selftest``.

A config file is one JSON object whose sections mirror the dataclass
field names::

    {"scenario":  {"d": 600, "T": 300, "s0": 3, "seed": 2024},
     "schedule":  {"c_eps": 1.0, "gamma": 0.3333},
     "learner":   {"s": 3, "eta_scale": 2.0},
     "inference": {"C_mu_arm": 0.5, "n_coords": 10},
     "method": "ipw", "n_trials": 100, "workers": 1, "keep_logs": 5}

Command-line flags override values from the file.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import fields
from pathlib import Path

from . import env, harness
from .env import ScenarioConfig
from .harness import ExperimentConfig, InferenceConfig, LearnerSettings
from .policy import ExplorationSchedule

log = logging.getLogger("sbinfer")

SECTIONS = {
    "scenario": ScenarioConfig,
    "schedule": ExplorationSchedule,
    "learner": LearnerSettings,
    "inference": InferenceConfig,
}
TOP_LEVEL = ("method", "n_trials", "workers", "keep_logs", "s0", "nu", "seed")
DEFAULT_SCENARIO = {"d": 600, "T": 300, "s0": 3, "seed": 2024}


class ConfigError(ValueError):
    pass


def _tuplify(v):
    if isinstance(v, list):
        return tuple(_tuplify(u) for u in v)
    return v


def _build(cls, values: dict, where: str):
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}; expected some of {sorted(known)}")
    try:
        return cls(**{k: _tuplify(v) for k, v in values.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def load_config(path: str | Path | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {p}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{p}: top level must be a JSON object")
    unknown = set(doc) - set(SECTIONS) - set(TOP_LEVEL)
    if unknown:
        raise ConfigError(f"{p}: unknown key(s) {sorted(unknown)}")
    return doc


def _schedule_section(doc: dict, args) -> dict:
    sched = dict(doc.get("schedule", {}))
    if getattr(args, "exploration_free", False):
        sched = {"mode": "exploration_free"}
    elif getattr(args, "gamma", None) is not None:
        sched.update(mode="epsilon_greedy", gamma=args.gamma)
    return sched


def experiment_from_args(args) -> ExperimentConfig:
    doc = load_config(args.config)
    scen = dict(DEFAULT_SCENARIO) if "scenario" not in doc else dict(doc["scenario"])
    if args.seed is not None:
        scen["seed"] = args.seed
    sched = _schedule_section(doc, args)
    if "mode" not in sched and "gamma" not in sched:
        sched["mode"] = "exploration_free"
    inf = dict(doc.get("inference", {}))
    if args.coords is not None:
        inf["n_coords"] = args.coords
    schedule = _build(ExplorationSchedule, sched, "schedule")
    scenario = _build(ScenarioConfig, scen, "scenario")
    method = args.method or doc.get("method") or ("ipw" if schedule.explores and scenario.K == 2 else "aw")
    return ExperimentConfig(
        scenario=scenario,
        schedule=schedule,
        learner=_build(LearnerSettings, doc.get("learner", {}), "learner"),
        method=method,
        inference=_build(InferenceConfig, inf, "inference"),
        n_trials=args.trials if args.trials is not None else int(doc.get("n_trials", 1)),
        workers=args.workers if args.workers is not None else int(doc.get("workers", 1)),
        keep_logs=args.keep_logs if args.keep_logs is not None else int(doc.get("keep_logs", 5)),
    )


def cmd_simulate(args) -> int:
    cfg = experiment_from_args(args)
    log.info("running %d trial(s): method=%s mode=%s gamma=%s d=%d T=%d s0=%d",
             cfg.n_trials, cfg.method, cfg.schedule.mode, cfg.schedule.gamma,
             cfg.scenario.d, cfg.scenario.T, cfg.scenario.s0)
    t0 = time.perf_counter()
    result = harness.run_experiment(cfg)
    elapsed = time.perf_counter() - t0
    paths = harness.export(result, args.out, runtime=elapsed)
    s = result.summary()
    print(f"trials={s['n_trials']} coverage_mean={s['coverage_mean']:.3f} "
          f"mean_ci_width={s['mean_ci_width']:.4f} final_regret={s['final_mean_cum_regret']:.3f} "
          f"value_coverage={s['value_coverage']:.3f} runtime={elapsed:.1f}s")
    print(f"wrote {len(paths)} files to {args.out}")
    return 0


def cmd_replay(args) -> int:
    doc = load_config(args.config)
    sched = _schedule_section(doc, args)
    if not sched:
        sched = {"mode": "exploration_free"}
    schedule = _build(ExplorationSchedule, sched, "schedule")
    settings = _build(LearnerSettings, doc.get("learner", {}), "learner")
    icfg = _build(InferenceConfig, doc.get("inference", {}), "inference")
    method = args.method or doc.get("method") or ("ipw" if schedule.explores and args.arms == 2 else "aw")
    rows = env.load_replay(args.data, args.d, args.arms)
    res = harness.run_replay(rows, args.d, args.arms, schedule, settings, method,
                             s0=int(doc.get("s0", 1)), nu=float(doc.get("nu", 1.0)), icfg=icfg,
                             seed=int(doc.get("seed", 0)))
    harness.export_replay(res, args.out)
    sig = sum(1 for *_, dt in res.report.diffs if dt.p < 1 - res.report.level)
    print(f"T={res.log.T} fraction_correct={res.log.y.mean():.4f} "
          f"value={res.report.value.v_hat:.4f} significant_diffs={sig}")
    print(f"wrote results to {args.out}")
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    return 0 if run_selftest(verbose=True) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sbinfer", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="replicated synthetic trials with inference and export")
    sim.add_argument("--config", help="JSON config file")
    sim.add_argument("--trials", type=int, help="number of independent trials")
    grp = sim.add_mutually_exclusive_group()
    grp.add_argument("--gamma", type=float, help="epsilon-greedy decay exponent")
    grp.add_argument("--exploration-free", action="store_true", help="set epsilon to 0")
    sim.add_argument("--method", choices=harness.METHODS)
    sim.add_argument("--out", default="out", help="output directory")
    sim.add_argument("--workers", type=int, help="worker processes")
    sim.add_argument("--keep-logs", type=int, help="persist the first N trajectory logs")
    sim.add_argument("--coords", type=int, help="debias only the first N coordinates")
    sim.add_argument("--seed", type=int, help="override the scenario seed")
    sim.set_defaults(func=cmd_simulate)

    rep = sub.add_parser("replay", help="bandit pass over a labelled CSV dataset")
    rep.add_argument("--data", required=True, help="CSV with header x1..xd,label")
    rep.add_argument("--d", type=int, required=True)
    rep.add_argument("--arms", type=int, required=True)
    rep.add_argument("--config", help="JSON config file")
    rep.add_argument("--method", choices=harness.METHODS)
    rep.add_argument("--out", default="out", help="output directory")
    rep.set_defaults(func=cmd_replay)

    st = sub.add_parser("selftest", help="run the oracle-equivalence checks")
    st.set_defaults(func=cmd_selftest)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, env.ReplayParseError, harness.UnsupportedMethodError) as exc:
        print(f"sbinfer: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
