"""Trial execution, replicated experiments, offline replay and file export."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from . import debias, env, inference, learner, policy
from .env import ArmParams, ReplayRow, ScenarioConfig
from .inference import InferenceReport, UnsupportedMethodError, ValueInference, VarianceComponents
from .learner import HTConfig, LearnerState
from .policy import ExplorationSchedule

METHODS = ("ipw", "aw")
NOISE_ESTIMATES = ("online", "refit")
LOG_VERSION = 1


@dataclass
class TrajectoryLog:
    X: np.ndarray  # (T, d)
    eps: np.ndarray  # (T,)
    pv: np.ndarray  # (T, K)
    actions: np.ndarray  # (T,)
    y: np.ndarray  # (T,)
    optimal: np.ndarray | None = None
    regret: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def K(self) -> int:
        return self.pv.shape[1]

    @property
    def t(self) -> np.ndarray:
        return np.arange(1, self.T + 1)

    def validate(self) -> None:
        if not np.allclose(self.pv.sum(axis=1), 1.0, atol=1e-12, rtol=0):
            raise ValueError("propensity rows must sum to one")
        if self.actions.min() < 0 or self.actions.max() >= self.K:
            raise ValueError("action out of range")

    def save(self, path: str | Path) -> None:
        extra = {}
        if self.optimal is not None:
            extra["optimal"] = self.optimal
        if self.regret is not None:
            extra["regret"] = self.regret
        np.savez_compressed(path, version=LOG_VERSION, X=self.X, eps=self.eps, pv=self.pv,
                            actions=self.actions, y=self.y, meta=json.dumps(self.meta, sort_keys=True),
                            **extra)

    @classmethod
    def load(cls, path: str | Path) -> "TrajectoryLog":
        with np.load(path) as z:
            if int(z["version"]) != LOG_VERSION:
                raise ValueError(f"unsupported log version {int(z['version'])}")
            return cls(
                X=z["X"], eps=z["eps"], pv=z["pv"], actions=z["actions"], y=z["y"],
                optimal=z["optimal"] if "optimal" in z else None,
                regret=z["regret"] if "regret" in z else None,
                meta=json.loads(str(z["meta"])),
            )


@dataclass(frozen=True)
class InferenceConfig:
    level: float = 0.95
    C_mu_pooled: float = debias.DEFAULT_C_MU
    C_mu_arm: float = debias.DEFAULT_C_MU
    tol: float = debias.DEFAULT_TOL
    max_sweeps: int = debias.DEFAULT_MAX_SWEEPS
    n_coords: int | None = None  # leading coordinates to debias; None means all
    noise: str = "online"  # "online" (pre-update residuals) or "refit" (final estimate)

    def __post_init__(self):
        if self.noise not in NOISE_ESTIMATES:
            raise ValueError(f"unknown noise estimate {self.noise!r}")


@dataclass(frozen=True)
class LearnerSettings:
    """HT settings before the per-trial step size is resolved."""

    s: int | None = None  # default s0
    eta: float | None = None  # default eta_scale / pilot sparse top eigenvalue
    eta_scale: float = 2.0
    step_cap: float | None = 1.0

    def resolve(self, scenario_s0: int, d: int, K: int, X_pilot: np.ndarray) -> HTConfig:
        s = self.s if self.s is not None else learner.default_sparsity(scenario_s0, d)
        eta = self.eta if self.eta is not None else learner.default_eta(X_pilot, self.eta_scale, s=s)
        return HTConfig(d=d, s=s, eta=eta, K=K, step_cap=self.step_cap)


def _weighting(method: str) -> str:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    return "ipw" if method == "ipw" else "plain"


def _check_method(method: str, schedule: ExplorationSchedule, K: int) -> None:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if method == "ipw":
        if K != 2:
            raise UnsupportedMethodError("IPW inference is defined for two arms only; use aw")
        if not schedule.explores:
            raise UnsupportedMethodError("IPW inference needs an epsilon-greedy schedule")


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, 2, trial])


def scenario_params(scenario: ScenarioConfig) -> ArmParams:
    return env.gen_params(scenario, np.random.default_rng([scenario.seed, 0]))


def scenario_oracle_value(scenario: ScenarioConfig, params: ArmParams, n: int = 10**6) -> float:
    return env.oracle_value(scenario, params, np.random.default_rng([scenario.seed, 1]), n=n)


def _bandit_loop(X, respond, K, schedule, ht: HTConfig, weighting, rng):
    T, d = X.shape
    state = learner.new_state(ht)
    eps = np.zeros(T)
    pvs = np.zeros((T, K))
    actions = np.zeros(T, dtype=np.int64)
    ys = np.zeros(T)
    for t in range(1, T + 1):
        x = X[t - 1]
        if schedule.in_warmup(t):
            e = 1.0
            pv = policy.roundrobin_propensities(t, K)
        else:
            e = policy.epsilon_at(schedule, t)
            pv = policy.propensities(state.beta_hat, x, e, K)
        a = policy.sample_action(pv, rng)
        y = respond(t - 1, a)
        learner.step(state, x, pv, a, y, ht, weighting)
        eps[t - 1], pvs[t - 1], actions[t - 1], ys[t - 1] = e, pv, a, y
    return eps, pvs, actions, ys, state


def run_trial(scenario: ScenarioConfig, schedule: ExplorationSchedule, ht: LearnerSettings | HTConfig,
              method: str, trial_seed: int, params: ArmParams | None = None,
              trial: int = 0) -> tuple[TrajectoryLog, LearnerState]:
    """Run ``T`` rounds of the bandit and return the log and final learner state."""
    _check_method(method, schedule, scenario.K)
    params = scenario_params(scenario) if params is None else params
    rng = trial_rng(trial_seed, trial)
    X = env.draw_contexts(scenario, rng, scenario.T)
    if isinstance(ht, LearnerSettings):
        ht = ht.resolve(scenario.s0, scenario.d, scenario.K, X)
    means = X @ params.betas.T

    def respond(k, a):
        return env.reward(params, a, X[k], rng)

    eps, pvs, actions, ys, state = _bandit_loop(X, respond, scenario.K, schedule, ht,
                                                _weighting(method), rng)
    optimal = means.argmax(axis=1)
    regret = means.max(axis=1) - means[np.arange(scenario.T), actions]
    meta = {"K": scenario.K, "d": scenario.d, "s0": scenario.s0, "nu": scenario.margin_nu,
            "s": ht.s, "eta": ht.eta, "step_cap": ht.step_cap, "method": method, "weighting": _weighting(method),
            "c_eps": schedule.c_eps, "gamma": schedule.gamma, "mode": schedule.mode}
    log = TrajectoryLog(X, eps, pvs, actions, ys, optimal, regret, meta)
    return log, state


def learner_from_log(log: TrajectoryLog) -> LearnerState:
    m = log.meta
    ht = HTConfig(d=log.d, s=int(m["s"]), eta=float(m["eta"]), K=log.K, step_cap=m.get("step_cap"))
    return learner.run_log(log.X, log.pv, log.actions, log.y, ht, m["weighting"])


def _noise_estimates(state: LearnerState, log: TrajectoryLog, method: str):
    """Online and refit noise variances; an AW arm that was never pulled gets NaN."""
    unseen = state.count == 0
    if method == "aw" and unseen.any():
        counts = np.maximum(state.count, 1)
        online = np.where(unseen, np.nan, state.resid_sq_plain / counts)
        refit = np.full(log.K, np.nan)
        for i in np.flatnonzero(~unseen):
            sel = log.actions == i
            r2 = (log.y[sel] - log.X[sel] @ state.beta_hat[i]) ** 2
            refit[i] = r2.sum() / max(int(sel.sum()) - int(np.count_nonzero(state.beta_hat[i])), 1)
        return online, refit
    return (inference.noise_variance(state, method),
            inference.refit_noise_variance(state.beta_hat, log.X, log.actions, log.y, method, log.pv))


def infer(log: TrajectoryLog, state: LearnerState | None = None,
          icfg: InferenceConfig = InferenceConfig()) -> InferenceReport:
    """Debiased estimates, standard errors, CIs, pairwise tests and value inference."""
    m = log.meta
    method, K, d, T = m["method"], log.K, log.d, log.T
    gamma, c_eps = float(m["gamma"]), float(m["c_eps"])
    if state is None:
        state = learner_from_log(log)
    if method == "ipw" and K != 2:
        raise UnsupportedMethodError("IPW inference is defined for two arms only; use aw")
    n_coords = d if icfg.n_coords is None else min(d, icfg.n_coords)
    coords = np.arange(n_coords)
    covs = debias.accumulate_covariances(log.X, log.actions, K)
    raw = state.beta_hat[:, coords].copy()
    point = np.zeros((K, n_coords))
    factors = np.zeros((K, n_coords))
    if method == "ipw":
        mu = debias.mu_schedule("pooled", T, d, C_mu=icfg.C_mu_pooled)
        M = debias.build_decorr(covs, "pooled", mu, icfg.tol, icfg.max_sweeps, coords)
        for i in range(K):
            point[i] = debias.ipw_debias(state.beta_hat[i], log.X, log.actions, log.y, log.pv, i, M).point
            factors[i] = inference.s2_ipw(M, covs, i, c_eps, gamma, T)
    else:
        mu = debias.mu_schedule("arm", T, d, int(m["s0"]), float(m["nu"]), C_mu=icfg.C_mu_arm)
        for i in range(K):
            Mi = debias.build_decorr(covs, i, mu, icfg.tol, icfg.max_sweeps, coords)
            point[i] = debias.aw_debias(state.beta_hat[i], log.X, log.actions, log.y, i, Mi).point
            factors[i] = inference.quad_forms(Mi, covs.per_arm_plain[i])
    online, refit = _noise_estimates(state, log, method)
    sigma2 = online if icfg.noise == "online" else refit
    se = np.stack([inference.standard_error(sigma2[i], factors[i], T, gamma, method) for i in range(K)])
    lo, hi = inference.confidence_interval(point, se, icfg.level)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, point / np.where(se > 0, se, 1.0), np.where(np.isnan(se), np.nan, 0.0))
    p = np.vectorize(lambda v: inference.two_sided_p(v) if np.isfinite(v) else np.nan)(z)
    diffs = []
    var = se ** 2
    for a, b in combinations(range(K), 2):
        for k, l in enumerate(coords):
            diffs.append((int(l), a, b, inference.diff_test(point[a, k], point[b, k], var[a, k], var[b, k])))
    # value inference uses the plain per-arm noise estimates; unpulled arms add nothing to G_T
    counts = np.maximum(state.count, 1)
    sigma2_plain = state.resid_sq_plain / counts
    s2v = inference.value_variance(state, log.actions, sigma2_plain)
    v_hat = inference.value_estimate(log.y)
    v_se = math.sqrt(s2v / T)
    v_lo, v_hi = inference.confidence_interval(v_hat, v_se, icfg.level)
    return InferenceReport(
        method=method, level=icfg.level, T=T, gamma=gamma, c_eps=c_eps, coords=coords,
        raw=raw, point=point, se=se, ci_lo=lo, ci_hi=hi, z=z, p=p, diffs=diffs,
        value=ValueInference(v_hat, v_se, float(v_lo), float(v_hi)),
        components=VarianceComponents(sigma2, factors, method, refit),
    )


# ---------------------------------------------------------------------------
# replicated experiments


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig
    schedule: ExplorationSchedule
    learner: LearnerSettings = LearnerSettings()
    method: str = "aw"
    inference: InferenceConfig = InferenceConfig()
    n_trials: int = 1
    workers: int = 1
    keep_logs: int = 5


@dataclass
class TrialSummary:
    trial: int
    raw: np.ndarray
    point: np.ndarray
    se: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    diffs: np.ndarray  # (n_rows, 4): point, se, z, p
    value: tuple  # v_hat, se, ci_lo, ci_hi
    cum_regret: np.ndarray
    est_error: np.ndarray
    sigma2: np.ndarray = None  # (K,) noise estimate behind ``se``
    sigma2_refit: np.ndarray = None
    factors: np.ndarray = None  # (K, n_coords)
    log: TrajectoryLog | None = None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    truth: np.ndarray
    oracle_value: float
    trials: list
    coords: np.ndarray
    diff_index: list  # (coord, arm_a, arm_b) per diffs row

    @property
    def n_trials(self) -> int:
        return len(self.trials)

    def stack(self, name: str) -> np.ndarray:
        return np.stack([getattr(tr, name) for tr in self.trials])

    @property
    def covered(self) -> np.ndarray:
        truth = self.truth[:, self.coords]
        return (self.stack("ci_lo") <= truth) & (truth <= self.stack("ci_hi"))

    def se_with(self, sigma2: np.ndarray) -> np.ndarray:
        """Standard errors recomputed from per-trial noise estimates ``sigma2`` (n_trials, K)."""
        cfg = self.config
        T, gamma = cfg.scenario.T, cfg.schedule.gamma
        f = self.stack("factors")
        return np.stack([inference.standard_error(sigma2[:, i, None], f[:, i], T, gamma, cfg.method)
                         for i in range(f.shape[1])], axis=1)

    @property
    def coverage(self) -> np.ndarray:
        return self.covered.mean(axis=0)

    @property
    def mean_width(self) -> np.ndarray:
        return (self.stack("ci_hi") - self.stack("ci_lo")).mean(axis=0)

    @property
    def value_covered(self) -> np.ndarray:
        v = np.array([tr.value for tr in self.trials])
        return (v[:, 2] <= self.oracle_value) & (self.oracle_value <= v[:, 3])

    def summary(self) -> dict:
        cfg = self.config
        truth = self.truth[:, self.coords]
        pts = self.stack("point")
        v = np.array([tr.value for tr in self.trials])
        regret = self.stack("cum_regret")
        rej = self.stack("diffs")[:, :, 3] < 1 - cfg.inference.level
        return {
            "n_trials": self.n_trials,
            "method": cfg.method,
            "scenario": asdict(cfg.scenario),
            "schedule": asdict(cfg.schedule),
            "learner": asdict(cfg.learner),
            "inference": asdict(cfg.inference),
            "coverage_mean": float(self.coverage.mean()),
            "coverage_min": float(self.coverage.min()),
            "mean_ci_width": float(self.mean_width.mean()),
            "max_abs_bias": float(np.abs(pts.mean(axis=0) - truth).max()),
            "value_coverage": float(self.value_covered.mean()),
            "mean_value_hat": float(v[:, 0].mean()),
            "oracle_value": self.oracle_value,
            "final_mean_cum_regret": float(regret[:, -1].mean()),
            "diff_rejection_rate": rej.mean(axis=0).tolist(),
        }


def _summarise_trial(cfg: ExperimentConfig, params: ArmParams, trial: int, keep: bool) -> TrialSummary:
    log, state = run_trial(cfg.scenario, cfg.schedule, cfg.learner, cfg.method, cfg.scenario.seed,
                           params=params, trial=trial)
    rep = infer(log, state, cfg.inference)
    diffs = np.array([[dt.point, dt.se, dt.z, dt.p] for *_, dt in rep.diffs]).reshape(-1, 4)
    return TrialSummary(
        trial=trial, raw=rep.raw, point=rep.point, se=rep.se, ci_lo=rep.ci_lo, ci_hi=rep.ci_hi,
        diffs=diffs, value=(rep.value.v_hat, rep.value.se, rep.value.ci_lo, rep.value.ci_hi),
        cum_regret=np.cumsum(log.regret), est_error=learner.estimation_error(state, params.betas),
        sigma2=rep.components.sigma2_hat, sigma2_refit=rep.components.sigma2_refit,
        factors=rep.components.factors, log=log if keep else None,
    )


def _trial_worker(args):
    cfg, params, trial = args
    return _summarise_trial(cfg, params, trial, trial < cfg.keep_logs)


def run_experiment(cfg: ExperimentConfig, oracle_n: int = 10**6) -> ExperimentResult:
    """Independent trials with seeds derived from ``(scenario.seed, trial)``."""
    if cfg.n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    _check_method(cfg.method, cfg.schedule, cfg.scenario.K)
    params = scenario_params(cfg.scenario)
    jobs = [(cfg, params, i) for i in range(cfg.n_trials)]
    if cfg.workers <= 1:
        trials = [_trial_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            trials = list(pool.map(_trial_worker, jobs, chunksize=max(1, cfg.n_trials // (4 * cfg.workers))))
    d = cfg.scenario.d
    n_coords = d if cfg.inference.n_coords is None else min(d, cfg.inference.n_coords)
    coords = np.arange(n_coords)
    diff_index = [(int(l), a, b) for a, b in combinations(range(cfg.scenario.K), 2) for l in coords]
    return ExperimentResult(cfg, params.betas, scenario_oracle_value(cfg.scenario, params, oracle_n),
                            trials, coords, diff_index)


# ---------------------------------------------------------------------------
# offline replay


@dataclass
class ReplayResult:
    log: TrajectoryLog
    state: LearnerState
    report: InferenceReport


def run_replay(rows: list[ReplayRow], d: int, K: int, schedule: ExplorationSchedule,
               ht: LearnerSettings | HTConfig, method: str, s0: int = 1, nu: float = 1.0,
               icfg: InferenceConfig = InferenceConfig(), seed: int = 0) -> ReplayResult:
    """Bandit pass over a labelled dataset with 0/1 rewards for hitting the label."""
    _check_method(method, schedule, K)
    if not rows:
        raise ValueError("empty replay dataset")
    X = np.stack([r.x for r in rows])
    if X.shape[1] != d:
        raise ValueError(f"replay rows have {X.shape[1]} covariates, expected d={d}")
    labels = np.array([r.optimal_label for r in rows])
    if labels.max() >= K:
        raise ValueError("label outside the configured number of arms")
    if isinstance(ht, LearnerSettings):
        ht = ht.resolve(min(s0, d), d, K, X)
    rng = np.random.default_rng([seed, 3])

    def respond(k, a):
        return env.replay_reward(rows[k], a)

    eps, pvs, actions, ys, state = _bandit_loop(X, respond, K, schedule, ht, _weighting(method), rng)
    meta = {"K": K, "d": d, "s0": s0, "nu": nu, "s": ht.s, "eta": ht.eta, "step_cap": ht.step_cap, "method": method,
            "weighting": _weighting(method), "c_eps": schedule.c_eps, "gamma": schedule.gamma,
            "mode": schedule.mode}
    log = TrajectoryLog(X, eps, pvs, actions, ys, labels, 1.0 - ys, meta)
    return ReplayResult(log, state, infer(log, state, icfg))


# ---------------------------------------------------------------------------
# export


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write_csv(path: Path, header: list[str], rows) -> None:
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc


def _write_json(path: Path, obj) -> None:
    try:
        path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc


def export(result: ExperimentResult, out_dir: str | Path, runtime: float | None = None) -> list[Path]:
    """Write estimates/diffs/regret/value CSVs and ``summary.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    truth = result.truth[:, result.coords]
    raw = result.stack("raw").mean(axis=0)
    pts = result.stack("point").mean(axis=0)
    se = result.stack("se").mean(axis=0)
    lo = result.stack("ci_lo").mean(axis=0)
    hi = result.stack("ci_hi").mean(axis=0)
    cov = result.coverage
    K = truth.shape[0]
    est_rows = [(i, int(l), truth[i, k], raw[i, k], pts[i, k], se[i, k], lo[i, k], hi[i, k], cov[i, k])
                for i in range(K) for k, l in enumerate(result.coords)]
    _write_csv(out / "estimates.csv",
               ["arm", "coord", "truth", "point_raw", "point_debiased", "se", "ci_lo", "ci_hi", "covered"],
               est_rows)
    dm = result.stack("diffs").mean(axis=0)
    _write_csv(out / "diffs.csv", ["coord", "arm_a", "arm_b", "point", "se", "z", "p"],
               [(l, a, b, *dm[j]) for j, (l, a, b) in enumerate(result.diff_index)])
    reg = result.stack("cum_regret")
    sd = reg.std(axis=0, ddof=1) if reg.shape[0] > 1 else np.zeros(reg.shape[1])
    _write_csv(out / "regret.csv", ["t", "mean_cum_regret", "sd_cum_regret"],
               [(t + 1, reg[:, t].mean(), sd[t]) for t in range(reg.shape[1])])
    vc = result.value_covered
    _write_csv(out / "value.csv", ["trial", "v_hat", "se", "ci_lo", "ci_hi", "oracle_value", "covered"],
               [(tr.trial, *tr.value, result.oracle_value, vc[j]) for j, tr in enumerate(result.trials)])
    _write_json(out / "summary.json", result.summary())
    paths = [out / n for n in ("estimates.csv", "diffs.csv", "regret.csv", "value.csv", "summary.json")]
    if runtime is not None:
        _write_json(out / "runtime.json", {"seconds": runtime})
        paths.append(out / "runtime.json")
    logs_dir = out / "logs"
    for tr in result.trials:
        if tr.log is not None:
            logs_dir.mkdir(exist_ok=True)
            tr.log.save(logs_dir / f"trial_{tr.trial:04d}.npz")
    return paths


def export_replay(res: ReplayResult, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rep, log = res.report, res.log
    est_rows = [(i, int(l), "nan", rep.raw[i, k], rep.point[i, k], rep.se[i, k], rep.ci_lo[i, k],
                 rep.ci_hi[i, k], "nan")
                for i in range(log.K) for k, l in enumerate(rep.coords)]
    with (out / "estimates.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["arm", "coord", "truth", "point_raw", "point_debiased", "se", "ci_lo", "ci_hi", "covered"])
        for r in est_rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in r])
    _write_csv(out / "diffs.csv", ["coord", "arm_a", "arm_b", "point", "se", "z", "p"],
               [(l, a, b, dt.point, dt.se, dt.z, dt.p) for l, a, b, dt in rep.diffs])
    cum_reg = np.cumsum(log.regret)
    _write_csv(out / "regret.csv", ["t", "mean_cum_regret", "sd_cum_regret"],
               [(t + 1, cum_reg[t], 0.0) for t in range(log.T)])
    frac = np.cumsum(log.y) / log.t
    _write_csv(out / "accuracy.csv", ["t", "cum_fraction_correct"], [(t + 1, frac[t]) for t in range(log.T)])
    v = rep.value
    _write_csv(out / "value.csv", ["trial", "v_hat", "se", "ci_lo", "ci_hi", "oracle_value", "covered"],
               [(0, v.v_hat, v.se, v.ci_lo, v.ci_hi, 1.0, v.ci_lo <= 1.0 <= v.ci_hi)])
    _write_json(out / "summary.json", {
        "T": log.T, "K": log.K, "d": log.d, "method": rep.method,
        "fraction_correct": float(log.y.mean()), "value": asdict(v),
        "significant_diffs": sum(1 for *_, dt in rep.diffs if dt.p < 1 - rep.level),
    })
    log.save(out / "log.npz")
    return [out / n for n in ("estimates.csv", "diffs.csv", "regret.csv", "accuracy.csv", "value.csv",
                              "summary.json", "log.npz")]
