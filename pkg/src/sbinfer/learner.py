"""Online hard-thresholding estimator for per-arm sparse coefficients.

Each step folds the new observation into a (propensity-weighted) running
covariance and response sum, takes one gradient step on the averaged
least-squares loss, and projects back onto ``s``-sparse vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg.blas import dger

SNAPSHOT_VERSION = 1
WEIGHTINGS = ("ipw", "plain")


@dataclass(frozen=True)
class HTConfig:
    d: int
    s: int
    eta: float
    K: int = 2
    # per-step cap eta_t = min(eta, step_cap / lambda_max) on the touched coordinates;
    # None runs the plain constant step
    step_cap: float | None = 1.0

    def __post_init__(self):
        if not 1 <= self.s <= self.d:
            raise ValueError(f"sparsity s must lie in [1, d={self.d}], got {self.s}")
        if not self.eta > 0:
            raise ValueError(f"step size must be positive, got {self.eta}")
        if self.K < 2:
            raise ValueError("K must be at least 2")


@dataclass
class LearnerState:
    K: int
    d: int
    t: int = 0
    beta_hat: np.ndarray = field(default=None)
    # unnormalised sums; the running averages are cov_sum / t
    cov_sum: list = field(default=None)
    xy_sum: np.ndarray = field(default=None)
    resid_sq_ipw: np.ndarray = field(default=None)
    resid_sq_plain: np.ndarray = field(default=None)
    count: np.ndarray = field(default=None)
    sum_y: float = 0.0
    sum_pred: float = 0.0
    sum_pred_sq: float = 0.0

    def __post_init__(self):
        K, d = self.K, self.d
        if self.beta_hat is None:
            self.beta_hat = np.zeros((K, d))
        if self.cov_sum is None:
            # Fortran order lets BLAS dger update in place
            self.cov_sum = [np.zeros((d, d), order="F") for _ in range(K)]
        if self.xy_sum is None:
            self.xy_sum = np.zeros((K, d))
        if self.resid_sq_ipw is None:
            self.resid_sq_ipw = np.zeros(K)
        if self.resid_sq_plain is None:
            self.resid_sq_plain = np.zeros(K)
        if self.count is None:
            self.count = np.zeros(K, dtype=np.int64)

    @property
    def sigma_hat_w(self) -> np.ndarray:
        """Per-arm weighted covariances, shape ``(K, d, d)``."""
        if self.t == 0:
            return np.zeros((self.K, self.d, self.d))
        return np.stack([c / self.t for c in self.cov_sum])


def new_state(cfg: HTConfig) -> LearnerState:
    return LearnerState(K=cfg.K, d=cfg.d)


def hard_threshold(v: np.ndarray, s: int) -> np.ndarray:
    """Keep the ``s`` largest-magnitude entries of ``v`` (ties: lower index)."""
    v = np.asarray(v, dtype=float)
    if not 1 <= s <= v.size:
        raise ValueError(f"s must lie in [1, {v.size}], got {s}")
    out = np.zeros_like(v)
    keep = np.argsort(-np.abs(v), kind="stable")[:s]
    out[keep] = v[keep]
    return out


def step(state: LearnerState, x: np.ndarray, pv: np.ndarray, a: int, y: float,
         cfg: HTConfig, weighting: str = "ipw") -> LearnerState:
    """Process one observation in place and return the state."""
    x = np.asarray(x, dtype=float)
    if x.shape != (cfg.d,) or state.d != cfg.d or len(pv) != state.K:
        raise ValueError("dimension mismatch between observation, state and config")
    if weighting not in WEIGHTINGS:
        raise ValueError(f"unknown weighting {weighting!r}")
    if not 0 <= a < state.K:
        raise IndexError(f"arm {a} out of range")
    t = state.t + 1
    state.t = t

    pred = state.beta_hat @ x
    p_a = float(pv[a])
    r2 = (y - pred[a]) ** 2
    state.resid_sq_plain[a] += r2
    if p_a > 0:
        state.resid_sq_ipw[a] += r2 / p_a
    state.count[a] += 1
    state.sum_y += y
    state.sum_pred += pred[a]
    state.sum_pred_sq += pred[a] ** 2

    if weighting == "plain":
        w = 1.0
    else:
        # zero-propensity guard: the indicator term is taken as 0
        w = 1.0 / p_a if p_a > 0 else 0.0
    if w != 0.0:
        state.cov_sum[a] = dger(w, x, x, a=state.cov_sum[a], overwrite_a=1)
        state.xy_sum[a] += w * y * x

    for i in range(state.K):
        b = state.beta_hat[i]
        nz = np.flatnonzero(b)
        grad = -2.0 / t * state.xy_sum[i]
        if nz.size:
            grad += 2.0 / t * (state.cov_sum[i][:, nz] @ b[nz])
        state.beta_hat[i] = hard_threshold(b - _step_size(state, i, nz, grad, cfg) * grad, cfg.s)
    return state


def _step_size(state: LearnerState, arm: int, nz: np.ndarray, grad: np.ndarray, cfg: HTConfig) -> float:
    """Constant step, capped by the curvature on the support the update can reach.

    Early on the running covariance is built from a handful of samples and
    its restricted top eigenvalue can be ~ s * D^2, far above the population
    value, which makes a constant step diverge.
    """
    if cfg.step_cap is None:
        return cfg.eta
    k = min(2 * cfg.s, grad.size)
    top = np.argpartition(-np.abs(grad), k - 1)[:k]
    U = np.union1d(nz, top)
    sub = state.cov_sum[arm][np.ix_(U, U)] / state.t
    lam = float(np.linalg.eigvalsh(sub)[-1])
    if lam <= 0:
        return cfg.eta
    return min(cfg.eta, cfg.step_cap / lam)


def run_log(X: np.ndarray, pvs: np.ndarray, actions: np.ndarray, ys: np.ndarray,
            cfg: HTConfig, weighting: str = "ipw") -> LearnerState:
    """Replay a whole trajectory through the learner."""
    state = new_state(cfg)
    for x, pv, a, y in zip(X, pvs, actions, ys):
        step(state, x, pv, int(a), float(y), cfg, weighting)
    return state


def estimation_error(state: LearnerState, truth: np.ndarray) -> np.ndarray:
    truth = np.asarray(truth, dtype=float)
    if truth.shape != state.beta_hat.shape:
        raise ValueError("truth shape does not match estimates")
    return np.linalg.norm(state.beta_hat - truth, axis=1)


def top_eigenvalue(A: np.ndarray, iters: int = 100, seed: int = 0) -> float:
    """Power iteration for the largest eigenvalue of a symmetric PSD matrix."""
    v = np.random.default_rng(seed).standard_normal(A.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = A @ v
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return 0.0
        v = w / nrm
        lam_new = float(v @ A @ v)
        if abs(lam_new - lam) <= 1e-10 * max(1.0, lam_new):
            return lam_new
        lam = lam_new
    return lam


def sparse_top_eigenvalue(A: np.ndarray, k: int, iters: int = 100) -> float:
    """Truncated power iteration: largest Rayleigh quotient over ``k``-sparse vectors."""
    d = A.shape[0]
    k = min(k, d)
    v = np.zeros(d)
    v[np.argsort(-np.diag(A), kind="stable")[:k]] = 1.0
    v /= np.linalg.norm(v)
    lam = float(v @ A @ v)
    for _ in range(iters):
        w = hard_threshold(A @ v, k)
        nrm = np.linalg.norm(w)
        if nrm == 0:
            break
        v = w / nrm
        lam_new = float(v @ A @ v)
        if abs(lam_new - lam) <= 1e-10 * max(1.0, abs(lam_new)):
            return lam_new
        lam = lam_new
    return lam


def default_eta(X: np.ndarray, scale: float = 2.0, n_pilot: int = 50, fallback: float = 0.05,
                s: int | None = None) -> float:
    """``scale / lambda_max`` of the pilot covariance of the first contexts.

    With ``s`` given the eigenvalue is restricted to ``2s``-sparse directions.
    """
    X = np.asarray(X, dtype=float)[:n_pilot]
    if X.shape[0] == 0:
        return fallback
    A = X.T @ X / X.shape[0]
    lam = top_eigenvalue(A) if s is None else sparse_top_eigenvalue(A, 2 * s)
    if not np.isfinite(lam) or lam <= 0:
        return fallback
    return scale / lam


def default_sparsity(s0: int, d: int) -> int:
    # larger multiples of s0 let spurious coordinates in at T ~ d/2 and raise regret
    return min(d, s0)


def save_state(state: LearnerState, path: str | Path) -> None:
    np.savez(
        path,
        version=SNAPSHOT_VERSION,
        K=state.K, d=state.d, t=state.t,
        beta_hat=state.beta_hat,
        cov_sum=np.stack(state.cov_sum) if state.cov_sum else np.zeros((0,)),
        xy_sum=state.xy_sum,
        resid_sq_ipw=state.resid_sq_ipw,
        resid_sq_plain=state.resid_sq_plain,
        count=state.count,
        value_sums=np.array([state.sum_y, state.sum_pred, state.sum_pred_sq]),
    )


def load_state(path: str | Path) -> LearnerState:
    with np.load(path) as z:
        if int(z["version"]) != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {int(z['version'])}")
        vs = z["value_sums"]
        return LearnerState(
            K=int(z["K"]), d=int(z["d"]), t=int(z["t"]),
            beta_hat=z["beta_hat"].copy(),
            cov_sum=[np.asfortranarray(c) for c in z["cov_sum"]],
            xy_sum=z["xy_sum"].copy(),
            resid_sq_ipw=z["resid_sq_ipw"].copy(),
            resid_sq_plain=z["resid_sq_plain"].copy(),
            count=z["count"].copy(),
            sum_y=float(vs[0]), sum_pred=float(vs[1]), sum_pred_sq=float(vs[2]),
        )
