"""De-correlation matrices and the IPW / AW debiased estimators.

Each row ``m_l`` of a de-correlation matrix solves

    min_m  0.5 m^T A m - m_l + mu ||m||_1

for a sample covariance ``A`` (pooled for IPW, per-arm for AW). The KKT
conditions give ``||A m_l - e_l||_max <= mu`` at the optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

TINY = 1e-12
DEFAULT_TOL = 1e-8
DEFAULT_MAX_SWEEPS = 200
DEFAULT_C_MU = 0.5
INNER_PASSES = 20  # support-only passes between full sweeps
UNBOUNDED_OBJ = -1e12
UNBOUNDED_L1 = 1e4  # a row this large is treated as diverging along a null direction
MU_GROWTH = 1.25  # penalty inflation when a row's program is unbounded
MAX_MU_RAISES = 30
KKT_SLACK = 1e-6


@dataclass
class CovarianceSet:
    pooled: np.ndarray
    per_arm_plain: np.ndarray  # (K, d, d)
    per_arm_ipw: np.ndarray | None = None
    T: int = 0

    @property
    def K(self) -> int:
        return self.per_arm_plain.shape[0]

    @property
    def d(self) -> int:
        return self.pooled.shape[0]

    def target_matrix(self, target: str | int) -> np.ndarray:
        if target == "pooled":
            return self.pooled
        return self.per_arm_plain[int(target)]


@dataclass
class DecorrMatrix:
    rows: np.ndarray  # (len(coords), d); row k is m_{coords[k]}
    mu: float
    kkt_residuals: np.ndarray
    target: str | int
    coords: np.ndarray = field(default=None)
    converged: np.ndarray = field(default=None)
    sweeps: np.ndarray = field(default=None)
    row_mu: np.ndarray = field(default=None)  # penalty actually used per row (>= mu)

    def __post_init__(self):
        if self.coords is None:
            self.coords = np.arange(self.rows.shape[0])
        if self.converged is None:
            self.converged = np.ones(len(self.coords), dtype=bool)
        if self.row_mu is None:
            self.row_mu = np.full(len(self.coords), self.mu)

    def row(self, l: int) -> np.ndarray:
        hit = np.flatnonzero(self.coords == l)
        if hit.size == 0:
            raise KeyError(f"coordinate {l} was not solved")
        return self.rows[hit[0]]


@dataclass
class DebiasedEstimate:
    arm: int
    point: np.ndarray
    method: str
    coords: np.ndarray = field(default=None)


def accumulate_covariances(X: np.ndarray, actions: np.ndarray, K: int,
                           pvs: np.ndarray | None = None) -> CovarianceSet:
    """Pooled, per-arm plain and (optionally) per-arm IPW covariances of a log."""
    X = np.asarray(X, dtype=float)
    actions = np.asarray(actions)
    T, d = X.shape
    if T == 0:
        raise ValueError("empty trajectory")
    per_arm = np.zeros((K, d, d))
    ipw = None if pvs is None else np.zeros((K, d, d))
    for i in range(K):
        Xi = X[actions == i]
        per_arm[i] = Xi.T @ Xi / T
        if pvs is not None:
            p = np.asarray(pvs)[actions == i, i]
            w = np.where(p > 0, 1.0 / np.where(p > 0, p, 1.0), 0.0)
            ipw[i] = (Xi * w[:, None]).T @ Xi / T
    pooled = per_arm.sum(axis=0)
    return CovarianceSet(pooled=pooled, per_arm_plain=per_arm, per_arm_ipw=ipw, T=T)


def mu_schedule(kind: str, T: int, d: int, s0: int = 1, nu: float = 1.0,
                C_mu: float = DEFAULT_C_MU) -> float:
    """Penalty level: ``C sqrt(log d / T)`` (pooled) or ``C (s0 log d / T)^(nu/2)`` (arm)."""
    if T < 1 or d < 2:
        raise ValueError("mu_schedule needs T >= 1 and d >= 2")
    if kind == "pooled":
        return C_mu * math.sqrt(math.log(d) / T)
    if kind == "arm":
        return C_mu * (s0 * math.log(d) / T) ** (nu / 2.0)
    raise ValueError(f"unknown mu kind {kind!r}")


@numba.njit(cache=True)
def _cd_pass(A, l, mu, m, r, idx, n_idx):
    """One cyclic pass over ``idx[:n_idx]``; returns the largest coordinate move."""
    d = A.shape[0]
    max_delta = 0.0
    for q in range(n_idx):
        j = idx[q]
        ajj = A[j, j]
        if ajj <= 0.0:
            continue
        z = ajj * m[j] - r[j]
        if j == l:
            z += 1.0
        if z > mu:
            new = (z - mu) / ajj
        elif z < -mu:
            new = (z + mu) / ajj
        else:
            new = 0.0
        delta = new - m[j]
        if delta != 0.0:
            m[j] = new
            for k in range(d):
                r[k] += A[k, j] * delta
            if abs(delta) > max_delta:
                max_delta = abs(delta)
    return max_delta


@numba.njit(cache=True)
def _objective(m, r, l, mu):
    obj = -m[l]
    for k in range(m.shape[0]):
        obj += 0.5 * m[k] * r[k] + mu * abs(m[k])
    return obj


@dataclass
class RowSolution:
    m: np.ndarray
    sweeps: int
    converged: bool
    kkt_residual: float
    objective_trace: np.ndarray
    unbounded: bool = False

    def infeasible(self, mu: float) -> bool:
        """Diverging, or stopped at ``max_sweeps`` with the KKT bound still violated."""
        return self.unbounded or (not self.converged and self.kkt_residual > mu + KKT_SLACK)


def _active_set_refine(A, l, mu, m, max_iter=50):
    """Minimise exactly over the current support, keeping the sign pattern.

    Each iteration solves the restricted linear system; if some sign would
    flip, step only as far as the first crossing and drop that coordinate.
    Along the step the objective is a convex quadratic decreasing towards
    the restricted minimiser, so it never goes up.
    """
    m = m.copy()
    for _ in range(max_iter):
        S = np.flatnonzero(m)
        if S.size == 0:
            return m
        sign = np.sign(m[S])
        rhs = -mu * sign
        rhs[S == l] += 1.0
        try:
            x = np.linalg.solve(A[np.ix_(S, S)], rhs)
        except np.linalg.LinAlgError:
            return m
        if not np.all(np.isfinite(x)):
            return m
        flips = x * sign < 0
        if not flips.any():
            m[S] = x
            return m
        cur = m[S]
        ratios = cur[flips] / (cur[flips] - x[flips])
        alpha = float(ratios.min())
        new = cur + alpha * (x - cur)
        new[flips] = np.where(ratios <= alpha, 0.0, new[flips])
        m[S] = new
    return m


def solve_decorrelation_row(A: np.ndarray, l: int, mu: float, tol: float = DEFAULT_TOL,
                            max_sweeps: int = DEFAULT_MAX_SWEEPS) -> RowSolution:
    """Cyclic coordinate descent for one row of the de-correlation matrix.

    Full sweeps alternate with passes over the current support; once a
    support and sign pattern settle, the restricted linear system is solved
    directly, which matters when the active block is ill-conditioned.
    """
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    A = np.ascontiguousarray(A, dtype=float)
    d = A.shape[0]
    full = np.arange(d)
    m = np.zeros(d)
    m[l] = 1.0 / max(A[l, l], TINY)
    r = A[:, l] * m[l]
    trace = []
    converged = False
    unbounded = False
    sweeps = 0
    while sweeps < max_sweeps:
        delta = _cd_pass(A, l, mu, m, r, full, d)
        sweeps += 1
        obj = _objective(m, r, l, mu)
        trace.append(obj)
        if delta < tol:
            converged = True
            break
        if not np.isfinite(obj) or obj < UNBOUNDED_OBJ or np.abs(m).sum() > UNBOUNDED_L1:
            unbounded = True
            break
        active = np.flatnonzero(m)
        for _ in range(INNER_PASSES):
            if _cd_pass(A, l, mu, m, r, active, active.size) < tol:
                break
        trace.append(_objective(m, r, l, mu))
        cand = _active_set_refine(A, l, mu, m)
        r_cand = A @ cand
        obj_cand = _objective(cand, r_cand, l, mu)
        # guard against round-off: keep the iterate unless the solve helped
        if obj_cand <= trace[-1]:
            m, r = cand, r_cand
            trace.append(obj_cand)
    resid = A @ m
    resid[l] -= 1.0
    return RowSolution(m, sweeps, converged, float(np.abs(resid).max()), np.array(trace), unbounded)


def build_decorr(covs: CovarianceSet | np.ndarray, target: str | int, mu: float,
                 tol: float = DEFAULT_TOL, max_sweeps: int = DEFAULT_MAX_SWEEPS,
                 coords=None, raise_mu: bool = True) -> DecorrMatrix:
    """Solve the rows listed in ``coords`` (default: all ``d``).

    When the sample covariance is singular a small penalty can leave a row's
    program unbounded below. With ``raise_mu`` such a row (or one that stops
    at ``max_sweeps`` violating its KKT bound) is re-solved with the penalty
    inflated by ``MU_GROWTH`` until it is feasible; the level used is kept in
    ``row_mu``.
    """
    A = covs if isinstance(covs, np.ndarray) else covs.target_matrix(target)
    A = np.ascontiguousarray(A, dtype=float)
    d = A.shape[0]
    coords = np.arange(d) if coords is None else np.asarray(coords, dtype=int)
    rows = np.zeros((len(coords), d))
    resid = np.zeros(len(coords))
    conv = np.zeros(len(coords), dtype=bool)
    sweeps = np.zeros(len(coords), dtype=int)
    row_mu = np.full(len(coords), float(mu))
    for k, l in enumerate(coords):
        sol = solve_decorrelation_row(A, int(l), mu, tol, max_sweeps)
        raises = 0
        while raise_mu and mu > 0 and sol.infeasible(row_mu[k]) and raises < MAX_MU_RAISES:
            raises += 1
            row_mu[k] = mu * MU_GROWTH ** raises
            sol = solve_decorrelation_row(A, int(l), row_mu[k], tol, max_sweeps)
        rows[k] = sol.m
        resid[k] = sol.kkt_residual
        conv[k] = sol.converged
        sweeps[k] = sol.sweeps
    return DecorrMatrix(rows=rows, mu=mu, kkt_residuals=resid, target=target,
                        coords=coords, converged=conv, sweeps=sweeps, row_mu=row_mu)


def _weighted_correction(beta_hat, X, actions, y, arm, M, weights):
    resid = y - X @ beta_hat
    sel = actions == arm
    # M X^T (w * resid) restricted to the solved rows
    v = X[sel].T @ (weights[sel] * resid[sel])
    return (M.rows @ v) / X.shape[0]


def ipw_debias(beta_hat: np.ndarray, X: np.ndarray, actions: np.ndarray, y: np.ndarray,
               pvs: np.ndarray, arm: int, M: DecorrMatrix) -> DebiasedEstimate:
    """IPW-debiased coordinates ``M.coords`` of arm ``arm``."""
    if M.target != "pooled":
        raise ValueError("IPW debiasing uses the pooled de-correlation matrix")
    actions = np.asarray(actions)
    p = np.asarray(pvs, dtype=float)[:, arm]
    chosen = actions == arm
    assert not np.any(chosen & (p <= 0)), "chosen arm logged with zero propensity"
    w = np.where(chosen, 1.0 / np.where(p > 0, p, 1.0), 0.0)
    corr = _weighted_correction(beta_hat, X, actions, y, arm, M, w)
    return DebiasedEstimate(arm, beta_hat[M.coords] + corr, "ipw", M.coords)


def aw_debias(beta_hat: np.ndarray, X: np.ndarray, actions: np.ndarray, y: np.ndarray,
              arm: int, M: DecorrMatrix) -> DebiasedEstimate:
    """Average-weighting debiased coordinates; normalised by ``T``, not the arm count."""
    if M.target != arm:
        raise ValueError(f"AW debiasing for arm {arm} needs that arm's de-correlation matrix")
    w = np.ones(len(actions))
    corr = _weighted_correction(beta_hat, X, np.asarray(actions), y, arm, M, w)
    return DebiasedEstimate(arm, beta_hat[M.coords] + corr, "aw", M.coords)
