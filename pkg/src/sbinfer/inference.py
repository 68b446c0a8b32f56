"""Variance estimates, confidence intervals, tests and policy-value inference."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .debias import CovarianceSet, DecorrMatrix
from .learner import LearnerState

# Acklam's rational approximation to the standard normal quantile
# (relative error < 1.2e-9), polished below with one Halley step.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


class UnsupportedMethodError(ValueError):
    pass


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile needs p in (0, 1), got {p}")
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    elif p <= 1.0 - _P_LOW:
        q = p - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
            (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log1p(-p))
        x = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    # Halley refinement
    if p < 0.5:
        e = normal_cdf(x) - p
    else:
        e = (1.0 - p) - normal_sf(x)
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def two_sided_p(z: float) -> float:
    return min(1.0, 2.0 * normal_sf(abs(z)))


def noise_variance(state: LearnerState, method: str) -> np.ndarray:
    """Per-arm noise variance from the learner's pre-update residuals.

    ``ipw``: propensity-weighted squared residuals averaged over ``T``.
    ``aw``: plain squared residuals averaged over the arm's pull count.
    """
    if method == "ipw":
        if state.t == 0:
            raise ValueError("no observations")
        return state.resid_sq_ipw / state.t
    if method == "aw":
        if np.any(state.count == 0):
            arm = int(np.flatnonzero(state.count == 0)[0])
            raise ValueError(f"arm never sampled: {arm}")
        return state.resid_sq_plain / state.count
    raise ValueError(f"unknown method {method!r}")


def refit_noise_variance(beta_hat: np.ndarray, X: np.ndarray, actions: np.ndarray, y: np.ndarray,
                         method: str, pvs: np.ndarray | None = None) -> np.ndarray:
    """Noise variance from end-of-horizon residuals ``y - <beta_hat_T, x>``.

    Not the default. The online estimator also counts the learner's early
    prediction error, which at short horizons can double it; this variant
    is offered for comparison, with a degrees-of-freedom correction for the
    fitted support. ``ipw`` weights by inverse propensities over ``T``.
    """
    X = np.asarray(X, dtype=float)
    actions = np.asarray(actions)
    K = beta_hat.shape[0]
    T = X.shape[0]
    out = np.zeros(K)
    for i in range(K):
        sel = actions == i
        r2 = (np.asarray(y)[sel] - X[sel] @ beta_hat[i]) ** 2
        dof = max(int(sel.sum()) - int(np.count_nonzero(beta_hat[i])), 1)
        if method == "ipw":
            if pvs is None:
                raise ValueError("ipw refit needs propensities")
            w = 1.0 / np.asarray(pvs)[sel, i]
            out[i] = float(np.sum(w * r2)) / T * sel.sum() / dof
        elif method == "aw":
            if not sel.any():
                raise ValueError(f"arm never sampled: {i}")
            out[i] = float(r2.sum()) / dof
        else:
            raise ValueError(f"unknown method {method!r}")
    return out


def quad_forms(M: DecorrMatrix, A: np.ndarray) -> np.ndarray:
    """``m_l^T A m_l`` for every solved row."""
    return np.einsum("kd,de,ke->k", M.rows, A, M.rows)


def s2_ipw(M: DecorrMatrix, covs: CovarianceSet, arm: int, c_eps: float, gamma: float, T: int) -> np.ndarray:
    """IPW variance factor for every solved coordinate of ``arm`` (two arms only)."""
    if covs.K != 2:
        raise UnsupportedMethodError("IPW inference is defined for two arms only")
    own = quad_forms(M, covs.per_arm_plain[arm])
    other = quad_forms(M, covs.per_arm_plain[1 - arm])
    return 2.0 / (c_eps * (1.0 + gamma)) * other + T ** (-gamma) * own


def standard_error(sigma2: float, factor, T: int, gamma: float, method: str):
    """``sqrt(sigma2 * S2 / T^(1-gamma))`` for IPW, ``sqrt(sigma2 * Linv / T)`` for AW."""
    factor = np.asarray(factor, dtype=float)
    if method == "ipw":
        return np.sqrt(sigma2 * factor / T ** (1.0 - gamma))
    if method == "aw":
        return np.sqrt(sigma2 * factor / T)
    raise ValueError(f"unknown method {method!r}")


def confidence_interval(point, se, level: float = 0.95):
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    z = normal_quantile(0.5 + level / 2.0)
    point = np.asarray(point, dtype=float)
    half = z * np.asarray(se, dtype=float)
    return point - half, point + half


@dataclass
class DiffTest:
    point: float
    se: float
    z: float
    p: float
    degenerate: bool = False


def diff_test(point_a: float, point_b: float, var_a: float, var_b: float) -> DiffTest:
    """Two-sided z-test of ``beta_a(l) = beta_b(l)``; the two arms are asymptotically uncorrelated."""
    point = float(point_a - point_b)
    se = math.sqrt(max(var_a, 0.0) + max(var_b, 0.0))
    if se == 0.0:
        if point == 0.0:
            return DiffTest(point, 0.0, 0.0, 1.0, True)
        return DiffTest(point, 0.0, math.copysign(math.inf, point), 0.0, True)
    z = point / se
    return DiffTest(point, se, z, two_sided_p(z))


def value_estimate(y: np.ndarray) -> float:
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValueError("value estimate needs at least one reward")
    return float(y.mean())


def value_variance(state: LearnerState, actions: np.ndarray, sigma2: np.ndarray | None = None) -> float:
    """Plug-in variance of the running reward mean: ``G_T + W_T``."""
    T = state.t
    if sigma2 is None:
        sigma2 = noise_variance(state, "aw")
    counts = np.bincount(np.asarray(actions), minlength=state.K)
    G = float(np.dot(sigma2, counts)) / T
    mean_pred = state.sum_pred / T
    W = max(state.sum_pred_sq / T - mean_pred ** 2, 0.0)
    return G + W


@dataclass
class VarianceComponents:
    sigma2_hat: np.ndarray  # (K,)
    factors: np.ndarray  # (K, n_coords): S^2 for ipw, m^T Lambda_i m for aw
    method: str
    sigma2_refit: np.ndarray | None = None  # end-of-horizon alternative, for comparison


@dataclass
class ValueInference:
    v_hat: float
    se: float
    ci_lo: float
    ci_hi: float


@dataclass
class InferenceReport:
    method: str
    level: float
    T: int
    gamma: float
    c_eps: float
    coords: np.ndarray
    raw: np.ndarray  # (K, n_coords) hard-thresholding estimates
    point: np.ndarray  # (K, n_coords) debiased
    se: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    z: np.ndarray  # against zero
    p: np.ndarray
    diffs: list = field(default_factory=list)  # (coord, arm_a, arm_b, DiffTest)
    value: ValueInference | None = None
    components: VarianceComponents | None = None
