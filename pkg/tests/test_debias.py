import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sbinfer import debias
from sbinfer.debias import DecorrMatrix


def _spd(seed, d):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((d, d))
    return B @ B.T / d + 0.5 * np.eye(d)


def test_accumulate_examples():
    X = np.tile([1.0, 0.0], (4, 1))
    covs = debias.accumulate_covariances(X, np.array([0, 1, 0, 1]), 2)
    assert np.array_equal(covs.pooled, [[1, 0], [0, 0]])
    for i in range(2):
        assert np.array_equal(covs.per_arm_plain[i], [[0.5, 0], [0, 0]])
    x = np.array([[2.0, -1.0]])
    assert np.array_equal(debias.accumulate_covariances(x, np.array([1]), 2).pooled, np.outer(x[0], x[0]))
    with pytest.raises(ValueError):
        debias.accumulate_covariances(np.zeros((0, 2)), np.zeros(0, dtype=int), 2)


@given(st.integers(0, 10**6), st.integers(2, 4))
def test_pooled_is_sum_of_arms(seed, K):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((30, 5))
    a = rng.integers(0, K, 30)
    c = debias.accumulate_covariances(X, a, K)
    assert np.allclose(c.pooled, c.per_arm_plain.sum(axis=0), atol=1e-12)
    assert np.linalg.eigvalsh(c.pooled)[0] >= -1e-10


def test_mu_schedule_examples():
    assert math.isclose(debias.mu_schedule("pooled", 4, math.exp(4), C_mu=1.0), 1.0)
    assert math.isclose(debias.mu_schedule("arm", 1, math.e, s0=1, nu=1.0, C_mu=1.0), 1.0)
    assert abs(debias.mu_schedule("pooled", 300, 600, C_mu=0.5) - 0.0730) < 5e-5
    with pytest.raises(ValueError):
        debias.mu_schedule("other", 10, 10)


def test_row_examples():
    sol = debias.solve_decorrelation_row(np.eye(4), 1, 0.1)
    assert np.allclose(sol.m, 0.9 * np.eye(4)[1], atol=1e-12)
    A = np.array([[1.0, 0.5], [0.5, 1.0]])
    sol = debias.solve_decorrelation_row(A, 0, 0.0, tol=1e-12, max_sweeps=10_000)
    assert np.allclose(sol.m, [4 / 3, -2 / 3], atol=1e-8)
    for mu in (1.0, 1.5):
        assert np.all(debias.solve_decorrelation_row(np.eye(3), 2, mu).m == 0)
    with pytest.raises(ValueError):
        debias.solve_decorrelation_row(np.eye(2), 0, -0.1)


@given(st.floats(0, 2), st.integers(2, 8))
def test_identity_soft_threshold(mu, d):
    M = debias.build_decorr(np.eye(d), "pooled", mu)
    assert np.allclose(M.rows, max(0.0, 1.0 - mu) * np.eye(d), atol=1e-12)


def test_build_identity_example():
    M = debias.build_decorr(np.eye(5), "pooled", 0.1)
    assert np.allclose(M.rows, 0.9 * np.eye(5))
    assert np.allclose(M.kkt_residuals, 0.1)


@pytest.mark.parametrize("seed", range(10))
def test_mu_zero_matches_inverse(seed):
    d = 2 + seed * 2
    A = _spd(seed, d)
    M = debias.build_decorr(A, "pooled", 0.0, tol=1e-12, max_sweeps=5000)
    assert np.linalg.norm(M.rows - np.linalg.inv(A)) <= 1e-6


@given(st.integers(0, 10**6), st.floats(0.01, 0.5))
def test_kkt_bound_and_monotone_objective(seed, mu):
    A = _spd(seed, 15)
    for l in range(0, 15, 4):
        sol = debias.solve_decorrelation_row(A, l, mu)
        assert sol.kkt_residual <= mu + 1e-6
        assert np.all(np.diff(sol.objective_trace) <= 1e-12)


def test_kkt_bound_singular_d50():
    # rank-deficient sample covariance, as at T < d
    rng = np.random.default_rng(5)
    X = rng.uniform(-1, 1, (30, 50))
    A = X.T @ X / 30
    mu = debias.mu_schedule("pooled", 30, 50)
    M = debias.build_decorr(A, "pooled", mu, coords=range(10))
    assert np.all(M.kkt_residuals <= M.row_mu + 1e-6)
    assert np.all(np.isfinite(M.rows))


def test_unbounded_row_raises_penalty():
    # zero direction along coordinate 1 coupled to the target row
    A = np.array([[1.0, 1.0], [1.0, 1.0]])
    M = debias.build_decorr(A, "pooled", 0.01)
    assert np.all(np.isfinite(M.rows))
    assert np.all(M.kkt_residuals <= M.row_mu + 1e-6)


def test_row_lookup():
    M = debias.build_decorr(np.eye(4), "pooled", 0.0, coords=[2, 3])
    assert np.allclose(M.row(3), np.eye(4)[3])
    with pytest.raises(KeyError):
        M.row(0)


def _identity_decorr(d, target):
    return DecorrMatrix(rows=np.eye(d), mu=0.0, kkt_residuals=np.zeros(d), target=target)


def test_single_step_debias_identities():
    x, y = np.array([0.5, -1.0, 2.0]), 1.3
    X, a, pv = x[None], np.array([1]), np.array([[0.5, 0.5]])
    ipw = debias.ipw_debias(np.zeros(3), X, a, np.array([y]), pv, 1, _identity_decorr(3, "pooled"))
    assert np.allclose(ipw.point, 2 * y * x)
    aw = debias.aw_debias(np.zeros(3), X, a, np.array([y]), 1, _identity_decorr(3, 1))
    assert np.allclose(aw.point, y * x)
    other = debias.aw_debias(np.full(3, 0.2), X, a, np.array([y]), 0, _identity_decorr(3, 0))
    assert np.array_equal(other.point, np.full(3, 0.2))


@given(st.integers(0, 10**6))
def test_zero_residuals_leave_estimate_unchanged(seed):
    rng = np.random.default_rng(seed)
    T, d = 40, 6
    X = rng.uniform(-1, 1, (T, d))
    beta = rng.standard_normal(d)
    y = X @ beta
    a = rng.integers(0, 2, T)
    pv = np.full((T, 2), 0.5)
    M = DecorrMatrix(rows=rng.standard_normal((d, d)), mu=0.1, kkt_residuals=np.zeros(d), target="pooled")
    assert np.array_equal(debias.ipw_debias(beta, X, a, y, pv, 1, M).point, beta)
    M.target = 1
    assert np.array_equal(debias.aw_debias(beta, X, a, y, 1, M).point, beta)


def test_wrong_target_rejected():
    with pytest.raises(ValueError):
        debias.ipw_debias(np.zeros(2), np.zeros((1, 2)), np.array([0]), np.zeros(1),
                          np.array([[0.5, 0.5]]), 0, _identity_decorr(2, 0))
    with pytest.raises(ValueError):
        debias.aw_debias(np.zeros(2), np.zeros((1, 2)), np.array([0]), np.zeros(1), 1, _identity_decorr(2, 0))
