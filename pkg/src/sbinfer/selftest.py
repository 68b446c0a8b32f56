"""Fast oracle-equivalence checks runnable from an installed package."""

from __future__ import annotations

import time

import numpy as np

from . import debias, inference, learner, policy

# two-sided standard normal table values
_QUANTILE_TABLE = ((0.5, 0.0), (0.975, 1.959963984540054), (0.995, 2.5758293035489004),
                   (0.9, 1.2815515655446004), (0.001, -3.090232306167813))


def _random_spd(rng: np.random.Generator, d: int) -> np.ndarray:
    B = rng.standard_normal((d, d))
    return B @ B.T / d + 0.5 * np.eye(d)


def check_solver_inverse(n: int = 50, seed: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        d = int(rng.integers(2, 21))
        A = _random_spd(rng, d)
        M = debias.build_decorr(A, "pooled", 0.0, tol=1e-12, max_sweeps=5000)
        worst = max(worst, float(np.linalg.norm(M.rows - np.linalg.inv(A))))
    return worst < 1e-6, f"max Frobenius error {worst:.2e}"


def check_solver_kkt(n: int = 50, seed: int = 1) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(n):
        d = int(rng.integers(2, 21))
        A = _random_spd(rng, d)
        mu = float(rng.uniform(0.01, 0.5))
        M = debias.build_decorr(A, "pooled", mu)
        worst = max(worst, float((M.kkt_residuals - mu).max()))
    return worst <= 1e-6, f"max KKT excess {worst:.2e}"


def check_quantile() -> tuple[bool, str]:
    err = max(abs(inference.normal_quantile(p) - z) for p, z in _QUANTILE_TABLE)
    return err < 1e-8, f"max abs error {err:.2e}"


def check_hard_threshold(seed: int = 2) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    for _ in range(200):
        v = rng.standard_normal(int(rng.integers(1, 30)))
        s = int(rng.integers(1, v.size + 1))
        h = learner.hard_threshold(v, s)
        kept = h != 0
        if kept.sum() > s or np.any(h[kept] != v[kept]):
            return False, "kept entries altered or too many"
        if (~kept).any() and kept.any() and np.abs(v[~kept]).max() > np.abs(v[kept]).min():
            return False, "dropped a larger entry"
    return True, "200 random vectors"


def check_propensities(seed: int = 3) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    for _ in range(200):
        K = int(rng.integers(2, 6))
        b = rng.standard_normal((K, 4))
        x = rng.standard_normal(4)
        eps = float(rng.uniform())
        p = policy.propensities(b, x, eps)
        if abs(p.sum() - 1) > 1e-12 or p.min() < 0 or p.argmax() != policy.greedy_arm(b, x) and eps < 1:
            return False, "propensity vector invalid"
    return True, "200 random draws"


CHECKS = {
    "solver matches dense inverse at mu=0": check_solver_inverse,
    "solver KKT bound for mu>0": check_solver_kkt,
    "normal quantile vs table": check_quantile,
    "hard threshold keeps the s largest": check_hard_threshold,
    "propensities form a distribution": check_propensities,
}


def run_selftest(verbose: bool = True) -> bool:
    ok_all = True
    for name, fn in CHECKS.items():
        t0 = time.perf_counter()
        ok, detail = fn()
        ok_all &= ok
        if verbose:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail} ({time.perf_counter() - t0:.2f}s)")
    return ok_all
