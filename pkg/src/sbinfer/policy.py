"""Exploration schedules, propensities and action sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MODES = ("epsilon_greedy", "exploration_free", "forced_roundrobin_then_greedy")


def default_warmup(K: int, s0: int, d: int) -> int:
    """Round-robin burn-in length ``K * max(20, ceil(2 s0 log d))``."""
    return K * max(20, math.ceil(2 * s0 * math.log(d)))


@dataclass(frozen=True)
class ExplorationSchedule:
    c_eps: float = 1.0
    gamma: float = 0.0
    mode: str = "epsilon_greedy"
    T_init: int | None = None  # only read in forced_roundrobin_then_greedy mode

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown exploration mode {self.mode!r}")
        if self.mode == "epsilon_greedy":
            if self.c_eps <= 0:
                raise ValueError("c_eps must be positive")
            if not 0.0 <= self.gamma < 1.0:
                raise ValueError("gamma must lie in [0, 1)")
        if self.T_init is not None and self.T_init < 0:
            raise ValueError("T_init must be nonnegative")

    @property
    def explores(self) -> bool:
        return self.mode == "epsilon_greedy"

    def in_warmup(self, t: int) -> bool:
        return self.mode == "forced_roundrobin_then_greedy" and t <= (self.T_init or 0)


def epsilon_at(schedule: ExplorationSchedule, t: int) -> float:
    if t < 1:
        raise ValueError(f"step index starts at 1, got {t}")
    if schedule.mode == "epsilon_greedy":
        return min(1.0, schedule.c_eps * t ** (-schedule.gamma))
    if schedule.in_warmup(t):
        return 1.0
    return 0.0


def greedy_arm(beta_hats: np.ndarray, x: np.ndarray) -> int:
    return int(np.argmax(beta_hats @ x))


def propensities(beta_hats: np.ndarray, x: np.ndarray, eps: float, K: int | None = None) -> np.ndarray:
    """Selection probabilities of the epsilon-greedy rule.

    The greedy arm gets ``1 - eps + eps/K``, every other arm ``eps/K``.
    For two arms this is ``(1 - pi, pi)`` with
    ``pi = (1 - eps) 1(<b1 - b0, x> > 0) + eps/2``.
    """
    beta_hats = np.asarray(beta_hats)
    K = beta_hats.shape[0] if K is None else K
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must lie in [0, 1], got {eps}")
    probs = np.full(K, eps / K)
    probs[greedy_arm(beta_hats, x)] += 1.0 - eps
    return probs


def roundrobin_propensities(t: int, K: int) -> np.ndarray:
    probs = np.zeros(K)
    probs[(t - 1) % K] = 1.0
    return probs


def sample_action(probs: np.ndarray, rng: np.random.Generator) -> int:
    # inverse-CDF draw; degenerate vectors consume a uniform too so streams stay aligned
    u = rng.random()
    cdf = np.cumsum(probs)
    a = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    a = min(a, len(probs) - 1)
    while probs[a] == 0.0:  # guards fp edge cases at cdf plateaus
        a -= 1
    return a
