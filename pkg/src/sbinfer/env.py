"""Data-generating process for sparse linear contextual bandits.

Rewards are ``y = <beta_a, x> + xi`` with Gaussian noise per arm and
bounded i.i.d. covariates. Also holds the oracle policy and the CSV
replay format used for offline (classification-style) datasets.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

COVARIATE_DISTS = ("iid_uniform", "truncated_gaussian")
BETA_GENS = ("uniform_support", "explicit")


@dataclass(frozen=True)
class ScenarioConfig:
    d: int
    T: int
    s0: int
    K: int = 2
    noise_sd: tuple[float, ...] | None = None  # defaults to 0.5 per arm
    covariate_dist: str = "iid_uniform"
    # (lo, hi) for iid_uniform, (sd, clip) for truncated_gaussian
    covariate_params: tuple[float, float] | None = None
    beta_gen: str = "uniform_support"
    beta_values: tuple[tuple[float, ...], ...] | None = None
    margin_nu: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"d must be positive, got {self.d}")
        if self.T < 1:
            raise ValueError(f"T must be positive, got {self.T}")
        if self.K < 2:
            raise ValueError(f"K must be at least 2, got {self.K}")
        if not 1 <= self.s0 <= self.d:
            raise ValueError(f"s0 must lie in [1, d={self.d}], got {self.s0}")
        if self.noise_sd is None:
            object.__setattr__(self, "noise_sd", (0.5,) * self.K)
        else:
            object.__setattr__(self, "noise_sd", tuple(float(v) for v in self.noise_sd))
        if len(self.noise_sd) != self.K or min(self.noise_sd) < 0:
            raise ValueError("noise_sd needs K nonnegative entries")
        if self.covariate_dist not in COVARIATE_DISTS:
            raise ValueError(f"unknown covariate_dist {self.covariate_dist!r}")
        if self.covariate_params is None:
            default = (-1.0, 1.0) if self.covariate_dist == "iid_uniform" else (1.0, 2.0)
            object.__setattr__(self, "covariate_params", default)
        else:
            object.__setattr__(self, "covariate_params", tuple(float(v) for v in self.covariate_params))
        a, b = self.covariate_params
        if self.covariate_dist == "iid_uniform" and not (np.isfinite([a, b]).all() and a < b):
            raise ValueError("iid_uniform needs finite lo < hi")
        if self.covariate_dist == "truncated_gaussian" and not (a > 0 and 0 < b < np.inf):
            raise ValueError("truncated_gaussian needs sd > 0 and finite clip > 0")
        if self.beta_gen not in BETA_GENS:
            raise ValueError(f"unknown beta_gen {self.beta_gen!r}")
        if self.beta_gen == "explicit":
            vals = np.asarray(self.beta_values, dtype=float)
            if vals.shape != (self.K, self.d):
                raise ValueError(f"explicit beta_values must have shape ({self.K}, {self.d})")
        if not 0.0 <= self.margin_nu <= 1.0:
            raise ValueError("margin_nu must lie in [0, 1]")

    @property
    def bound(self) -> float:
        """Almost-sure bound D on ``max_j |x_j|``."""
        a, b = self.covariate_params
        if self.covariate_dist == "iid_uniform":
            return max(abs(a), abs(b))
        return b


@dataclass
class ArmParams:
    """Per-arm coefficient vectors, shape ``(K, d)``."""

    betas: np.ndarray
    noise_sd: np.ndarray = field(default=None)

    def __post_init__(self):
        self.betas = np.atleast_2d(np.asarray(self.betas, dtype=float))
        if self.noise_sd is None:
            self.noise_sd = np.zeros(self.K)
        self.noise_sd = np.asarray(self.noise_sd, dtype=float)

    @property
    def K(self) -> int:
        return self.betas.shape[0]

    @property
    def d(self) -> int:
        return self.betas.shape[1]


@dataclass(frozen=True)
class ReplayRow:
    x: np.ndarray
    optimal_label: int


class ReplayParseError(ValueError):
    pass


def gen_params(config: ScenarioConfig, rng: np.random.Generator) -> ArmParams:
    """Ground truth: first ``s0`` coordinates of each arm ~ U[0.5, 1], rest zero."""
    if config.beta_gen == "explicit":
        return ArmParams(np.array(config.beta_values, dtype=float), np.array(config.noise_sd))
    betas = np.zeros((config.K, config.d))
    betas[:, : config.s0] = rng.uniform(0.5, 1.0, size=(config.K, config.s0))
    return ArmParams(betas, np.array(config.noise_sd))


def draw_contexts(config: ScenarioConfig, rng: np.random.Generator, n: int, d: int | None = None) -> np.ndarray:
    """``n`` i.i.d. context vectors as an ``(n, d)`` array."""
    d = config.d if d is None else d
    a, b = config.covariate_params
    if config.covariate_dist == "iid_uniform":
        return rng.uniform(a, b, size=(n, d))
    sd, clip = a, b
    out = rng.normal(0.0, sd, size=(n, d))
    bad = np.abs(out) > clip
    # rejection resampling keeps the law a genuine truncation
    while bad.any():
        out[bad] = rng.normal(0.0, sd, size=int(bad.sum()))
        bad = np.abs(out) > clip
    return out


def draw_context(config: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    return draw_contexts(config, rng, 1)[0]


def mean_rewards(params: ArmParams, x: np.ndarray) -> np.ndarray:
    return params.betas @ x


def reward(params: ArmParams, arm: int, x: np.ndarray, rng: np.random.Generator) -> float:
    if not 0 <= arm < params.K:
        raise IndexError(f"arm {arm} out of range for K={params.K}")
    mean = float(params.betas[arm] @ x)
    sd = params.noise_sd[arm]
    if sd == 0:
        return mean
    return mean + sd * rng.standard_normal()


def optimal_arm(params: ArmParams, x: np.ndarray) -> int:
    # np.argmax returns the first maximiser, so ties go to the lowest index
    return int(np.argmax(params.betas @ x))


def instant_regret(params: ArmParams, x: np.ndarray, chosen: int) -> float:
    if not 0 <= chosen < params.K:
        raise IndexError(f"arm {chosen} out of range for K={params.K}")
    means = params.betas @ x
    return float(means.max() - means[chosen])


def oracle_value(config: ScenarioConfig, params: ArmParams, rng: np.random.Generator,
                 n: int = 10**6, chunk: int = 100_000) -> float:
    """Monte-Carlo estimate of ``E[max_i <beta_i, X>]``.

    Coordinates are i.i.d., so only columns in the union of supports are drawn.
    """
    support = np.flatnonzero(np.any(params.betas != 0, axis=0))
    if support.size == 0:
        return 0.0
    sub = params.betas[:, support]
    total = 0.0
    done = 0
    while done < n:
        m = min(chunk, n - done)
        X = draw_contexts(config, rng, m, d=support.size)
        total += float((X @ sub.T).max(axis=1).sum())
        done += m
    return total / n


def load_replay(path: str | Path, d: int, K: int) -> list[ReplayRow]:
    """Read a replay CSV with header ``x1,...,xd,label``."""
    path = Path(path)
    rows: list[ReplayRow] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ReplayParseError(f"{path}: empty file") from None
        expected = [f"x{j}" for j in range(1, d + 1)] + ["label"]
        if [h.strip() for h in header] != expected:
            raise ReplayParseError(f"{path}:1: header does not match x1..x{d},label")
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != d + 1:
                raise ReplayParseError(f"{path}:{lineno}: expected {d + 1} columns, got {len(rec)}")
            try:
                x = np.array([float(v) for v in rec[:d]])
                label = int(rec[d])
            except ValueError as exc:
                raise ReplayParseError(f"{path}:{lineno}: {exc}") from None
            if not np.all(np.isfinite(x)):
                raise ReplayParseError(f"{path}:{lineno}: non-finite covariate")
            if not 0 <= label < K:
                raise ReplayParseError(f"{path}:{lineno}: label {label} outside [0, {K})")
            rows.append(ReplayRow(x, label))
    return rows


def write_replay(path: str | Path, X: np.ndarray, labels: Sequence[int]) -> None:
    X = np.asarray(X, dtype=float)
    d = X.shape[1]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j}" for j in range(1, d + 1)] + ["label"])
        for x, lab in zip(X, labels):
            w.writerow([repr(float(v)) for v in x] + [int(lab)])


def replay_reward(row: ReplayRow, arm: int) -> float:
    return 1.0 if arm == row.optimal_label else 0.0

