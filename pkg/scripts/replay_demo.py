#!/usr/bin/env python3
"""Replay demo on a synthetic three-class dataset written in the replay CSV format.

The label is the arm with the largest of three sparse linear scores, so a
well-specified learner can recover it.

    python3 scripts/replay_demo.py --rows 1000 --out results/replay
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from sbinfer import env, harness
from sbinfer.harness import InferenceConfig, LearnerSettings
from sbinfer.policy import ExplorationSchedule


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--rows", type=int, default=1000)
    ap.add_argument("--d", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/replay")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    X = rng.uniform(-1, 1, (args.rows, args.d))
    B = np.zeros((3, args.d))
    B[:, :3] = rng.uniform(-1, 1, (3, 3))
    labels = (X @ B.T).argmax(axis=1)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    env.write_replay(out / "data.csv", X, labels)

    rows = env.load_replay(out / "data.csv", args.d, 3)
    res = harness.run_replay(rows, args.d, 3, ExplorationSchedule(1.0, 1 / 3), LearnerSettings(), "aw",
                             s0=3, icfg=InferenceConfig(n_coords=5))
    harness.export_replay(res, out)
    print(f"fraction correct {res.log.y.mean():.3f}; value CI "
          f"[{res.report.value.ci_lo:.3f}, {res.report.value.ci_hi:.3f}]")


if __name__ == "__main__":
    main()
