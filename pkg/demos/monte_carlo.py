"""Simulated overflow frequencies against the variational prediction.

The toy birth-death model starts on the hyperplane x = C.  The estimated
rate -(1/n) ln P(overflow) approaches the optimal path cost as n grows, and
paths that do overflow cluster around the optimal path.  Takes a few minutes.
"""
from pathlib import Path

import numpy as np

from ldbuffer import conditional_paths, load_model, overflow_probability, solve_problem_A

HERE = Path(__file__).resolve().parent
B = 0.26

toy = load_model("toy_birth_death")
x0 = [toy.C]
sol = solve_problem_A(toy, x0, B, starts=3)
print(f"variational cost {sol.cost:.5f}, optimal horizon {sol.T:.4f}")

for n, trials in [(25, 400_000), (50, 400_000), (100, 1_000_000)]:
    est = overflow_probability(toy, n, x0, B, 1.5 * sol.T, trials, seed=9)
    lo, hi = est.log_rate_ci95
    print(f"n = {n:3d}: {est.hits:6d} hits, rate {est.log_rate:.5f} "
          f"[{lo:.5f}, {hi:.5f}], ratio to cost {est.log_rate / sol.cost:.3f}")

cp = conditional_paths(toy, 50, x0, B, 400_000, seed=1, window=sol.T,
                       horizon=1.5 * sol.T, max_hits=50)
gap = np.max(np.abs(cp.mean - sol.path(cp.times)))
print(f"n = 50 conditional mean over {cp.used} hits: sup distance {gap:.3f}, "
      f"envelope width {cp.width:.3f}")
with open(HERE / "conditional_n50.csv", "w", newline="") as fh:
    cp.write_csv(fh)
