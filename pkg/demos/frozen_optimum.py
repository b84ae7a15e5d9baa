"""Most likely overflow path for the phone/data model with rates frozen at x*.

Walks through the cheapest entry point on the hyperplane, the free-time
optimum for a unit buffer, the square-root scaling in the buffer level, and
the uniqueness certificate applied to a deliberately worse path.
"""
import math
from pathlib import Path

import numpy as np

from ldbuffer import (FrozenModel, PiecewiseLinearPath, load_model, path_cost,
                      path_diagnostics, scale_solution, solve_problem_A, sup_distance,
                      uniqueness_certificate, upcrossing_point)
from ldbuffer.pathspace import write_path_csv

HERE = Path(__file__).resolve().parent

model = load_model("phone_data")
up = upcrossing_point(model)
print(f"entry point x* = {np.round(up.x_star, 4)}, entropy {up.entropy:.5f}")

frozen = FrozenModel(model, up.x_star)
sol = solve_problem_A(frozen, up.x_star, 1.0, starts=10, seed=0)
print(f"B = 1: T = {sol.T:.6f}, cost = {sol.cost:.6f}, spread over "
      f"{sol.starts} starts = {sol.spread:.1e}")
print("shape:", path_diagnostics(sol, frozen))
with open(HERE / "frozen_optimum.csv", "w", newline="") as fh:
    write_path_csv(sol.path, fh)

# a buffer level B costs sqrt(B) times as much along a rescaled copy of the path
for B in (0.25, 4.0):
    direct = solve_problem_A(frozen, up.x_star, B, starts=2)
    scaled = scale_solution(sol, B, up.x_star)
    print(f"B = {B}: cost/sqrt(B) = {direct.cost / math.sqrt(B):.6f}, "
          f"distance to the rescaled B=1 path = {sup_distance(direct.path, scaled.path):.1e}")

# a buffer-neutral detour costs more, and the certificate says so
d = np.array([model.a[1], -model.a[0]]) / np.linalg.norm(model.a)
bump = np.sin(math.pi * sol.path.times / sol.T)[:, None] * d
worse = PiecewiseLinearPath(sol.path.times, sol.path.nodes + 2.0 * bump)
print(f"detour cost {path_cost(frozen, worse):.6f} vs optimum {sol.cost:.6f}")
cert = uniqueness_certificate(frozen, sol, worse, 1.0)
print(f"certificate: {cert.verdict} (mixed path costs {cert.improved_cost:.6f})")
