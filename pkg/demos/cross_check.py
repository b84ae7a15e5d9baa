"""Closed two-type model: the overflow decay rate of n superposed on/off
sources, computed from the source log-mgf, matches the entropy of the
entry point plus the cost of the optimal path from it."""
from ldbuffer import (bd_decay_rate, load_model, solve_problem_A, source_from_closed_model,
                      upcrossing_point)

model = load_model("closed_phone_data")
up = upcrossing_point(model, "multinomial")
src = source_from_closed_model(model)
print(f"entry point {up.x_star}, entropy {up.entropy:.6f}")
for b in (0.1, 0.5):
    sol = solve_problem_A(model, up.x_star, b, starts=2)
    bd = bd_decay_rate(src, b, model.C)
    total = up.entropy + sol.cost
    print(f"b = {b}: entropy + path cost = {total:.6f}, source formula = {bd:.6f}, "
          f"relative gap {abs(total - bd) / bd:.1e}")
