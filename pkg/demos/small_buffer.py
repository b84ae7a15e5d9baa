"""Small buffers: state-dependent optima, zoomed by 1/sqrt(B) around x*,
approach the frozen unit-buffer optimum."""
from pathlib import Path

from ldbuffer import load_model, small_buffer_study, upcrossing_point

HERE = Path(__file__).resolve().parent

model = load_model("phone_data")
x_star = upcrossing_point(model).x_star
table = small_buffer_study(model, x_star, [0.5, 0.1, 0.02], starts=3)
print(f"frozen B=1 optimum: T = {table.reference.T:.6f}, cost = {table.reference.cost:.6f}")
print(f"{'B':>6} {'T_B/sqrt(B)':>12} {'sup distance':>13} {'cost/sqrt(B)':>13}")
for row in table.rows:
    print(f"{row.B:6.2f} {row.T_ratio:12.6f} {row.distance:13.5f} {row.zoomed_cost:13.6f}")
with open(HERE / "small_buffer.csv", "w", newline="") as fh:
    table.write_csv(fh)
