"""Dyadic coverings with the counting condition, and dyadic content.

The greedy cover starts from the finest cells and exchanges any batch of
cubes that crowds a coarser cube for that cube itself; the result stays
within the budget sum r(D)^s <= epsilon and never packs more than
2^((k-l)s) level-k cubes into a level-l cube.
"""

import math

from projlab.covering import dyadic_content, greedy_cover, validate_covering
from projlab.errors import InfeasibleError
from projlab.fractal import cantor_1d, full_grid

print("= covering a Cantor set, s = 0.8 =")
p = cantor_1d(1 / 3, 6)
cov = greedy_cover(p, 0.8, 1.0, min_level=0)
rep = validate_covering(cov)
for k in sorted(cov.levels):
    print(f"  level {k:2d}: {len(cov.levels[k]):3d} cubes")
print(
    f"  budget {rep.budget_value:.4f} <= 1, worst counting ratio "
    f"{rep.worst_condition3_ratio:.3f} <= 1, covers={rep.cover_ok}"
)

print()
print("= a genuinely 1-dimensional set has no 0.5-dimensional cover =")
try:
    greedy_cover(full_grid(6), 0.5, 1.0, min_level=0)
except InfeasibleError as exc:
    print(f"  infeasible, as expected: {exc}")

print()
print("= dyadic content of the middle-thirds set =")
p8 = cantor_1d(1 / 3, 8)
t_star = math.log(2) / math.log(3)
for t in (0.4, 0.55, t_star, 0.7, 0.9):
    val = dyadic_content(p8, t, p8.level)
    marker = "  <- similarity dimension" if abs(t - t_star) < 1e-9 else ""
    print(f"  t={t:.4f}: content {val:.4f}{marker}")
print("content stays bounded away from 0 up to the similarity dimension, then collapses")
