"""
How many columns does the design need?
======================================

The objective is optimized for each candidate column count. The chosen size
is the smallest one that captures 95% of the achievable reduction; repeating
from perturbed starts guards against an unlucky local optimum.
"""

from smartdm.examples import build_example
from smartdm.selection import select_size, select_size_robust

spec = build_example("validation-a")
rep = select_size(spec, p0=2, p_max=8, cutoff=0.95)
for p, F, R in rep.rows():
    print(f"p = {p}: F = {F:.5f}  R = {R:.3f}")
print("selected p:", rep.p_opt)

median, reports = select_size_robust(spec, 2, 8, n_iter=5)
print("per-trial picks:", [r.p_opt for r in reports], "median:", median)
