"""
Cross-checking the two solvers
==============================

The same design problem is solved by projected gradient descent and by the
augmented Lagrangian trust-region solver. Agreement of the optima is a strong
check on both.
"""

import time

from smartdm.examples import build_example
from smartdm.exact import solve_dm_problem
from smartdm.objective import assemble
from smartdm.pgd import PgdOptions, optimize
from smartdm.selection import init_design

spec = build_example("validation-a")
ao = assemble(spec)
Z0, c0 = init_design(spec)

t0 = time.perf_counter()
pgd = optimize(ao, spec, Z0, c0, PgdOptions())
t1 = time.perf_counter()
exact = solve_dm_problem(spec, ao, (Z0, c0))
t2 = time.perf_counter()

print(f"projected gradient: F = {pgd.F_hat:.6f}  ({pgd.termination}, {t1 - t0:.1f} s)")
print(f"trust region:       F = {exact.F_hat:.6f}  ({exact.termination}, {t2 - t1:.1f} s)")
print(f"relative gap {abs(pgd.F_hat - exact.F_hat) / exact.F_hat:.2e}, "
      f"KKT residual {exact.info['kkt']:.1e}")
