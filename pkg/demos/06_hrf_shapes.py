"""
Designs robust to hemodynamic response shape
============================================

Two hundred half-cosine response shapes are drawn at random. Each shape
becomes a single-column candidate model, paired with a zero-signal copy that
teaches the optimizer to keep noise out of the contrast.
"""

import numpy as np

from smartdm.examples import example_6
from smartdm.objective import assemble
from smartdm.pgd import optimize
from smartdm.scenarios import HrfParams, hrf_evaluate
from smartdm.selection import init_design

hp = HrfParams(h1=2.0, h2=5.0, h3=5.0, h4=6.0, f=0.3)
t = np.array(hp.knots)
print("knots", t, "values", np.round(hrf_evaluate(hp, t), 12))

spec = example_6()
res = optimize(assemble(spec), spec, *init_design(spec))
print(f"{spec.m} models, n = {spec.n}, p = {spec.p}: F = {res.F_hat:.4f} ({res.termination})")
