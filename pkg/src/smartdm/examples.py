"""Named, ready-to-run design problems."""

from __future__ import annotations

import numpy as np

from .errors import UnknownExample
from .objective import ProblemSpec
from .scenarios import (
    block_ev,
    block_family,
    build_infusion_base,
    build_infusion_family_723,
    hrf_family,
    null_augment,
    shift_family,
)
from .selection import apply_phi_rule

# The slow valley of the unconstrained-contrast problem needs a finer stopping
# rule and more headroom than the generic defaults.
VALIDATION_PGD = {"eta1": 1e-13, "max_outer": 200_000}


def _fixed_contrast(p):
    return np.eye(p), np.eye(p)[0]


def validation_a():
    base = build_infusion_base()
    C, d = _fixed_contrast(4)
    return ProblemSpec(shift_family(base, 50), base.n, 4, np.eye(4)[:, :2], base.X, C, d,
                       name="validation-a", extra={"pgd": dict(VALIDATION_PGD)})


def validation_b():
    base = build_infusion_base()
    return ProblemSpec(shift_family(base, 50), base.n, 4, np.eye(4)[:, :2], base.X,
                       name="validation-b", extra={"pgd": dict(VALIDATION_PGD)})


def _three_column(phi, name, init):
    base = build_infusion_base()
    C, d = _fixed_contrast(3)
    return ProblemSpec(shift_family(base, 50, phi=phi), base.n, 3, np.eye(3)[:, :2], base.X, C, d,
                       name=name, extra={"init": init})


def example_1():
    return _three_column(0.5, "example-1", "uniform")


def example_2():
    spec = _three_column(0.5, "example-2", "svd")
    return apply_phi_rule(spec, 1e3, "A")


def example_3():
    return _three_column(0.1, "example-3", "uniform")


def example_4():
    base = build_infusion_base()
    models = []
    for snr in ((1.0, 0.5), (-1.0, 0.5), (1.0, -0.5), (-1.0, -0.5)):
        models += shift_family(base, 50, snr=snr, phi=0.01)
    X0 = base.X
    models = null_augment(models, [(X0, (0.0, 1.0), (1.0, 0.0)), (X0, (0.0, -1.0), (1.0, 0.0))],
                          phi=0.01)
    C, d = _fixed_contrast(3)
    return ProblemSpec(models, base.n, 3, None, None, C, d, name="example-4")


def example_5():
    ev = block_ev(200, 20)
    C, d = _fixed_contrast(4)
    return ProblemSpec(block_family(200, 20, 6, 0.01), 200, 4, np.eye(4)[:, :1], ev[:, None], C, d,
                       name="example-5")


def example_6():
    models = hrf_family(200, seed=0)
    n = models[0].n
    C, d = _fixed_contrast(5)
    return ProblemSpec(models, n, 5, None, None, C, d, name="example-6")


def fmri_723(step=1):
    base = build_infusion_base()
    models = build_infusion_family_723(base, step=step)
    C, d = _fixed_contrast(6)
    spec = ProblemSpec(models, base.n, 6, np.eye(6)[:, :2], base.X, C, d,
                       name="fmri-723" if step == 1 else f"fmri-reduced-{step}")
    return apply_phi_rule(spec, 1e3, "A")


def fmri_reduced():
    """Every 10th shift of the infusion family: 72 signal models and 3 nulls."""
    return fmri_723(step=10)


REGISTRY = {
    "validation-a": validation_a,
    "validation-b": validation_b,
    "example-1": example_1,
    "example-2": example_2,
    "example-3": example_3,
    "example-4": example_4,
    "example-5": example_5,
    "example-6": example_6,
    "fmri-723": fmri_723,
    "fmri-reduced": fmri_reduced,
}


def build_example(name):
    try:
        return REGISTRY[name]()
    except KeyError:
        raise UnknownExample(f"unknown example {name!r}; valid names: {', '.join(REGISTRY)}") from None
