import numpy as np
import pytest
from conftest import random_spec
from hypothesis import given, settings
from hypothesis import strategies as st

from smartdm.errors import InfeasibleStart, InvalidInput, SingularConstraint
from smartdm.objective import assemble
from smartdm.pgd import (
    OBJECTIVE_TOLERANCE,
    PgdOptions,
    constraint_projectors,
    feasibility_check,
    optimize,
)
from smartdm.selection import init_design


def _run(spec, **kw):
    Z0, c0 = init_design(spec)
    return optimize(assemble(spec), spec, Z0, c0, PgdOptions(**kw))


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_trace_is_monotone_and_iterates_feasible(seed):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, n=int(rng.integers(12, 30)), p=3, m=3)
    res = _run(spec, max_outer=300)
    accepted = [F for _, F, _, ok in res.trace if ok]
    assert all(b < a for a, b in zip(accepted, accepted[1:]))
    assert res.F_hat == accepted[-1]
    feas = feasibility_check(res.Z_hat, res.c_hat, spec.A, spec.B, spec.C, spec.d)
    assert max(feas.values()) <= 1e-9 * max(1.0, np.abs(res.Z_hat).max())


def test_step_size_doubles_after_success_and_halves_after_failure(small_spec):
    res = _run(small_spec, max_outer=50, theta=2.0)
    rows = res.trace[1:]
    for prev, cur in zip(rows, rows[1:]):
        ratio = cur[2] / prev[2]
        assert ratio == pytest.approx(2.0 if prev[3] else 0.5, rel=1e-12)


def test_first_step_uses_alpha0(small_spec):
    res = _run(small_spec, max_outer=5, alpha0=3e-4)
    assert res.trace[1][2] == pytest.approx(3e-4)


def test_deterministic(small_spec):
    a = _run(small_spec, max_outer=200)
    b = _run(small_spec, max_outer=200)
    np.testing.assert_array_equal(a.Z_hat, b.Z_hat)
    assert a.trace == b.trace


def test_converges_on_small_problem(small_spec):
    res = _run(small_spec)
    assert res.termination == OBJECTIVE_TOLERANCE
    assert res.F_hat < res.trace[0][1]


def test_projectors_are_orthogonal_projections(rng):
    A = rng.standard_normal((4, 2))
    C = rng.standard_normal((1, 4))
    P_A, P_C = constraint_projectors(A, C)
    for P in (P_A, P_C):
        np.testing.assert_allclose(P @ P, P, atol=1e-12)
        np.testing.assert_allclose(P, P.T)
    np.testing.assert_allclose(A.T @ P_A, 0, atol=1e-12)
    np.testing.assert_allclose(C @ P_C, 0, atol=1e-12)


def test_empty_constraints_give_identity():
    P_A, P_C = constraint_projectors(np.zeros((3, 0)), np.zeros((0, 3)), 3)
    np.testing.assert_array_equal(P_A, np.eye(3))
    np.testing.assert_array_equal(P_C, np.eye(3))


def test_singular_constraint_rejected():
    A = np.array([[1.0, 2.0], [2.0, 4.0], [0.0, 0.0]])
    with pytest.raises(SingularConstraint):
        constraint_projectors(A, np.zeros((0, 3)), 3)


def test_infeasible_start_rejected(small_spec):
    Z0, c0 = init_design(small_spec)
    with pytest.raises(InfeasibleStart):
        optimize(assemble(small_spec), small_spec, Z0 + 1.0, c0)


@pytest.mark.parametrize("kw", [{"alpha0": 0.0}, {"alpha0": 1e-2}, {"theta": 1.0}, {"theta": 6.0},
                                {"eta1": 1e-5}, {"max_outer": 0}])
def test_option_ranges(kw):
    with pytest.raises(InvalidInput):
        PgdOptions(**kw)
