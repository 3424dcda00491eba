import numpy as np
import pytest

from smartdm.errors import InvalidInput
from smartdm.glm import CandidateModel, ProposedDesign, expected_gamma, model_variance_bias
from smartdm.scenarios import build_infusion_base
from smartdm.simulation import (
    SimulationPlan,
    best_operating_point,
    default_thresholds,
    derivative_design,
    noise_block,
    performance_curves,
    roc_curve,
    simulate_fits,
    summarize,
    temporal_derivative,
    worker_count,
)


def _pair(rng, n=40):
    X = np.column_stack([np.ones(n), np.linspace(0, 1, n)])
    mdl = CandidateModel(X, [1.0, 2.0], [0.0, 1.0])
    Z = np.column_stack([np.ones(n), np.linspace(0, 1, n) ** 2])
    return mdl, ProposedDesign(Z, [0.0, 1.0])


def test_mc_matches_analytic_moments(rng):
    mdl, design = _pair(rng)
    sims = simulate_fits(SimulationPlan([mdl], design, 4000, seed=1))
    mean, _, se = summarize(sims.estimates[0])
    assert abs(mean - design.c_Z @ expected_gamma(design.Z, mdl)) <= 4 * se
    m2, _, se2 = summarize(sims.sigma_sq[0])
    assert abs(m2 - (1.0 + model_variance_bias(design.Z, mdl))) <= 4 * se2


def test_deterministic_across_thread_counts(monkeypatch, rng):
    mdl, design = _pair(rng)
    models = [mdl, mdl.replace(snr=np.array([0.0, 1.0])), mdl.replace(snr=np.array([2.0, -1.0]))]
    out = []
    for k in ("1", "3"):
        monkeypatch.setenv("SMARTDM_THREADS", k)
        out.append(simulate_fits(SimulationPlan(models, design, 2500, seed=7)).t)
    np.testing.assert_array_equal(out[0], out[1])


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("SMARTDM_THREADS", "2")
    assert worker_count() == 2
    monkeypatch.setenv("SMARTDM_THREADS", "zero")
    with pytest.raises(InvalidInput):
        worker_count()
    monkeypatch.setenv("SMARTDM_THREADS", "0")
    with pytest.raises(InvalidInput):
        worker_count()


def test_noise_streams_are_keyed():
    a = noise_block(0, 1, 2, 5, 3)
    np.testing.assert_array_equal(a, noise_block(0, 1, 2, 5, 3))
    assert not np.array_equal(a, noise_block(0, 2, 1, 5, 3))


def test_chunking_does_not_change_leading_replicates(rng):
    mdl, design = _pair(rng)
    short = simulate_fits(SimulationPlan([mdl], design, 500, seed=3)).estimates
    long = simulate_fits(SimulationPlan([mdl], design, 1500, seed=3)).estimates
    np.testing.assert_allclose(short[0], long[0, :500], rtol=1e-12, atol=1e-12)


def test_summarize_matches_numpy(rng):
    x = rng.standard_normal(101)
    mean, sd, se = summarize(x)
    assert mean == pytest.approx(x.mean(), abs=1e-15)
    assert sd == pytest.approx(x.std(ddof=1))
    assert se == pytest.approx(sd / np.sqrt(101))


def test_roc_endpoints_and_monotonicity(rng):
    mdl, design = _pair(rng)
    null = mdl.replace(snr=np.array([1.0, 0.0]))
    roc = roc_curve(design, mdl, null, default_thresholds(-5, 15, 0.5), 300, seed=2)
    assert roc[0][1:] == (1.0, 1.0)
    assert roc[-1][1:] == (0.0, 0.0)
    fpr = [r[1] for r in roc]
    tpr = [r[2] for r in roc]
    assert all(b <= a for a, b in zip(fpr, fpr[1:]))
    assert all(b <= a for a, b in zip(tpr, tpr[1:]))
    tc, sens, spec = best_operating_point(roc)
    assert sens + spec >= 1.0


def test_performance_curves_columns(rng):
    mdl, design = _pair(rng)
    rep = performance_curves(design, [mdl], n_reps=0)
    assert len(rep.per_model[0]) == len(rep.columns)
    assert np.isnan(rep.per_model[0][5])
    rep = performance_curves(design, [mdl], n_reps=200)
    assert np.isfinite(rep.per_model[0][7])


def test_temporal_derivative_column():
    ev = np.array([0.0, 1.0, 3.0, 6.0])
    np.testing.assert_array_equal(temporal_derivative(ev), [0.0, 1.0, 2.0, 3.0])
    base = build_infusion_base()
    D = derivative_design(base)
    assert D.shape == (base.n, 3)
    np.testing.assert_array_equal(D[:, 2], np.concatenate([[0.0], np.diff(base.ev_primary)]))


def test_plan_validation(rng):
    mdl, design = _pair(rng)
    with pytest.raises(InvalidInput):
        SimulationPlan([mdl], design, 0)
    with pytest.raises(InvalidInput):
        SimulationPlan([CandidateModel(np.ones((5, 1)), [1.0], [1.0])], design, 10)
