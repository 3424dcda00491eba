import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smartdm.errors import DimensionMismatch, InvalidInput, SingularDesign, ZeroResidualVariance
from smartdm.glm import (
    CandidateModel,
    ProposedDesign,
    contrast_bias,
    contrast_bias_absolute,
    contrast_variance_change,
    expected_f,
    expected_gamma,
    glm_fit,
    model_variance_bias,
    noncentrality,
    performance_measures,
    residual_projector,
    t_statistic,
)


def test_glm_fit_matches_lstsq(rng):
    Z = rng.standard_normal((40, 3))
    y = rng.standard_normal(40)
    fit = glm_fit(Z, y)
    ref, res, *_ = np.linalg.lstsq(Z, y, rcond=None)
    np.testing.assert_allclose(fit.gamma_hat, ref, atol=1e-12)
    assert fit.dof == 37
    assert fit.sigma1_sq_hat == pytest.approx(res[0] / 37, rel=1e-12)


def test_exact_fit_recovers_coefficients(rng):
    Z = rng.standard_normal((20, 2))
    fit = glm_fit(Z, Z @ np.array([2.0, -1.0]) + 1e-9 * rng.standard_normal(20))
    np.testing.assert_allclose(fit.gamma_hat, [2.0, -1.0], atol=1e-7)


def test_projector_is_idempotent_and_annihilates_z(rng):
    Z = rng.standard_normal((15, 4))
    P = residual_projector(Z)
    np.testing.assert_allclose(P @ P, P, atol=1e-12)
    np.testing.assert_allclose(P @ Z, 0.0, atol=1e-12)
    assert np.trace(P) == pytest.approx(11.0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(8, 40), p=st.integers(1, 4))
def test_gauss_markov_identities(seed, n, p):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    c = rng.standard_normal(p)
    snr = rng.uniform(0.5, 2.0, p) * rng.choice([-1, 1], p)
    mdl = CandidateModel(X, snr, c)
    m = performance_measures(X, c, mdl)
    assert abs(m.v_b) <= 1e-10
    assert abs(m.cv_delta) <= 1e-10
    assert abs(m.noncentrality) <= 1e-10 * max(1.0, float(mdl.signal @ mdl.signal))
    assert abs(contrast_bias_absolute(X, c, mdl)) <= 1e-10 * max(1.0, abs(mdl.contrast_signal))
    gm = mdl.gauss_markov_variance()
    assert m.expected_f == pytest.approx(gm, rel=1e-10)


def test_misspecified_bias_by_hand():
    # a constant-only design fitted to a ramp
    n = 10
    t = np.arange(n, dtype=float)
    X = np.column_stack([np.ones(n), t])
    mdl = CandidateModel(X, [1.0, 1.0], [1.0, 0.0])
    Z = np.ones((n, 1))
    # E[gamma] = mean(1 + t) = 1 + 4.5
    assert expected_gamma(Z, mdl) == pytest.approx([5.5])
    assert contrast_bias(Z, [1.0], mdl) == pytest.approx(4.5)
    assert contrast_bias_absolute(Z, [1.0], mdl) == pytest.approx(4.5)
    rss = float(np.sum((t - t.mean()) ** 2))
    assert noncentrality(Z, mdl) == pytest.approx(rss)
    assert model_variance_bias(Z, mdl) == pytest.approx(rss / 9)


def test_zero_signal_contrast_bias_is_unnormalized(rng):
    X = rng.standard_normal((20, 2))
    mdl = CandidateModel(X, [0.0, 1.0], [1.0, 0.0])
    Z = X[:, :1]
    assert contrast_bias(Z, [1.0], mdl) == pytest.approx(contrast_bias_absolute(Z, [1.0], mdl))


def test_cv_delta_formula(rng):
    X = rng.standard_normal((25, 2))
    mdl = CandidateModel(X, [1.0, 0.3], [1.0, 0.0])
    Z = rng.standard_normal((25, 3))
    c = np.array([1.0, 0.5, 0.0])
    K = np.linalg.inv(Z.T @ Z)
    vb = model_variance_bias(Z, mdl)
    gm = mdl.gauss_markov_variance()
    assert contrast_variance_change(Z, c, mdl) == pytest.approx((1 + vb) * c @ K @ c / gm - 1)
    assert expected_f(Z, c, mdl) == pytest.approx(
        (1 + vb) * c @ K @ c + contrast_bias_absolute(Z, c, mdl) ** 2)


def test_t_statistic_zero_variance_raises():
    Z = np.column_stack([np.ones(5), np.arange(5.0)])
    fit = glm_fit(Z, Z @ np.array([1.0, 2.0]))
    object.__setattr__(fit, "sigma1_sq_hat", 0.0)
    with pytest.raises(ZeroResidualVariance):
        t_statistic(fit, Z, [0.0, 1.0])


def test_input_validation(rng):
    X = rng.standard_normal((10, 2))
    with pytest.raises(DimensionMismatch):
        CandidateModel(X, [1.0], [1.0, 0.0])
    with pytest.raises(InvalidInput):
        CandidateModel(X, [1.0, 0.0], [1.0, 0.0], phi=1.0)
    with pytest.raises(InvalidInput):
        CandidateModel(X, [1.0, 0.0], [1.0, 0.0], w=-1.0)
    with pytest.raises(SingularDesign):
        CandidateModel(np.column_stack([X[:, 0], X[:, 0]]), [1.0, 0.0], [1.0, 0.0])
    with pytest.raises(DimensionMismatch):
        ProposedDesign(X, [1.0])
    with pytest.raises(DimensionMismatch):
        glm_fit(X, np.ones(9))


def test_model_arrays_are_frozen(rng):
    mdl = CandidateModel(rng.standard_normal((6, 1)), [1.0], [1.0])
    with pytest.raises(ValueError):
        mdl.X[0, 0] = 3.0
