import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smartdm.errors import BadLengths, BadRanges, ShiftExceedsLength, UnknownExample
from smartdm.examples import REGISTRY, build_example, fmri_reduced
from smartdm.scenarios import (
    HrfParams,
    block_ev,
    block_family,
    build_infusion_base,
    build_infusion_family_723,
    hrf_convolve,
    hrf_evaluate,
    hrf_family,
    hrf_pieces,
    hrf_sample,
    shift_family,
    shift_right,
)

params_st = st.builds(
    HrfParams,
    h1=st.floats(1.0, 3.0), h2=st.floats(3.0, 7.0), h3=st.floats(3.0, 7.0),
    h4=st.floats(3.0, 9.0), f=st.floats(0.0, 0.5),
)


@settings(max_examples=200, deadline=None)
@given(hp=params_st)
def test_hrf_knot_values(hp):
    k1, k2, k3, k4 = hp.knots
    assert abs(hrf_evaluate(hp, k1)) <= 1e-12
    assert abs(hrf_evaluate(hp, k2) - 1.0) <= 1e-12
    assert abs(hrf_evaluate(hp, k3) + hp.f) <= 1e-12
    assert abs(hrf_evaluate(hp, k4)) <= 1e-12
    assert hrf_evaluate(hp, 0.0) == 0.0
    assert hrf_evaluate(hp, k4 + 1.0) == 0.0


@settings(max_examples=200, deadline=None)
@given(hp=params_st)
def test_hrf_piece_continuity(hp):
    k1, k2, k3, k4 = hp.knots
    rise, fall, rec = hrf_pieces(hp, np.array([k1, k2, k3, k4]))
    assert abs(rise[0]) <= 1e-12
    assert abs(rise[1] - fall[1]) <= 1e-12
    assert abs(fall[2] - rec[2]) <= 1e-12
    assert abs(rec[3]) <= 1e-12


def test_hrf_sample_shapes_and_seed():
    p1, c1 = hrf_sample(5, seed=1)
    p2, c2 = hrf_sample(5, seed=1)
    np.testing.assert_array_equal(c1, c2)
    assert c1.shape == (261, 5)
    assert np.all(c1[0] == 0.0)
    assert p1 == p2


def test_hrf_bad_ranges():
    with pytest.raises(BadRanges):
        hrf_sample(3, ranges={"h1": (3, 1), "h2": (3, 7), "h3": (3, 7), "h4": (3, 9), "f": (0, 0.5)})
    with pytest.raises(BadRanges):
        hrf_sample(3, ranges={"h1": (1, 3), "h2": (3, 7), "h3": (3, 7), "h4": (3, 9), "f": (0, 1.5)})
    with pytest.raises(BadRanges):
        HrfParams(0.0, 1, 1, 1, 0.1)


def test_hrf_convolve_impulse():
    ev = np.zeros(50)
    ev[0] = 1.0
    h = np.arange(10.0)
    np.testing.assert_allclose(hrf_convolve(ev, h, dt=1.0)[:10], h)


def test_infusion_base():
    base = build_infusion_base()
    assert base.n == 598
    assert np.all(base.ev_primary[:121] == 0.0)
    assert base.ev_primary[264] == 1.0 and base.ev_primary[-1] == 1.0
    assert base.ev_drift[0] == 0.0 and base.ev_drift[-1] == 1.0
    assert np.all(np.diff(base.ev_primary) >= 0)
    with pytest.raises(BadLengths):
        build_infusion_base(n=100)


def test_shift_right():
    np.testing.assert_array_equal(shift_right([1.0, 2.0, 3.0], 1), [0.0, 1.0, 2.0])
    np.testing.assert_array_equal(shift_right([1.0, 2.0], 0), [1.0, 2.0])


def test_shift_family_contents():
    base = build_infusion_base()
    fam = shift_family(base, 50)
    assert len(fam) == 50
    np.testing.assert_array_equal(fam[9].X[:, 0], shift_right(base.ev_primary, 10))
    with pytest.raises(ShiftExceedsLength):
        shift_family(base, 700)


@pytest.mark.parametrize("step, size", [(1, 723), (10, 75)])
def test_infusion_family_sizes(step, size):
    fam = build_infusion_family_723(step=step)
    assert len(fam) == size
    assert sum(m.contrast_signal == 0.0 for m in fam) == 3


def test_block_family():
    ev = block_ev(200, 20)
    assert ev[:20].sum() == 0 and ev[20:40].sum() == 20
    fam = block_family()
    assert len(fam) == 12
    assert fam[0].contrast_signal == 1.0 and fam[6].contrast_signal == -1.0


def test_hrf_family_size():
    assert len(hrf_family(200, seed=0)) == 400


@pytest.mark.parametrize("name", sorted(set(REGISTRY) - {"fmri-723"}))
def test_examples_build(name):
    spec = build_example(name)
    assert spec.name.startswith(name.split("-")[0])


def test_fmri_reduced_sizes():
    spec = fmri_reduced()
    assert spec.m == 75 and spec.p == 6


def test_unknown_example():
    with pytest.raises(UnknownExample, match="valid names"):
        build_example("nope")
