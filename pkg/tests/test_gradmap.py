import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gradrelief.fields import GradientField
from gradrelief.gradmap import (
    ParameterError,
    ReliefParams,
    phi1,
    phi1_scale,
    phi2,
    phi2_scale,
    sigmoid_variant,
)

from oracles import mp_sigmoid_variant


def logistic(x):
    return 1.0 / (1.0 + np.exp(-x))


@pytest.mark.parametrize("alpha", [0.1, 1.0, 8.0, 100.0])
def test_sigmoid_variant_zero(alpha):
    assert sigmoid_variant(0.0, alpha) == 0.0


def test_sigmoid_variant_ln3():
    expected = float(mp_sigmoid_variant(math.log(3.0), 1.0))
    assert expected == pytest.approx(0.5, abs=1e-15)
    assert sigmoid_variant(math.log(3.0), 1.0) == pytest.approx(expected, abs=1e-15)


def test_sigmoid_variant_matches_exponential_form_extended_precision():
    xs = np.linspace(-6, 6, 97)
    for alpha in (0.5, 2.0, 8.0):
        ours = sigmoid_variant(xs, alpha)
        ref = np.array([float(mp_sigmoid_variant(x, alpha)) for x in xs])
        np.testing.assert_allclose(ours, ref, rtol=0, atol=2e-16)


def test_larger_alpha_pushes_toward_one():
    x = np.arange(1, 10001) * 1e-3
    assert np.all(sigmoid_variant(x, 8.0) >= sigmoid_variant(x, 2.0))


def test_odd_bounded_monotone():
    x = np.arange(-10000, 10001) * 1e-3
    for alpha in (0.5, 1.0, 8.0):
        s = sigmoid_variant(x, alpha)
        assert np.array_equal(sigmoid_variant(-x, alpha), -s)
        assert np.all(np.abs(s) <= 1.0)
        inner = np.abs(x) < 4.0
        assert np.all(np.diff(s[inner]) > 0)
        assert np.all(np.diff(s) >= 0)


def test_bounded_strictly_where_representable():
    x = np.linspace(-20, 20, 1001)
    assert np.all(np.abs(sigmoid_variant(x, 1.0)) < 1.0)


def test_logistic_identity():
    x = np.linspace(-20, 20, 1000)
    np.testing.assert_allclose((sigmoid_variant(x, 1.0) + 1.0) / 2.0, logistic(x), rtol=0, atol=1e-12)


@pytest.mark.parametrize("alpha", [0.0, -2.0])
def test_sigmoid_rejects_nonpositive_alpha(alpha):
    with pytest.raises(ParameterError):
        sigmoid_variant(1.0, alpha)


@pytest.mark.parametrize("mode", ["normalized", "literal"])
def test_phi_zero_gradient(mode):
    z = GradientField.zeros((3, 3))
    assert not phi1(z, 8.0, mode).du.any()
    assert not phi2(z, 4.0, 16.0, mode).dv.any()


def test_phi1_normalized_large_magnitude():
    g = GradientField(np.full((2, 2), 1e6), np.zeros((2, 2)))
    out = phi1(g, 8.0, "normalized")
    mag = out.magnitude()
    assert np.all(mag < 1.0) or np.all(mag == 1.0)
    np.testing.assert_allclose(mag, 1.0, atol=1e-12)
    np.testing.assert_allclose(mag, float(mp_sigmoid_variant(1e6, 8)), atol=1e-12)


def test_phi1_literal_small_magnitude():
    expected_scale = float(mp_sigmoid_variant(0.01, 8))
    assert expected_scale == pytest.approx(0.039979, abs=5e-7)
    g = GradientField(np.full((2, 2), 0.01), np.zeros((2, 2)))
    out = phi1(g, 8.0, "literal")
    np.testing.assert_allclose(out.du, expected_scale * 0.01, rtol=1e-14)
    assert not out.dv.any()


def test_phi2_equal_alphas_rejected_and_scale_vanishes():
    with pytest.raises(ParameterError):
        phi2_scale(0.5, 4.0, 4.0)
    m = np.linspace(0, 5, 101)
    assert not np.any(sigmoid_variant(m, 4.0) - sigmoid_variant(m, 4.0))


@pytest.mark.parametrize("a1,a2", [(16.0, 4.0), (0.0, 4.0), (-1.0, 2.0)])
def test_phi2_rejects_bad_band(a1, a2):
    with pytest.raises(ParameterError):
        phi2(GradientField.zeros((2, 2)), a1, a2)


def test_phi2_peak_matches_grid_scan():
    # oracle: brute-force scan of the magnitude response on a 1e-4 grid
    m = np.arange(1, 20001) * 1e-4
    response = np.tanh(8.0 * m) - np.tanh(2.0 * m)
    m_peak = m[np.argmax(response)]
    # implementation: output magnitudes of phi2 on a finer grid
    fine = np.linspace(1e-5, 2.0, 400001)
    g = GradientField(fine.reshape(1, -1).repeat(2, 0), np.zeros((2, fine.size)))
    out = phi2(g, 4.0, 16.0, "normalized").magnitude()[0]
    assert abs(fine[np.argmax(out)] - m_peak) <= 1e-4


def test_phi2_band_edges_vanish():
    s = phi2_scale(np.array([1e-6, 1e6]), 4.0, 16.0, "normalized")
    # at m -> 0 the normalized scale is a gain (S2 - S1)/m; the output magnitude vanishes
    assert 1e-6 * s[0] < 1e-5
    assert s[1] < 1e-5


def test_phi2_scale_nonnegative():
    m = np.linspace(0, 50, 5001)
    for mode in ("normalized", "literal"):
        assert np.all(phi2_scale(m, 4.0, 16.0, mode) >= 0)


def test_silhouette_step_capped():
    g = GradientField(np.array([[100.0, 0.0], [0.0, 0.0]]), np.zeros((2, 2)))
    out = phi1(g, 8.0, "normalized").magnitude()
    assert out.max() <= 1.0


@settings(max_examples=80, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    scale=st.floats(1e-4, 1e2),
    mode=st.sampled_from(["normalized", "literal"]),
)
def test_direction_preserved(seed, scale, mode):
    r = np.random.default_rng(seed)
    g = GradientField(scale * r.normal(size=(6, 6)), scale * r.normal(size=(6, 6)))
    for out in (phi1(g, 8.0, mode), phi2(g, 4.0, 16.0, mode)):
        a, b = g.magnitude(), out.magnitude()
        both = (a > 0) & (b > 0)
        cos = (g.du * out.du + g.dv * out.dv)[both] / (a * b)[both]
        np.testing.assert_allclose(cos, 1.0, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(m=st.floats(0, 1e8), alpha=st.floats(1e-2, 1e2))
def test_normalized_phi1_magnitude_below_one(m, alpha):
    out = m * phi1_scale(np.array([m]), alpha, "normalized")[0]
    assert 0.0 <= out <= 1.0


def test_relief_params_validation():
    ReliefParams()
    with pytest.raises(ParameterError):
        ReliefParams(alpha1=16.0, alpha2=4.0)
    with pytest.raises(ParameterError):
        ReliefParams(eta=0.0)
    with pytest.raises(ParameterError):
        ReliefParams(phi_mode="other")
