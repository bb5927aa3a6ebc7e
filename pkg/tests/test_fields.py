import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gradrelief.fields import (
    FieldError,
    GradientField,
    as_scalar_field,
    divergence,
    gradient,
    normals_from_gradient,
    resample,
    thread_count,
)

from oracles import dense_gradient_matrix, loop_inner, loop_inner_gradient


def test_constant_field_has_zero_gradient():
    g = gradient(np.full((5, 7), 3.25))
    assert not g.du.any() and not g.dv.any()


def test_ramp_gradient():
    u = np.arange(4)
    h = np.tile(0.1 * u, (4, 1))
    g = gradient(h)
    np.testing.assert_allclose(g.du[:, :3], 0.1, rtol=0, atol=1e-15)
    assert np.all(g.du[:, 3] == 0.0)
    assert np.all(g.dv == 0.0)


def test_adjointness_against_double_sum(rng):
    h = rng.normal(size=(4, 4))
    du, dv = rng.normal(size=(4, 4)), rng.normal(size=(4, 4))
    lhs = loop_inner_gradient(h, du, dv)
    rhs = -loop_inner(h, divergence(GradientField(du, dv)))
    assert lhs == pytest.approx(rhs, rel=1e-13, abs=1e-13)


def test_divergence_of_zero():
    assert not divergence(GradientField.zeros((3, 6))).any()


def test_divergence_of_ramp_gradient_vanishes_inside():
    v, u = np.mgrid[0:9, 0:11]
    lap = divergence(gradient(0.3 * u - 0.7 * v + 2.0))
    np.testing.assert_allclose(lap[1:-1, 1:-1], 0.0, atol=1e-13)


def test_divergence_matches_dense_transpose(rng):
    H, W = 8, 8
    du, dv = rng.normal(size=(H, W)), rng.normal(size=(H, W))
    D = dense_gradient_matrix(H, W)
    expected = -(D.T @ np.concatenate([du.ravel(), dv.ravel()])).reshape(H, W)
    # entries the gradient never produces must not matter
    du[:, -1] = 123.0
    dv[-1, :] = -55.0
    np.testing.assert_allclose(divergence(GradientField(du, dv)), expected, atol=1e-13)


def test_gradient_matches_dense_matrix(rng):
    h = rng.normal(size=(6, 9))
    D = dense_gradient_matrix(6, 9)
    flat = D @ h.ravel()
    g = gradient(h)
    np.testing.assert_allclose(g.du.ravel(), flat[:54], atol=1e-14)
    np.testing.assert_allclose(g.dv.ravel(), flat[54:], atol=1e-14)


@settings(max_examples=120, deadline=None)
@given(
    H=st.integers(2, 16),
    W=st.integers(2, 16),
    seed=st.integers(0, 2**32 - 1),
)
def test_adjointness_property(H, W, seed):
    r = np.random.default_rng(seed)
    h = r.normal(size=(H, W))
    g = GradientField(r.normal(size=(H, W)), r.normal(size=(H, W)))
    gh = gradient(h)
    a = np.sum(gh.du * g.du) + np.sum(gh.dv * g.dv)
    b = np.sum(h * divergence(g))
    scale = np.sum(np.abs(gh.du * g.du)) + np.sum(np.abs(gh.dv * g.dv)) + np.sum(np.abs(h * divergence(g)))
    assert abs(a + b) <= 1e-10 * scale


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(-1e3, 1e3))
def test_translation_invariance(seed, c):
    h = np.random.default_rng(seed).normal(size=(7, 5))
    a, b = gradient(h), gradient(h + c)
    # forward differences of h + c round differently only through h + c itself
    np.testing.assert_allclose(a.du, b.du, atol=1e-12 * (1 + abs(c)))
    np.testing.assert_allclose(a.dv, b.dv, atol=1e-12 * (1 + abs(c)))


def test_translation_invariance_exact_for_representable_shift(rng):
    h = np.round(rng.normal(size=(7, 5)) * 1024) / 1024
    a, b = gradient(h), gradient(h + 5.0)
    assert np.array_equal(a.du, b.du) and np.array_equal(a.dv, b.dv)


def test_linearity(rng):
    h1, h2 = rng.normal(size=(2, 10, 12))
    a, b = 0.37, -2.5
    lhs = gradient(a * h1 + b * h2)
    g1, g2 = gradient(h1), gradient(h2)
    np.testing.assert_allclose(lhs.du, a * g1.du + b * g2.du, atol=1e-12)
    np.testing.assert_allclose(lhs.dv, a * g1.dv + b * g2.dv, atol=1e-12)


def test_flat_normals():
    n = normals_from_gradient(GradientField.zeros((3, 3)), 1.0)
    assert np.all(n.nx == 0) and np.all(n.ny == 0) and np.all(n.nz == 1)


def test_tilted_normal_closed_form():
    n = normals_from_gradient(GradientField(np.ones((2, 2)), np.zeros((2, 2))), 1.0)
    with mpmath.workdps(30):
        c = float(1 / mpmath.sqrt(2))
    np.testing.assert_allclose(n.nx, -c, rtol=1e-15)
    np.testing.assert_allclose(n.nz, c, rtol=1e-15)
    assert np.all(n.ny == 0)
    assert abs(n.nx[0, 0] + 0.70711) < 5e-6


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), eta=st.floats(1e-3, 1e3), scale=st.floats(1e-3, 1e3))
def test_normals_unit_and_upward(seed, eta, scale):
    r = np.random.default_rng(seed)
    g = GradientField(scale * r.normal(size=(4, 5)), scale * r.normal(size=(4, 5)))
    n = normals_from_gradient(g, eta)
    norm = np.sqrt(n.nx**2 + n.ny**2 + n.nz**2)
    np.testing.assert_allclose(norm, 1.0, atol=1e-9)
    assert np.all(n.nz > 0)


@pytest.mark.parametrize("eta", [0.0, -1.0])
def test_normals_reject_nonpositive_eta(eta):
    with pytest.raises(FieldError):
        normals_from_gradient(GradientField.zeros((2, 2)), eta)


def test_resample_identity_is_bit_exact(rng):
    h = rng.normal(size=(13, 17))
    out = resample(h, 17, 13)
    assert np.array_equal(out, h) and out is not h


def test_resample_constant():
    out = resample(np.full((9, 6), 0.42), 31, 4)
    assert out.shape == (4, 31)
    np.testing.assert_allclose(out, 0.42, rtol=0, atol=1e-15)


def test_resample_down_up_recovers_ramp():
    v, u = np.mgrid[0:32, 0:32]
    ramp = 0.01 * u + 0.02 * v
    back = resample(resample(ramp, 16, 16), 32, 32)
    np.testing.assert_allclose(back[1:-1, 1:-1], ramp[1:-1, 1:-1], atol=1e-6)


def test_resample_rejects_tiny_target():
    with pytest.raises(FieldError):
        resample(np.zeros((4, 4)), 1, 4)


@pytest.mark.parametrize("bad", [np.zeros(5), np.zeros((1, 4)), np.array([[0.0, np.nan], [1, 2]])])
def test_scalar_field_validation(bad):
    with pytest.raises(FieldError):
        as_scalar_field(bad)


def test_thread_count_env(monkeypatch):
    monkeypatch.delenv("RELIEF_THREADS", raising=False)
    assert thread_count() is None
    monkeypatch.setenv("RELIEF_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("RELIEF_THREADS", "0")
    with pytest.raises(FieldError):
        thread_count()

