import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from movingwall.boundary import BoundaryMotion, Regime, scaling_map


@pytest.mark.parametrize("c,beta,t,expected", [(2.0, 0.5, 3.0, 2.0), (5.0, 0.0, 10.0, 0.0), (1.0, 1.0, 7.0, 7.0)])
def test_position_examples(c, beta, t, expected):
    assert BoundaryMotion(c, beta).position(t) == pytest.approx(expected, rel=1e-14, abs=1e-14)


@pytest.mark.parametrize("c,beta,t,expected", [(1.0, 1.0, 100.0, 1.0), (2.0, 0.5, 3.0, 0.5), (3.0, 0.0, 1.0, 0.0)])
def test_speed_examples(c, beta, t, expected):
    assert BoundaryMotion(c, beta).speed(t) == pytest.approx(expected, rel=1e-14, abs=1e-14)


def test_psi_examples():
    assert BoundaryMotion(3.0, 0.5).psi(7.2) == pytest.approx(3.0, rel=1e-14)
    assert BoundaryMotion(4.0, 0.0).psi(1.0) == 0.0
    assert BoundaryMotion(1.0, 0.25).psi(0.0) == pytest.approx(0.5, rel=1e-14)


def test_eta_examples():
    assert BoundaryMotion(1.0, 1.0).eta(5.0) == 0.0
    assert BoundaryMotion(1.0, 0.75).eta(0.0) == pytest.approx(-0.25, rel=1e-14)
    assert BoundaryMotion(1.0, 0.75).eta(2.0) == pytest.approx(-0.125, rel=1e-14)


def test_tau_examples():
    assert BoundaryMotion(1.0, 0.25).tau_of_t(math.e ** 2 - 1) == pytest.approx(1.0, rel=1e-14)
    assert BoundaryMotion(1.0, 1.0).tau_of_t(9.0) == pytest.approx(9.0, rel=1e-14)
    assert BoundaryMotion(1.0, 0.75).tau_of_t(3.0) == pytest.approx(2.0, rel=1e-14)


def test_scaling_map_examples():
    lin = scaling_map(BoundaryMotion(1.0, 1.0))
    t = np.array([0.0, 1.0, 50.0])
    assert np.all(lin.amplitude(t) == 1.0)
    np.testing.assert_allclose(lin.rescaled_time(t), t, rtol=1e-15)
    sub = scaling_map(BoundaryMotion(1.0, 0.0))
    assert sub.amplitude(3.0) == pytest.approx(0.5, rel=1e-15)
    assert sub.rescaled_time(3.0) == pytest.approx(math.log(2.0), rel=1e-15)
    sup = scaling_map(BoundaryMotion(1.0, 0.75))
    assert sup.amplitude(3.0) == pytest.approx(1 / math.sqrt(2), rel=1e-15)
    assert sup.rescaled_time(3.0) == pytest.approx(2.0, rel=1e-15)


def test_amplitude_is_speed_ratio_in_supercritical_frame():
    bm = BoundaryMotion(1.7, 0.8)
    t = np.geomspace(1e-3, 1e3, 20)
    np.testing.assert_allclose(scaling_map(bm).amplitude(t), bm.speed(t) / (bm.c * bm.beta), rtol=1e-13)


def test_regime_classification():
    assert Regime.of(0.0) is Regime.SUB_CRITICAL
    assert Regime.of(0.49) is Regime.SUB_CRITICAL
    assert Regime.of(0.5) is Regime.CRITICAL
    assert Regime.of(0.75) is Regime.SUPER_CRITICAL
    assert Regime.of(1.0) is Regime.LINEAR
    assert Regime.of(1.5) is Regime.EXPLORATORY
    assert not Regime.EXPLORATORY.certified


@pytest.mark.parametrize("kwargs", [dict(c=0.0, beta=0.5), dict(c=1.0, beta=-0.1), dict(c=1.0, beta=0.5, d=0.0)])
def test_constructor_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        BoundaryMotion(**kwargs)


def test_rejects_negative_time_and_wrong_frame():
    bm = BoundaryMotion(1.0, 0.5)
    with pytest.raises(ValueError):
        bm.position(-1.0)
    with pytest.raises(ValueError):
        bm.speed(-1.0)
    with pytest.raises(ValueError):
        bm.eta(1.0)
    with pytest.raises(ValueError):
        BoundaryMotion(1.0, 0.75).psi(1.0)
    with pytest.raises(ValueError):
        bm.tau_of_t(-0.5)
    with pytest.raises(ValueError):
        bm.t_of_tau(-0.5)


betas = st.sampled_from([0.0, 0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9, 1.0, 1.3])


@settings(max_examples=60, deadline=None)
@given(c=st.floats(0.1, 10.0), beta=betas)
def test_position_nondecreasing_and_speed_is_derivative(c, beta):
    bm = BoundaryMotion(c, beta)
    assert bm.position(0.0) == 0.0
    t = np.geomspace(0.1, 100.0, 40)
    assert np.all(np.diff(bm.position(t)) >= 0)
    h = 1e-5 * t
    fd = (bm.position(t + h) - bm.position(t - h)) / (2 * h)
    np.testing.assert_allclose(fd, bm.speed(t), rtol=1e-6, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(beta=betas)
def test_time_maps_round_trip(beta):
    bm = BoundaryMotion(1.0, beta)
    t = np.concatenate([[0.0], np.geomspace(1e-6, 1e6, 60)])
    tau = bm.tau_of_t(t)
    assert np.all(np.diff(tau) > 0)
    back = bm.t_of_tau(tau)
    np.testing.assert_allclose(back, t, rtol=1e-12, atol=1e-300)


def test_rescaling_round_trip_preserves_mass():
    rng = np.random.default_rng(7)
    for beta in (0.0, 0.3, 0.5, 0.75, 1.0):
        smap = scaling_map(BoundaryMotion(1.0, beta))
        x = np.linspace(0.0, 10.0, 501)
        v = rng.random(501)
        tau, y, w = smap.to_rescaled(12.0, x, v)
        t, x2, v2 = smap.to_physical(tau, y, w)
        assert t == pytest.approx(12.0, rel=1e-13)
        mass_x = np.trapezoid(v, x)
        assert np.trapezoid(w, y) == pytest.approx(mass_x, rel=1e-12)
        assert np.trapezoid(v2, x2) == pytest.approx(mass_x, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(beta=st.floats(0.51, 2.0), tau=st.lists(st.floats(0.0, 50.0), min_size=2, max_size=8))
def test_eta_sign_and_monotone_magnitude(beta, tau):
    bm = BoundaryMotion(1.0, beta)
    tau = np.sort(np.asarray(tau))
    eta = bm.eta(tau)
    assert np.all(eta * (beta - 1.0) >= 0)
    assert np.all(np.diff(np.abs(eta)) <= 1e-15)


@pytest.mark.parametrize("beta", [0.0, 0.1, 0.3, 0.45])
def test_log_psi_is_affine(beta):
    bm = BoundaryMotion(2.0, beta)
    tau = np.linspace(0.0, 20.0, 41)
    if beta == 0.0:
        assert np.all(bm.psi(tau) == 0.0)
        return
    logpsi = np.log(bm.psi(tau))
    np.testing.assert_allclose(logpsi, math.log(2 * 2.0 * beta) + tau * (2 * beta - 1), rtol=0, atol=1e-12)
