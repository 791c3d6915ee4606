import itertools

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from loopsoliton import numkernel as nk
from loopsoliton.errors import BadModulus
from loopsoliton.theta import ZERO, ThetaCharacteristic, check_modulus, riemann_theta, theta_jet

TAU = np.array([[1.1j + 0.2, 0.3 + 0.25j], [0.3 + 0.25j, 0.9j - 0.1]])


def brute_theta(z, tau, ch, n=12):
    """Direct double sum over |n_i| <= 12; the oracle for the truncated series."""
    dp, dpp = np.array(ch.delta_p), np.array(ch.delta_pp)
    total = 0j
    for k in itertools.product(range(-n, n + 1), repeat=2):
        m = np.array(k) + dpp
        total += np.exp(1j * np.pi * m @ tau @ m + 2j * np.pi * m @ (z + dp))
    return total


def test_sixteen_characteristics_six_odd():
    chars = ThetaCharacteristic.all()
    assert len(set(chars)) == 16
    assert sum(ch.is_odd for ch in chars) == 6


def test_reduce_and_sum_mod_one():
    ch = ThetaCharacteristic.reduce((1.5, -0.5), (2.0, 0.5))
    assert ch == ThetaCharacteristic((0.5, 0.5), (0.0, 0.5))
    a = ThetaCharacteristic((0.5, 0.0), (0.5, 0.5))
    assert a + a == ZERO
    with pytest.raises(ValueError):
        ThetaCharacteristic((0.25, 0.0), (0.0, 0.0))


@pytest.mark.parametrize("ch", ThetaCharacteristic.all(), ids=str)
def test_against_brute_force_sum(ch):
    z = np.array([0.3 + 0.1j, -0.2 + 0.05j])
    assert abs(riemann_theta(z, TAU, ch) - brute_theta(z, TAU, ch)) < 1e-13


def test_truncation_six_vs_twelve_agree():
    # the oracle itself has converged by n = 6 for this modulus
    z = np.array([0.1 - 0.2j, 0.4j])
    assert abs(brute_theta(z, TAU, ZERO, 6) - brute_theta(z, TAU, ZERO, 12)) < 1e-15


def test_odd_characteristics_vanish_at_origin():
    for ch in ThetaCharacteristic.all():
        val = riemann_theta(np.zeros(2), TAU, ch)
        if ch.is_odd:
            assert abs(val) < 1e-14
        else:
            assert abs(val) > 1e-3


def test_parity_under_negation():
    z = np.array([0.27 - 0.1j, 0.11 + 0.3j])
    for ch in ThetaCharacteristic.all():
        sign = -1 if ch.is_odd else 1
        assert abs(riemann_theta(-z, TAU, ch) - sign * riemann_theta(z, TAU, ch)) < 1e-13


def test_quasi_periodicity():
    z = np.array([0.2 + 0.1j, -0.3 + 0.2j])
    e1 = np.array([1.0, 0.0])
    base = riemann_theta(z, TAU, ZERO)
    assert abs(riemann_theta(z + e1, TAU, ZERO) - base) < 1e-13
    # theta(z + tau e1) = exp(-i pi tau11 - 2 pi i z1) theta(z)
    shifted = riemann_theta(z + TAU @ e1, TAU, ZERO)
    assert abs(shifted - np.exp(-1j * np.pi * TAU[0, 0] - 2j * np.pi * z[0]) * base) < 1e-12


def test_batch_evaluation_matches_pointwise():
    zs = np.array([[0.1, 0.2j], [0.3 - 0.1j, -0.2], [0.0, 0.0]])
    batch = riemann_theta(zs, TAU, ZERO)
    assert batch.shape == (3,)
    for z, v in zip(zs, batch):
        assert abs(riemann_theta(z, TAU, ZERO) - v) < 1e-15


@settings(max_examples=15, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(-0.3, 0.3), st.floats(-0.5, 0.5), st.floats(-0.3, 0.3))
def test_log_derivatives_match_finite_differences(a, b, c, d):
    z = np.array([a + 1j * b, c + 1j * d])
    ch = ThetaCharacteristic((0.5, 0.0), (0.0, 0.5))
    th = lambda x: riemann_theta(z + np.array([x, 0.0]), TAU, ch)
    t0 = th(0.0)
    assume(abs(t0) > 1e-2)  # keep clear of the zero set
    d1 = nk.finite_diff(th, 0.0, 1, 1e-3) / t0
    d2 = nk.finite_diff(th, 0.0, 2, 1e-3) / t0
    jet = theta_jet(z, TAU, ch, order=2)
    scale = 1 / abs(t0)
    assert abs(jet.logd[1][0] - d1) < 1e-8 * scale
    assert abs(jet.logd[2][0, 0] - (d2 - d1 * d1)) < 1e-6 * scale**2


def test_jet_tensors_are_symmetric():
    z = np.array([0.12 + 0.03j, -0.21 + 0.07j])
    jet = theta_jet(z, TAU, ZERO, order=5)
    for k in (2, 3, 4, 5):
        t = jet.logd[k]
        for perm in itertools.permutations(range(k)):
            assert np.allclose(t, np.transpose(t, perm), atol=1e-12)


def test_fifth_cumulant_matches_difference_of_fourth():
    z = np.array([0.12 + 0.03j, -0.21 + 0.07j])
    d5 = theta_jet(z, TAU, ZERO, order=5).logd[5][1, 1, 1, 1, 1]
    d4 = lambda x: theta_jet(z + np.array([0, x]), TAU, ZERO, order=4).logd[4][1, 1, 1, 1]
    assert abs(d5 - nk.finite_diff(d4, 0.0, 1, 1e-3)) < 1e-6 * max(1, abs(d5))


def test_modulus_validation():
    with pytest.raises(BadModulus):
        check_modulus(np.array([[1j, 0.2], [0.3, 1j]]))
    with pytest.raises(BadModulus):
        check_modulus(np.array([[1j, 0], [0, -1j]]))
    with pytest.raises(BadModulus):
        check_modulus(np.eye(3) * 1j)
