import cmath
import math

import numpy as np
import pytest
from scipy import integrate

from loopsoliton import elliptic as el
from loopsoliton import numkernel as nk
from loopsoliton.errors import DegenerateCurve, PoleProximity, ZeroDenominator

LEMNISCATE_HALF = 1.3110287771460599  # varpi / 2, the real half period of y^2 = 4x^3 - 4x


def quad_half_periods_lemniscatic():
    """omega1 and omega3 of (g2, g3) = (4, 0) from scipy with an algebraic weight.

    x = 1/t^2 maps the integral over [1, inf) of dx / sqrt(4x^3 - 4x) to the
    integral over [0, 1] of dt / sqrt(1 - t^4); x = -1/t^2 does the same for
    the ray (-inf, -1], which carries omega3 / i.
    """
    g = lambda t: 1 / math.sqrt((1 + t) * (1 + t * t))
    w = integrate.quad(g, 0, 1, weight="alg", wvar=(0, -0.5), epsabs=1e-14, epsrel=1e-14)[0]
    return w, 1j * w


def lattice_wp(u, g2, g3, w1, w3, n=30):
    """Truncated lattice sum with the omitted tail restored through G4, G6, G8."""
    m = np.arange(-n, n + 1)
    w = (2 * w1 * m[:, None] + 2 * w3 * m[None, :]).ravel()
    w = w[w != 0]
    g4, g6 = g2 / 60, g3 / 140
    g8 = 3 * g4 * g4 / 7
    tail = 3 * u**2 * (g4 - np.sum(w**-4.0)) + 5 * u**4 * (g6 - np.sum(w**-6.0)) + 7 * u**6 * (g8 - np.sum(w**-8.0))
    return 1 / u**2 + np.sum(1 / (u - w) ** 2 - 1 / w**2) + tail


def laurent_wp(u, g2, g3, terms=20):
    c = {2: g2 / 20, 3: g3 / 28}
    for k in range(4, terms):
        c[k] = 3 / ((2 * k + 1) * (k - 3)) * sum(c[m] * c[k - m] for m in range(2, k - 1))
    return 1 / u**2 + sum(c[k] * u ** (2 * k - 2) for k in range(2, terms))


# --------------------------------------------------------------------------
# construction


def test_half_periods_against_quad(lemniscatic):
    w1, w3 = quad_half_periods_lemniscatic()
    assert abs(lemniscatic.omega1 - w1) < 1e-12
    assert abs(lemniscatic.omega3 - w3) < 1e-12
    assert abs(lemniscatic.omega1 - LEMNISCATE_HALF) < 1e-13


def test_omega1_relation_to_complete_elliptic_k(lemniscatic):
    # K(1/sqrt 2) = 1.8540746773 equals sqrt(e1 - e3) omega1 here, not omega1 itself
    from scipy.special import ellipk

    assert abs(math.sqrt(2) * lemniscatic.omega1 - ellipk(0.5)) < 1e-12


def test_roots_ordered_and_centred(lemniscatic, equianharmonic):
    assert (lemniscatic.e1, lemniscatic.e2, lemniscatic.e3) == pytest.approx((1, 0, -1), abs=1e-14)
    for c in (lemniscatic, equianharmonic):
        assert abs(sum(c.roots)) < 1e-14
        for e in c.roots:
            assert abs(4 * e**3 - c.g2 * e - c.g3) < 1e-12
    re = [e.real for e in equianharmonic.roots]
    assert re == sorted(re, reverse=True)


def test_legendre_relation(lemniscatic, equianharmonic):
    for c in (lemniscatic, equianharmonic):
        assert abs(c.eta1 * c.omega3 - c.eta3 * c.omega1 - 0.5j * math.pi) < 1e-12
        assert c.legendre_residual < 1e-10
        assert c.tau.imag > 0


def test_degenerate_discriminant_raises():
    with pytest.raises(DegenerateCurve):
        el.curve_from_invariants(3, 1)  # 4x^3 - 3x - 1 = (x - 1)(2x + 1)^2
    with pytest.raises(DegenerateCurve):
        el.curve_from_invariants(0, 0)


@pytest.mark.parametrize("a", [1, 2, 3])
def test_wp_at_half_periods_gives_roots(equianharmonic, a):
    c = equianharmonic
    assert abs(el.wp(c.half_period(a), c) - c.root(a)) < 1e-10
    assert abs(el.wp_prime(c.half_period(a), c)) < 1e-8


# --------------------------------------------------------------------------
# wp oracles


def test_wp_against_lattice_sum(lemniscatic, rng):
    w1, w3 = quad_half_periods_lemniscatic()
    pts = el.sample_fundamental_domain(lemniscatic, rng, 40)
    pts = pts[np.abs(pts) > 0.1][:20]
    for u in pts:
        ref = lattice_wp(u, 4.0, 0.0, w1, w3)
        assert abs(el.wp(u, lemniscatic) - ref) < 1e-8 * max(1, abs(ref))


@pytest.mark.parametrize("u", [0.45, 0.3j, 0.2 + 0.35j, -0.31 - 0.1j, 0.05 + 0.02j])
def test_wp_against_laurent_series(lemniscatic, equianharmonic, u):
    for c in (lemniscatic, equianharmonic):
        ref = laurent_wp(u, c.g2, c.g3)
        assert abs(el.wp(u, c) - ref) < 1e-8 * max(1, abs(ref))


def test_differential_equations(equianharmonic, rng):
    c = equianharmonic
    u = el.sample_fundamental_domain(c, rng, 100)
    d = el.wp_derivatives(u, c, 3)
    lhs, rhs = d[1] ** 2, 4 * d[0] ** 3 - c.g2 * d[0] - c.g3
    assert np.max(np.abs(lhs - rhs) / np.maximum(1, np.abs(rhs))) < 1e-9
    assert np.max(np.abs(d[3] - 12 * d[0] * d[1]) / np.maximum(1, np.abs(d[3]))) < 1e-7


def test_zeta_derivative_is_minus_wp(lemniscatic):
    u = 0.4 + 0.3j
    dz = nk.finite_diff(lambda x: el.zeta(u + x, lemniscatic), 0.0, 1, 1e-3)
    assert abs(dz + el.wp(u, lemniscatic)) < 1e-9


@pytest.mark.parametrize("g", [(4, 0), (0, 4), (3, 0.5), (2 + 1j, -0.5j)])
def test_sigma_quasi_periodicity(g, rng):
    c = el.curve_from_invariants(*g)
    for u in el.sample_fundamental_domain(c, rng, 20):
        lhs = el.sigma(u + 2 * c.omega1, c)
        rhs = -el.sigma(u, c) * cmath.exp(2 * c.eta1 * (u + c.omega1))
        assert abs(lhs - rhs) < 1e-10 * max(1, abs(rhs))


def test_sigma_is_odd_and_normalised(equianharmonic):
    c = equianharmonic
    for u in (1e-3, 0.2 + 0.1j):
        assert abs(el.sigma(-u, c) + el.sigma(u, c)) < 1e-14
    assert abs(el.sigma(1e-4, c) - 1e-4) < 1e-15


def test_pole_guard(lemniscatic):
    with pytest.raises(PoleProximity):
        el.wp(2 * lemniscatic.omega1, lemniscatic)


# --------------------------------------------------------------------------
# addition suite and the soliton field


@pytest.mark.parametrize("g", [(4, 0), (0, 4), (3, 0.5)])
def test_addition_suite(g):
    reports = el.verify_addition_g1(el.curve_from_invariants(*g), 100, seed=0)
    assert len(reports) == 4
    for r in reports:
        assert r.samples == 100
        assert r.passed, r


def test_mu_periodic_and_analytic_derivative(lemniscatic):
    c = lemniscatic
    u = 0.3 + 0.2j
    assert abs(el.mu_g1(u + 2 * c.omega1, c) - el.mu_g1(u, c)) < 1e-10
    fd = nk.finite_diff(lambda x: el.mu_g1(u + x, c), 0.0, 1, 1e-3)
    assert abs(el.mu_g1_prime(u, c, 1) - fd) < 1e-8


def test_mu_zero_denominator(lemniscatic):
    with pytest.raises(ZeroDenominator):
        el.mu_g1(lemniscatic.omega3, lemniscatic)


def test_tangent_matches_wp_minus_e3(lemniscatic, rng):
    c = lemniscatic
    s = rng.uniform(0, 2 * c.omega1.real, 50)
    for delta in (0.0, 0.1j):
        t = el.tangent_g1(s, delta, c, check=True)
        ref = el.wp(s - c.omega3 / 2 + delta, c) - c.e3
        assert np.max(np.abs(t - ref)) < 1e-10


def test_curvature_is_twice_mu(lemniscatic):
    c = lemniscatic
    for s in (0.2, 0.9, 1.7):
        k = nk.finite_diff(lambda x: np.log(el.tangent_g1(x, 0.0, c)), s, 1, 1e-3) / 1j
        assert abs(k - 2 * el.mu_g1(s - c.omega3 / 2, c)) < 1e-8


def test_real_slice_has_constant_modulus(lemniscatic):
    s = np.linspace(0, 2 * lemniscatic.omega1.real, 101)
    mod = np.abs(el.tangent_g1(s, 0.0, lemniscatic))
    assert np.max(np.abs(mod - mod.mean())) < 1e-6


def test_dirac_spinor_shift_and_jacobi(lemniscatic):
    c = lemniscatic
    u = 0.4
    sn, cn, dn = el.jacobi_from_wp(u, c)
    assert abs(sn * sn + cn * cn - 1) < 1e-10
    assert abs(dn * dn - cn * cn - (c.e1 - c.e2) / (el.wp(u, c) - c.e3)) < 1e-10
    assert abs(el.jacobi_from_wp(c.omega1, c)[0] - 1) < 1e-10
    # psi(u) = sigma_3 / sigma at u + omega3
    v = 0.7 - 0.2j
    assert abs(el.dirac_psi_g1(v, c) ** 2 - (el.wp(v + c.omega3, c) - c.e3)) < 1e-10
