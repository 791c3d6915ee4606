import cmath
import math

import numpy as np
import pytest
from scipy import integrate

from loopsoliton import hyperelliptic as hy
from loopsoliton import numkernel as nk
from loopsoliton.errors import ConstraintViolated, DegenerateCurve, ThetaDivisor
from loopsoliton.theta import ThetaCharacteristic, riemann_theta

from .conftest import CANONICAL, COMPLEX_BP, PERTURBED

KAPPA = 2 * cmath.exp(0.25j * math.pi)  # frozen from the canonical curve; see sigma_ratio_constant


def real_cut_integrals(points, a, b):
    """(int dx / 2|y|, int x dx / 2|y|) over a real gap between branch points."""
    f = lambda x: abs(np.prod([x - e for e in points]))
    g0 = integrate.quad(lambda x: 0.5 / math.sqrt(f(x)), a, b, epsabs=1e-13, limit=200)[0]
    g1 = integrate.quad(lambda x: 0.5 * x / math.sqrt(f(x)), a, b, epsabs=1e-13, limit=200)[0]
    return np.array([g0, g1])


# --------------------------------------------------------------------------
# periods and construction


def test_periods_against_scipy(canonical):
    j = {(a, b): real_cut_integrals(CANONICAL, a, b) for a, b in ((-2, -1), (-1, 0), (0, 1), (1, 2))}
    assert np.allclose(canonical.omega_p[:, 0], -j[(-2, -1)], atol=1e-10)
    assert np.allclose(canonical.omega_p[:, 1], j[(0, 1)], atol=1e-10)
    assert np.allclose(canonical.omega_pp.real, canonical.omega_p.real, atol=1e-12)
    assert np.allclose(canonical.omega_pp.imag[:, 0], j[(1, 2)] - j[(-1, 0)], atol=1e-10)
    assert np.allclose(canonical.omega_pp.imag[:, 1], j[(1, 2)], atol=1e-10)


def test_cycle_accessors(canonical):
    assert np.allclose(hy.first_kind_integrals(canonical, "alpha1"), 2 * canonical.omega_p[:, 0])
    assert np.allclose(hy.second_kind_integrals(canonical, "beta2", reverse=True), -2 * canonical.eta_pp[:, 1])
    with pytest.raises(ValueError):
        hy.first_kind_integrals(canonical, "gamma")


def test_construction_invariants(g2_curve):
    c = g2_curve
    assert np.max(np.abs(c.tau - c.tau.T)) < 1e-8
    assert c.symmetry_residual < 1e-8
    assert np.linalg.eigvalsh(c.tau.imag).min() > 0
    assert c.legendre_residual < 1e-8
    for ch in ThetaCharacteristic.all():
        if ch.is_odd:
            assert abs(riemann_theta(np.zeros(2), c.tau, ch)) < 1e-12


def test_branch_point_order_does_not_matter(canonical):
    shuffled = hy.curve_from_branch_points([1, -2, 2, 0, -1])
    assert np.allclose(shuffled.tau, canonical.tau, atol=1e-14)


def test_degenerate_inputs():
    with pytest.raises(DegenerateCurve):
        hy.curve_from_branch_points([-2, -1, 0, 1, 1])
    with pytest.raises(DegenerateCurve):
        hy.curve_from_branch_points([-2, -1, 0, 1])


def test_characteristics_of_canonical_curve(canonical):
    c = canonical
    assert c.char_1 == ThetaCharacteristic((0.5, 0.0), (0.5, 0.0))
    assert c.char_2 == ThetaCharacteristic((0.5, 0.5), (0.0, 0.5))
    assert c.char_sigma == c.char_1 + c.char_2
    assert c.char_sigma == ThetaCharacteristic((0.0, 0.5), (0.5, 0.5))
    assert c.char_sigma.is_odd
    assert np.allclose(c.half_period(c.char_1), c.half_vec1)
    assert np.allclose(c.half_period(c.char_2), c.half_vec2)


def test_sigma_normalisation_and_parity(g2_curve):
    c = g2_curve
    eps = 1e-5
    assert abs(hy.sigma_g2(np.array([eps, 0]), c, "K") - eps) < 1e-12
    assert abs(hy.sigma_g2(np.array([0, eps]), c, "K")) < 1e-12  # sigma = u1 - u2^3 / 3 + ...
    u = np.array([0.13 - 0.05j, 0.21 + 0.02j])
    assert abs(hy.sigma_g2(-u, c, "K") + hy.sigma_g2(u, c, "K")) < 1e-13


def test_wp_matrix_against_finite_differences(canonical):
    c = canonical
    u = hy.sample_u(c, np.random.default_rng(3), 1)[0]
    logsig = lambda e: lambda x: np.log(hy.sigma_g2(u + x * e, c, "K"))
    p = hy.wp_matrix(u, c, "K")
    assert abs(p[0, 1] - p[1, 0]) < 1e-14
    for i in range(2):
        e = np.eye(2)[i]
        assert abs(p[i, i] + nk.finite_diff(logsig(e), 0.0, 2, 1e-3)) < 1e-6 * max(1, abs(p[i, i]))


def test_quasi_periodicity_of_wp(canonical):
    c = canonical
    u = hy.sample_u(c, np.random.default_rng(4), 3)
    for col in range(2):
        for lattice in (2 * c.omega_p[:, col], 2 * c.omega_pp[:, col]):
            assert np.allclose(hy.wp_matrix(u + lattice, c, "K"), hy.wp_matrix(u, c, "K"), atol=1e-8)


def test_divisor_guard(canonical):
    with pytest.raises(ThetaDivisor):
        hy.sigma_jet(np.zeros(2), canonical, "K")


# --------------------------------------------------------------------------
# identity suites


def test_shift_relations(g2_curve):
    for r in hy.verify_shift_relations(g2_curve, 20, seed=0):
        assert r.passed, r


def test_baker_pde(g2_curve):
    reports = hy.verify_baker_pde(g2_curve, 20, seed=0)
    assert [r.identity_name for r in reports] == ["H-1", "H-2", "H-3", "H-4", "H-5", "I-1", "I-2", "I-3"]
    for r in reports:
        assert r.passed, r


def test_addition_formula(g2_curve):
    r = hy.verify_addition_g2(g2_curve, 50, seed=0)
    assert r.samples == 50 and r.passed, r


def test_sigma_ratio_constant_is_frozen(g2_curve):
    assert abs(hy.sigma_ratio_constant(g2_curve) - KAPPA) < 1e-10


def test_sigma_ratio_cross_check(g2_curve):
    u = hy.sample_u(g2_curve, np.random.default_rng(5), 20, chars=(0, 2))
    lhs, rhs, res = hy.sigma_ratio_sq(u, g2_curve, check=True)
    assert np.max(res) < 1e-8


def test_sigma_quotient_survives_far_from_origin(canonical):
    # each sigma overflows near s ~ 5000 on the real slice; the quotient must not
    far = hy.soliton_argument(5000.0, 0.0, np.zeros(2), canonical)
    near = far - np.round(np.linalg.solve((2 * canonical.omega_p).real, far.real)) @ (2 * canonical.omega_p).T
    q_far = hy.sigma_quotient(far, canonical) ** 2
    assert np.isfinite(q_far)
    # (sigma2 / sigma0)^2 is lattice periodic up to sign, and the square removes the sign
    assert abs(q_far - hy.sigma_quotient(near, canonical) ** 2) < 1e-8 * max(1, abs(q_far))


# --------------------------------------------------------------------------
# loop-soliton quantities


def test_constraint_enforced():
    c = hy.curve_from_branch_points(PERTURBED)
    assert abs(c.constraint_residual) > 1e-3
    with pytest.raises(ConstraintViolated, match="a2"):
        hy.mu_g2(np.array([0.1, 0.2]), c)
    with pytest.raises(ConstraintViolated):
        hy.tangent_g2(0.5, 0.0, np.zeros(2), c)


def test_mu_derivatives_match_finite_differences(constrained_curve):
    c = constrained_curve
    u = hy.soliton_argument(0.7, 0.0, np.zeros(2), c)
    e2 = np.array([0, 1.0])
    mu, d1, d2 = hy.mu_g2(u, c, 2)
    f = lambda x: hy.mu_g2(u + x * e2, c)
    assert abs(d1 - nk.finite_diff(f, 0.0, 1, 1e-3)) < 1e-7 * max(1, abs(d1))
    assert abs(d2 - nk.finite_diff(f, 0.0, 2, 1e-3)) < 1e-5 * max(1, abs(d2))


def test_delta_fitted_coefficients(constrained_curve):
    c = constrained_curve
    kappa, nu, worst = hy.fit_delta_coefficients(c, 20, seed=0)
    assert abs(kappa - 1) < 1e-8
    assert abs(nu - 4 * (c.lam[4] + c.a2)) < 1e-8
    assert worst < 1e-6


def test_merged_delta_coefficient_fails_off_canonical():
    c = hy.curve_from_branch_points((-2.0, -1.0, 0.5, 1.0, 3.0))
    u = hy.sample_u(c, np.random.default_rng(0), 20, chars=(0,))
    delta, scale = hy.delta_polynomial(u, c)
    assert np.max(np.abs(delta) / scale) > 1e-2
    fixed, scale = hy.delta_polynomial(u, c, (1.0, 4 * (c.lam[4] + c.a2)))
    assert np.max(np.abs(fixed) / scale) < 1e-10


def test_real_period(canonical):
    vec, (a, b) = hy.real_period_g2(canonical)
    assert (a, b) == (3211, 2134)
    assert abs(vec[0]) / vec[1] < 1e-8
    assert vec[1] == pytest.approx(5539.5347, abs=1e-3)
    with pytest.raises(DegenerateCurve):
        hy.real_period_g2(hy.curve_from_branch_points(COMPLEX_BP))


def test_tangent_and_curvature(canonical):
    c = canonical
    d = np.zeros(2)
    s = 0.9
    k = nk.finite_diff(lambda x: np.log(hy.tangent_g2(x, 0.0, d, c)), s, 1, 1e-3) / 1j
    assert abs(k - 2 * hy.mu_g2(hy.soliton_argument(s, 0.0, d, c), c)) < 1e-7
