"""Weierstrass functions on y^2 = 4x^3 - g2 x - g3 built from the theta series.

Periods come from branch-point quadrature; sigma, wp and their derivatives
come from term-by-term differentiation of theta_1, so no finite differences
enter the evaluation path.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from math import comb

import numpy as np

from . import numkernel
from .errors import BadModulus, DegenerateCurve, PoleProximity, ZeroDenominator
from .soliton import ResidualReport

__all__ = [
    "EllipticCurveG1",
    "curve_from_invariants",
    "theta1",
    "theta1_derivatives",
    "sigma",
    "sigma_a",
    "log_sigma_derivatives",
    "wp",
    "wp_prime",
    "wp_derivatives",
    "zeta",
    "verify_addition_g1",
    "mu_g1",
    "mu_g1_prime",
    "tangent_g1",
    "dirac_psi_g1",
    "jacobi_from_wp",
    "sample_fundamental_domain",
]

THETA_TAIL = 1e-14
POLE_GUARD = 1e-8


@dataclass(frozen=True)
class EllipticCurveG1:
    g2: complex
    g3: complex
    e1: complex
    e2: complex
    e3: complex
    omega1: complex
    omega3: complex
    eta1: complex
    eta3: complex
    tau: complex
    legendre_residual: float = 0.0

    @property
    def roots(self) -> tuple[complex, complex, complex]:
        return (self.e1, self.e2, self.e3)

    @property
    def omega2(self) -> complex:
        return -self.omega1 - self.omega3

    @property
    def eta2(self) -> complex:
        return -self.eta1 - self.eta3

    def half_period(self, a: int) -> complex:
        return {1: self.omega1, 2: self.omega2, 3: self.omega3}[a]

    def eta(self, a: int) -> complex:
        return {1: self.eta1, 2: self.eta2, 3: self.eta3}[a]

    def root(self, a: int) -> complex:
        return {1: self.e1, 2: self.e2, 3: self.e3}[a]

    def as_dict(self) -> dict:
        keys = ("g2", "g3", "e1", "e2", "e3", "omega1", "omega3", "eta1", "eta3", "tau")
        return {k: complex(getattr(self, k)) for k in keys}


def _sort_roots(roots) -> list[complex]:
    # descending real part, ties (within 1e-9) broken by descending imaginary part
    def key(z):
        return (-round(z.real / 1e-9) * 1e-9, -z.imag)

    return sorted((complex(r) for r in roots), key=key)


def _polish_cubic(g2, g3, roots):
    out = []
    for r in roots:
        for _ in range(3):
            f = 4 * r**3 - g2 * r - g3
            df = 12 * r * r - g2
            if df == 0:
                break
            r = r - f / df
        out.append(r)
    return out


def _rotated_sqrt(w, ref):
    """sqrt continuous in a half-plane around ``ref`` (cut along -ref)."""
    return cmath.sqrt(ref) * np.sqrt(w / ref)


def _segment_integrals(a: complex, b: complex, other: complex, tol: float) -> tuple[complex, complex]:
    """Integrals of dx/y and x dx/y along [a, b] between two roots of 4x^3 - g2 x - g3.

    Each half of the segment is parametrised from its own endpoint, so the
    distance to the nearer root is exact and the square-root singularity
    keeps full relative precision.
    """
    d = b - a
    mid = a + 0.5 * d
    sd, smd = cmath.sqrt(d), cmath.sqrt(-d)

    def halves(s):
        # (x, t, 1 - t) for the piece starting at a, then the piece starting at b
        near, far = 0.5 * s, 1.0 - 0.5 * s
        return ((a + d * near, near, far), (b - d * near, far, near))

    def integrand(power):
        def g(s):
            total = 0
            for x, t, tc in halves(s):
                y = 2.0 * sd * smd * _rotated_sqrt(x - other, mid - other) * np.sqrt(t) * np.sqrt(tc)
                total = total + 0.5 * d * x**power / y
            return total

        return g

    w1 = numkernel.integrate_unit(integrand(0), tol, True, False).value
    w2 = numkernel.integrate_unit(integrand(1), tol, True, False).value
    return w1, w2


def curve_from_invariants(g2: complex, g3: complex, tol: float = 1e-13) -> EllipticCurveG1:
    g2, g3 = complex(g2), complex(g3)
    disc = g2**3 - 27 * g3**2
    if abs(disc) < 1e-12 * (abs(g2) ** 3 + abs(g3) ** 2 + 1):
        raise DegenerateCurve(f"discriminant g2^3 - 27 g3^2 = {disc} vanishes")
    roots = _polish_cubic(g2, g3, np.roots([4, 0, -g2, -g3]))
    e1, e2, e3 = _sort_roots(roots)
    shift = (e1 + e2 + e3) / 3
    e1, e2, e3 = e1 - shift, e2 - shift, e3 - shift

    # [e2, e3] carries the half-period whose wp value is e1, [e1, e2] the one for e3.
    w1, x1 = _segment_integrals(e2, e3, e1, tol)
    w3, x3 = _segment_integrals(e1, e2, e3, tol)
    omega1, eta1 = w1, -x1
    omega3, eta3_quad = w3, -x3
    if omega1.real < 0 or (omega1.real == 0 and omega1.imag < 0):
        omega1, eta1 = -omega1, -eta1
    if (omega3 / omega1).imag < 0:
        omega3, eta3_quad = -omega3, -eta3_quad
    tau = omega3 / omega1
    if not tau.imag > 0:
        raise DegenerateCurve("period ratio is real; the quadrature contours failed")
    eta3 = (eta1 * omega3 - 0.5j * math.pi) / omega1
    legendre = abs(eta1 * omega3 - eta3_quad * omega1 - 0.5j * math.pi)
    return EllipticCurveG1(g2, g3, e1, e2, e3, omega1, omega3, eta1, eta3, tau, legendre)


def _check_tau(tau):
    if not complex(tau).imag > 0:
        raise BadModulus(f"Im(tau) must be positive, got {tau}")


def theta1_derivatives(z, tau: complex, nmax: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Derivatives 0..nmax of theta_1 in z, split as ``exp(log_scale) * scaled``.

    Returns ``(log_scale, scaled)`` with ``scaled`` of shape ``(nmax + 1,) + z.shape``.
    The summation window is centred on the dominant term so large Im z is safe.
    """
    _check_tau(tau)
    z = np.asarray(z, dtype=complex)
    t = complex(tau)
    # dominant half-integer index: maximise -pi Im(tau) m^2 - 2 pi m Im(z)
    centre = -z.imag / t.imag
    half = int(math.ceil(math.sqrt((math.log(1 / THETA_TAIL) + 8 + 4 * math.log(2 + abs(centre).max() if centre.size else 2)) / (math.pi * t.imag)))) + 2
    base = np.round(centre - 0.5) + 0.5
    offsets = np.arange(-half, half + 1)
    m = base[..., None] + offsets
    expo = 1j * math.pi * t * m * m + 2j * math.pi * m * z[..., None] - 1j * math.pi * m + 0.5j * math.pi
    log_scale = expo.real.max(axis=-1)
    terms = np.exp(expo - log_scale[..., None])
    ders = np.empty((nmax + 1,) + z.shape, dtype=complex)
    factor = 2j * math.pi * m
    power = np.ones_like(m, dtype=complex)
    for k in range(nmax + 1):
        ders[k] = (terms * power).sum(axis=-1)
        power = power * factor
    return log_scale, ders


def theta1(z, tau: complex):
    """theta_1 with characteristic-free nome exp(i pi tau), periodic-up-to-sign in z -> z + 1."""
    log_scale, ders = theta1_derivatives(z, tau, 0)
    out = np.exp(log_scale) * ders[0]
    return out if np.ndim(out) else complex(out)


def _log_derivatives(ders: np.ndarray) -> np.ndarray:
    """Derivatives 1..n of log F from derivatives 0..n of F."""
    n = ders.shape[0] - 1
    r = ders / ders[0]
    logd = np.zeros_like(ders)
    for k in range(1, n + 1):
        acc = r[k].copy()
        for j in range(1, k):
            acc -= comb(k - 1, j - 1) * logd[j] * r[k - j]
        logd[k] = acc
    return logd


def _theta1_prime0(tau):
    log_scale, ders = theta1_derivatives(0.0, tau, 1)
    return np.exp(log_scale) * ders[1]


def _lattice_distance(u, curve: EllipticCurveG1):
    u = np.asarray(u, dtype=complex)
    w1, w3 = 2 * curve.omega1, 2 * curve.omega3
    det = (w1.conjugate() * w3).imag
    a = (u * w3.conjugate()).imag / -det
    b = (u * w1.conjugate()).imag / det
    a0, b0 = np.round(a), np.round(b)
    best = np.full(u.shape, np.inf)
    for da in (-1, 0, 1):
        for db in (-1, 0, 1):
            best = np.minimum(best, np.abs(u - (a0 + da) * w1 - (b0 + db) * w3))
    return best


def _guard_poles(u, curve):
    dist = _lattice_distance(u, curve)
    if np.any(dist < POLE_GUARD):
        raise PoleProximity(f"argument within {POLE_GUARD:g} of a lattice point")


def log_sigma_derivatives(u, curve: EllipticCurveG1, nmax: int) -> np.ndarray:
    """d^k/du^k log sigma(u) for k = 1..nmax (index 0 unused)."""
    u = np.asarray(u, dtype=complex)
    s = 1.0 / (2 * curve.omega1)
    _, ders = theta1_derivatives(u * s, curve.tau, nmax)
    logd = _log_derivatives(ders)
    for k in range(1, nmax + 1):
        logd[k] = logd[k] * s**k
    logd[1] = logd[1] + curve.eta1 * u / curve.omega1
    if nmax >= 2:
        logd[2] = logd[2] + curve.eta1 / curve.omega1
    return logd


def sigma(u, curve: EllipticCurveG1):
    u = np.asarray(u, dtype=complex)
    s = 1.0 / (2 * curve.omega1)
    log_scale, ders = theta1_derivatives(u * s, curve.tau, 0)
    val = np.exp(curve.eta1 * u * u * s + log_scale) * ders[0] / (_theta1_prime0(curve.tau) * s)
    return val if np.ndim(val) else complex(val)


def sigma_a(u, a: int, curve: EllipticCurveG1):
    if a not in (1, 2, 3):
        raise ValueError("a must be 1, 2 or 3")
    w, eta = curve.half_period(a), curve.eta(a)
    u = np.asarray(u, dtype=complex)
    val = np.exp(-eta * u) * sigma(u + w, curve) / sigma(w, curve)
    return val if np.ndim(val) else complex(val)


def wp_derivatives(u, curve: EllipticCurveG1, nmax: int = 1) -> np.ndarray:
    """[wp, wp', ..., wp^(nmax)] stacked along axis 0."""
    _guard_poles(u, curve)
    logd = log_sigma_derivatives(u, curve, nmax + 2)
    return -logd[2:]


def _scalar(x):
    return x if np.ndim(x) else complex(x)


def wp(u, curve: EllipticCurveG1):
    return _scalar(wp_derivatives(u, curve, 0)[0])


def wp_prime(u, curve: EllipticCurveG1):
    return _scalar(wp_derivatives(u, curve, 1)[1])


def zeta(u, curve: EllipticCurveG1):
    _guard_poles(u, curve)
    return _scalar(log_sigma_derivatives(u, curve, 1)[1])


def sample_fundamental_domain(curve: EllipticCurveG1, rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.uniform(-0.5, 0.5, n)
    b = rng.uniform(-0.5, 0.5, n)
    return 2 * curve.omega1 * a + 2 * curve.omega3 * b


def _scaled_residual(lhs, rhs):
    lhs, rhs = np.asarray(lhs), np.asarray(rhs)
    return np.abs(lhs - rhs) / np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))


def verify_addition_g1(curve: EllipticCurveG1, sample_count: int = 100, seed: int = 0, tol: float = 1e-9) -> list[ResidualReport]:
    """Residuals of the four addition identities at seeded random points.

    Residuals are scaled as |lhs - rhs| / max(1, |lhs|, |rhs|).  Pairs close to
    the lattice, or with z = +-u modulo the lattice, are redrawn.
    """
    rng = np.random.default_rng(seed)
    scale = min(abs(curve.omega1), abs(curve.omega3))
    zs, us = [], []
    while len(zs) < sample_count:
        z, u = sample_fundamental_domain(curve, rng, 2)
        pts = np.array([z, u, z + u, z - u])
        if _lattice_distance(pts, curve).min() > 0.1 * scale:
            zs.append(z)
            us.append(u)
    z, u = np.array(zs), np.array(us)

    pz = wp_derivatives(z, curve, 2)
    pu = wp_derivatives(u, curve, 2)
    p_sum = wp(z + u, curve)
    sz, su = sigma(z, curve), sigma(u, curve)

    r11 = _scaled_residual(pz[0] - pu[0], -sigma(z + u, curve) * sigma(z - u, curve) / (sz * su) ** 2)
    diff = pz[0] - pu[0]
    dratio = (-pu[2] * diff + (pz[1] - pu[1]) * pu[1]) / diff**2
    r12 = _scaled_residual(p_sum - pu[0], -0.5 * dratio)
    r13 = _scaled_residual(p_sum + pz[0] + pu[0], 0.25 * ((pu[1] - pz[1]) / (pu[0] - pz[0])) ** 2)
    r14 = np.zeros(sample_count)
    for a in (1, 2, 3):
        r14 = np.maximum(r14, _scaled_residual(pu[0] - curve.root(a), (sigma_a(u, a, curve) / su) ** 2))

    names = [
        ("wp(z) - wp(u) = -sigma(z+u) sigma(z-u) / (sigma(z) sigma(u))^2", r11),
        ("wp(u+z) - wp(u) = -1/2 d/du [(wp'(z) - wp'(u)) / (wp(z) - wp(u))]", r12),
        ("wp(z+u) + wp(z) + wp(u) = 1/4 [(wp'(u) - wp'(z)) / (wp(u) - wp(z))]^2", r13),
        ("wp(u) - e_a = (sigma_a(u) / sigma(u))^2", r14),
    ]
    return [ResidualReport.from_residuals(name, r, tol) for name, r in names]


def mu_g1(u, curve: EllipticCurveG1):
    """mu = (1/2i) d/du log(wp(u) - e3)."""
    d = wp_derivatives(u, curve, 1)
    rho = d[0] - curve.e3
    if np.any(np.abs(rho) < 1e-12):
        raise ZeroDenominator("wp(u) coincides with e3")
    return _scalar(d[1] / (2j * rho))


def mu_g1_prime(u, curve: EllipticCurveG1, order: int = 1):
    """Analytic u-derivatives of mu (order 1..3)."""
    d = wp_derivatives(u, curve, order + 1)
    rho = d[0] - curve.e3
    # mu = (1/2i) L' with L = log rho; need L^(order+1)
    ders = np.concatenate([rho[None], d[1:]], axis=0)
    logd = _log_derivatives(ders)
    return _scalar(logd[order + 1] / 2j)


def tangent_g1(s, delta: complex, curve: EllipticCurveG1, check: bool = False):
    """(sigma_3(v) / sigma(v))^2 at v = s - omega3/2 + delta."""
    v = np.asarray(s, dtype=float) - curve.omega3 / 2 + delta
    _guard_poles(v, curve)
    val = (sigma_a(v, 3, curve) / sigma(v, curve)) ** 2
    if check:
        ref = wp(v, curve) - curve.e3
        err = np.max(_scaled_residual(val, ref))
        if err > 1e-8:
            raise ArithmeticError(f"sigma-ratio tangent disagrees with wp - e3 by {err:.3g}")
    return _scalar(val)


def dirac_psi_g1(u, curve: EllipticCurveG1):
    """sigma_3 / sigma evaluated at u + omega3: the spinor paired with mu_g1(u)."""
    v = np.asarray(u, dtype=complex) + curve.omega3
    return _scalar(sigma_a(v, 3, curve) / sigma(v, curve))


def jacobi_from_wp(u, curve: EllipticCurveG1) -> tuple[complex, complex, complex]:
    """(sn, cn, dn) at z = sqrt(e1 - e3) u via principal square roots of wp ratios."""
    p = wp(u, curve)
    den = p - curve.e3
    if abs(den) < 1e-12:
        raise ZeroDenominator("wp(u) coincides with e3")
    e1, e2, e3 = curve.roots
    return (
        cmath.sqrt((e1 - e3) / den),
        cmath.sqrt((p - e1) / den),
        cmath.sqrt((p - e2) / den),
    )
