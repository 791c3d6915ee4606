"""Genus-2 Riemann theta with characteristics and its z-derivatives to order 4."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BadModulus

__all__ = ["ThetaCharacteristic", "ThetaJet", "theta_jet", "riemann_theta", "check_modulus"]

TAIL_EXPONENT = 42.0  # keep terms down to exp(-42) ~ 6e-19 of the dominant one


@dataclass(frozen=True)
class ThetaCharacteristic:
    """Half-integer pair (delta', delta'').

    ``riemann_theta(z, tau, ch)`` sums over ``n + delta''`` and shifts ``z`` by
    ``delta'``, so it equals exp(linear) * theta(z + delta' + tau delta'').
    """

    delta_p: tuple[float, float]
    delta_pp: tuple[float, float]

    def __post_init__(self):
        for name in ("delta_p", "delta_pp"):
            vals = tuple(float(Fraction(v).limit_denominator(8)) for v in getattr(self, name))
            if len(vals) != 2 or any(v not in (0.0, 0.5) for v in vals):
                raise ValueError(f"{name} entries must lie in {{0, 1/2}}, got {vals}")
            object.__setattr__(self, name, vals)

    @classmethod
    def reduce(cls, delta_p, delta_pp) -> "ThetaCharacteristic":
        """Reduce arbitrary half-integer vectors modulo 1."""
        red = lambda v: tuple(float(Fraction(x).limit_denominator(8) % 1) for x in v)
        return cls(red(delta_p), red(delta_pp))

    @property
    def parity(self) -> int:
        """0 for even, 1 for odd."""
        return int(round(4 * np.dot(self.delta_p, self.delta_pp))) % 2

    @property
    def is_odd(self) -> bool:
        return self.parity == 1

    def __add__(self, other: "ThetaCharacteristic") -> "ThetaCharacteristic":
        return ThetaCharacteristic.reduce(
            np.add(self.delta_p, other.delta_p), np.add(self.delta_pp, other.delta_pp)
        )

    @classmethod
    def all(cls) -> list["ThetaCharacteristic"]:
        halves = [(a, b) for a in (0.0, 0.5) for b in (0.0, 0.5)]
        return [cls(p, q) for p in halves for q in halves]


ZERO = ThetaCharacteristic((0.0, 0.0), (0.0, 0.0))


def check_modulus(tau) -> np.ndarray:
    tau = np.asarray(tau, dtype=complex)
    if tau.shape != (2, 2):
        raise BadModulus("tau must be 2x2")
    if abs(tau[0, 1] - tau[1, 0]) > 1e-8 * (1 + np.abs(tau).max()):
        raise BadModulus("tau is not symmetric")
    y = 0.5 * (tau.imag + tau.imag.T)
    if np.linalg.eigvalsh(y).min() <= 0:
        raise BadModulus("Im(tau) is not positive definite")
    return 0.5 * (tau + tau.T)


@dataclass
class ThetaJet:
    """theta and the cumulants of its log up to order 5 at a batch of points.

    ``value = exp(log_scale) * scaled``; ``logd[k]`` is the k-th z-derivative
    tensor of log theta (k = 1..order); ``cancellation`` is |sum| / sum|terms|,
    a local measure of how close the point is to the zero set.
    """

    log_scale: np.ndarray
    scaled: np.ndarray
    logd: dict
    cancellation: np.ndarray

    @property
    def value(self) -> np.ndarray:
        return np.exp(self.log_scale) * self.scaled


def _offsets(y: np.ndarray) -> np.ndarray:
    yinv = np.linalg.inv(y)
    # ellipsoid of Gaussian exponent TAIL_EXPONENT, padded by the rounding slack of the centre
    pad = math.sqrt(TAIL_EXPONENT / math.pi) + math.sqrt(np.trace(y))
    k = [int(math.ceil(pad * math.sqrt(yinv[j, j]))) for j in range(2)]
    g = np.array([(i, j) for i in range(-k[0], k[0] + 1) for j in range(-k[1], k[1] + 1)], dtype=float)
    q = np.einsum("ni,ij,nj->n", g, y, g)
    return g[q <= pad * pad]


def theta_jet(z, tau, ch: ThetaCharacteristic = ZERO, order: int = 2) -> ThetaJet:
    """Evaluate theta[ch](z; tau) and log-derivative tensors for z of shape (..., 2)."""
    tau = check_modulus(tau)
    z = np.asarray(z, dtype=complex)
    shape = z.shape[:-1]
    z = z.reshape(-1, 2)
    y = tau.imag
    a = np.asarray(ch.delta_pp)
    b = np.asarray(ch.delta_p)
    centre = -np.linalg.solve(y, z.imag.T).T  # dominant value of n + a
    base = np.round(centre - a)
    v = base[:, None, :] + _offsets(y)[None, :, :] + a  # (N, M, 2)
    expo = 2j * math.pi * (
        0.5 * np.einsum("nmi,ij,nmj->nm", v, tau, v) + np.einsum("nmi,ni->nm", v, z + b)
    )
    log_scale = expo.real.max(axis=1)
    w = np.exp(expo - log_scale[:, None])
    total = w.sum(axis=1)
    cancellation = np.abs(total) / np.abs(w).sum(axis=1)
    logd = {}
    if order >= 1:
        p = w / total[:, None]
        k = 2j * math.pi * v
        m1 = np.einsum("nm,nmi->ni", p, k)
        logd[1] = m1
        c = k - m1[:, None, :]
        if order >= 2:
            logd[2] = np.einsum("nm,nmi,nmj->nij", p, c, c)
        if order >= 3:
            logd[3] = np.einsum("nm,nmi,nmj,nmk->nijk", p, c, c, c)
        if order >= 4:
            c4 = np.einsum("nm,nmi,nmj,nmk,nml->nijkl", p, c, c, c, c)
            k2 = logd[2]
            c4 = (
                c4
                - np.einsum("nij,nkl->nijkl", k2, k2)
                - np.einsum("nik,njl->nijkl", k2, k2)
                - np.einsum("nil,njk->nijkl", k2, k2)
            )
            logd[4] = c4
        if order >= 5:
            # fifth cumulant: central moment minus the ten (2, 3) splittings
            c5 = np.einsum("nm,nmi,nmj,nmk,nml,nmo->nijklo", p, c, c, c, c, c)
            k2, k3 = logd[2], logd[3]
            idx = "ijklo"
            for a in range(5):
                for b in range(a + 1, 5):
                    rest = "".join(x for i, x in enumerate(idx) if i not in (a, b))
                    c5 = c5 - np.einsum(f"n{idx[a]}{idx[b]},n{rest}->n{idx}", k2, k3)
            logd[5] = c5
    logd = {k: val.reshape(shape + val.shape[1:]) for k, val in logd.items()}
    return ThetaJet(log_scale.reshape(shape), total.reshape(shape), logd, cancellation.reshape(shape))


def riemann_theta(z, tau, ch: ThetaCharacteristic = ZERO):
    """theta[delta''; delta'](z; tau) for a single point or a batch (..., 2)."""
    jet = theta_jet(z, tau, ch, order=0)
    val = jet.value
    return val if np.ndim(val) else complex(val)
