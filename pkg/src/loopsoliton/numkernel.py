"""Numerical substrate: path quadrature, finite differences, 2x2 inverses.

Quadrature is Gauss-Legendre with node doubling.  Square-root endpoint
singularities are removed by the substitution ``x = a + (b - a) w**2`` so the
transformed integrand is smooth and the rule converges geometrically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import NonConvergence, SingularMatrix

__all__ = [
    "ComplexPath",
    "QuadratureResult",
    "gauss_legendre",
    "integrate_unit",
    "integrate_path",
    "finite_diff",
    "mat2_inv",
]

START_NODES = 16
MAX_DOUBLINGS = 7  # 2048 nodes; leggauss cost grows cubically past that


@dataclass(frozen=True)
class ComplexPath:
    """Polyline in the complex plane.

    ``singular`` holds one ``(at_start, at_end)`` pair per segment; a flag
    marks an inverse square-root singularity of the integrand at that end.
    """

    waypoints: tuple[complex, ...]
    singular: tuple[tuple[bool, bool], ...] = field(default=())

    def __post_init__(self):
        pts = tuple(complex(p) for p in self.waypoints)
        if len(pts) < 2:
            raise ValueError("a path needs at least two waypoints")
        for p, q in zip(pts, pts[1:]):
            if p == q:
                raise ValueError(f"consecutive waypoints coincide at {p}")
        flags = tuple(self.singular) or ((False, False),) * (len(pts) - 1)
        if len(flags) != len(pts) - 1:
            raise ValueError("one singularity flag pair per segment is required")
        object.__setattr__(self, "waypoints", pts)
        object.__setattr__(self, "singular", tuple((bool(a), bool(b)) for a, b in flags))

    @classmethod
    def segment(cls, a, b, start_singular=False, end_singular=False) -> "ComplexPath":
        return cls((a, b), ((start_singular, end_singular),))

    def reversed(self) -> "ComplexPath":
        return ComplexPath(self.waypoints[::-1], tuple((e, s) for s, e in self.singular[::-1]))

    def __add__(self, other: "ComplexPath") -> "ComplexPath":
        if self.waypoints[-1] != other.waypoints[0]:
            raise ValueError("paths must share the junction point")
        return ComplexPath(self.waypoints + other.waypoints[1:], self.singular + other.singular)


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error_estimate: float
    evaluations: int

    def __add__(self, other: "QuadratureResult") -> "QuadratureResult":
        return QuadratureResult(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.evaluations + other.evaluations,
        )


@lru_cache(maxsize=32)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point rule mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _smooth_on_unit(g: Callable, singular_start: bool, singular_end: bool) -> list[Callable]:
    """Pieces on [0, 1] whose sum integrates g over [0, 1] with smooth integrands."""
    if singular_start and singular_end:
        return [
            lambda w: g(0.5 * w * w) * w,
            lambda w: g(1.0 - 0.5 * w * w) * w,
        ]
    if singular_start:
        return [lambda w: g(w * w) * 2.0 * w]
    if singular_end:
        return [lambda w: g(1.0 - w * w) * 2.0 * w]
    return [g]


def _adaptive_unit(h: Callable, tol: float) -> QuadratureResult:
    n = START_NODES
    x, w = gauss_legendre(n)
    prev = _checked_sum(h, x, w)
    evaluations = n
    for _ in range(MAX_DOUBLINGS):
        n *= 2
        x, w = gauss_legendre(n)
        cur = _checked_sum(h, x, w)
        evaluations += n
        err = abs(cur - prev)
        if err <= tol * max(1.0, abs(cur)):
            return QuadratureResult(complex(cur), float(err), evaluations)
        prev = cur
    raise NonConvergence(f"quadrature did not reach tol={tol:g} with {n} nodes (last change {err:.3g})")


def _checked_sum(h, x, w) -> complex:
    vals = np.asarray(h(x), dtype=complex)
    if not np.all(np.isfinite(vals)):
        raise NonConvergence("integrand produced NaN or Inf at a quadrature node")
    return complex(np.dot(w, vals))


def integrate_unit(g: Callable, tol: float = 1e-13, singular_start=False, singular_end=False) -> QuadratureResult:
    """Integrate a vectorised ``g`` over [0, 1].

    Flags mark inverse square-root behaviour at either end; the error budget
    is split evenly between the pieces.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    pieces = _smooth_on_unit(g, singular_start, singular_end)
    total = QuadratureResult(0j, 0.0, 0)
    for h in pieces:
        total = total + _adaptive_unit(h, tol / len(pieces))
    return total


def integrate_path(f: Callable, path: ComplexPath, tol: float = 1e-13) -> QuadratureResult:
    """Contour integral of a vectorised ``f`` along the polyline ``path``.

    An integrand that forms ``b - x`` from the node x near a singular end b
    sees relative noise ~ulp(b) / |b - x|; tolerances below ~1e-12 then may
    not be reachable.  Callers needing more pass the endpoint distance in
    directly (see the branch-cut integrals of the hyperelliptic module).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    nseg = len(path.singular)
    total = QuadratureResult(0j, 0.0, 0)
    for (a, b), (s0, s1) in zip(zip(path.waypoints, path.waypoints[1:]), path.singular):
        d = b - a
        total = total + integrate_unit(lambda t, a=a, d=d: f(a + d * t) * d, tol / nseg, s0, s1)
    return total


def finite_diff(f: Callable[[float], complex], x: float, order: int = 1, h: float | None = None) -> complex:
    """Central difference derivative with one Richardson step (h and h/2)."""
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    if h is None:
        h = 1e-3 * (1.0 + abs(x))
    if not h > 0:
        raise ValueError("h must be positive")

    def stencil(h):
        if order == 1:
            return (f(x + h) - f(x - h)) / (2 * h)
        if order == 2:
            return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h)
        return (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h) - f(x - 2 * h)) / (2 * h**3)

    coarse, fine = stencil(h), stencil(h / 2)
    return (4 * fine - coarse) / 3


def mat2_inv(m: Sequence[Sequence[complex]] | np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if not abs(det) > 1e-300 or not math.isfinite(abs(det)):
        raise SingularMatrix(f"determinant {det} is numerically zero")
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det
