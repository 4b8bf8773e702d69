"""Restriction of quadrics to twistor fibers over S^4 = R^4 u {inf}.

The fiber over the chart point (z1, z2) is parametrized by [xi0 : xi12] via
W1 = xi0 z1 - xi12 conj(z2), W2 = xi0 z2 + xi12 conj(z1).  Substituting into
q gives A xi0^2 + 2 B xi0 xi12 + C xi12^2; the coefficients are extracted
literally from the matrix, so the discriminant B^2 - AC carries the matrix
normalization (its zero set does not).  The point at infinity is handled by
the inversion lift, which swaps (xi0, xi12) with (W1, W2).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .canonical import CanonicalForm, Diagonal, NonDiagonalizable
from .errors import InfinityBasepointError
from .quatlin import (
    BLOCK,
    TWISTOR,
    ConformalElement,
    QuadraticForm,
    Quaternion,
    SpherePoint,
)

# quadratic form -2 xi0 W2 + 2 xi12 W1 in twistor order: the reference real quadric
_REAL_Q = np.zeros((4, 4), dtype=complex)
_REAL_Q[0, 3] = _REAL_Q[3, 0] = -1.0
_REAL_Q[1, 2] = _REAL_Q[2, 1] = 1.0

INVERSION = np.array(
    [[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]], dtype=complex
)


def real_quadric_form() -> QuadraticForm:
    """The real quadric whose discriminant locus is the standard circle."""
    return QuadraticForm(_REAL_Q, TWISTOR)


def inversion_element() -> ConformalElement:
    """Lift of q -> q^{-1}; swaps (xi0, xi12) with (W1, W2)."""
    return ConformalElement(INVERSION, 1.0, TWISTOR)


@dataclass(frozen=True)
class FiberQuadratic:
    """Coefficients of the fiber restriction A xi0^2 + 2B xi0 xi12 + C xi12^2."""

    A: complex
    B: complex
    C: complex
    basepoint: SpherePoint

    @property
    def discriminant(self) -> complex:
        return self.B * self.B - self.A * self.C


def fiber_matrix(p: SpherePoint) -> np.ndarray:
    """4x2 substitution matrix sending (xi0, xi12) to twistor coordinates."""
    if p.infinite:
        raise InfinityBasepointError("use invert_lift for the fiber over infinity")
    z1, z2 = p.z1, p.z2
    return np.array(
        [
            [1.0, 0.0],
            [0.0, 1.0],
            [z1, -z2.conjugate()],
            [z2, z1.conjugate()],
        ],
        dtype=complex,
    )


def fiber_coefficients(q: QuadraticForm, p: SpherePoint) -> FiberQuadratic:
    """Restrict q to the fiber over the finite point p."""
    m = fiber_matrix(p)
    r = m.T @ q.in_twistor().entries @ m
    return FiberQuadratic(complex(r[0, 0]), complex(0.5 * (r[0, 1] + r[1, 0])), complex(r[1, 1]), p)


def fiber_coefficients_batch(q: QuadraticForm, z1: np.ndarray, z2: np.ndarray):
    """Vectorized (A, B, C) over arrays of chart points."""
    qt = q.in_twistor().entries
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    one = np.ones_like(z1)
    zero = np.zeros_like(z1)
    cols = [
        np.stack([one, zero, z1, z2]),
        np.stack([zero, one, -z2.conjugate(), z1.conjugate()]),
    ]
    a = np.einsum("i...,ij,j...->...", cols[0], qt, cols[0])
    b = np.einsum("i...,ij,j...->...", cols[0], qt, cols[1])
    c = np.einsum("i...,ij,j...->...", cols[1], qt, cols[1])
    return a, b, c


def invert_lift(q: QuadraticForm) -> QuadraticForm:
    """Congruence by the inversion permutation (an involution)."""
    qt = q.in_twistor().entries
    return QuadraticForm(INVERSION.T @ qt @ INVERSION, TWISTOR)


def discriminant(q: QuadraticForm, p: SpherePoint) -> complex:
    """Delta = B^2 - AC of the fiber restriction at the finite point p."""
    return fiber_coefficients(q, p).discriminant


def discriminant_batch(q: QuadraticForm, z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
    a, b, c = fiber_coefficients_batch(q, z1, z2)
    return b * b - a * c


def psi_point(xi0: complex, xi12: complex, p: SpherePoint) -> np.ndarray:
    """Twistor-space point [xi0, xi12, W1, W2] over the finite point p."""
    return fiber_matrix(p) @ np.array([xi0, xi12], dtype=complex)


def pi_project(v: np.ndarray, tol: float = 1e-13) -> SpherePoint:
    """Twistor projection [z1, z2, z3, z4] -> [z1 + j z2, z3 + j z4]."""
    v = np.asarray(v, dtype=complex)
    q1 = Quaternion(complex(v[0]), complex(v[1]))
    q2 = Quaternion(complex(v[2]), complex(v[3]))
    scale = max(q1.norm, q2.norm)
    if q1.norm <= tol * scale:
        return SpherePoint.infinity()
    q = q2 * q1.inverse()
    return SpherePoint(q.z1, q.z2)


def contains_fiber(q: QuadraticForm, p: SpherePoint, tol: float = 1e-9) -> bool:
    """True when the quadric contains the whole fiber over p.

    The coefficients A and C grow like |z|^2, so the tolerance scales with
    (1 + |z|^2) for uniform relative accuracy across the chart.
    """
    if p.infinite:
        return contains_fiber(invert_lift(q), SpherePoint.finite(0.0, 0.0), tol)
    f = fiber_coefficients(q, p)
    scale = q.norm * (1.0 + p.abs2())
    return max(abs(f.A), abs(f.B), abs(f.C)) <= tol * scale


@dataclass(frozen=True)
class LineReport:
    """Twistor lines contained in a quadric: a circle family, none, or 1-2."""

    kind: str  # "circle_family" | "none" | "lines"
    points: tuple[SpherePoint, ...] = ()

    @property
    def count(self) -> int | None:
        if self.kind == "circle_family":
            return None
        return len(self.points)


def classify_lines(c: CanonicalForm, tol: float = 1e-8) -> LineReport:
    """Twistor lines of the canonical representative.

    Diagonal classes contain a circle family exactly at (0,0,0), exactly two
    lines (over (+-i, 0)) when lam = mu != 0 and nu = 0, and none otherwise;
    a non-diagonalizable class contains exactly one line, over infinity.
    """
    if isinstance(c, NonDiagonalizable):
        return LineReport("lines", (SpherePoint.infinity(),))
    lam, mu, nu = c.lam, c.mu, c.nu
    if lam <= tol and mu <= tol and (nu <= tol or math.pi / 2 - nu <= tol):
        return LineReport("circle_family")
    if abs(lam - mu) <= tol and nu <= tol:
        return LineReport("lines", (SpherePoint.finite(1j, 0.0), SpherePoint.finite(-1j, 0.0)))
    if abs(lam - mu) <= tol and math.pi / 2 - nu <= tol:
        # the nu ~ pi/2 representative of the same class carries its lines over (+-1, 0)
        return LineReport("lines", (SpherePoint.finite(1.0, 0.0), SpherePoint.finite(-1.0, 0.0)))
    return LineReport("none")


@dataclass(frozen=True)
class LocusClassification:
    """Topological type of the discriminant locus in canonical gauge."""

    label: str  # circle | clifford_torus | smooth_unknotted_torus |
    #             pinched_torus_two_points | pinched_torus_one_point
    pinch_points: tuple[SpherePoint, ...] = ()
    radii: tuple[float, float] | None = None  # (|y|^2, |x|^2) for the Clifford torus


def classify_locus(c: CanonicalForm, tol: float = 1e-8) -> LocusClassification:
    if isinstance(c, NonDiagonalizable):
        return LocusClassification("pinched_torus_one_point", (SpherePoint.infinity(),))
    lam, mu, nu = c.lam, c.mu, c.nu
    if lam <= tol and mu <= tol:
        if nu <= tol:
            return LocusClassification("circle")
        y2 = 0.5 * (1.0 + math.cos(2.0 * nu))
        return LocusClassification("clifford_torus", radii=(y2, 1.0 - y2))
    if abs(lam - mu) <= tol and nu <= tol:
        pts = (SpherePoint.finite(1j, 0.0), SpherePoint.finite(-1j, 0.0))
        return LocusClassification("pinched_torus_two_points", pts)
    return LocusClassification("smooth_unknotted_torus")


# ------------------------------------------------------------- closed forms


def delta_diagonal(lam: float, mu: float, nu: float, z1, z2):
    """Discriminant of the diagonal family, expanded in chart coordinates.

    Equals B^2 - AC for the unit-determinant diagonal matrix; accepts arrays.
    """
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    zz = (z1 * z1.conjugate() + z2 * z2.conjugate()).real
    return (
        -cmath.exp(2j * nu)
        - cmath.exp(-2j * nu) * zz * zz
        - math.exp(lam + mu) * z2.conjugate() ** 2
        - math.exp(-lam - mu) * z2 ** 2
        - math.exp(lam - mu) * z1.conjugate() ** 2
        - math.exp(mu - lam) * z1 ** 2
    )


def gradient_degeneracy_residual(lam: float, mu: float, nu: float, z1) -> float:
    """Residual of the singular-point system on the z2 = 0 slice.

    The three real equations couple the discriminant with the degeneracy of
    its gradient; pinch points satisfy all of them simultaneously.
    """
    x, y = complex(z1).real, complex(z1).imag
    r2 = x * x + y * y
    dl = lam - mu
    e1 = (
        math.sinh(dl) * math.cos(2 * nu) * (x * x - y * y)
        + 2.0 * math.cosh(dl) * math.sin(2 * nu) * x * y
        + math.sinh(dl) * math.cosh(dl)
    )
    e2 = 2.0 * math.cosh(dl) * (x * x - y * y) + math.cos(2 * nu) * (1.0 + r2 * r2)
    e3 = -4.0 * math.sinh(dl) * x * y + math.sin(2 * nu) * (1.0 - r2 * r2)
    return max(abs(e1), abs(e2), abs(e3))
