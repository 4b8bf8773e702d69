"""Orthogonal complex structures induced by hyperplanes and quadrics.

A point [xi0 : xi12] of the fiber CP^1 corresponds to the orthogonal almost
complex structure J on R^4 whose entries are rational in the homogeneous
coordinates; [1 : 0] is the standard structure blockdiag(K, K).  A quadric
meets a generic fiber in two points, so off the discriminant locus it induces
two fields of structures; the fields are evaluated by root continuation from
a base point, with branch labels anchored lexicographically at the base.

Integrability is checked through the first-order system

    a a_1 + a_2bar = 0,        a a_2 - a_1bar = 0,

for the affine fiber coordinate a(z1, z2), discretized by central differences
(the inverse chart obeys the mirrored system b_1 + b b_2bar = 0,
b_2 - b b_1bar = 0, obtained by substituting a = 1/b).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ChartBreakdownError,
    OnDiscriminantError,
    PathBlockedError,
    SingularPointError,
)
from .quatlin import QuadraticForm, SpherePoint
from .twistor import fiber_coefficients, real_quadric_form

_NORM_EPS = 1e-300


@dataclass(frozen=True)
class FiberPoint:
    """Point [xi0 : xi12] of CP^1, unit norm, anchored entry real positive."""

    xi0: complex
    xi12: complex

    def __post_init__(self):
        xi0, xi12 = complex(self.xi0), complex(self.xi12)
        n = math.hypot(abs(xi0), abs(xi12))
        if n < _NORM_EPS:
            raise ValueError("fiber point requires a nonzero homogeneous pair")
        xi0, xi12 = xi0 / n, xi12 / n
        anchor = xi0 if abs(xi0) > 1e-12 else xi12
        phase = anchor / abs(anchor)
        object.__setattr__(self, "xi0", xi0 / phase)
        object.__setattr__(self, "xi12", xi12 / phase)

    @property
    def chart(self) -> complex:
        """Affine coordinate a = xi12 / xi0 (inf when xi0 = 0)."""
        if self.xi0 == 0:
            return complex("inf")
        return self.xi12 / self.xi0

    def chart_key(self) -> tuple[float, float]:
        a = self.chart
        if not np.isfinite(a.real) or not np.isfinite(a.imag):
            return (math.inf, 0.0)
        return (a.real, a.imag)


def fs_distance(p: FiberPoint, q: FiberPoint) -> float:
    """Fubini-Study distance on CP^1, normalized so antipodes are pi apart."""
    ip = abs(p.xi0.conjugate() * q.xi0 + p.xi12.conjugate() * q.xi12)
    return 2.0 * math.acos(min(1.0, ip))


@dataclass(frozen=True)
class FiberRoots:
    kind: str  # "whole_fiber" | "double" | "pair"
    roots: tuple[FiberPoint, ...]


def solve_fiber(A: complex, B: complex, C: complex, tol: float = 1e-12) -> FiberRoots:
    """Roots of A xi0^2 + 2 B xi0 xi12 + C xi12^2 on CP^1.

    Uses the cancellation-free quadratic formula: the root pair is
    (s, C) and (A, s) with s = -(B + sqrt(B^2 - AC)) sign-matched to B.
    """
    scale = max(abs(A), abs(B), abs(C))
    if scale <= tol:
        return FiberRoots("whole_fiber", ())
    disc = B * B - A * C
    sq = np.sqrt(complex(disc))
    if (B.conjugate() * sq).real < 0:
        sq = -sq
    s = -(B + sq)
    if abs(disc) <= (tol * scale) ** 2:
        # double root [C : -B] (or [B : -A] in the other chart)
        root = FiberPoint(C, -B) if abs(C) >= abs(A) else FiberPoint(B, -A)
        return FiberRoots("double", (root,))
    # sign matching keeps |s| >= sqrt|disc|, so both pairs below are nonzero
    return FiberRoots("pair", (FiberPoint(s, A), FiberPoint(C, s)))


def to_jmatrix(fp: FiberPoint) -> np.ndarray:
    """4x4 orthogonal complex structure of the fiber point.

    Written homogeneously in s = |xi0|^2, t = |xi12|^2 and w = xi12 conj(xi0),
    which makes [0 : 1] (the negative of the standard pattern) a regular value.
    """
    s = abs(fp.xi0) ** 2
    t = abs(fp.xi12) ** 2
    w = fp.xi12 * fp.xi0.conjugate()
    f, g = w.real, w.imag
    d = s - t
    m = np.array(
        [
            [0.0, d, 2.0 * g, 2.0 * f],
            [-d, 0.0, 2.0 * f, -2.0 * g],
            [-2.0 * g, -2.0 * f, 0.0, d],
            [-2.0 * f, 2.0 * g, -d, 0.0],
        ]
    )
    return (-1.0 / (s + t)) * m


def hyperplane_section(c: tuple[complex, complex, complex, complex], p: SpherePoint, tol: float = 1e-12) -> FiberPoint:
    """Fiber point cut out by c1 xi0 + c2 xi12 + c3 W1 + c4 W2 = 0 over p.

    In chart form a = -(c1 + c3 z1 + c4 z2) / (c2 - c3 conj(z2) + c4 conj(z1));
    both vanishing means the hyperplane contains the fiber (singular point).
    """
    c1, c2, c3, c4 = (complex(x) for x in c)
    scale = max(abs(x) for x in (c1, c2, c3, c4))
    if p.infinite:
        # invert: the section of the swapped form at the origin
        num, den = -c3, c4
        if max(abs(num), abs(den)) <= tol * scale:
            raise SingularPointError("hyperplane contains the fiber over infinity")
        return FiberPoint(den, num) if abs(den) > tol * scale else FiberPoint(0.0, 1.0)
    z1, z2 = p.z1, p.z2
    num = c1 + c3 * z1 + c4 * z2
    den = c2 - c3 * z2.conjugate() + c4 * z1.conjugate()
    local = tol * scale * (1.0 + abs(z1) + abs(z2))
    if abs(num) <= local and abs(den) <= local:
        raise SingularPointError("hyperplane contains the twistor line over this point")
    return FiberPoint(den, -num)


def hyperplane_singular_point(c) -> SpherePoint:
    """The unique point whose fiber lies inside the hyperplane."""
    c1, c2, c3, c4 = (complex(x) for x in c)
    a = np.array([[c3, c4], [c4.conjugate(), -c3.conjugate()]], dtype=complex)
    det = -(abs(c3) ** 2 + abs(c4) ** 2)
    if abs(det) < 1e-30:
        return SpherePoint.infinity()
    rhs = np.array([-c1, -c2.conjugate()], dtype=complex)
    z = np.linalg.solve(a, rhs)
    return SpherePoint.finite(z[0], z[1])


# ------------------------------------------------------------------ fields


@dataclass(frozen=True)
class HyperplaneField:
    """Single-valued structure field of a degree-one section."""

    c: tuple[complex, complex, complex, complex]


@dataclass(frozen=True)
class RealQuadricField:
    """One of the two closed-form branches of the reference real quadric."""

    sign: int  # +1 or -1


@dataclass(frozen=True)
class QuadricBranchField:
    """Branch of a general quadric, anchored by continuation at a base point.

    Branch labels 1 and 2 are assigned at the base point by lexicographic
    order of the affine chart value; every other point inherits its label by
    root continuation along a straight chart path.  Each evaluation carries
    its own continuation state, so distinct calls may run concurrently.
    """

    form: QuadraticForm
    branch: int
    base: SpherePoint

    def __post_init__(self):
        if self.branch not in (1, 2):
            raise ValueError("branch must be 1 or 2")


OCSField = HyperplaneField | RealQuadricField | QuadricBranchField


def default_base_point(q: QuadraticForm, candidates: int = 9) -> SpherePoint:
    """Deterministic off-discriminant anchor: best of a small fixed grid."""
    vals = np.linspace(-1.3, 1.3, candidates)
    best, best_val = None, -1.0
    for x1 in vals:
        for y1 in vals[::2]:
            for x2 in vals[::2]:
                for y2 in vals[::3]:
                    p = SpherePoint.from_coords(x1, y1, x2, y2)
                    f = fiber_coefficients(q, p)
                    score = abs(f.discriminant) / (q.norm * (1.0 + p.abs2())) ** 2
                    if score > best_val:
                        best, best_val = p, score
    return best


def _real_quadric_point(sign: int, p: SpherePoint) -> FiberPoint:
    t = p.z1.imag
    r = math.hypot(t, abs(p.z2))
    if r < 1e-15:
        raise OnDiscriminantError("point lies on the singular circle of the real quadric")
    if sign * t >= 0.0:
        return FiberPoint(p.z2.conjugate(), 1j * (t + sign * r))
    # cancellation-free form of t + sign*r when the signs oppose
    return FiberPoint(1.0, 1j * sign * p.z2 / (r + abs(t)))


def _roots_at(q: QuadraticForm, p: SpherePoint, tol: float = 1e-12):
    f = fiber_coefficients(q, p)
    scale = q.norm * (1.0 + p.abs2())
    rr = solve_fiber(f.A, f.B, f.C, tol=1e-14)
    sep_scale = abs(f.discriminant) / scale ** 2
    return rr, sep_scale


def _continue_roots(q: QuadraticForm, start: SpherePoint, target: SpherePoint, fp: FiberPoint,
                    min_sep: float = 1e-8, max_depth: int = 28) -> FiberPoint:
    """Track the root nearest to fp from start to target.

    A step is accepted only when the root motion stays below 0.3 times both
    the local root separation and an absolute cap, so a long jump can never
    be matched spuriously; otherwise the step is bisected (halving near the
    discriminant locus, where the separation shrinks).
    """

    def step(a: np.ndarray, b: np.ndarray, cur: FiberPoint, depth: int) -> FiberPoint:
        rr, _ = _roots_at(q, SpherePoint.from_coords(*b))
        if rr.kind == "pair":
            d0 = fs_distance(cur, rr.roots[0])
            d1 = fs_distance(cur, rr.roots[1])
            sep = fs_distance(rr.roots[0], rr.roots[1])
            if sep < min_sep:
                raise PathBlockedError("fiber roots fell below the separation floor")
            if min(d0, d1) <= 0.3 * min(sep, 1.0):
                return rr.roots[0] if d0 <= d1 else rr.roots[1]
        elif rr.kind == "whole_fiber":
            raise PathBlockedError("path crossed a whole-fiber point")
        if depth >= max_depth:
            raise PathBlockedError("cannot keep the branch separated along the path")
        mid = 0.5 * (a + b)
        cur = step(a, mid, cur, depth + 1)
        return step(mid, b, cur, depth + 1)

    a = np.array(start.coords)
    b = np.array(target.coords)
    if np.allclose(a, b):
        return fp
    return step(a, b, fp, 0)


def _base_roots(field: QuadricBranchField):
    rr, sep = _roots_at(field.form, field.base)
    if rr.kind != "pair":
        raise OnDiscriminantError("base point must lie off the discriminant locus")
    ordered = sorted(rr.roots, key=lambda r: r.chart_key())
    return ordered[field.branch - 1]


def eval_field(field: OCSField, p: SpherePoint, disc_tol: float = 1e-12) -> FiberPoint:
    """Fiber point of the structure field at p (off the discriminant locus)."""
    if isinstance(field, HyperplaneField):
        return hyperplane_section(field.c, p)
    if isinstance(field, RealQuadricField):
        return _real_quadric_point(field.sign, p)
    f = fiber_coefficients(field.form, p)
    scale = field.form.norm * (1.0 + p.abs2())
    if abs(f.discriminant) / scale ** 2 <= disc_tol:
        raise OnDiscriminantError("evaluation point lies on the discriminant locus")
    start_root = _base_roots(field)
    return _continue_roots(field.form, field.base, p, start_root)


def eval_jmatrix(field: OCSField, p: SpherePoint) -> np.ndarray:
    return to_jmatrix(eval_field(field, p))


# ----------------------------------------------------------- integrability


def _chart_values(field: OCSField, pts: list[SpherePoint], anchor: FiberPoint | None = None):
    """Fiber points at the stencil; quadric branches continue from the center."""
    if isinstance(field, QuadricBranchField) and anchor is not None:
        out = []
        for p in pts:
            rr, _ = _roots_at(field.form, p)
            if rr.kind != "pair":
                raise OnDiscriminantError("stencil touches the discriminant locus")
            d0 = fs_distance(anchor, rr.roots[0])
            d1 = fs_distance(anchor, rr.roots[1])
            out.append(rr.roots[0] if d0 <= d1 else rr.roots[1])
        return out
    return [eval_field(field, p) for p in pts]


def integrability_residual(field: OCSField, p: SpherePoint, h: float,
                           chart_limit: float = 1e3) -> tuple[float, float]:
    """Central-difference residuals of the two first-order equations at p.

    The chart (a or b = 1/a) is chosen to keep the stencil bounded; if both
    blow past ``chart_limit`` the stencil straddles the chart overlap too
    widely and the evaluation aborts.
    """
    x = np.array(p.coords)
    stencil = [p]
    for i in range(4):
        for s in (+1.0, -1.0):
            y = x.copy()
            y[i] += s * h
            stencil.append(SpherePoint.from_coords(*y))
    anchor = eval_field(field, p) if isinstance(field, QuadricBranchField) else None
    fps = _chart_values(field, stencil, anchor)

    mods = [abs(fp.xi12) / max(abs(fp.xi0), 1e-300) for fp in fps]
    amax = max(mods)
    bmax = max(1.0 / max(m, 1e-300) for m in mods)
    if amax > chart_limit and bmax > chart_limit:
        raise ChartBreakdownError("fiber values leave both affine charts over the stencil")
    use_a = amax <= bmax
    if use_a:
        vals = [fp.xi12 / fp.xi0 for fp in fps]
    else:
        vals = [fp.xi0 / fp.xi12 for fp in fps]

    a0 = vals[0]
    d = [(vals[1 + 2 * i] - vals[2 + 2 * i]) / (2.0 * h) for i in range(4)]
    dz1 = 0.5 * (d[0] - 1j * d[1])
    dz1b = 0.5 * (d[0] + 1j * d[1])
    dz2 = 0.5 * (d[2] - 1j * d[3])
    dz2b = 0.5 * (d[2] + 1j * d[3])
    if use_a:
        r1 = abs(a0 * dz1 + dz2b)
        r2 = abs(a0 * dz2 - dz1b)
    else:
        r1 = abs(dz1 + a0 * dz2b)
        r2 = abs(dz2 - a0 * dz1b)
    return (r1, r2)


def convergence_order(field: OCSField, p: SpherePoint, hs=(1e-2, 5e-3, 2.5e-3)) -> float:
    """Least-squares slope of log(total residual) against log(h)."""
    rs = []
    for h in hs:
        r1, r2 = integrability_residual(field, p, h)
        rs.append(r1 + r2)
    if max(rs) < 1e-11:
        return math.inf  # saturated at roundoff: integrable to machine precision
    lx = np.log(np.asarray(hs))
    ly = np.log(np.maximum(rs, 1e-300))
    slope = np.polyfit(lx, ly, 1)[0]
    return float(slope)
