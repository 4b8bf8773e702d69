"""Quaternionic-complex linear algebra on C^4 = H^2.

Conventions
-----------
A quaternion q = z1 + j z2 is stored as the pair (z1, z2) of complex numbers,
and H^2 is a *right* H-module.  C^4 is identified with H^2 by

    (c1, c2, c3, c4)  =  (c1 + j c2,  c3 + j c4),

so right multiplication by j acts on coordinates as v -> Jr conj(v), where
Jr = blockdiag(K, K) and K = [[0,-1],[1,0]].

Two coordinate orders are used and always tagged explicitly:

* ``twistor`` order (xi0, xi12, W1, W2): used for all fiber computations.
* ``block`` order (xi0, W1, xi12, W2): used for the classification algebra.

The orders are exchanged by the permutation P that swaps the middle two
coordinates; the quaternionic structure matrix in block order is
J = P Jr P = [[0,-I],[I,0]].

GL(2,H) is the group of invertible G with G J = J conj(G); equivalently G is
a 2x2 matrix of blocks of the shape [[a, b], [-conj(b), conj(a)]].  Its
determinant is real and positive, and SL(2,H) is the det = 1 subgroup.  A
quadratic form Q (complex symmetric 4x4) is *real* when Jt conj(Q) J = Q,
i.e. q(J conj(v)) = conj(q(v)); every form splits uniquely as Q1 + i Q2 with
both parts real.

All values here are immutable after construction and every operation is a
pure function, so everything is safe to share across threads.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .config import structural_tol
from .errors import MalformedInputError, NotInGroupError, OrderMismatchError

TWISTOR = "twistor"
BLOCK = "block"

K2 = np.array([[0.0, -1.0], [1.0, 0.0]])
I2 = np.eye(2)

#: permutation exchanging (xi0, xi12, W1, W2) and (xi0, W1, xi12, W2)
PERM = np.array(
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
)

J_TWISTOR = np.kron(np.eye(2), K2)          # blockdiag(K, K)
J_BLOCK = PERM @ J_TWISTOR @ PERM           # [[0, -I], [I, 0]]


def jmat(order: str) -> np.ndarray:
    """Quaternionic structure matrix for the given coordinate order."""
    if order == TWISTOR:
        return J_TWISTOR
    if order == BLOCK:
        return J_BLOCK
    raise ValueError(f"unknown coordinate order {order!r}")


def block_join(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Assemble the block-order GL(2,H)-shaped matrix {a | b}."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return np.block([[a, b], [-b.conj(), a.conj()]])


def block_split(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`block_join` (averages the two redundant copies)."""
    g = np.asarray(g, dtype=complex)
    a = 0.5 * (g[:2, :2] + g[2:, 2:].conj())
    b = 0.5 * (g[:2, 2:] - g[2:, :2].conj())
    return a, b


def block_project(g: np.ndarray) -> np.ndarray:
    """Nearest matrix with exact {a | b} structure (block order)."""
    return block_join(*block_split(g))


def is_gl2h(g: np.ndarray, order: str = BLOCK, tol: float | None = None):
    """Test G J = J conj(G) on the Frobenius-normalized matrix.

    Returns ``(ok, residual)`` where residual is the Frobenius norm of the
    commutation defect after scaling G to unit norm.
    """
    if tol is None:
        tol = structural_tol()
    g = np.asarray(g, dtype=complex)
    if g.shape != (4, 4):
        raise MalformedInputError("is_gl2h expects a 4x4 matrix")
    nrm = np.linalg.norm(g)
    if nrm == 0.0:
        return False, 0.0
    gn = g / nrm
    j = jmat(order)
    residual = float(np.linalg.norm(gn @ j - j @ gn.conj()))
    return residual <= tol, residual


def convert_order(m: np.ndarray, src: str, dst: str) -> np.ndarray:
    """Re-express a matrix (form or operator) in the other coordinate order.

    For the permutation P both the congruence and the conjugation rule reduce
    to P m P, so forms and group elements convert identically.
    """
    if src == dst:
        return np.array(m, dtype=complex)
    return PERM @ np.asarray(m, dtype=complex) @ PERM


@dataclass(frozen=True)
class QuadraticForm:
    """Complex symmetric 4x4 matrix with its coordinate-order tag."""

    entries: np.ndarray
    order: str = TWISTOR

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.shape != (4, 4):
            raise MalformedInputError("quadratic form must be 4x4")
        if not np.all(np.isfinite(m.view(float))):
            raise MalformedInputError("quadratic form entries must be finite")
        nrm = np.linalg.norm(m)
        if nrm > 0 and np.linalg.norm(m - m.T) > 1e-8 * nrm:
            raise MalformedInputError("quadratic form must be symmetric")
        if self.order not in (TWISTOR, BLOCK):
            raise ValueError(f"unknown coordinate order {self.order!r}")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def in_order(self, order: str) -> "QuadraticForm":
        if order == self.order:
            return self
        return QuadraticForm(convert_order(self.entries, self.order, order), order)

    def in_twistor(self) -> "QuadraticForm":
        return self.in_order(TWISTOR)

    def in_block(self) -> "QuadraticForm":
        return self.in_order(BLOCK)

    def normalized(self) -> "QuadraticForm":
        n = self.norm
        if n == 0:
            return self
        return QuadraticForm(self.entries / n, self.order)

    def __call__(self, v: np.ndarray) -> complex:
        v = np.asarray(v, dtype=complex)
        return complex(v @ self.entries @ v)


@dataclass(frozen=True)
class ConformalElement:
    """Element of C* x GL(2,H) acting on forms by Q -> gamma G^T Q G."""

    gmat: np.ndarray
    gamma: complex = 1.0 + 0.0j
    order: str = BLOCK

    def __post_init__(self):
        g = np.array(self.gmat, dtype=complex)
        ok, res = is_gl2h(g, self.order, tol=1e-8)
        if not ok:
            raise NotInGroupError(f"matrix is not in GL(2,H): residual {res:.3e}")
        det = np.linalg.det(g)
        if det.real <= 0 or abs(det.imag) > 1e-8 * max(1.0, abs(det)):
            raise NotInGroupError("GL(2,H) determinant must be real and positive")
        g.setflags(write=False)
        object.__setattr__(self, "gmat", g)
        object.__setattr__(self, "gamma", complex(self.gamma))

    @classmethod
    def identity(cls, order: str = BLOCK) -> "ConformalElement":
        return cls(np.eye(4), 1.0, order)

    @property
    def phase(self) -> complex:
        return self.gamma / abs(self.gamma)

    @property
    def magnitude(self) -> float:
        return abs(self.gamma)

    def in_order(self, order: str) -> "ConformalElement":
        if order == self.order:
            return self
        return ConformalElement(convert_order(self.gmat, self.order, order), self.gamma, order)

    def compose(self, other: "ConformalElement") -> "ConformalElement":
        """Element acting as self first, then other."""
        other = other.in_order(self.order)
        return ConformalElement(self.gmat @ other.gmat, self.gamma * other.gamma, self.order)

    def inverse(self) -> "ConformalElement":
        return ConformalElement(np.linalg.inv(self.gmat), 1.0 / self.gamma, self.order)

    def det_normalized(self) -> "ConformalElement":
        """Rescale so gmat lands in SL(2,H); gamma absorbs the scale."""
        det = np.linalg.det(self.gmat).real
        s = det ** 0.25
        return ConformalElement(self.gmat / s, self.gamma * s * s, self.order)


@dataclass(frozen=True)
class Quaternion:
    """q = z1 + j z2 with complex components, right-module convention."""

    z1: complex
    z2: complex

    def __mul__(self, other: "Quaternion") -> "Quaternion":
        a1, a2 = self.z1, self.z2
        b1, b2 = other.z1, other.z2
        return Quaternion(a1 * b1 - a2.conjugate() * b2, a1.conjugate() * b2 + a2 * b1)

    def conj(self) -> "Quaternion":
        return Quaternion(self.z1.conjugate(), -self.z2)

    @property
    def norm2(self) -> float:
        return abs(self.z1) ** 2 + abs(self.z2) ** 2

    @property
    def norm(self) -> float:
        return self.norm2 ** 0.5

    def inverse(self) -> "Quaternion":
        n2 = self.norm2
        if n2 == 0:
            raise ZeroDivisionError("inverse of zero quaternion")
        c = self.conj()
        return Quaternion(c.z1 / n2, c.z2 / n2)


@dataclass(frozen=True)
class SpherePoint:
    """Point of S^4 = R^4 u {inf}: chart value (z1, z2) or infinity."""

    z1: complex = 0.0 + 0.0j
    z2: complex = 0.0 + 0.0j
    infinite: bool = False

    @classmethod
    def finite(cls, z1, z2) -> "SpherePoint":
        return cls(complex(z1), complex(z2), False)

    @classmethod
    def from_coords(cls, x1, y1, x2, y2) -> "SpherePoint":
        return cls(complex(x1, y1), complex(x2, y2), False)

    @classmethod
    def infinity(cls) -> "SpherePoint":
        return cls(0.0, 0.0, True)

    @property
    def coords(self) -> tuple[float, float, float, float]:
        if self.infinite:
            raise ValueError("coordinates of the point at infinity")
        return (self.z1.real, self.z1.imag, self.z2.real, self.z2.imag)

    def quaternion(self) -> Quaternion:
        if self.infinite:
            raise ValueError("the point at infinity has no chart quaternion")
        return Quaternion(self.z1, self.z2)

    def abs2(self) -> float:
        if self.infinite:
            return float("inf")
        return abs(self.z1) ** 2 + abs(self.z2) ** 2


def sphere_distance(p: SpherePoint, q: SpherePoint) -> float:
    """Chordal distance on S^4 (round metric up to scale), infinity-safe."""
    if p.infinite and q.infinite:
        return 0.0
    if p.infinite or q.infinite:
        f = q if p.infinite else p
        return 1.0 / (1.0 + f.abs2()) ** 0.5
    num = (abs(p.z1 - q.z1) ** 2 + abs(p.z2 - q.z2) ** 2) ** 0.5
    den = ((1.0 + p.abs2()) * (1.0 + q.abs2())) ** 0.5
    return num / den


def reality_decompose(q: QuadraticForm) -> tuple[QuadraticForm, QuadraticForm]:
    """Split Q = Q1 + i Q2 into its real and purely imaginary parts.

    Q1 = (Q + Jt conj(Q) J)/2 and Q2 = (Q - Jt conj(Q) J)/(2i); both satisfy
    the reality condition Jt Q J = conj(Q).
    """
    j = jmat(q.order)
    m = q.entries
    w = j.T @ m.conj() @ j
    q1 = 0.5 * (m + w)
    q2 = (m - w) / 2j
    return QuadraticForm(q1, q.order), QuadraticForm(q2, q.order)


def is_real(q: QuadraticForm, tol: float | None = None) -> bool:
    """True when the purely imaginary part vanishes (scale invariant)."""
    if tol is None:
        tol = structural_tol()
    n = q.norm
    if n == 0:
        return True
    _, q2 = reality_decompose(q)
    return q2.norm <= tol * n


def act_on_form(q: QuadraticForm, t: ConformalElement) -> QuadraticForm:
    """gamma G^T Q G, with matching coordinate orders required."""
    if q.order != t.order:
        raise OrderMismatchError(
            f"form is in {q.order} order but element is in {t.order} order"
        )
    g = t.gmat
    return QuadraticForm(t.gamma * (g.T @ q.entries @ g), q.order)


def quaternion_blocks(g_twistor: np.ndarray):
    """Quaternion entries (a, b, c, d) of a twistor-order GL(2,H) matrix.

    Each 2x2 block [[c1, c2], [-conj(c2), conj(c1)]] represents the
    quaternion read off its first column: c1 + j (-conj(c2)).
    """
    g = np.asarray(g_twistor, dtype=complex)

    def quat(block):
        return Quaternion(complex(block[0, 0]), complex(block[1, 0]))

    return (
        quat(g[:2, :2]),
        quat(g[:2, 2:]),
        quat(g[2:, :2]),
        quat(g[2:, 2:]),
    )


def act_on_sphere(t: ConformalElement, p: SpherePoint, tol: float = 1e-13) -> SpherePoint:
    """Quaternionic Moebius action q -> (c + d q)(a + b q)^{-1} on S^4."""
    g = t.in_order(TWISTOR).gmat
    a, b, c, d = quaternion_blocks(g)
    scale = max(q.norm for q in (a, b, c, d))
    if p.infinite:
        num, den = d, b
    else:
        q = p.quaternion()
        den = Quaternion(a.z1 + (b * q).z1, a.z2 + (b * q).z2)
        num = Quaternion(c.z1 + (d * q).z1, c.z2 + (d * q).z2)
        scale = scale * max(1.0, q.norm)
    if den.norm <= tol * scale:
        return SpherePoint.infinity()
    image = num * den.inverse()
    return SpherePoint(image.z1, image.z2)


def random_su2(rng: np.random.Generator) -> tuple[complex, complex]:
    """Uniform (a, b) with |a|^2 + |b|^2 = 1."""
    v = rng.normal(size=4)
    v /= np.linalg.norm(v)
    return complex(v[0], v[1]), complex(v[2], v[3])


def random_sl2r(rng: np.random.Generator, scale: float = 0.7) -> np.ndarray:
    x = rng.normal(size=3) * scale
    gen = np.array([[x[0], x[1]], [x[2], -x[0]]])
    return scipy.linalg.expm(gen)


def random_sl2h(rng: np.random.Generator, scale: float = 0.5, order: str = BLOCK) -> ConformalElement:
    """Random element of SL(2,H) via the exponential of a random {a|b} matrix."""
    a = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))) * scale
    b = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))) * scale
    g = scipy.linalg.expm(block_join(a, b))
    g = block_project(g)
    det = np.linalg.det(g).real
    g = g / det ** 0.25
    elem = ConformalElement(g, 1.0, BLOCK)
    return elem.in_order(order)


def random_phase(rng: np.random.Generator) -> complex:
    return cmath.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
