"""Canonical forms of rank-4 quadrics under C* x GL(2,H).

All algebra here lives in block coordinate order (xi0, W1, xi12, W2).  The
pipeline behind :func:`canonicalize`:

1. pick a unit phase making the real part of the form nondegenerate
   (grid search on |det Re(e^{i theta} Q)| plus a golden-section polish);
2. congruence-normalize the real part to Q0 = {0 | K} by diagonalizing the
   anti-Hermitian matrix Q1 J inside sp(2) and composing the Weyl-chamber,
   rescale, {I | iI} and F^{-1} steps;
3. read the residual data (L, M, N, v) from the imaginary part and pack the
   three symmetric 2x2 matrices into the 3x3 matrix X;
4. factor X = P^{-1} D O^{-1} with P in SO_0(1,2), O in SO(3) and D either
   diagonal or the rank-2 null normal form M_k; realize (P, O) on the form
   through the stabilizer of Q0, which is SL(2,R) x_{Z2} SU(2) acting via the
   double covers pi1, pi2;
5. diagonal branch: transform by F, rescale by diag(c, d, conj c, conj d)
   with c^2, d^2 the cosines of the two complex angles, fix the residual
   phase, and read off (lambda, mu, nu); non-diagonalizable branch: solve for
   the phase that kills v and fold k into [0, 1);
6. reduce to the fundamental domain 0 <= lambda <= mu, nu in [0, pi/2)
   (nu in [0, pi/4] when lambda = mu) with the four exact generator
   identities, then Gauss-Newton polish the witness and parameters.

The returned witness W satisfies gamma W^T Q W = canonical matrix with
Frobenius residual at most ``WITNESS_TOL``; anything worse raises.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import quatlin
from .config import RANK_TOL, WITNESS_TOL, X_RANK_TOL
from .errors import (
    MalformedInputError,
    NotInGroupError,
    NumericalBreakdownError,
    RankDeficientError,
)
from .quatlin import (
    BLOCK,
    ConformalElement,
    J_BLOCK,
    K2,
    QuadraticForm,
    block_join,
    block_project,
    reality_decompose,
)

E_LORENTZ = np.diag([1.0, -1.0, -1.0])

# ---------------------------------------------------------------- reference matrices


def q0_matrix() -> np.ndarray:
    """Q0 = {0 | K}, the reference real form -2 xi0 W2 + 2 xi12 W1."""
    return block_join(np.zeros((2, 2)), K2)


def identity_form(order: str = BLOCK) -> QuadraticForm:
    return QuadraticForm(np.eye(4), order)


def f_matrix() -> np.ndarray:
    """The SL(2,H) element with F^T Q0 F = identity."""
    return np.array(
        [
            [1, 0, 0, 1j],
            [0, -1j, 1, 0],
            [0, 1j, 1, 0],
            [-1, 0, 0, 1j],
        ],
        dtype=complex,
    ) / math.sqrt(2.0)


def h_step_matrix() -> np.ndarray:
    """{I | iI}, whose Gram matrix is {0 | 2iI}."""
    return block_join(np.eye(2), 1j * np.eye(2))


# Generators of the residual symmetry group acting on (lambda, mu, nu),
# as exact matrix identities on the diagonal family (block order).
H1 = np.diag([1.0, 1j, 1.0, -1j])                      # nu -> nu + pi/2, with phase i
H2 = np.array(
    [[0, 0, -1, 0], [0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1]], dtype=complex
)                                                      # lambda -> -lambda
H3 = block_join(np.zeros((2, 2)), np.eye(2))           # (lambda, mu) -> (-lambda, -mu)
H4 = block_join(K2, np.zeros((2, 2)))                  # swap, nu -> -nu


def diagonal_matrix(lam: float, mu: float, nu: float, order: str = BLOCK) -> QuadraticForm:
    """The diagonal representative with unit determinant."""
    d = np.diag(
        [
            cmath.exp(lam + 1j * nu),
            cmath.exp(mu - 1j * nu),
            cmath.exp(-lam + 1j * nu),
            cmath.exp(-mu - 1j * nu),
        ]
    )
    return QuadraticForm(d, BLOCK).in_order(order)


def r_vk_matrix(v: float, k: float) -> np.ndarray:
    """Real form R_{v,k}; the non-diagonalizable family is Q0 + i R_{v,k}."""
    return np.array(
        [
            [2.0, 1j * k, 0.0, v],
            [1j * k, 0.0, -v, 0.0],
            [0.0, -v, 2.0, -1j * k],
            [v, 0.0, -1j * k, 0.0],
        ],
        dtype=complex,
    )


def nondiagonal_matrix(k: float, v: float = 0.0, order: str = BLOCK) -> QuadraticForm:
    return QuadraticForm(q0_matrix() + 1j * r_vk_matrix(v, k), BLOCK).in_order(order)


def mk_matrix(k: float) -> np.ndarray:
    return np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, k, 0.0]])


# ---------------------------------------------------------------- result types


@dataclass(frozen=True)
class Diagonal:
    lam: float
    mu: float
    nu: float
    witness: ConformalElement | None = None
    residual: float = 0.0

    def canonical_form(self, order: str = BLOCK) -> QuadraticForm:
        return diagonal_matrix(self.lam, self.mu, self.nu, order)

    @property
    def params(self) -> tuple[float, float, float]:
        return (self.lam, self.mu, self.nu)


@dataclass(frozen=True)
class NonDiagonalizable:
    k: float
    witness: ConformalElement | None = None
    residual: float = 0.0

    def canonical_form(self, order: str = BLOCK) -> QuadraticForm:
        return nondiagonal_matrix(self.k, 0.0, order)

    @property
    def params(self) -> tuple[float]:
        return (self.k,)


CanonicalForm = Diagonal | NonDiagonalizable


@dataclass(frozen=True)
class LMNData:
    """Symmetric 2x2 triple plus the Q0 coefficient of the imaginary part."""

    L: np.ndarray
    M: np.ndarray
    N: np.ndarray
    v: float

    def xmatrix(self) -> np.ndarray:
        cols = []
        for s in (self.L, self.M, self.N):
            cols.append([0.5 * (s[0, 0] + s[1, 1]), 0.5 * (s[0, 0] - s[1, 1]), s[0, 1]])
        return np.array(cols).T


@dataclass(frozen=True)
class LorentzSVD:
    """P X O = diag(d1, d2, d3) (kind 'diagonal') or M_k (kind 'mk')."""

    kind: str
    P: np.ndarray
    O: np.ndarray
    diag: tuple[float, float, float] | None = None
    k: float | None = None

    def target(self) -> np.ndarray:
        if self.kind == "diagonal":
            return np.diag(self.diag)
        return mk_matrix(self.k)


# ---------------------------------------------------------------- real-part reduction


def normalize_real_part(q: QuadraticForm, rank_tol: float = RANK_TOL) -> np.ndarray:
    """H in GL(2,H) with H^T Q1 H = Q0 for the real part Q1 of q.

    Q1 J is anti-Hermitian and commutes with the quaternionic structure, so
    it diagonalizes by a unitary U = [v1, v2, J conj(v1), J conj(v2)] built
    from eigenvectors with positive eigenvalues; U automatically lies in
    Sp(2).  The chain conj(U) -> rescale -> {I|iI}^{-1} -> F^{-1} lands on Q0.
    """
    qb = q.in_block()
    q1, _ = reality_decompose(qb)
    m = q1.entries
    nrm = np.linalg.norm(m)
    if nrm == 0 or abs(np.linalg.det(m / nrm)) <= rank_tol:
        raise RankDeficientError("real part of the form has rank < 4")

    herm = -1j * (m @ J_BLOCK)
    herm = 0.5 * (herm + herm.conj().T)
    w, vec = np.linalg.eigh(herm)
    if w[2] <= 0 or w[3] <= 0:
        raise RankDeficientError("real part has fewer than two positive invariants")
    v1 = vec[:, 3]
    v2 = vec[:, 2]
    u = np.column_stack([v1, v2, J_BLOCK @ v1.conj(), J_BLOCK @ v2.conj()])
    g = u.conj()
    g = g @ np.diag([w[3] ** -0.5, w[2] ** -0.5, w[3] ** -0.5, w[2] ** -0.5])
    h_inv = 0.5 * block_join(np.eye(2), -1j * np.eye(2))
    h = math.sqrt(2.0) * g @ h_inv @ np.linalg.inv(f_matrix())
    h = block_project(h)

    res = np.linalg.norm(h.T @ m @ h - q0_matrix())
    if res > 1e-8 * max(1.0, nrm):
        raise NumericalBreakdownError(f"real-part normalization residual {res:.3e}")
    return h


def extract_lmnv(q: QuadraticForm, tol: float = 1e-6) -> LMNData:
    """Read (L, M, N, v) from a form whose real part equals Q0.

    The imaginary part is the real form {L + iM | -vK + iN}; L, M, N are the
    symmetric 2x2 pieces and v multiplies Q0.
    """
    qb = q.in_block()
    q1, q2 = reality_decompose(qb)
    if np.linalg.norm(q1.entries - q0_matrix()) > tol * max(1.0, qb.norm):
        raise MalformedInputError("real part is not Q0")
    a = q2.entries[:2, :2]
    b = q2.entries[:2, 2:]
    L, M = a.real.copy(), a.imag.copy()
    rb, N = b.real.copy(), b.imag.copy()
    defect = max(
        np.linalg.norm(L - L.T),
        np.linalg.norm(M - M.T),
        np.linalg.norm(N - N.T),
        np.linalg.norm(rb + rb.T),
    )
    if defect > tol * max(1.0, qb.norm):
        raise MalformedInputError(f"imaginary part violates the block structure ({defect:.3e})")
    v = float(rb[0, 1])
    sym = lambda s: 0.5 * (s + s.T)
    return LMNData(sym(L), sym(M), sym(N), v)


def lmn_form(data: LMNData) -> QuadraticForm:
    """Rebuild the block-order form Q0 + i {L+iM | -vK + iN} (test oracle)."""
    q2 = block_join(data.L + 1j * data.M, -data.v * K2 + 1j * data.N)
    return QuadraticForm(q0_matrix() + 1j * q2, BLOCK)


# ---------------------------------------------------------------- Lorentzian SVD

_ROT23 = lambda t: np.array(
    [[1, 0, 0], [0, math.cos(t), -math.sin(t)], [0, math.sin(t), math.cos(t)]]
)
_BOOST12 = lambda t: np.array(
    [[math.cosh(t), math.sinh(t), 0], [math.sinh(t), math.cosh(t), 0], [0, 0, 1]]
)
_COLROT = lambda t: np.array(
    [[math.cos(t), -math.sin(t), 0], [math.sin(t), math.cos(t), 0], [0, 0, 1]]
)


def _map_to_axis(w: np.ndarray, kind: str) -> np.ndarray:
    """P in SO_0(1,2) sending w to (m,0,0), (0,m,0) or the null ray (s,s,0).

    Timelike vectors keep the sign of their first component; spacelike images
    have positive second component; null input must be future pointing.
    """
    p = _ROT23(math.atan2(-w[2], w[1]) if (w[1] != 0 or w[2] != 0) else 0.0)
    v = p @ w
    if kind == "timelike":
        t = math.atanh(np.clip(-v[1] / v[0], -0.999999999999, 0.999999999999))
        return _BOOST12(t) @ p
    if kind == "spacelike":
        if v[1] < 0:
            flip = _ROT23(math.pi)
            p = flip @ p
            v = flip @ v
        t = math.atanh(np.clip(-v[0] / v[1], -0.999999999999, 0.999999999999))
        return _BOOST12(t) @ p
    return p  # null: (v0, v0, 0) up to roundoff


def _fix_so12(p: np.ndarray, dvec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Push P into the identity component by sign flips folded into dvec."""
    if p[0, 0] < 0:
        p = np.diag([-1.0, 1.0, 1.0]) @ p
        dvec = dvec * np.array([-1.0, 1.0, 1.0])
    if np.linalg.det(p) < 0:
        p = np.diag([1.0, -1.0, 1.0]) @ p
        dvec = dvec * np.array([1.0, -1.0, 1.0])
    return p, dvec


def _svd_rank3(x: np.ndarray) -> LorentzSVD:
    s = x.T @ E_LORENTZ @ x
    s = 0.5 * (s + s.T)
    w, vec = np.linalg.eigh(s)
    if not (w[0] < 0 and w[1] < 0 and w[2] > 0):
        raise NumericalBreakdownError("X^T E X lost its (+,-,-) signature")
    o = np.column_stack([vec[:, 2], vec[:, 0], vec[:, 1]])
    if np.linalg.det(o) < 0:
        o[:, 2] = -o[:, 2]
    dvec = np.array([math.sqrt(w[2]), math.sqrt(-w[0]), math.sqrt(-w[1])])
    p = np.diag(dvec) @ o.T @ np.linalg.inv(x)
    p, dvec = _fix_so12(p, dvec)
    return LorentzSVD("diagonal", p, o, diag=tuple(dvec))


def _ortho_completion(first: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """SO(3) matrix with given first column and third column = normal."""
    o1 = first / np.linalg.norm(first)
    o3 = normal / np.linalg.norm(normal)
    o2 = np.cross(o3, o1)
    return np.column_stack([o1, o2, o3])


def _hyperbolic_svd2(b: np.ndarray):
    """L B R = diag with L in SO_0(1,1)-like sign-fixed form, R a rotation."""
    s2 = b.T @ np.diag([1.0, -1.0]) @ b
    s2 = 0.5 * (s2 + s2.T)
    w, vec = np.linalg.eigh(s2)  # w[0] < 0 < w[1]
    if not (w[0] < 0 < w[1]):
        raise NumericalBreakdownError("2x2 hyperbolic block lost its signature")
    r = np.column_stack([vec[:, 1], vec[:, 0]])
    if np.linalg.det(r) < 0:
        r[:, 1] = -r[:, 1]
    d = np.array([math.sqrt(w[1]), math.sqrt(-w[0])])
    l = np.diag(d) @ r.T @ np.linalg.inv(b)
    if l[0, 0] < 0:
        l = np.diag([-1.0, 1.0]) @ l
        d[0] = -d[0]
    if np.linalg.det(l) < 0:
        l = np.diag([1.0, -1.0]) @ l
        d[1] = -d[1]
    return l, r, d


def _embed(m2: np.ndarray, rows: tuple[int, int]) -> np.ndarray:
    out = np.eye(3)
    i, j = rows
    out[i, i] = m2[0, 0]
    out[i, j] = m2[0, 1]
    out[j, i] = m2[1, 0]
    out[j, j] = m2[1, 1]
    return out


def _svd_rank2(x: np.ndarray, null_tol: float) -> LorentzSVD:
    nx = np.linalg.norm(x)
    _, _, vt = np.linalg.svd(x)
    normal = vt[2]
    r1 = x[0]
    first = r1 if np.linalg.norm(r1) > 1e-12 * nx else vt[0]
    first = first - normal * (first @ normal)
    o = _ortho_completion(first, normal)
    p = np.eye(3)
    y = x @ o

    # rotate rows 2,3 so the second column is supported on the last row
    e, f = y[1, 1], y[2, 1]
    rot = _ROT23(math.atan2(e, f))
    p = rot @ p
    y = rot @ y

    a, bb = y[0, 0], y[1, 0]
    norm01 = a * a - bb * bb
    cyc = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])  # cols -> (c2,c0,c1)
    swap12 = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])  # cols -> (c0,c2,-c1)
    if norm01 > null_tol:
        t = math.atanh(np.clip(-bb / a, -0.999999999999, 0.999999999999))
        bo = _BOOST12(t)
        p, y = bo @ p, bo @ y
        l2, r2, d = _hyperbolic_svd2(np.array([[y[0, 0], 0.0], [y[2, 0], y[2, 1]]]))
        pl = _embed(l2, (0, 2))
        orr = _embed(r2, (0, 1))
        # block lands on entries (0,0),(2,1); swap columns 1,2 to diagonalize
        return LorentzSVD("diagonal", pl @ p, o @ orr @ swap12, diag=(d[0], 0.0, -d[1]))

    if norm01 < -null_tol:
        t = math.atanh(np.clip(-a / bb, -0.999999999999, 0.999999999999))
        bo = _BOOST12(t)
        p, y = bo @ p, bo @ y
        u2, sv, v2t = np.linalg.svd(np.array([[y[1, 0], 0.0], [y[2, 0], y[2, 1]]]))
        d = sv.copy()
        if np.linalg.det(u2) < 0:
            u2[:, 1] = -u2[:, 1]
            d[1] = -d[1]
        if np.linalg.det(v2t) < 0:
            v2t[1, :] = -v2t[1, :]
            d[1] = -d[1]
        pl = _embed(u2.T, (1, 2))
        orr = _embed(v2t.T, (0, 1))
        # block lands on entries (1,0),(2,1); cycle the columns to diagonalize
        return LorentzSVD("diagonal", pl @ p, o @ orr @ cyc, diag=(0.0, d[0], d[1]))

    # null first column: the М_k normal form
    if a < 0:
        flip = np.diag([-1.0, -1.0, 1.0])
        o = o @ flip
        y = y @ flip
        a, bb = y[0, 0], y[1, 0]
    if bb < 0:
        rot = _ROT23(math.pi)
        p, y = rot @ p, rot @ y
    psi = math.atan2(-y[2, 0], y[2, 1])
    cr = _COLROT(psi)
    o = o @ cr
    y = y @ cr
    col2 = y[:, 1]
    pm = _ROT23(math.pi / 2.0) @ _map_to_axis(col2, "spacelike")
    p, y = pm @ p, pm @ y
    if y[1, 0] * y[0, 0] < 0:
        rot = _ROT23(math.pi)
        p, y = rot @ p, rot @ y
    if y[0, 0] < 0:
        flip = np.diag([-1.0, 1.0, -1.0])
        o = o @ flip
        y = y @ flip
    if y[2, 1] < 0:
        flip = np.diag([1.0, -1.0, -1.0])
        o = o @ flip
        y = y @ flip
    t = -math.log(max(y[0, 0], 1e-300))
    bo = _BOOST12(t)
    p, y = bo @ p, bo @ y
    return LorentzSVD("mk", p, o, k=float(y[2, 1]))


def _svd_rank1(x: np.ndarray, null_tol: float) -> LorentzSVD:
    _, sv, vt = np.linalg.svd(x)
    q = vt[0]
    aux = vt[1]
    o = _ortho_completion(q, np.cross(q, aux))
    y = x @ o
    w = y[:, 0]
    nrm = w[0] ** 2 - w[1] ** 2 - w[2] ** 2
    if nrm > null_tol:
        p = _map_to_axis(w, "timelike")
        m = (p @ w)[0]
        return LorentzSVD("diagonal", p, o, diag=(m, 0.0, 0.0))
    if nrm < -null_tol:
        p = _map_to_axis(w, "spacelike")
        m = (p @ w)[1]
        cyc = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
        return LorentzSVD("diagonal", p, o @ cyc, diag=(0.0, m, 0.0))
    if w[0] < 0:
        flip = np.diag([-1.0, -1.0, 1.0])
        o = o @ flip
        w = -w
    p = _map_to_axis(w, "null")
    v = p @ w
    if v[1] < 0:
        rot = _ROT23(math.pi)
        p = rot @ p
        v = rot @ v
    t = -math.log(max(v[0], 1e-300))
    p = _BOOST12(t) @ p
    return LorentzSVD("mk", p, o, k=0.0)


def lorentz_svd(x: np.ndarray, rank_tol: float = X_RANK_TOL) -> LorentzSVD:
    """Factor P X O into diag(y, x, u) or M_k with P in SO_0(1,2), O in SO(3).

    Rank 3 goes through the symmetric eigendecomposition of X^T E X; lower
    ranks follow the constructive case split on the Lorentzian norm of the
    surviving column, with the null subcase producing M_k.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (3, 3):
        raise MalformedInputError("lorentz_svd expects a 3x3 real matrix")
    nx = np.linalg.norm(x)
    if nx == 0:
        return LorentzSVD("diagonal", np.eye(3), np.eye(3), diag=(0.0, 0.0, 0.0))
    sv = np.linalg.svd(x, compute_uv=False)
    rank = int(np.sum(sv > rank_tol * sv[0]))
    null_tol = rank_tol * nx * nx
    if rank == 3:
        out = _svd_rank3(x)
    elif rank == 2:
        out = _svd_rank2(x, null_tol)
    else:
        out = _svd_rank1(x, null_tol)
    res = np.linalg.norm(out.P @ x @ out.O - out.target())
    if res > 1e-8 * max(1.0, nx):
        raise NumericalBreakdownError(f"Lorentzian SVD residual {res:.3e}")
    return out


# ---------------------------------------------------------------- double covers


def vec_to_sym(v: np.ndarray) -> np.ndarray:
    """(x, y, z) -> [[x+y, z], [z, x-y]]; det is the Lorentzian norm."""
    x, y, z = v
    return np.array([[x + y, z], [z, x - y]])


def sym_to_vec(l: np.ndarray) -> np.ndarray:
    return np.array([0.5 * (l[0, 0] + l[1, 1]), 0.5 * (l[0, 0] - l[1, 1]), l[0, 1]])


def lam_of_vec(w: np.ndarray) -> np.ndarray:
    """(l, m, n) -> [[l+im, in], [in, l-im]]; det is the Euclidean norm."""
    l, m, n = w
    return np.array([[l + 1j * m, 1j * n], [1j * n, l - 1j * m]])


def vec_of_lam(lam: np.ndarray) -> np.ndarray:
    return np.array(
        [
            0.5 * (lam[0, 0] + lam[1, 1]).real,
            0.5 * (lam[0, 0] - lam[1, 1]).imag,
            lam[0, 1].imag,
        ]
    )


def so12_of_sl2r(r: np.ndarray) -> np.ndarray:
    """pi1(R): the SO_0(1,2) matrix with L_{pi1(R) v} = R^T L_v R."""
    cols = [sym_to_vec(r.T @ vec_to_sym(e) @ r) for e in np.eye(3)]
    return np.column_stack(cols)


def so3_of_su2(u: np.ndarray) -> np.ndarray:
    """pi2(U): the SO(3) matrix with Lam_{pi2(U) w} = U^T Lam_w U."""
    cols = [vec_of_lam(u.T @ lam_of_vec(e) @ u) for e in np.eye(3)]
    return np.column_stack(cols)


def lift_so12(p: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """One of the two SL(2,R) preimages of P under pi1.

    The defining relation linearizes as L_v R = adj(R^T) L_{Pv}, which pins R
    up to real scale; the scale is fixed by det R = 1.
    """
    p = np.asarray(p, dtype=float)
    if np.linalg.norm(p.T @ E_LORENTZ @ p - E_LORENTZ) > tol * 10 or p[0, 0] <= 0:
        raise NotInGroupError("matrix is not in SO_0(1,2)")
    rows = []
    for e in np.eye(3):
        lv = vec_to_sym(e)
        lp = vec_to_sym(p @ e)
        # unknowns (a, b, c, d); L_v R - [[d, -c], [-b, a]] L_p = 0
        for i in range(2):
            for j in range(2):
                row = np.zeros(4)
                row[0 + j] += lv[i, 0]          # a or b from R row 1
                row[2 + j] += lv[i, 1]          # c or d from R row 2
                if i == 0:
                    row[3] -= lp[0, j]          # d
                    row[2] -= -lp[1, j]         # -c
                else:
                    row[1] -= -lp[0, j]         # -b
                    row[0] -= lp[1, j]          # a
                rows.append(row)
    a_mat = np.array(rows)
    _, sv, vt = np.linalg.svd(a_mat)
    cand = vt[-1]
    r = np.array([[cand[0], cand[1]], [cand[2], cand[3]]])
    det = np.linalg.det(r)
    if det <= 1e-14:
        raise NotInGroupError("SO_0(1,2) lift has no positive-determinant representative")
    r = r / math.sqrt(det)
    if np.linalg.norm(so12_of_sl2r(r) - p) > tol * 100:
        raise NotInGroupError("pi1 lift failed to reproduce the input")
    return r


def lift_so3(o: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """One of the two SU(2) preimages of O under pi2."""
    o = np.asarray(o, dtype=float)
    if np.linalg.norm(o.T @ o - np.eye(3)) > tol * 10 or np.linalg.det(o) < 0:
        raise NotInGroupError("matrix is not in SO(3)")

    def u_of(params):
        ar, ai, br, bi = params
        a = ar + 1j * ai
        b = br + 1j * bi
        return np.array([[a, b], [-b.conjugate(), a.conjugate()]])

    # Lam_v U - conj(U) Lam_{Ov} = 0 is real-linear in (Re a, Im a, Re b, Im b)
    a_cols = []
    for t in np.eye(4):
        u = u_of(t)
        col = []
        for e in np.eye(3):
            lv = lam_of_vec(e)
            lp = lam_of_vec(o @ e)
            m = lv @ u - u.conj() @ lp
            col.append(np.concatenate([m.real.ravel(), m.imag.ravel()]))
        a_cols.append(np.concatenate(col))
    a_mat = np.column_stack(a_cols)
    _, sv, vt = np.linalg.svd(a_mat)
    cand = vt[-1]
    u = u_of(cand)
    nrm = math.sqrt(abs(np.linalg.det(u).real))
    if nrm <= 1e-14:
        raise NotInGroupError("SU(2) lift degenerated")
    u = u / nrm
    if np.linalg.norm(so3_of_su2(u) - o) > tol * 100:
        raise NotInGroupError("pi2 lift failed to reproduce the input")
    return u


def stabilizer_element(r: np.ndarray, ab: tuple[complex, complex], tol: float = 1e-10) -> ConformalElement:
    """{aR | bR}: the stabilizer of Q0, isomorphic to SL(2,R) x_{Z2} SU(2)."""
    a, b = complex(ab[0]), complex(ab[1])
    r = np.asarray(r, dtype=float)
    if abs(np.linalg.det(r) - 1.0) > tol:
        raise NotInGroupError("R must have unit determinant")
    if abs(abs(a) ** 2 + abs(b) ** 2 - 1.0) > tol:
        raise NotInGroupError("(a, b) must satisfy |a|^2 + |b|^2 = 1")
    g = block_join(a * r, b * r)
    return ConformalElement(g, 1.0, BLOCK)


# ---------------------------------------------------------------- canonicalization


class _Reduction:
    """Mutable pipeline state with the invariant gamma W^T Q W = current."""

    def __init__(self, q: QuadraticForm):
        self.q0 = q.in_block().entries
        nrm = np.linalg.norm(self.q0)
        self.cur = self.q0 / nrm
        self.w = np.eye(4, dtype=complex)
        self.gamma = 1.0 / nrm + 0.0j

    def apply(self, t: np.ndarray, phase: complex = 1.0) -> None:
        self.cur = phase * (t.T @ self.cur @ t)
        self.cur = 0.5 * (self.cur + self.cur.T)
        self.w = self.w @ t
        self.gamma *= phase

    def apply_phase(self, phase: complex) -> None:
        self.cur = phase * self.cur
        self.gamma *= phase

    def form(self) -> QuadraticForm:
        return QuadraticForm(self.cur, BLOCK)

    def residual_against(self, target: np.ndarray) -> float:
        return float(np.linalg.norm(self.gamma * (self.w.T @ self.q0 @ self.w) - target))


def _best_phase(q: np.ndarray, samples: int = 64, refine: int = 20) -> float:
    """Phase theta maximizing |det Re(e^{i theta} Q)| (grid + golden section)."""

    def val(theta):
        m = np.exp(1j * theta) * q
        q1 = 0.5 * (m + J_BLOCK.T @ m.conj() @ J_BLOCK)
        return abs(np.linalg.det(q1))

    grid = np.linspace(0.0, math.pi / 2.0, samples, endpoint=False)
    vals = [val(t) for t in grid]
    best = int(np.argmax(vals))
    if vals[best] < 1e-12:
        grid = np.linspace(0.0, math.pi, 4 * samples, endpoint=False)
        vals = [val(t) for t in grid]
        best = int(np.argmax(vals))
        if vals[best] < 1e-13:
            raise RankDeficientError("no phase makes the real part nondegenerate")
    step = grid[1] - grid[0]
    lo, hi = grid[best] - step, grid[best] + step
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = val(c), val(d)
    for _ in range(refine):
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = val(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = val(d)
    return 0.5 * (lo + hi)


def _pass_to_xdata(st: _Reduction):
    """Real-part normalization, (L,M,N,v) extraction and the X factorization."""
    h = normalize_real_part(st.form())
    st.apply(h)
    data = extract_lmnv(st.form(), tol=1e-5)
    sv = lorentz_svd(data.xmatrix())
    # {aR | bR} congruence transforms the data matrix as X -> pi1(R) X pi2(U)^T
    r = lift_so12(sv.P)
    u = lift_so3(sv.O.T)
    g = stabilizer_element(r, (u[0, 0], u[0, 1]))
    st.apply(g.gmat)
    data2 = extract_lmnv(st.form(), tol=1e-5)
    if np.linalg.norm(data2.xmatrix() - sv.target()) > 1e-6 * max(1.0, np.linalg.norm(sv.target())):
        raise NumericalBreakdownError("stabilizer action missed the X normal form")
    return sv, data2


def _gamma_reduce(st: _Reduction, lam: float, mu: float, nu: float):
    """Walk (lambda, mu, nu) into the fundamental domain with H1..H4."""
    if lam < 0:
        st.apply(H2)
        lam = -lam
    if mu < 0:
        st.apply(H2 @ H3)
        mu = -mu
    if lam > mu:
        st.apply(H4)
        lam, mu, nu = mu, lam, -nu
    h1_inv = np.diag([1.0, -1j, 1.0, 1j])
    while nu < -1e-15:
        st.apply(H1, 1j)
        nu += math.pi / 2.0
    while nu >= math.pi / 2.0 - 1e-15:
        st.apply(h1_inv, -1j)
        nu -= math.pi / 2.0
    nu = max(nu, 0.0)
    if abs(lam - mu) <= 1e-9 and nu > math.pi / 4.0 + 1e-12:
        st.apply(H4)
        nu = -nu
        st.apply(H1, 1j)
        nu += math.pi / 2.0
    return lam, mu, nu


_GL_BASIS = None


def _gl2h_basis():
    global _GL_BASIS
    if _GL_BASIS is None:
        basis = []
        for slot in range(2):
            for i in range(2):
                for j in range(2):
                    for s in (1.0, 1j):
                        a = np.zeros((2, 2), dtype=complex)
                        a[i, j] = s
                        blocks = (a, np.zeros((2, 2))) if slot == 0 else (np.zeros((2, 2)), a)
                        basis.append(block_join(*blocks))
        _GL_BASIS = basis
    return _GL_BASIS


_UT = np.triu_indices(4)


def _ut(m: np.ndarray) -> np.ndarray:
    vals = m[_UT]
    return np.concatenate([vals.real, vals.imag])


def _target_and_grads(kind: str, params: np.ndarray):
    if kind == "diagonal":
        lam, mu, nu = params
        c = diagonal_matrix(lam, mu, nu).entries
        dl = np.diag([c[0, 0], 0.0, -c[2, 2], 0.0])
        dm = np.diag([0.0, c[1, 1], 0.0, -c[3, 3]])
        dn = np.diag([1j * c[0, 0], -1j * c[1, 1], 1j * c[2, 2], -1j * c[3, 3]])
        return c, [dl, dm, dn]
    k = params[0]
    c = nondiagonal_matrix(k).entries
    dk = np.zeros((4, 4), dtype=complex)
    dk[0, 1] = dk[1, 0] = -1.0
    dk[2, 3] = dk[3, 2] = 1.0
    return c, [dk]


def _polish(st: _Reduction, kind: str, params: np.ndarray, iters: int = 25):
    """Gauss-Newton refinement of witness, phase and canonical parameters."""
    basis = _gl2h_basis()
    w = st.w.copy()
    gamma = st.gamma
    params = np.array(params, dtype=float)

    def residual(wm, gm, pr):
        c, _ = _target_and_grads(kind, pr)
        return _ut(gm * (wm.T @ st.q0 @ wm) - c), c

    r, c = residual(w, gamma, params)
    for _ in range(iters):
        if np.linalg.norm(r, np.inf) < 1e-13:
            break
        m = gamma * (w.T @ st.q0 @ w)
        cols = []
        for e in basis:
            we = w @ e
            cols.append(_ut(gamma * (we.T @ st.q0 @ w + w.T @ st.q0 @ we)))
        cols.append(_ut(m))
        cols.append(_ut(1j * m))
        _, grads = _target_and_grads(kind, params)
        for g in grads:
            cols.append(_ut(-g))
        jac = np.column_stack(cols)
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        nstep = np.linalg.norm(step)
        if nstep > 0.5:
            step *= 0.5 / nstep
        eps = sum(s * e for s, e in zip(step[:16], basis))
        w_new = block_project(w @ (np.eye(4) + eps))
        gamma_new = gamma * (1.0 + step[16] + 1j * step[17])
        params_new = params + step[18:]
        r_new, _ = residual(w_new, gamma_new, params_new)
        if np.linalg.norm(r_new) <= np.linalg.norm(r):
            w, gamma, params, r = w_new, gamma_new, params_new, r_new
        else:
            eps *= 0.25
            w_try = block_project(w @ (np.eye(4) + eps))
            gamma_try = gamma * (1.0 + 0.25 * (step[16] + 1j * step[17]))
            params_try = params + 0.25 * step[18:]
            r_try, _ = residual(w_try, gamma_try, params_try)
            if np.linalg.norm(r_try) < np.linalg.norm(r):
                w, gamma, params, r = w_try, gamma_try, params_try, r_try
            else:
                break
    st.w = w
    st.gamma = gamma
    st.cur = gamma * (w.T @ st.q0 @ w)
    return params, float(np.linalg.norm(r) / math.sqrt(2.0))


def _finish(st: _Reduction, kind: str, params: np.ndarray, witness_tol: float):
    params, _ = _polish(st, kind, params)
    if kind == "diagonal":
        lam, mu, nu = params
        if lam < 0 or mu < 0 or lam > mu + 1e-9 or nu < -1e-9 or nu >= math.pi / 2:
            lam, mu, nu = _gamma_reduce(st, lam, mu, nu)
            params, _ = _polish(st, kind, np.array([lam, mu, nu]))
        lam, mu, nu = params
        lam, mu = max(lam, 0.0), max(mu, 0.0)
        nu = min(max(nu, 0.0), math.nextafter(math.pi / 2.0, 0.0))
        params = np.array([lam, mu, nu])
    target, _ = _target_and_grads(kind, params)
    residual = st.residual_against(target)
    if residual > witness_tol:
        raise NumericalBreakdownError(f"canonical witness residual {residual:.3e}")
    elem = ConformalElement(block_project(st.w), st.gamma, BLOCK).det_normalized()
    if kind == "diagonal":
        return Diagonal(*params, witness=elem, residual=residual)
    return NonDiagonalizable(float(params[0]), witness=elem, residual=residual)


def canonicalize(q: QuadraticForm, rank_tol: float = RANK_TOL, witness_tol: float = WITNESS_TOL) -> CanonicalForm:
    """Classify a rank-4 form up to C* x GL(2,H) and return a witness.

    Returns either ``Diagonal(lam, mu, nu)`` with 0 <= lam <= mu and nu in
    [0, pi/2) (nu in [0, pi/4] when lam = mu), or ``NonDiagonalizable(k)``
    with k in [0, 1).
    """
    qb = q.in_block()
    nrm = qb.norm
    if nrm == 0 or abs(np.linalg.det(qb.entries / nrm)) <= rank_tol:
        raise RankDeficientError("form has rank < 4")
    st = _Reduction(qb)
    st.apply_phase(cmath.exp(1j * _best_phase(st.cur)))
    sv, data = _pass_to_xdata(st)

    if sv.kind == "diagonal":
        st.apply(f_matrix())
        d = np.diag(st.cur)
        ta = -1j * (d[0] - 1.0)
        tb = -1j * (d[1] - 1.0)
        ca = 1.0 / np.sqrt(1.0 + ta * ta)
        cb = 1.0 / np.sqrt(1.0 + tb * tb)
        c = np.sqrt(ca)
        dd = np.sqrt(cb)
        st.apply(np.diag([c, dd, c.conjugate(), dd.conjugate()]))
        d = np.diag(st.cur)
        theta = -0.5 * (cmath.phase(d[0]) + cmath.phase(d[1]))
        st.apply_phase(cmath.exp(1j * theta))
        d = np.diag(st.cur)
        lam = math.log(abs(d[0]))
        mu = math.log(abs(d[1]))
        nu = 0.5 * (cmath.phase(d[0]) - cmath.phase(d[1]))
        lam, mu, nu = _gamma_reduce(st, lam, mu, nu)
        return _finish(st, "diagonal", np.array([lam, mu, nu]), witness_tol)

    # non-diagonalizable branch: kill v with a phase, fold k into [0, 1)
    k = float(sv.k)
    v = data.v
    for _ in range(3):
        if abs(v) <= 1e-10:
            break
        wv = k * k + (v + 1j) ** 2
        theta_a = (-cmath.phase(wv) / 2.0) % math.pi
        theta_b = (theta_a + math.pi / 2.0) % math.pi
        delta = lambda th: (math.cos(th) + v * math.sin(th)) ** 2 + (k * math.sin(th)) ** 2
        theta = theta_a if delta(theta_a) >= delta(theta_b) else theta_b
        st.apply_phase(cmath.exp(1j * theta))
        sv, data = _pass_to_xdata(st)
        if sv.kind != "mk":
            raise NumericalBreakdownError("phase normalization left the non-diagonalizable stratum")
        k, v = float(sv.k), data.v
    if abs(v) > 1e-8:
        raise NumericalBreakdownError(f"residual Q0 coefficient v = {v:.3e} after phase normalization")
    if abs(k - 1.0) <= 1e-8:
        raise NumericalBreakdownError("k is on the rank-degeneration boundary")
    if k > 1.0:
        st.apply_phase(1j)
        sv, data = _pass_to_xdata(st)
        if sv.kind != "mk" or abs(data.v) > 1e-8:
            raise NumericalBreakdownError("k-fold left the non-diagonalizable stratum")
        k = float(sv.k)
    return _finish(st, "mk", np.array([k]), witness_tol)


# ---------------------------------------------------------------- invariants


def params_to_xyuv(lam: float, mu: float, nu: float):
    """The gauge-fixed (x, y, u, v) of a diagonal class, via the two complex
    angles alpha = nu - i lambda and beta = -nu - i mu."""
    ta = cmath.tan(nu - 1j * lam)
    tb = cmath.tan(-nu - 1j * mu)
    y = 0.5 * (ta.real - tb.real)
    v = -0.5 * (ta.real + tb.real)
    u = 0.5 * (ta.imag - tb.imag)
    x = -0.5 * (ta.imag + tb.imag)
    return x, y, u, v


def invariants(q: QuadraticForm | CanonicalForm) -> tuple[float, float, float, float]:
    """(p, q, d, v) computed from the gauge-fixed data matrix.

    p = y^2 - x^2 - u^2, q = x^2 u^2 - u^2 y^2 - y^2 x^2, d = det X = y x u.
    A non-diagonalizable class with parameter k has (-k^2, 0, 0, 0).
    """
    c = q if isinstance(q, (Diagonal, NonDiagonalizable)) else canonicalize(q)
    if isinstance(c, NonDiagonalizable):
        return (-c.k * c.k, 0.0, 0.0, 0.0)
    x, y, u, v = params_to_xyuv(c.lam, c.mu, c.nu)
    p = y * y - x * x - u * u
    qq = x * x * u * u - u * u * y * y - y * y * x * x
    d = y * x * u
    return (p, qq, d, v)
