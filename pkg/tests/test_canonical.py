import math

import numpy as np
import pytest

from twistorq import canonical as cn
from twistorq import quatlin as ql
from twistorq.errors import NotInGroupError, RankDeficientError


def random_conjugation(rng):
    g = ql.random_sl2h(rng)
    return ql.ConformalElement(g.gmat, ql.random_phase(rng) * rng.uniform(0.5, 2.0), ql.BLOCK)


# ---------------------------------------------------------------- real part


def test_normalize_real_part_fixed_points():
    h = cn.normalize_real_part(ql.QuadraticForm(cn.q0_matrix(), ql.BLOCK))
    assert np.linalg.norm(h.T @ cn.q0_matrix() @ h - cn.q0_matrix()) <= 1e-10
    h = cn.normalize_real_part(cn.identity_form())
    assert np.linalg.norm(h.T @ np.eye(4) @ h - cn.q0_matrix()) <= 1e-10


def test_normalize_real_part_random_orbit():
    rng = np.random.default_rng(10)
    q0 = ql.QuadraticForm(cn.q0_matrix(), ql.BLOCK)
    for _ in range(10):
        q = ql.act_on_form(q0, ql.random_sl2h(rng))
        h = cn.normalize_real_part(q)
        ok, _ = ql.is_gl2h(h, ql.BLOCK)
        assert ok
        assert np.linalg.norm(h.T @ q.entries @ h - cn.q0_matrix()) <= 1e-8


def test_normalize_real_part_rank_deficient():
    # real form {diag(1, 0) | 0} has rank 2
    low = ql.QuadraticForm(cn.block_join(np.diag([1.0, 0.0]), np.zeros((2, 2))), ql.BLOCK)
    with pytest.raises(RankDeficientError):
        cn.normalize_real_part(low)


# ---------------------------------------------------------------- (L, M, N, v)


def test_extract_lmnv_canonical_family():
    data = cn.extract_lmnv(cn.nondiagonal_matrix(0.5, 0.3))
    assert data.v == pytest.approx(0.3, abs=1e-14)
    assert np.allclose(data.xmatrix(), cn.mk_matrix(0.5), atol=1e-14)
    sv = cn.lorentz_svd(data.xmatrix())
    assert sv.kind == "mk"
    assert sv.k == pytest.approx(0.5, abs=1e-12)


def test_extract_lmnv_zero_imaginary_part():
    data = cn.extract_lmnv(ql.QuadraticForm(cn.q0_matrix(), ql.BLOCK))
    assert np.linalg.norm(data.xmatrix()) <= 1e-14
    assert data.v == pytest.approx(0.0, abs=1e-14)


def test_extract_lmnv_roundtrip():
    rng = np.random.default_rng(11)
    for _ in range(10):
        sym = lambda: (lambda s: 0.5 * (s + s.T))(rng.normal(size=(2, 2)))
        data = cn.LMNData(sym(), sym(), sym(), float(rng.normal()))
        q = cn.lmn_form(data)
        out = cn.extract_lmnv(q)
        assert np.allclose(out.L, data.L, atol=1e-13)
        assert np.allclose(out.M, data.M, atol=1e-13)
        assert np.allclose(out.N, data.N, atol=1e-13)
        assert out.v == pytest.approx(data.v, abs=1e-13)


# ---------------------------------------------------------------- Lorentz SVD


def in_so12(p):
    e = cn.E_LORENTZ
    return np.linalg.norm(p.T @ e @ p - e) <= 1e-8 and p[0, 0] > 0 and np.linalg.det(p) > 0


def in_so3(o):
    return np.linalg.norm(o.T @ o - np.eye(3)) <= 1e-8 and np.linalg.det(o) > 0


def test_lorentz_svd_zero_matrix():
    sv = cn.lorentz_svd(np.zeros((3, 3)))
    assert sv.kind == "diagonal" and sv.diag == (0.0, 0.0, 0.0)


def test_lorentz_svd_mk_is_already_normal():
    sv = cn.lorentz_svd(cn.mk_matrix(0.5))
    assert sv.kind == "mk"
    assert sv.k == pytest.approx(0.5, abs=1e-14)
    assert np.allclose(sv.P, np.eye(3)) and np.allclose(sv.O, np.eye(3))


def test_lorentz_svd_random_rank3():
    rng = np.random.default_rng(12)
    for _ in range(25):
        x = rng.normal(size=(3, 3))
        sv = cn.lorentz_svd(x)
        assert sv.kind == "diagonal"
        assert np.linalg.norm(sv.P @ x @ sv.O - sv.target()) <= 1e-8 * max(1, np.linalg.norm(x))
        assert in_so12(sv.P) and in_so3(sv.O)
        # the congruence invariant has signature (+, -, -)
        w = np.linalg.eigvalsh(x.T @ cn.E_LORENTZ @ x)
        assert w[0] < 0 and w[1] < 0 and w[2] > 0


def test_lorentz_svd_conjugated_mk():
    rng = np.random.default_rng(13)
    for k in (0.0, 0.25, 0.8):
        r = ql.random_sl2r(rng)
        a, b = ql.random_su2(rng)
        u = np.array([[a, b], [-np.conj(b), np.conj(a)]])
        x = np.linalg.inv(cn.so12_of_sl2r(r)) @ cn.mk_matrix(k) @ cn.so3_of_su2(u)
        sv = cn.lorentz_svd(x)
        assert sv.kind == "mk"
        assert sv.k == pytest.approx(k, abs=1e-10)
        assert np.linalg.norm(sv.P @ x @ sv.O - sv.target()) <= 1e-8


def test_lorentz_svd_rank_one_cases():
    rng = np.random.default_rng(14)
    cases = [
        (np.array([2.0, 0.5, 0.3]), "diagonal"),   # timelike column
        (np.array([0.5, 1.5, 0.3]), "diagonal"),   # spacelike column
        (np.array([1.0, 0.6, 0.8]), "mk"),         # null column
        (np.array([-1.0, 0.6, 0.8]), "mk"),        # past-pointing null column
    ]
    for w, kind in cases:
        x = np.outer(w, rng.normal(size=3))
        sv = cn.lorentz_svd(x)
        assert sv.kind == kind
        if kind == "mk":
            assert sv.k == pytest.approx(0.0, abs=1e-10)
        assert np.linalg.norm(sv.P @ x @ sv.O - sv.target()) <= 1e-8
        assert in_so12(sv.P) and in_so3(sv.O)


def test_lorentz_svd_rank_two_diagonalizable():
    rng = np.random.default_rng(15)
    for base in (np.diag([1.7, 0.6, 0.0]), np.diag([0.0, 1.1, 0.4])):
        r = ql.random_sl2r(rng)
        a, b = ql.random_su2(rng)
        u = np.array([[a, b], [-np.conj(b), np.conj(a)]])
        x = np.linalg.inv(cn.so12_of_sl2r(r)) @ base @ cn.so3_of_su2(u)
        sv = cn.lorentz_svd(x)
        assert sv.kind == "diagonal"
        assert np.linalg.norm(sv.P @ x @ sv.O - sv.target()) <= 1e-8
        assert in_so12(sv.P) and in_so3(sv.O)


# ---------------------------------------------------------------- double covers


def test_lift_so12_identity_and_boost():
    r = cn.lift_so12(np.eye(3))
    assert np.allclose(r, np.eye(3)[:2, :2]) or np.allclose(r, -np.eye(2))
    t = 0.37
    boost = np.array(
        [
            [math.cosh(2 * t), math.sinh(2 * t), 0.0],
            [math.sinh(2 * t), math.cosh(2 * t), 0.0],
            [0.0, 0.0, 1.0],
        ]
    )
    r = cn.lift_so12(boost)
    want = np.diag([math.exp(t), math.exp(-t)])
    assert np.allclose(r, want, atol=1e-10) or np.allclose(r, -want, atol=1e-10)


def test_lift_so12_random_roundtrip():
    rng = np.random.default_rng(16)
    for _ in range(15):
        r0 = ql.random_sl2r(rng)
        p = cn.so12_of_sl2r(r0)
        r = cn.lift_so12(p)
        assert np.allclose(r, r0, atol=1e-9) or np.allclose(r, -r0, atol=1e-9)


def test_lift_so12_rejects_non_member():
    with pytest.raises(NotInGroupError):
        cn.lift_so12(np.diag([1.0, 1.0, 2.0]))


def test_lift_so3_rotation_and_random():
    theta = 0.83
    rot = np.array(
        [
            [math.cos(theta), -math.sin(theta), 0.0],
            [math.sin(theta), math.cos(theta), 0.0],
            [0.0, 0.0, 1.0],
        ]
    )
    u = cn.lift_so3(rot)
    assert np.linalg.norm(cn.so3_of_su2(u) - rot) <= 1e-10
    rng = np.random.default_rng(17)
    for _ in range(15):
        a, b = ql.random_su2(rng)
        u0 = np.array([[a, b], [-np.conj(b), np.conj(a)]])
        o = cn.so3_of_su2(u0)
        u = cn.lift_so3(o)
        assert np.allclose(u, u0, atol=1e-9) or np.allclose(u, -u0, atol=1e-9)
    with pytest.raises(NotInGroupError):
        cn.lift_so3(np.diag([1.0, 1.0, -1.0]))


def test_stabilizer_preserves_reference_form():
    rng = np.random.default_rng(18)
    g = cn.stabilizer_element(np.eye(2), (1.0, 0.0))
    assert np.allclose(g.gmat, np.eye(4))
    for _ in range(10):
        r = ql.random_sl2r(rng)
        a, b = ql.random_su2(rng)
        g = cn.stabilizer_element(r, (a, b))
        out = g.gmat.T @ cn.q0_matrix() @ g.gmat
        assert np.linalg.norm(out - cn.q0_matrix()) <= 1e-10
    with pytest.raises(NotInGroupError):
        cn.stabilizer_element(2.0 * np.eye(2), (1.0, 0.0))
    with pytest.raises(NotInGroupError):
        cn.stabilizer_element(np.eye(2), (1.0, 1.0))


def test_stabilizer_action_on_data_matrix():
    # the {aR | bR} congruence transforms X by pi1(R) on the left and
    # pi2(U)^T on the right
    rng = np.random.default_rng(19)
    for _ in range(10):
        sym = lambda: (lambda s: 0.5 * (s + s.T))(rng.normal(size=(2, 2)))
        data = cn.LMNData(sym(), sym(), sym(), float(rng.normal()))
        q = cn.lmn_form(data)
        r = ql.random_sl2r(rng)
        a, b = ql.random_su2(rng)
        u = np.array([[a, b], [-np.conj(b), np.conj(a)]])
        g = cn.stabilizer_element(r, (a, b))
        out = cn.extract_lmnv(ql.act_on_form(q, g))
        want = cn.so12_of_sl2r(r) @ data.xmatrix() @ cn.so3_of_su2(u).T
        assert np.linalg.norm(out.xmatrix() - want) <= 1e-10
        assert out.v == pytest.approx(data.v, abs=1e-12)


# ---------------------------------------------------------------- generators


def test_symmetry_generators_exact():
    rng = np.random.default_rng(20)
    for _ in range(50):
        lam, mu, nu = rng.uniform(-1.5, 1.5, 3)
        q = cn.diagonal_matrix(lam, mu, nu).entries
        pairs = [
            (1j * cn.H1.T @ q @ cn.H1, cn.diagonal_matrix(lam, mu, nu + np.pi / 2)),
            (cn.H2.T @ q @ cn.H2, cn.diagonal_matrix(-lam, mu, nu)),
            (cn.H3.T @ q @ cn.H3, cn.diagonal_matrix(-lam, -mu, nu)),
            (cn.H4.T @ q @ cn.H4, cn.diagonal_matrix(mu, lam, -nu)),
        ]
        for got, want in pairs:
            assert np.linalg.norm(got - want.entries) <= 1e-12


def test_determinants_of_canonical_families():
    rng = np.random.default_rng(21)
    for _ in range(20):
        lam, mu, nu = rng.uniform(-1, 1, 3)
        assert np.linalg.det(cn.diagonal_matrix(lam, mu, nu).entries) == pytest.approx(1.0, abs=1e-12)
    for v in np.linspace(-1.5, 1.5, 7):
        for k in np.linspace(0.0, 1.8, 7):
            got = np.linalg.det(cn.nondiagonal_matrix(float(k), float(v)).entries)
            want = (k * k + (v + 1j) ** 2) ** 2
            assert abs(got - want) <= 1e-12


# ---------------------------------------------------------------- canonicalize


def test_canonicalize_trivial_inputs():
    c = cn.canonicalize(cn.identity_form())
    assert isinstance(c, cn.Diagonal)
    assert max(abs(c.lam), abs(c.mu), abs(c.nu)) <= 1e-9
    c = cn.canonicalize(ql.QuadraticForm(cn.q0_matrix(), ql.BLOCK))
    assert isinstance(c, cn.Diagonal)
    assert max(abs(c.lam), abs(c.mu), abs(c.nu)) <= 1e-9


def test_canonicalize_diagonal_roundtrip():
    rng = np.random.default_rng(22)
    for _ in range(30):
        lam = rng.uniform(0.01, 0.7)
        mu = lam + rng.uniform(0.02, 0.7)
        nu = rng.uniform(0.02, math.pi / 2 - 0.02)
        q = ql.act_on_form(cn.diagonal_matrix(lam, mu, nu), random_conjugation(rng))
        c = cn.canonicalize(q)
        assert isinstance(c, cn.Diagonal)
        assert max(abs(c.lam - lam), abs(c.mu - mu), abs(c.nu - nu)) <= 1e-6
        # witness identity on the original input
        w = c.witness
        lhs = w.gamma * (w.gmat.T @ q.entries @ w.gmat)
        assert np.linalg.norm(lhs - c.canonical_form().entries) <= 1e-6
        assert abs(np.linalg.det(w.gmat) - 1.0) <= 1e-8


def test_canonicalize_specific_triple():
    rng = np.random.default_rng(23)
    q = ql.act_on_form(cn.diagonal_matrix(0.3, 0.7, 0.4), random_conjugation(rng))
    c = cn.canonicalize(q)
    assert (c.lam, c.mu, c.nu) == pytest.approx((0.3, 0.7, 0.4), abs=1e-6)


def test_canonicalize_nondiagonalizable():
    rng = np.random.default_rng(24)
    c = cn.canonicalize(cn.nondiagonal_matrix(0.25))
    assert isinstance(c, cn.NonDiagonalizable)
    assert c.k == pytest.approx(0.25, abs=1e-9)
    for _ in range(15):
        k = rng.uniform(0.0, 0.95)
        q = ql.act_on_form(cn.nondiagonal_matrix(k), random_conjugation(rng))
        c = cn.canonicalize(q)
        assert isinstance(c, cn.NonDiagonalizable)
        assert c.k == pytest.approx(k, abs=1e-6)
        assert c.residual <= 1e-6


def test_canonicalize_kills_the_q0_coefficient():
    # representatives with v != 0 land on the v = 0 normal form
    c = cn.canonicalize(cn.nondiagonal_matrix(0.5, 0.8))
    assert isinstance(c, cn.NonDiagonalizable)
    # and the output is orbit stable
    rng = np.random.default_rng(25)
    ks = []
    for _ in range(5):
        q = ql.act_on_form(cn.nondiagonal_matrix(0.5, 0.8), random_conjugation(rng))
        ks.append(cn.canonicalize(q).k)
    assert max(ks) - min(ks) <= 1e-9


def test_canonicalize_fundamental_domain_reduction():
    rng = np.random.default_rng(26)
    # a wild triple reduces into the fundamental domain deterministically
    q = ql.act_on_form(cn.diagonal_matrix(-0.4, 0.2, 2.9), random_conjugation(rng))
    c = cn.canonicalize(q)
    assert 0 <= c.lam <= c.mu and 0 <= c.nu < math.pi / 2
    assert (c.lam, c.mu, c.nu) == pytest.approx((0.2, 0.4, 2.9 - 3 * math.pi / 4 + math.pi / 4), abs=1e-6)
    # reduction is idempotent
    c2 = cn.canonicalize(c.canonical_form())
    assert np.allclose(c2.params, c.params, atol=1e-9)
    # the equal-parameter identification keeps nu in [0, pi/4]
    c3 = cn.canonicalize(cn.diagonal_matrix(0.5, 0.5, 1.3))
    assert c3.nu == pytest.approx(math.pi / 2 - 1.3, abs=1e-9)
    assert c3.nu <= math.pi / 4 + 1e-9


def test_canonicalize_rank_deficient():
    # k = 1, v = 0 is the rank-degeneration point of the family
    with pytest.raises((RankDeficientError,)):
        cn.canonicalize(cn.nondiagonal_matrix(1.0, 0.0))


def test_invariants_examples():
    p, q, d, v = cn.invariants(cn.Diagonal(0.0, 0.0, 0.0))
    assert (p, q, d, v) == pytest.approx((0, 0, 0, 0), abs=1e-12)
    for lam in (0.25, 0.8):
        p, q, d, v = cn.invariants(cn.Diagonal(lam, lam, 0.0))
        assert p == pytest.approx(-math.tanh(lam) ** 2, abs=1e-12)
        assert (q, d, v) == pytest.approx((0, 0, 0), abs=1e-12)
    p, q, d, v = cn.invariants(cn.NonDiagonalizable(0.4))
    assert (p, q, d, v) == pytest.approx((-0.16, 0, 0, 0), abs=1e-12)


def test_invariants_are_orbit_functions():
    rng = np.random.default_rng(27)
    base = cn.diagonal_matrix(0.37, 0.9, 0.7)
    ref = np.array(cn.invariants(base))
    for _ in range(8):
        q = ql.act_on_form(base, random_conjugation(rng))
        got = np.array(cn.invariants(q))
        assert np.max(np.abs(got - ref)) <= 1e-8
