import numpy as np
import pytest

from twistorq import canonical as cn
from twistorq import quatlin as ql
from twistorq.errors import OrderMismatchError


def test_structure_matrices():
    # J^2 = -I, J^T = -J in both orders, related by the basis permutation
    for order in (ql.TWISTOR, ql.BLOCK):
        j = ql.jmat(order)
        assert np.allclose(j @ j, -np.eye(4))
        assert np.allclose(j.T, -j)
    assert np.allclose(ql.J_BLOCK, ql.PERM @ ql.J_TWISTOR @ ql.PERM)


def test_is_gl2h_accepts_structure_matrix():
    ok, res = ql.is_gl2h(ql.J_BLOCK, ql.BLOCK)
    assert ok and res <= 1e-14


def test_is_gl2h_accepts_gram_factor():
    f = cn.f_matrix()
    ok, res = ql.is_gl2h(f, ql.BLOCK)
    assert ok and res <= 1e-14
    assert abs(np.linalg.det(f) - 1.0) <= 1e-12


def test_is_gl2h_rejects_generic_matrix():
    rng = np.random.default_rng(0)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    ok, res = ql.is_gl2h(g, ql.BLOCK)
    # residual recomputed directly from the defining commutation relation
    gn = g / np.linalg.norm(g)
    direct = np.linalg.norm(gn @ ql.J_BLOCK - ql.J_BLOCK @ gn.conj())
    assert not ok
    assert res == pytest.approx(direct)
    assert res > 1e-3


def test_gl2h_determinant_real_positive():
    rng = np.random.default_rng(1)
    for _ in range(20):
        g = ql.random_sl2h(rng, scale=0.8)
        det = np.linalg.det(g.gmat)
        assert det.real > 0
        assert abs(det.imag) <= 1e-10 * abs(det)


def test_reality_decompose_identity():
    q1, q2 = ql.reality_decompose(cn.identity_form())
    assert np.allclose(q1.entries, np.eye(4))
    assert q2.norm <= 1e-15


def test_reality_decompose_i_identity():
    q = ql.QuadraticForm(1j * np.eye(4), ql.BLOCK)
    q1, q2 = ql.reality_decompose(q)
    assert q1.norm <= 1e-15
    assert np.allclose(q2.entries, np.eye(4))


def test_reality_decompose_canonical_pair():
    # Q0 + i R_{v,k} splits exactly into its two named real parts
    v, k = 0.4, 0.6
    q = cn.nondiagonal_matrix(k, v)
    q1, q2 = ql.reality_decompose(q)
    assert np.allclose(q1.entries, cn.q0_matrix(), atol=1e-14)
    assert np.allclose(q2.entries, cn.r_vk_matrix(v, k), atol=1e-14)


def test_reality_decompose_is_projection_pair():
    rng = np.random.default_rng(2)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    q = ql.QuadraticForm(m + m.T, ql.BLOCK)
    q1, q2 = ql.reality_decompose(q)
    q11, q12 = ql.reality_decompose(q1)
    assert np.allclose(q11.entries, q1.entries, atol=1e-14)
    assert q12.norm <= 1e-14 * max(1.0, q1.norm)
    assert np.linalg.norm(q1.entries + 1j * q2.entries - q.entries) <= 1e-14 * q.norm


def test_is_real_examples():
    assert ql.is_real(cn.identity_form())
    assert ql.is_real(ql.QuadraticForm(cn.q0_matrix(), ql.BLOCK))
    phase_diag = cn.diagonal_matrix(0.0, 0.0, np.pi / 4)
    assert not ql.is_real(phase_diag)


def test_act_on_form_identity():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    q = ql.QuadraticForm(m + m.T, ql.BLOCK)
    out = ql.act_on_form(q, ql.ConformalElement.identity())
    assert np.allclose(out.entries, q.entries)


def test_act_on_form_gram_factor_maps_q0_to_identity():
    q0 = ql.QuadraticForm(cn.q0_matrix(), ql.BLOCK)
    t = ql.ConformalElement(cn.f_matrix(), 1.0, ql.BLOCK)
    out = ql.act_on_form(q0, t)
    assert np.allclose(out.entries, np.eye(4), atol=1e-14)


def test_act_on_form_phase_shift_generator():
    # diag(1, i, 1, -i) with phase i advances the torsion angle by pi/2
    rng = np.random.default_rng(4)
    t = ql.ConformalElement(cn.H1, 1j, ql.BLOCK)
    for _ in range(50):
        lam, mu, nu = rng.uniform(-1.2, 1.2, 3)
        out = ql.act_on_form(cn.diagonal_matrix(lam, mu, nu), t)
        want = cn.diagonal_matrix(lam, mu, nu + np.pi / 2)
        assert np.linalg.norm(out.entries - want.entries) <= 1e-12


def test_act_on_form_preserves_reality():
    rng = np.random.default_rng(5)
    q0 = ql.QuadraticForm(cn.q0_matrix(), ql.BLOCK)
    for _ in range(10):
        g = ql.random_sl2h(rng)
        out = ql.act_on_form(q0, g)
        assert ql.is_real(out)


def test_act_on_form_is_group_action():
    rng = np.random.default_rng(6)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    q = ql.QuadraticForm(m + m.T, ql.BLOCK)
    for _ in range(10):
        t1 = ql.ConformalElement(ql.random_sl2h(rng).gmat, ql.random_phase(rng), ql.BLOCK)
        t2 = ql.ConformalElement(ql.random_sl2h(rng).gmat, ql.random_phase(rng), ql.BLOCK)
        a = ql.act_on_form(ql.act_on_form(q, t1), t2)
        b = ql.act_on_form(q, t1.compose(t2))
        assert np.linalg.norm(a.entries - b.entries) <= 1e-10 * max(1.0, a.norm)


def test_act_on_form_order_mismatch():
    q = cn.identity_form()  # block order
    t = ql.ConformalElement.identity(ql.TWISTOR)
    with pytest.raises(OrderMismatchError):
        ql.act_on_form(q, t)


def test_act_on_sphere_identity_and_inversion():
    from twistorq.twistor import inversion_element

    p = ql.SpherePoint.finite(0.3 + 0.2j, -0.7j)
    assert ql.sphere_distance(ql.act_on_sphere(ql.ConformalElement.identity(ql.TWISTOR), p), p) <= 1e-15
    inv = inversion_element()
    img = ql.act_on_sphere(inv, ql.SpherePoint.finite(0.0, 0.0))
    assert img.infinite
    back = ql.act_on_sphere(inv, img)
    assert ql.sphere_distance(back, ql.SpherePoint.finite(0.0, 0.0)) <= 1e-15


def test_act_on_sphere_inverse_roundtrip():
    rng = np.random.default_rng(7)
    for _ in range(10):
        t = ql.random_sl2h(rng, order=ql.TWISTOR)
        ti = t.inverse()
        for _ in range(10):
            p = ql.SpherePoint.from_coords(*rng.normal(size=4))
            back = ql.act_on_sphere(ti, ql.act_on_sphere(t, p))
            assert ql.sphere_distance(back, p) <= 1e-8


def test_projection_intertwines_both_actions():
    from twistorq.twistor import pi_project, psi_point

    rng = np.random.default_rng(8)
    for _ in range(100):
        t = ql.random_sl2h(rng, order=ql.TWISTOR)
        p = ql.SpherePoint.from_coords(*rng.normal(size=4))
        v = psi_point(complex(*rng.normal(size=2)), complex(*rng.normal(size=2)), p)
        lhs = pi_project(t.gmat @ v)
        rhs = ql.act_on_sphere(t, p)
        assert ql.sphere_distance(lhs, rhs) <= 1e-10


def test_quadratic_form_validation_and_orders():
    rng = np.random.default_rng(9)
    with pytest.raises(Exception):
        ql.QuadraticForm(rng.normal(size=(4, 4)) + np.triu(np.ones((4, 4))), ql.BLOCK)
    m = rng.normal(size=(4, 4))
    q = ql.QuadraticForm(m + m.T, ql.TWISTOR)
    assert np.allclose(q.in_block().in_twistor().entries, q.entries)
    # the quadratic values are order independent
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    assert q(v) == pytest.approx(q.in_block()(ql.PERM @ v))


def test_quaternion_algebra():
    a = ql.Quaternion(1 + 2j, -0.5 + 0.25j)
    b = ql.Quaternion(-0.3j, 2.0 - 1j)
    ab = a * b
    assert (a * a.inverse()).z1 == pytest.approx(1.0)
    assert abs((a * a.inverse()).z2) <= 1e-15
    assert ab.norm == pytest.approx(a.norm * b.norm)
