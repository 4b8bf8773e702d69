"""Acceptance battery: the end-to-end checks the package must pass.

Each criterion is a function returning a :class:`CriterionResult`; the CLI
(`twistorq verify --suite`) and the pytest suite both drive this module, so
there is exactly one source of truth for tolerances and seeds.  All samples
are drawn from fixed-seed generators and the checks are deterministic.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import canonical as cn
from . import locus as lc
from . import ocs
from . import quatlin as ql
from . import twistor as tw

SEED = 408


@dataclass
class CriterionResult:
    name: str
    passed: bool
    seconds: float
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = ", ".join(f"{k}={v}" for k, v in self.details.items())
        return f"[{status}] {self.name} ({self.seconds:.1f}s) {extra}"


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _random_conjugation(rng) -> ql.ConformalElement:
    g = ql.random_sl2h(rng)
    phase = ql.random_phase(rng) * rng.uniform(0.5, 2.0)
    return ql.ConformalElement(g.gmat, phase, ql.BLOCK)


def criterion_1_roundtrip(n_diag: int = 500, n_k: int = 100) -> CriterionResult:
    """Parameter recovery through random conjugation, both families."""
    rng = np.random.default_rng(SEED)

    def run():
        worst_param = 0.0
        worst_witness = 0.0
        failures = 0
        for _ in range(n_diag):
            lam = rng.uniform(0.01, 0.7)
            mu = lam + rng.uniform(0.02, 0.7)
            nu = rng.uniform(0.02, math.pi / 2 - 0.02)
            q = ql.act_on_form(cn.diagonal_matrix(lam, mu, nu), _random_conjugation(rng))
            c = cn.canonicalize(q)
            if not isinstance(c, cn.Diagonal):
                failures += 1
                continue
            err = max(abs(c.lam - lam), abs(c.mu - mu), abs(c.nu - nu))
            worst_param = max(worst_param, err)
            worst_witness = max(worst_witness, c.residual)
        for _ in range(n_k):
            k = rng.uniform(0.0, 0.95)
            q = ql.act_on_form(cn.nondiagonal_matrix(k), _random_conjugation(rng))
            c = cn.canonicalize(q)
            if not isinstance(c, cn.NonDiagonalizable):
                failures += 1
                continue
            worst_param = max(worst_param, abs(c.k - k))
            worst_witness = max(worst_witness, c.residual)
        return worst_param, worst_witness, failures

    (worst_param, worst_witness, failures), secs = _timed(run)
    passed = worst_param <= 1e-6 and worst_witness <= 1e-6 and failures == 0 and secs <= 60.0
    return CriterionResult(
        "canonicalization round-trip (500 diagonal + 100 non-diagonalizable)",
        passed,
        secs,
        {
            "max_param_err": f"{worst_param:.2e}",
            "max_witness_residual": f"{worst_witness:.2e}",
            "wrong_kind": failures,
            "runtime_limit_s": 60,
        },
    )


def criterion_2_real_quadric(n: int = 1000) -> CriterionResult:
    """Discriminant of the reference real quadric against its closed form."""
    rng = np.random.default_rng(SEED + 1)

    def run():
        q = tw.real_quadric_form()
        worst = 0.0
        for _ in range(n):
            z1 = complex(*rng.normal(size=2))
            z2 = complex(*rng.normal(size=2))
            d = tw.discriminant(q, ql.SpherePoint.finite(z1, z2))
            want = -4.0 * (z1.imag ** 2 + abs(z2) ** 2)
            worst = max(worst, abs(d - want) / max(abs(want), 1e-30))
        return worst

    worst, secs = _timed(run)
    return CriterionResult(
        "real-quadric discriminant closed form (1000 points)",
        worst <= 1e-12,
        secs,
        {"max_rel_err": f"{worst:.2e}"},
    )


def criterion_3_line_table() -> CriterionResult:
    """Twistor-line counts across the classification grid."""

    def run():
        cases = [
            (cn.Diagonal(0.0, 0.0, 0.0), "circle_family", None),
            (cn.Diagonal(0.5, 0.5, 0.0), "lines", 2),
            (cn.Diagonal(0.0, 0.0, math.pi / 6), "none", 0),
            (cn.Diagonal(0.3, 0.7, 0.4), "none", 0),
            (cn.NonDiagonalizable(0.0), "lines", 1),
            (cn.NonDiagonalizable(0.3), "lines", 1),
            (cn.NonDiagonalizable(0.9), "lines", 1),
        ]
        bad = []
        for c, kind, count in cases:
            rep = tw.classify_lines(c)
            n = rep.count if rep.kind != "circle_family" else None
            want = None if kind == "circle_family" else count
            if rep.kind != kind or n != want:
                bad.append((c, rep.kind, n))
        # the two finite lines must actually be whole fibers of the form
        q = cn.diagonal_matrix(0.5, 0.5, 0.0, ql.TWISTOR)
        for p in tw.classify_lines(cn.Diagonal(0.5, 0.5, 0.0)).points:
            if not tw.contains_fiber(q, p):
                bad.append(("fiber check", p))
        qn = cn.nondiagonal_matrix(0.3, 0.0, ql.TWISTOR)
        if not tw.contains_fiber(qn, ql.SpherePoint.infinity()):
            bad.append(("fiber check", "infinity"))
        return bad

    bad, secs = _timed(run)
    return CriterionResult(
        "twistor-line table on the classification grid",
        len(bad) == 0,
        secs,
        {"mismatches": len(bad)},
    )


def criterion_4_clifford(resolution: int = 4) -> CriterionResult:
    """Clifford torus mesh radii, topology and runtime."""

    def run():
        mesh = lc.extract_mesh(cn.Diagonal(0.0, 0.0, math.pi / 6), resolution=resolution)
        v = mesh.vertices
        r4 = np.sum(v * v, axis=1) ** 2
        y2 = v[:, 1] ** 2 + v[:, 3] ** 2
        return (
            float(np.max(np.abs(r4 - 1.0))),
            float(np.max(np.abs(y2 - 0.75))),
            mesh.report["euler"],
            mesh.report["components"],
        )

    (r4_err, y2_err, euler, comps), secs = _timed(run)
    passed = r4_err <= 1e-8 and y2_err <= 1e-6 and euler == 0 and comps == 1 and secs <= 30.0
    return CriterionResult(
        f"Clifford torus mesh at resolution {resolution}",
        passed,
        secs,
        {
            "max_r4_err": f"{r4_err:.2e}",
            "max_y2_err": f"{y2_err:.2e}",
            "euler": euler,
            "components": comps,
            "runtime_limit_s": 30,
        },
    )


def criterion_5_torus_topology(n_random: int = 10, resolution: int = 4) -> CriterionResult:
    """Random smooth tori, the two-point pinch locations and the cylinder."""
    rng = np.random.default_rng(SEED + 5)

    def run():
        bad = []
        for _ in range(n_random):
            lam = rng.uniform(0.05, 0.55)
            mu = lam + rng.uniform(0.15, 0.6)
            nu = rng.uniform(0.2, math.pi / 2 - 0.2)
            mesh = lc.extract_mesh(cn.Diagonal(lam, mu, nu), resolution=resolution)
            if mesh.report["euler"] != 0 or mesh.report["components"] != 1:
                bad.append(("torus", lam, mu, nu, mesh.report["euler"], mesh.report["components"]))
        mesh = lc.extract_mesh(cn.Diagonal(0.5, 0.5, 0.0), resolution=resolution)
        pinches = sorted(mesh.report["pinch_points"], key=lambda p: -p[1])
        want = [np.array([0.0, 1.0, 0.0, 0.0]), np.array([0.0, -1.0, 0.0, 0.0])]
        pinch_err = math.inf
        if len(pinches) == 2:
            pinch_err = max(float(np.linalg.norm(np.array(p) - w)) for p, w in zip(pinches, want))
            if pinch_err > 1e-3:
                bad.append(("pinch", pinch_err))
        else:
            bad.append(("pinch-count", len(pinches)))
        mesh = lc.extract_mesh(cn.NonDiagonalizable(0.0), resolution=resolution)
        v = mesh.vertices
        x2_err = float(np.max(np.abs(v[:, 2])))
        cyl_err = float(np.max(np.abs(v[:, 2] ** 2 + v[:, 3] ** 2 + v[:, 1] ** 2 - 1.0)))
        if x2_err > 1e-6 or cyl_err > 1e-6:
            bad.append(("cylinder", x2_err, cyl_err))
        return bad, pinch_err, x2_err, cyl_err

    (bad, pinch_err, x2_err, cyl_err), secs = _timed(run)
    return CriterionResult(
        "torus topology, pinch points and cylinder equations",
        len(bad) == 0,
        secs,
        {
            "failures": len(bad),
            "pinch_err": f"{pinch_err:.2e}",
            "cylinder_err": f"{max(x2_err, cyl_err):.2e}",
        },
    )


def _ocs_families():
    rng = np.random.default_rng(SEED + 6)
    c = tuple(complex(*rng.normal(size=2)) for _ in range(4))
    qd = cn.diagonal_matrix(0.3, 0.7, 0.4, ql.TWISTOR)
    base = ocs.default_base_point(qd)
    return {
        "hyperplane": ocs.HyperplaneField(c),
        "real_quadric_plus": ocs.RealQuadricField(+1),
        "real_quadric_minus": ocs.RealQuadricField(-1),
        "quadric_branch_1": ocs.QuadricBranchField(qd, 1, base),
        "quadric_branch_2": ocs.QuadricBranchField(qd, 2, base),
    }


def _off_locus_points(field, rng, n, h_clear: float = 0.035):
    """Sample points where the field and its difference stencils stay defined."""
    out = []
    while len(out) < n:
        p = ql.SpherePoint.from_coords(*(rng.normal(size=4) * 0.8))
        try:
            ocs.eval_field(field, p)
            ocs.integrability_residual(field, p, h_clear)
        except Exception:
            continue
        out.append(p)
    return out


def criterion_6_ocs(n_points: int = 200, n_orders: int = 20) -> CriterionResult:
    """J-matrix algebra and integrability convergence for every family."""
    rng = np.random.default_rng(SEED + 7)

    def run():
        worst_j = 0.0
        worst_order = math.inf
        for name, field in _ocs_families().items():
            pts = _off_locus_points(field, rng, n_points)
            for p in pts:
                j = ocs.eval_jmatrix(field, p)
                worst_j = max(
                    worst_j,
                    float(np.linalg.norm(j @ j + np.eye(4))),
                    float(np.linalg.norm(j.T @ j - np.eye(4))),
                )
            for p in pts[:n_orders]:
                order = ocs.convergence_order(field, p, hs=(1e-2, 5e-3, 2.5e-3))
                worst_order = min(worst_order, order)
        return worst_j, worst_order

    (worst_j, worst_order), secs = _timed(run)
    passed = worst_j <= 1e-12 and worst_order >= 1.9
    return CriterionResult(
        "orthogonal complex structure validity (5 families x 200 points)",
        passed,
        secs,
        {"max_J_residual": f"{worst_j:.2e}", "min_order": f"{worst_order:.3f}"},
    )


def criterion_7_det_identity(n: int = 20) -> CriterionResult:
    """det(Q0 + i R_{v,k}) = (k^2 + (v+i)^2)^2 over a parameter grid."""

    def run():
        worst = 0.0
        for v in np.linspace(-1.5, 1.5, n):
            for k in np.linspace(0.0, 1.8, n):
                q = cn.nondiagonal_matrix(float(k), float(v)).entries
                got = np.linalg.det(q)
                want = (k * k + (v + 1j) ** 2) ** 2
                worst = max(worst, abs(got - want))
        return worst

    worst, secs = _timed(run)
    return CriterionResult(
        "determinant identity on the 20x20 (v, k) grid",
        worst <= 1e-12,
        secs,
        {"max_abs_err": f"{worst:.2e}"},
    )


def criterion_8_equivariance(n_elements: int = 20, zeros_per: int = 10) -> CriterionResult:
    """Pushed-forward discriminant zeros stay on the transformed locus."""
    rng = np.random.default_rng(SEED + 8)

    def run():
        q = cn.diagonal_matrix(0.3, 0.7, 0.4)
        mesh = lc.extract_mesh(cn.Diagonal(0.3, 0.7, 0.4), resolution=3)
        zeros = mesh.vertices[rng.choice(len(mesh.vertices), 200, replace=False)]
        worst = 0.0
        for _ in range(n_elements):
            t = ql.random_sl2h(rng)
            qp = ql.act_on_form(q, t)
            t_inv = t.inverse()
            nrm = qp.norm
            for z in zeros[rng.choice(200, zeros_per, replace=False)]:
                src = ql.SpherePoint.from_coords(*z)
                p = ql.act_on_sphere(t_inv, src)
                if p.infinite:
                    continue
                d = tw.discriminant(qp, p)
                worst = max(worst, abs(d) / (nrm * (1.0 + p.abs2())) ** 2)
        return worst

    worst, secs = _timed(run)
    return CriterionResult(
        "conformal equivariance of the discriminant locus (20 elements)",
        worst <= 1e-6,
        secs,
        {"max_normalized_delta": f"{worst:.2e}"},
    )


def criterion_9_degeneration(resolution: int = 4) -> CriterionResult:
    """Mesh-to-circle Hausdorff distance decreases as the torus collapses."""

    def run():
        ds = []
        for nu in (0.2, 0.1, 0.05):
            mesh = lc.extract_mesh(cn.Diagonal(0.0, 0.0, nu), resolution=resolution)
            v = mesh.vertices
            rho = np.sqrt(v[:, 1] ** 2 + v[:, 3] ** 2)
            dist = np.sqrt(v[:, 0] ** 2 + v[:, 2] ** 2 + (rho - 1.0) ** 2)
            ds.append(float(np.max(dist)))
        return ds

    ds, secs = _timed(run)
    return CriterionResult(
        "degeneration of the torus onto the circle (nu = 0.2, 0.1, 0.05)",
        ds[0] > ds[1] > ds[2],
        secs,
        {"distances": "[" + ", ".join(f"{d:.4f}" for d in ds) + "]"},
    )


ALL_CRITERIA = [
    criterion_1_roundtrip,
    criterion_2_real_quadric,
    criterion_3_line_table,
    criterion_4_clifford,
    criterion_5_torus_topology,
    criterion_6_ocs,
    criterion_7_det_identity,
    criterion_8_equivariance,
    criterion_9_degeneration,
]


def run_suite(selected: list[int] | None = None, echo=print) -> list[CriterionResult]:
    results = []
    for idx, fn in enumerate(ALL_CRITERIA, start=1):
        if selected and idx not in selected:
            continue
        res = fn()
        results.append(res)
        echo(res.line())
    return results
