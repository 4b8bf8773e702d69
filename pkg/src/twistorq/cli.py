"""Command-line interface.

Subcommands
-----------
canonicalize  classify a quadric file and print the canonical parameters
classify      canonical parameters plus invariants, lines and locus type
lines         twistor lines of the quadric (mapped back to its own chart)
eval          structure matrix of a quadric branch at a chart point
mesh          extract the discriminant mesh and write a Wavefront OBJ
verify        invariant table for one quadric, or --suite for the battery
gen           write reproducible fixture quadrics (seeded conjugations)

Quadric file format: optional ``label:`` and ``order:`` header lines, then
the 10 upper-triangle entries (row major) as ``re im`` float pairs; ``#``
starts a comment.  NaN and infinite entries are rejected.  Reports use 17
significant digits, carry no timestamps, and are byte reproducible.

Exit codes: 0 success, 1 verification failure, 2 rank-deficient input,
3 numerical breakdown, 4 parse or usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import acceptance
from . import canonical as cn
from . import locus as lc
from . import ocs
from . import quatlin as ql
from . import twistor as tw
from .errors import (
    MalformedInputError,
    NumericalBreakdownError,
    OnDiscriminantError,
    RankDeficientError,
    TwistorqError,
)

_UPPER = [(0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)]


def format_quadric(q: ql.QuadraticForm, label: str | None = None) -> str:
    qt = q.in_twistor().entries
    lines = ["# twistorq quadric (upper triangle, row major, twistor order)"]
    if label:
        lines.append(f"label: {label}")
    lines.append("order: twistor")
    for i, j in _UPPER:
        lines.append(f"{qt[i, j].real:.17g} {qt[i, j].imag:.17g}")
    return "\n".join(lines) + "\n"


def parse_quadric(text: str) -> tuple[ql.QuadraticForm, str | None]:
    label = None
    order = ql.TWISTOR
    values: list[float] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower().startswith("label:"):
            label = line.split(":", 1)[1].strip()
            continue
        if line.lower().startswith("order:"):
            order = line.split(":", 1)[1].strip().lower()
            if order not in (ql.TWISTOR, ql.BLOCK):
                raise MalformedInputError(f"unknown coordinate order {order!r}")
            continue
        for tok in line.split():
            try:
                values.append(float(tok))
            except ValueError as exc:
                raise MalformedInputError(f"bad float {tok!r}") from exc
    if len(values) != 20:
        raise MalformedInputError(f"expected 20 floats (10 complex entries), found {len(values)}")
    if not all(math.isfinite(v) for v in values):
        raise MalformedInputError("NaN or infinite entry in quadric file")
    m = np.zeros((4, 4), dtype=complex)
    for (i, j), (re, im) in zip(_UPPER, zip(values[0::2], values[1::2])):
        m[i, j] = complex(re, im)
        m[j, i] = complex(re, im)
    return ql.QuadraticForm(m, order), label


def load_quadric(path: str) -> tuple[ql.QuadraticForm, str | None]:
    with open(path) as fh:
        return parse_quadric(fh.read())


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _sphere_point_json(p: ql.SpherePoint):
    if p.infinite:
        return "infinity"
    return {"z1": [_fmt(p.z1.real), _fmt(p.z1.imag)], "z2": [_fmt(p.z2.real), _fmt(p.z2.imag)]}


def _canonical_json(c: cn.CanonicalForm) -> dict:
    if isinstance(c, cn.Diagonal):
        out = {"kind": "diagonal", "lam": _fmt(c.lam), "mu": _fmt(c.mu), "nu": _fmt(c.nu)}
    else:
        out = {"kind": "nondiagonalizable", "k": _fmt(c.k)}
    out["witness_residual"] = _fmt(c.residual)
    w = c.witness
    out["witness"] = {
        "gamma": [_fmt(w.gamma.real), _fmt(w.gamma.imag)],
        "order": w.order,
        "gmat_re": [[_fmt(x) for x in row] for row in w.gmat.real],
        "gmat_im": [[_fmt(x) for x in row] for row in w.gmat.imag],
    }
    return out


def _print_report(report: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(report, indent=2, sort_keys=True))
        return
    def emit(prefix, obj):
        if isinstance(obj, dict):
            for k in obj:
                emit(f"{prefix}{k}.", obj[k])
        elif isinstance(obj, list):
            print(f"{prefix[:-1]}: {obj}")
        else:
            print(f"{prefix[:-1]}: {obj}")
    emit("", report)


def _map_point(c: cn.CanonicalForm, p: ql.SpherePoint) -> ql.SpherePoint:
    """Push a canonical-chart point back to the input quadric's chart."""
    return ql.act_on_sphere(c.witness, p)


def cmd_canonicalize(args) -> int:
    q, label = load_quadric(args.path)
    c = cn.canonicalize(q)
    report = {"input": args.path, "label": label, "canonical": _canonical_json(c)}
    _print_report(report, args.json)
    return 0


def cmd_classify(args) -> int:
    q, label = load_quadric(args.path)
    c = cn.canonicalize(q)
    p, qq, d, v = cn.invariants(c)
    lines = tw.classify_lines(c)
    locus = tw.classify_locus(c)
    report = {
        "input": args.path,
        "label": label,
        "canonical": _canonical_json(c),
        "invariants": {"p": _fmt(p), "q": _fmt(qq), "d": _fmt(d), "v": _fmt(v)},
        "lines": {
            "kind": lines.kind,
            "count": "family" if lines.kind == "circle_family" else len(lines.points),
            "points_input_chart": [
                _sphere_point_json(_map_point(c, pt)) for pt in lines.points
            ],
        },
        "locus": {
            "class": locus.label,
            "pinch_points_input_chart": [
                _sphere_point_json(_map_point(c, pt)) for pt in locus.pinch_points
            ],
        },
    }
    if locus.radii is not None:
        report["locus"]["clifford_radii_sq"] = [_fmt(locus.radii[0]), _fmt(locus.radii[1])]
    _print_report(report, args.json)
    return 0


def cmd_lines(args) -> int:
    q, label = load_quadric(args.path)
    c = cn.canonicalize(q)
    rep = tw.classify_lines(c)
    report = {
        "input": args.path,
        "label": label,
        "kind": rep.kind,
        "count": "family" if rep.kind == "circle_family" else len(rep.points),
        "points_input_chart": [_sphere_point_json(_map_point(c, pt)) for pt in rep.points],
    }
    _print_report(report, args.json)
    return 0


def cmd_eval(args) -> int:
    q, label = load_quadric(args.path)
    qt = q.in_twistor()
    p = ql.SpherePoint.finite(complex(args.z1[0], args.z1[1]), complex(args.z2[0], args.z2[1]))
    base = ocs.default_base_point(qt)
    field = ocs.QuadricBranchField(qt, args.branch, base)
    fp = ocs.eval_field(field, p)
    j = ocs.to_jmatrix(fp)
    h = 1e-3 * (1.0 + math.sqrt(p.abs2()))
    res_h = ocs.integrability_residual(field, p, h)
    res_h2 = ocs.integrability_residual(field, p, h / 2.0)
    report = {
        "input": args.path,
        "label": label,
        "point": _sphere_point_json(p),
        "branch": args.branch,
        "fiber_point": {
            "xi0": [_fmt(fp.xi0.real), _fmt(fp.xi0.imag)],
            "xi12": [_fmt(fp.xi12.real), _fmt(fp.xi12.imag)],
        },
        "J": [[_fmt(x) for x in row] for row in j],
        "residuals": {
            "J_squared_plus_I": _fmt(float(np.linalg.norm(j @ j + np.eye(4)))),
            "J_orthogonality": _fmt(float(np.linalg.norm(j.T @ j - np.eye(4)))),
            "integrability_h": [_fmt(res_h[0]), _fmt(res_h[1])],
            "integrability_h_over_2": [_fmt(res_h2[0]), _fmt(res_h2[1])],
            "stencil_h": _fmt(h),
        },
    }
    _print_report(report, args.json)
    return 0


def cmd_mesh(args) -> int:
    q, label = load_quadric(args.path)
    c = cn.canonicalize(q)
    mesh = lc.extract_mesh(c, resolution=args.resolution, threads=args.threads)
    lc.export_obj(mesh, args.out)
    report = {
        "input": args.path,
        "label": label,
        "out": args.out,
        "canonical": _canonical_json(c),
        "mesh": {
            k: (v if not isinstance(v, float) else _fmt(v))
            for k, v in mesh.report.items()
        },
        "n_vertices": len(mesh.vertices),
        "n_triangles": len(mesh.triangles),
    }
    _print_report(report, args.json)
    return 0


def _verify_one(path: str, echo=print) -> bool:
    q, label = load_quadric(path)
    rng = np.random.default_rng(acceptance.SEED)
    ok = True

    def check(name, value, tol):
        nonlocal ok
        good = value <= tol
        ok = ok and good
        echo(f"[{'PASS' if good else 'FAIL'}] {name}: {value:.3e} (tol {tol:.0e})")

    qb = q.in_block()
    check("symmetry defect", float(np.linalg.norm(qb.entries - qb.entries.T)), 1e-12)
    q1, q2 = ql.reality_decompose(qb)
    recon = float(np.linalg.norm(q1.entries + 1j * q2.entries - qb.entries))
    check("reality decomposition reconstructs", recon, 1e-14 * max(1.0, qb.norm))
    c = cn.canonicalize(q)
    check("canonical witness residual", c.residual, 1e-6)
    kind = "diagonal" if isinstance(c, cn.Diagonal) else "nondiagonalizable"
    echo(f"[info] canonical class: {kind} {tuple(round(float(x), 12) for x in c.params)}")
    worst = 0.0
    qt = q.in_twistor()
    for _ in range(20):
        z1, z2 = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
        xi0, xi12 = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
        p = ql.SpherePoint.finite(z1, z2)
        v = tw.psi_point(xi0, xi12, p)
        f = tw.fiber_coefficients(qt, p)
        lhs = qt(v)
        rhs = f.A * xi0 ** 2 + 2 * f.B * xi0 * xi12 + f.C * xi12 ** 2
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    check("fiber restriction polynomial identity", worst, 1e-12)
    worst = 0.0
    t = ql.random_sl2h(rng, order=ql.TWISTOR)
    for _ in range(10):
        z1, z2 = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
        p = ql.SpherePoint.finite(z1, z2)
        v = tw.psi_point(1.0, complex(*rng.normal(size=2)), p)
        worst = max(worst, ql.sphere_distance(tw.pi_project(t.gmat @ v), ql.act_on_sphere(t, p)))
    check("projection/Moebius compatibility", worst, 1e-8)
    return ok


def cmd_verify(args) -> int:
    if args.suite:
        selected = None
        if args.criteria:
            selected = [int(x) for x in args.criteria.split(",")]
        results = acceptance.run_suite(selected)
        return 0 if all(r.passed for r in results) else 1
    if not args.path:
        print("verify: provide a quadric path or --suite", file=sys.stderr)
        return 4
    return 0 if _verify_one(args.path) else 1


def _gen_form(kind: str, params, seed: int, conjugate: bool) -> ql.QuadraticForm:
    if kind == "real":
        base = tw.real_quadric_form().in_block()
    elif kind == "diagonal":
        base = cn.diagonal_matrix(*params)
    elif kind == "nondiagonalizable":
        base = cn.nondiagonal_matrix(params[0])
    else:
        raise MalformedInputError(f"unknown kind {kind!r}")
    if not conjugate:
        return base
    rng = np.random.default_rng(seed)
    g = ql.random_sl2h(rng)
    t = ql.ConformalElement(g.gmat, ql.random_phase(rng) * rng.uniform(0.5, 2.0), ql.BLOCK)
    return ql.act_on_form(base, t)


def cmd_gen(args) -> int:
    params = ()
    if args.kind == "diagonal":
        params = (args.lam, args.mu, args.nu)
    elif args.kind == "nondiagonalizable":
        params = (args.k,)
    q = _gen_form(args.kind, params, args.seed, not args.plain)
    label = args.label or f"{args.kind} {params} seed={args.seed} conjugated={not args.plain}"
    text = format_quadric(q, label)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="twistorq", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(fn=fn)
        return p

    p = add("canonicalize", cmd_canonicalize, help="canonical form of a quadric file")
    p.add_argument("path")
    p.add_argument("--json", action="store_true")

    p = add("classify", cmd_classify, help="canonical form, invariants, lines and locus type")
    p.add_argument("path")
    p.add_argument("--json", action="store_true")

    p = add("lines", cmd_lines, help="twistor lines contained in the quadric")
    p.add_argument("path")
    p.add_argument("--json", action="store_true")

    p = add("eval", cmd_eval, help="structure matrix of a quadric branch at a point")
    p.add_argument("path")
    p.add_argument("--z1", nargs=2, type=float, required=True, metavar=("RE", "IM"))
    p.add_argument("--z2", nargs=2, type=float, required=True, metavar=("RE", "IM"))
    p.add_argument("--branch", type=int, default=1, choices=(1, 2))
    p.add_argument("--json", action="store_true")

    p = add("mesh", cmd_mesh, help="triangulate the discriminant locus, write OBJ")
    p.add_argument("path")
    p.add_argument("--resolution", type=int, default=4)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--json", action="store_true")

    p = add("verify", cmd_verify, help="invariant table for a quadric, or --suite")
    p.add_argument("path", nargs="?")
    p.add_argument("--suite", action="store_true")
    p.add_argument("--criteria", help="comma-separated criterion numbers (with --suite)")

    p = add("gen", cmd_gen, help="generate fixture quadrics (seeded, reproducible)")
    p.add_argument("--kind", choices=("real", "diagonal", "nondiagonalizable"), required=True)
    p.add_argument("--lam", type=float, default=0.3)
    p.add_argument("--mu", type=float, default=0.7)
    p.add_argument("--nu", type=float, default=0.4)
    p.add_argument("--k", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--plain", action="store_true", help="skip the random conjugation")
    p.add_argument("--label")
    p.add_argument("--out", default="-")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 4 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except RankDeficientError as exc:
        print(f"rank-deficient input: {exc}", file=sys.stderr)
        return 2
    except NumericalBreakdownError as exc:
        print(f"numerical breakdown: {exc}", file=sys.stderr)
        return 3
    except (MalformedInputError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 4
    except OnDiscriminantError as exc:
        print(f"point on the discriminant locus: {exc}", file=sys.stderr)
        return 3
    except TwistorqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
