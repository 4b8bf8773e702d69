"""Discriminant-locus meshes: radial graph lift plus marching tetrahedra.

For a diagonal class with nu != 0 the imaginary part of the discriminant
vanishes on a radial graph over the unit S^3: along the ray r*(unit vector)
it reduces to a quadratic in r^2 with exactly one positive root.  The locus
is then the zero set of Re Delta on that graph, extracted by marching
tetrahedra over a recursively subdivided 16-cell tessellation of S^3, with
one root polish per produced vertex along its generating edge.

For nu = 0 (cone case) and for the non-diagonalizable family the graph
property fails, and a direct R^4 grid is used instead: cells of a Freudenthal
simplicial decomposition are double-sliced by the linear interpolants of
(Re Delta, Im Delta), and the resulting polygon fans are Newton-polished onto
the exact locus.  Analytically known pinch points are snapped and declared;
the surface cannot be manifold at a cone point, so honesty beats smoothing.

Vertex lifting and contouring are data parallel; mesh assembly is a single
reduction.  Unknottedness of the smooth tori is *not* verified here; the
report carries the label from the classifier with a provenance note.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .canonical import Diagonal, NonDiagonalizable, CanonicalForm
from .errors import NuZeroError, ResolutionTooLowError, TwistorqError
from .quatlin import SpherePoint
from .twistor import LocusClassification, classify_locus

# ------------------------------------------------------------ closed forms


def delta_parts_diagonal(z: np.ndarray, lam: float, mu: float, nu: float):
    """(Re Delta, Im Delta) for the unit-determinant diagonal family.

    Delta = -e^{2i nu} - e^{-2i nu} r^4 - e^{lam+mu} conj(z2)^2
            - e^{-lam-mu} z2^2 - e^{lam-mu} conj(z1)^2 - e^{mu-lam} z1^2.
    """
    x1, y1, x2, y2 = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
    r2 = x1 * x1 + y1 * y1 + x2 * x2 + y2 * y2
    r4 = r2 * r2
    f = -(
        2.0 * math.cosh(lam - mu) * (x1 * x1 - y1 * y1)
        + 2.0 * math.cosh(lam + mu) * (x2 * x2 - y2 * y2)
        + (1.0 + r4) * math.cos(2.0 * nu)
    )
    g = (
        4.0 * math.sinh(lam - mu) * x1 * y1
        + 4.0 * math.sinh(lam + mu) * x2 * y2
        + (r4 - 1.0) * math.sin(2.0 * nu)
    )
    return f, g


def delta_grads_diagonal(z: np.ndarray, lam: float, mu: float, nu: float):
    """Gradients of (Re Delta, Im Delta) with respect to (x1, y1, x2, y2)."""
    x1, y1, x2, y2 = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
    r2 = x1 * x1 + y1 * y1 + x2 * x2 + y2 * y2
    chm, chp = math.cosh(lam - mu), math.cosh(lam + mu)
    shm, shp = math.sinh(lam - mu), math.sinh(lam + mu)
    c2, s2 = math.cos(2.0 * nu), math.sin(2.0 * nu)
    dr4 = 4.0 * r2
    gf = np.stack(
        [
            -(4.0 * chm * x1 + dr4 * x1 * c2),
            -(-4.0 * chm * y1 + dr4 * y1 * c2),
            -(4.0 * chp * x2 + dr4 * x2 * c2),
            -(-4.0 * chp * y2 + dr4 * y2 * c2),
        ],
        axis=-1,
    )
    gg = np.stack(
        [
            4.0 * shm * y1 + dr4 * x1 * s2,
            4.0 * shm * x1 + dr4 * y1 * s2,
            4.0 * shp * y2 + dr4 * x2 * s2,
            4.0 * shp * x2 + dr4 * y2 * s2,
        ],
        axis=-1,
    )
    return gf, gg


def delta_parts_nondiag(z: np.ndarray, k: float):
    """(Re Delta, Im Delta) of the k-family (half-scale representative)."""
    x1, y1, x2, y2 = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
    f = (
        (k * k - 1.0) * x2 * x2
        - y2 * y2
        + k * k * x1 * x1
        + (k * k - 1.0) * y1 * y1
        - 2.0 * k * y1
        + 1.0
    )
    g = 2.0 * (x2 + k * x1 * y2)
    return f, g


def delta_grads_nondiag(z: np.ndarray, k: float):
    x1, y1, x2, y2 = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
    zero = np.zeros_like(x1)
    gf = np.stack(
        [2 * k * k * x1, 2 * (k * k - 1) * y1 - 2 * k, 2 * (k * k - 1) * x2, -2 * y2],
        axis=-1,
    )
    gg = np.stack([2 * k * y2, zero, 2 * np.ones_like(x1), 2 * k * x1], axis=-1)
    return gf, gg


def im_delta_radius(direction: np.ndarray, lam: float, mu: float, nu: float) -> np.ndarray:
    """Radius of the Im Delta = 0 graph along unit directions (nu != 0).

    Along r * dir the equation reduces to s r^4 + B r^2 - s = 0 with
    s = sin(2 nu) and B = 4 sinh(lam - mu) x1 y1 + 4 sinh(lam + mu) x2 y2;
    the discriminant B^2 + 4 s^2 is positive, giving one positive root.
    """
    s = math.sin(2.0 * nu)
    if abs(s) < 1e-14:
        raise NuZeroError("the radial graph requires nu != 0")
    d = np.asarray(direction, dtype=float)
    b = 4.0 * math.sinh(lam - mu) * d[..., 0] * d[..., 1] + 4.0 * math.sinh(lam + mu) * d[..., 2] * d[..., 3]
    r2 = (-b + np.sqrt(b * b + 4.0 * s * s)) / (2.0 * s)
    return np.sqrt(r2)


# ------------------------------------------------------------ tessellation


@lru_cache(maxsize=8)
def tessellate_s3(depth: int):
    """Vertices and tetrahedra of the subdivided 16-cell boundary on S^3.

    Each refinement splits a tetrahedron into 4 corner cells plus 4 cells
    from its midpoint octahedron; midpoints are shared through a global
    cache, so the complex stays watertight, and every vertex is projected
    back to the unit sphere.
    """
    verts = []
    for i in range(4):
        for s in (1.0, -1.0):
            v = np.zeros(4)
            v[i] = s
            verts.append(v)
    verts = list(verts)
    tets = []
    for s0 in (0, 1):
        for s1 in (0, 1):
            for s2 in (0, 1):
                for s3 in (0, 1):
                    tets.append((0 + s0, 2 + s1, 4 + s2, 6 + s3))

    for _ in range(depth):
        midpoint = {}

        def mid(i, j):
            key = (i, j) if i < j else (j, i)
            idx = midpoint.get(key)
            if idx is None:
                m = verts[i] + verts[j]
                m /= np.linalg.norm(m)
                verts.append(m)
                idx = len(verts) - 1
                midpoint[key] = idx
            return idx

        new_tets = []
        for (a, b, c, d) in tets:
            ab, ac, ad = mid(a, b), mid(a, c), mid(a, d)
            bc, bd, cd = mid(b, c), mid(b, d), mid(c, d)
            new_tets.extend(
                [
                    (a, ab, ac, ad),
                    (b, ab, bc, bd),
                    (c, ac, bc, cd),
                    (d, ad, bd, cd),
                    (ab, cd, ac, bc),
                    (ab, cd, bc, bd),
                    (ab, cd, bd, ad),
                    (ab, cd, ad, ac),
                ]
            )
        tets = new_tets

    v = np.array(verts)
    t = np.array(tets, dtype=np.int64)
    v.setflags(write=False)
    t.setflags(write=False)
    return v, t


# edge slots of a tetrahedron and the marching table (positive-vertex masks)
_TET_EDGES = np.array([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
_MT_TABLE: dict[int, list[tuple[int, int, int]]] = {
    1: [(0, 1, 2)],
    2: [(0, 3, 4)],
    4: [(1, 3, 5)],
    8: [(2, 4, 5)],
    3: [(1, 3, 4), (1, 4, 2)],
    5: [(0, 3, 5), (0, 5, 2)],
    9: [(0, 4, 5), (0, 5, 1)],
    6: [(0, 4, 5), (0, 5, 1)],
    10: [(0, 3, 5), (0, 5, 2)],
    12: [(1, 3, 4), (1, 4, 2)],
    14: [(0, 1, 2)],
    13: [(0, 3, 4)],
    11: [(1, 3, 5)],
    7: [(2, 4, 5)],
}


@dataclass
class DiscriminantMesh:
    """Triangulated approximation of the discriminant locus.

    ``vertices`` are chart points in R^4, ``triangles`` index into them, and
    ``report`` carries topology, residual and provenance data.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    report: dict = field(default_factory=dict)


def _mesh_topology(triangles: np.ndarray):
    tri = np.asarray(triangles, dtype=np.int64)
    if len(tri) == 0:
        return {"euler": 0, "components": 0, "boundary_edges": 0, "nonmanifold_edges": 0}
    used = np.unique(tri)
    nv = len(used)
    edges = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [0, 2]]])
    edges = np.sort(edges, axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    ne = len(uniq)
    nf = len(tri)

    parent = {int(v): int(v) for v in used}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for a, b, c in tri:
        union(int(a), int(b))
        union(int(a), int(c))
    comps = len({find(int(v)) for v in used})
    return {
        "euler": int(nv - ne + nf),
        "components": comps,
        "boundary_edges": int(np.sum(counts == 1)),
        "nonmanifold_edges": int(np.sum(counts > 2)),
    }


def topology_report(mesh: DiscriminantMesh) -> dict:
    """Euler characteristic (V - E + F) and connected-component count."""
    t = _mesh_topology(mesh.triangles)
    return {"euler": t["euler"], "components": t["components"]}


# ------------------------------------------------------- graph-lift extraction


def _lift_points(dirs: np.ndarray, lam, mu, nu, threads: int = 1) -> np.ndarray:
    if threads <= 1 or len(dirs) < 4096:
        r = im_delta_radius(dirs, lam, mu, nu)
        return dirs * r[:, None]
    chunks = np.array_split(np.arange(len(dirs)), threads)
    out = np.empty_like(dirs)
    with ThreadPoolExecutor(max_workers=threads) as ex:
        def work(idx):
            out[idx] = dirs[idx] * im_delta_radius(dirs[idx], lam, mu, nu)[:, None]
        list(ex.map(work, chunks))
    return out


def _extract_graph_mesh(c: Diagonal, resolution: int, threads: int = 1) -> DiscriminantMesh:
    lam, mu, nu = c.lam, c.mu, c.nu
    dirs, tets = tessellate_s3(resolution)
    lifted = _lift_points(dirs, lam, mu, nu, threads)
    f, _ = delta_parts_diagonal(lifted, lam, mu, nu)
    f = np.where(np.abs(f) < 1e-30, 1e-30, f)

    pos = (f[tets] > 0).astype(np.int8)
    mask = (pos * np.array([1, 2, 4, 8])).sum(axis=1)
    cut = np.nonzero((mask > 0) & (mask < 15))[0]

    # global crossing-edge vertices, keyed by sorted endpoint ids
    edge_key_to_idx: dict[tuple[int, int], int] = {}
    tri_list = []
    edge_endpoints = []

    for ti in cut:
        tet = tets[ti]
        m = int(mask[ti])
        slots = {}
        for si, (ea, eb) in enumerate(_TET_EDGES):
            ia, ib = int(tet[ea]), int(tet[eb])
            if (f[ia] > 0) == (f[ib] > 0):
                continue
            key = (ia, ib) if ia < ib else (ib, ia)
            idx = edge_key_to_idx.get(key)
            if idx is None:
                idx = len(edge_endpoints)
                edge_key_to_idx[key] = idx
                edge_endpoints.append(key)
            slots[si] = idx
        for tri in _MT_TABLE[m]:
            tri_list.append([slots[s] for s in tri])

    endpoints = np.array(edge_endpoints, dtype=np.int64)
    if len(endpoints) == 0:
        raise ResolutionTooLowError("no crossing edges found; raise the resolution")

    # bisection along the great-circle edge, evaluated on the graph lift
    a = dirs[endpoints[:, 0]]
    b = dirs[endpoints[:, 1]]

    def value_at(t):
        d = a + (b - a) * t[:, None]
        d = d / np.linalg.norm(d, axis=1)[:, None]
        pt = d * im_delta_radius(d, lam, mu, nu)[:, None]
        val, _ = delta_parts_diagonal(pt, lam, mu, nu)
        return val, pt

    lo = np.zeros(len(endpoints))
    hi = np.ones(len(endpoints))
    flo, _ = value_at(lo)
    for _ in range(52):
        mid = 0.5 * (lo + hi)
        fm, _ = value_at(mid)
        same = (fm > 0) == (flo > 0)
        lo = np.where(same, mid, lo)
        flo = np.where(same, fm, flo)
        hi = np.where(same, hi, mid)
    _, pts = value_at(0.5 * (lo + hi))

    triangles = np.array(tri_list, dtype=np.int64)
    mesh = DiscriminantMesh(pts, triangles)
    topo = _mesh_topology(triangles)
    if topo["nonmanifold_edges"] > 0 or topo["boundary_edges"] > 0:
        raise ResolutionTooLowError("graph-lift mesh is not a closed manifold")
    fre, fim = delta_parts_diagonal(pts, lam, mu, nu)
    mesh.report = {
        "method": "radial_graph",
        "resolution": resolution,
        "euler": topo["euler"],
        "components": topo["components"],
        "boundary_edges": 0,
        "max_abs_delta": float(np.max(np.hypot(fre, fim))),
        "pinch_points": [],
        "locus_label": classify_locus(c).label,
        "label_source": "classification (isotopy type is not verified numerically)",
    }
    return mesh


# ------------------------------------------------------- grid double slice

_CUBE_CORNERS = np.array(
    [[(i >> 3) & 1, (i >> 2) & 1, (i >> 1) & 1, i & 1] for i in range(16)], dtype=np.int64
)


@lru_cache(maxsize=1)
def _freudenthal_paths():
    """The 24 vertex chains 0 -> e_p1 -> ... -> (1,1,1,1), one per permutation."""
    import itertools

    paths = []
    for perm in itertools.permutations(range(4)):
        corner = np.zeros(4, dtype=np.int64)
        chain = [corner.copy()]
        for axis in perm:
            corner = corner.copy()
            corner[axis] = 1
            chain.append(corner)
        paths.append(np.array(chain))
    return paths


def _simplex_polygon(vids, coords, fv, gv):
    """Polygon vertices of {f = 0, g = 0} inside one 4-simplex.

    Solves the two linear interpolants on each triangular 2-face; points with
    nonnegative barycentric coordinates are polygon vertices, joined when a
    common tetrahedral facet contains both.  Returns (keys, points, edges).
    """
    from itertools import combinations

    pts = {}
    for face in combinations(range(5), 3):
        i, j, k = face
        a = np.array(
            [
                [fv[j] - fv[i], fv[k] - fv[i]],
                [gv[j] - gv[i], gv[k] - gv[i]],
            ]
        )
        rhs = -np.array([fv[i], gv[i]])
        det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
        if abs(det) < 1e-300:
            continue
        s, t = np.linalg.solve(a, rhs)
        if s < -1e-12 or t < -1e-12 or s + t > 1 + 1e-12:
            continue
        p = coords[i] + s * (coords[j] - coords[i]) + t * (coords[k] - coords[i])
        key = tuple(sorted((int(vids[i]), int(vids[j]), int(vids[k]))))
        pts[face] = (key, p)
    if len(pts) < 3:
        return []
    edges = []
    for facet in combinations(range(5), 4):
        inside = [f for f in pts if set(f) <= set(facet)]
        if len(inside) == 2:
            edges.append((inside[0], inside[1]))
    # assemble the cycle
    adj = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    if not adj or any(len(v) != 2 for v in adj.values()):
        return []
    start = next(iter(adj))
    cycle = [start]
    prev = None
    while True:
        nxt = [n for n in adj[cycle[-1]] if n != prev]
        if not nxt:
            break
        prev = cycle[-1]
        cycle.append(nxt[0])
        if cycle[-1] == start:
            break
    if len(cycle) < 4 or cycle[-1] != start:
        return []
    cycle = cycle[:-1]
    return [pts[f] for f in cycle]


def _extract_grid_mesh(c: CanonicalForm, resolution: int, shell: float) -> DiscriminantMesh:
    if isinstance(c, NonDiagonalizable):
        parts = lambda z: delta_parts_nondiag(z, c.k)
        grads = lambda z: delta_grads_nondiag(z, c.k)
    else:
        parts = lambda z: delta_parts_diagonal(z, c.lam, c.mu, c.nu)
        grads = lambda z: delta_grads_diagonal(z, c.lam, c.mu, c.nu)

    n = 4 * resolution + 5
    axis = np.linspace(-shell, shell, n)
    h = axis[1] - axis[0]
    grid = np.stack(np.meshgrid(axis, axis, axis, axis, indexing="ij"), axis=-1)
    f, g = parts(grid)
    f = np.where(np.abs(f) < 1e-30, 1e-30, f)
    g = np.where(np.abs(g) < 1e-30, 1e-30, g)

    # cells whose corner signs change in both functions
    def cell_mixed(v):
        pos = v > 0
        m = pos[:-1, :-1, :-1, :-1].copy()
        allpos = m.copy()
        allneg = ~pos[:-1, :-1, :-1, :-1]
        for di in range(2):
            for dj in range(2):
                for dk in range(2):
                    for dl in range(2):
                        blk = pos[di : di + n - 1, dj : dj + n - 1, dk : dk + n - 1, dl : dl + n - 1]
                        allpos &= blk
                        allneg &= ~blk
        return ~(allpos | allneg)

    mixed = cell_mixed(f) & cell_mixed(g)
    cells = np.argwhere(mixed)
    if len(cells) == 0:
        raise ResolutionTooLowError("grid too coarse: no cells straddle the locus")

    strides = np.array([n * n * n, n * n, n, 1], dtype=np.int64)
    fr = f.ravel()
    gr = g.ravel()
    key_to_idx: dict[tuple, int] = {}
    points = []
    tris = []
    for cell in cells:
        base_id = int(cell @ strides)
        base_pt = np.array([axis[cell[0]], axis[cell[1]], axis[cell[2]], axis[cell[3]]])
        for chain in _freudenthal_paths():
            vids = [base_id + int(cc @ strides) for cc in chain]
            coords = [base_pt + cc * h for cc in chain]
            fv = [fr[i] for i in vids]
            gv = [gr[i] for i in vids]
            if min(fv) > 0 or max(fv) < 0 or min(gv) > 0 or max(gv) < 0:
                continue
            poly = _simplex_polygon(vids, coords, fv, gv)
            if len(poly) < 3:
                continue
            ids = []
            for key, p in poly:
                idx = key_to_idx.get(key)
                if idx is None:
                    idx = len(points)
                    key_to_idx[key] = idx
                    points.append(p)
                ids.append(idx)
            for i in range(1, len(ids) - 1):
                tris.append((ids[0], ids[i], ids[i + 1]))

    if not tris:
        raise ResolutionTooLowError("no surface polygons were produced")
    points = np.array(points)
    tris = np.array(tris, dtype=np.int64)

    # Newton polish onto {f = 0, g = 0} with the minimum-norm update
    for _ in range(40):
        fv, gv = parts(points)
        res = np.hypot(fv, gv)
        if np.max(res) < 1e-11:
            break
        gf, gg = grads(points)
        a11 = np.einsum("ij,ij->i", gf, gf)
        a12 = np.einsum("ij,ij->i", gf, gg)
        a22 = np.einsum("ij,ij->i", gg, gg)
        det = a11 * a22 - a12 * a12
        det = np.where(np.abs(det) < 1e-30, 1e-30, det)
        l1 = (fv * a22 - gv * a12) / det
        l2 = (gv * a11 - fv * a12) / det
        step = gf * l1[:, None] + gg * l2[:, None]
        nstep = np.linalg.norm(step, axis=1)
        cap = 0.5 * h
        scale = np.where(nstep > cap, cap / np.maximum(nstep, 1e-30), 1.0)
        points = points - step * scale[:, None]

    # snap vertices near declared pinch points, drop degenerate triangles
    locus = classify_locus(c)
    pinch = [p for p in locus.pinch_points if not p.infinite]
    pinch_radius = 2.0 * h
    declared = []
    for p in pinch:
        target = np.array(p.coords)
        dist = np.linalg.norm(points - target, axis=1)
        close = dist < pinch_radius
        if np.any(close):
            rep = np.argmin(dist)
            points[rep] = target
            remap = np.where(close, rep, np.arange(len(points)))
            tris = remap[tris]
            declared.append(tuple(target))
    keep = (tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2]) & (tris[:, 0] != tris[:, 2])
    tris = tris[keep]
    # drop duplicated triangles (possible after snapping)
    tris = np.unique(np.sort(tris, axis=1), axis=0)

    fv, gv = parts(points)
    shell_margin = 1.01 * (shell - h)
    on_boundary = np.max(np.abs(points), axis=1) >= shell_margin
    topo = _mesh_topology(tris)
    mesh = DiscriminantMesh(points, tris)
    mesh.report = {
        "method": "grid_double_slice",
        "resolution": resolution,
        "grid_points_per_axis": n,
        "shell": shell,
        "euler": topo["euler"],
        "components": topo["components"],
        "boundary_edges": topo["boundary_edges"],
        "clipped_at_shell": bool(np.any(on_boundary)),
        "max_abs_delta": float(np.max(np.hypot(fv, gv))),
        "pinch_points": declared,
        "pinch_radius": pinch_radius,
        "locus_label": locus.label,
        "label_source": "classification (isotopy type is not verified numerically)",
    }
    if topo["nonmanifold_edges"] > 0 and not declared:
        raise ResolutionTooLowError("grid mesh is non-manifold away from declared pinch points")
    return mesh


def extract_mesh(c: CanonicalForm, resolution: int = 4, threads: int = 1,
                 shell: float | None = None) -> DiscriminantMesh:
    """Triangulate the discriminant locus of a canonical class.

    Diagonal classes with nu != 0 use the radial graph lift; nu = 0 and the
    non-diagonalizable family fall back to the R^4 grid double slice.  The
    circle class (lam = mu = nu = 0) has a 1-dimensional locus and is
    rejected.
    """
    locus = classify_locus(c)
    if locus.label == "circle":
        raise TwistorqError("the circle locus is 1-dimensional; no surface mesh exists")
    if isinstance(c, Diagonal) and c.nu > 1e-12:
        return _extract_graph_mesh(c, resolution, threads)
    if shell is None:
        if isinstance(c, Diagonal):
            shell = math.sqrt(2.0 * math.cosh(c.lam + c.mu)) * 1.15
        else:
            shell = 2.2
    return _extract_grid_mesh(c, resolution, shell)


# ------------------------------------------------------------ fixtures


def icosphere_mesh(subdiv: int = 1) -> DiscriminantMesh:
    """Icosahedral sphere in the x2 = 0 slice of R^4 (topology fixture)."""
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    raw = []
    for a in (-1.0, 1.0):
        for b in (-phi, phi):
            raw.extend([[0, a, b], [a, b, 0], [b, 0, a]])
    verts = [np.array(v) / np.linalg.norm(v) for v in raw]
    tris = []
    for i in range(12):
        for j in range(i + 1, 12):
            for k in range(j + 1, 12):
                ds = [np.linalg.norm(verts[i] - verts[j]), np.linalg.norm(verts[j] - verts[k]), np.linalg.norm(verts[i] - verts[k])]
                if max(ds) < 1.2:
                    tris.append((i, j, k))
    for _ in range(subdiv):
        cache = {}
        new_tris = []

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        for (i, j, k) in tris:
            ij, jk, ik = mid(i, j), mid(j, k), mid(i, k)
            new_tris.extend([(i, ij, ik), (j, jk, ij), (k, ik, jk), (ij, jk, ik)])
        tris = new_tris
    v4 = np.zeros((len(verts), 4))
    v4[:, [0, 1, 3]] = np.array(verts)
    return DiscriminantMesh(v4, np.array(tris, dtype=np.int64), {"fixture": "icosphere"})


def flat_torus_mesh(nu_res: int = 24, nv_res: int = 24, offset: float = 0.0) -> DiscriminantMesh:
    """Clifford-style flat torus in R^4 (topology fixture)."""
    us = np.arange(nu_res) * (2.0 * math.pi / nu_res)
    vs = np.arange(nv_res) * (2.0 * math.pi / nv_res)
    verts = []
    for u in us:
        for v in vs:
            verts.append([math.cos(u) + offset, math.sin(u), math.cos(v), math.sin(v)])
    tris = []
    for i in range(nu_res):
        for j in range(nv_res):
            a = i * nv_res + j
            b = ((i + 1) % nu_res) * nv_res + j
            c = i * nv_res + (j + 1) % nv_res
            d = ((i + 1) % nu_res) * nv_res + (j + 1) % nv_res
            tris.extend([(a, b, d), (a, d, c)])
    return DiscriminantMesh(np.array(verts), np.array(tris, dtype=np.int64), {"fixture": "flat_torus"})


def disjoint_union(a: DiscriminantMesh, b: DiscriminantMesh) -> DiscriminantMesh:
    off = len(a.vertices)
    return DiscriminantMesh(
        np.vstack([a.vertices, b.vertices]),
        np.vstack([a.triangles, b.triangles + off]),
        {"fixture": "union"},
    )


# ------------------------------------------------------------ export


def export_obj(mesh: DiscriminantMesh, path, pole: np.ndarray | None = None) -> None:
    """Wavefront OBJ export through an inversion-based chart to R^3.

    Vertices are mapped by x -> (x - pole)/|x - pole|^2 and written as
    ``v x y z`` using the first three components; the untouched fourth chart
    coordinate of the original vertex rides along as a ``# w=`` comment, so
    the 4D data is preserved.  Floats carry 9 significant digits and the
    output contains no timestamps, making files byte reproducible.
    """
    verts = mesh.vertices
    if pole is None:
        far = verts[np.argmax(np.linalg.norm(verts, axis=1))]
        nrm = np.linalg.norm(far)
        pole = far * (1.0 + 0.5 / max(nrm, 1e-12))
    diff = verts - pole
    denom = np.sum(diff * diff, axis=1)
    denom = np.maximum(denom, 1e-300)
    proj = diff / denom[:, None]
    lines = ["# twistorq discriminant mesh"]
    label = mesh.report.get("locus_label")
    if label:
        lines.append(f"# locus {label}")
    lines.append(f"# pole {' '.join(f'{x:.9g}' for x in pole)}")
    for p, orig in zip(proj, verts):
        lines.append(f"v {p[0]:.9g} {p[1]:.9g} {p[2]:.9g} # w={orig[3]:.9g}")
    for t in mesh.triangles:
        lines.append(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
