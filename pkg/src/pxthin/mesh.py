"""Conforming triangulations of the unit half-disk with boundary tags.

Vertices carry one of three tags: Interior, Arc (the curved Dirichlet
boundary (dB1)+, including the corners (+-1, 0)), and Thin (the flat
segment T1 where the unilateral constraint lives). Refinement is uniform
red refinement with radial projection of new arc midpoints; optional
grading bisects elements near T1.
"""

import hashlib
import math

import numpy as np

from .errors import (FormatError, NumericError, PreconditionError,
                     ResolutionError, ResourceError)

INTERIOR = 0
ARC = 1
THIN = 2

_TAG_CHAR = {INTERIOR: "i", ARC: "a", THIN: "t"}
_CHAR_TAG = {v: k for k, v in _TAG_CHAR.items()}

GEOM_TOL = 1e-12
NODE_BUDGET = 10_000_000


class TriMesh:
    """Plain conforming triangle mesh; no domain assumption.

    Carries per-element signed areas and P1 hat-function gradients so
    assembly code does not recompute geometry.
    """

    def __init__(self, vertices, triangles, vertex_tags=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise PreconditionError("vertices must have shape (nv, 2)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise PreconditionError("triangles must have shape (nt, 3)")
        if not np.all(np.isfinite(self.vertices)):
            raise PreconditionError("non-finite vertex coordinate")
        nv = len(self.vertices)
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= nv):
            raise PreconditionError("triangle index out of range")
        if vertex_tags is None:
            vertex_tags = np.zeros(nv, dtype=np.int8)
        self.vertex_tags = np.ascontiguousarray(vertex_tags, dtype=np.int8)
        if self.vertex_tags.shape != (nv,):
            raise PreconditionError("one tag per vertex required")

        p = self.vertices[self.triangles]           # (nt, 3, 2)
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        if np.any(det <= 0.0):
            bad = int(np.argmax(det <= 0.0))
            raise PreconditionError(
                f"triangle {bad} has non-positive signed area {det[bad] / 2.0}")
        self.areas = 0.5 * det
        # hat gradients: grad phi_i constant per element
        g = np.empty((len(self.triangles), 3, 2))
        g[:, 1, 0] = e2[:, 1] / det
        g[:, 1, 1] = -e2[:, 0] / det
        g[:, 2, 0] = -e1[:, 1] / det
        g[:, 2, 1] = e1[:, 0] / det
        g[:, 0] = -g[:, 1] - g[:, 2]
        self.grads = g
        edges = np.concatenate([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]])
        self.h_max = float(np.sqrt((edges ** 2).sum(axis=1).max())) if len(edges) else 0.0

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_triangles(self):
        return len(self.triangles)

    def quad_points(self, rule):
        """Physical quadrature points (nt, nq, 2) and weights (nt, nq)."""
        p = self.vertices[self.triangles]
        xi = rule.points[:, 0][None, :, None]
        eta = rule.points[:, 1][None, :, None]
        pts = p[:, None, 0] * (1.0 - xi - eta) + p[:, None, 1] * xi + p[:, None, 2] * eta
        w = rule.weights[None, :] * (2.0 * self.areas[:, None])
        return pts, w


class HalfDiskMesh(TriMesh):
    """TriMesh constrained to the closed half-disk, with boundary tags."""

    def __init__(self, vertices, triangles, vertex_tags):
        super().__init__(vertices, triangles, vertex_tags)
        x = self.vertices
        if np.any(x[:, 1] < -GEOM_TOL):
            raise PreconditionError("vertex below the thin line")
        if np.any(np.einsum("ij,ij->i", x, x) > (1.0 + GEOM_TOL) ** 2):
            raise PreconditionError("vertex outside the unit disk")


class QuadratureRule:
    """Symmetric rule on the reference triangle {x>=0, y>=0, x+y<=1}."""

    def __init__(self, order, points, weights):
        self.order = order
        self.points = np.asarray(points, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        if np.any(self.weights <= 0.0):
            raise PreconditionError("quadrature weights must be positive")
        if abs(self.weights.sum() - 0.5) > 1e-14:
            raise PreconditionError("quadrature weights must sum to the reference area 1/2")


def quadrature_rule(order):
    """Rules of order 2 (3-point) and 5 (7-point)."""
    if order == 2:
        pts = [(1 / 6, 1 / 6), (2 / 3, 1 / 6), (1 / 6, 2 / 3)]
        wts = [1 / 6, 1 / 6, 1 / 6]
    elif order == 5:
        s15 = math.sqrt(15.0)
        a = (6.0 + s15) / 21.0
        b = (6.0 - s15) / 21.0
        wa = (155.0 + s15) / 2400.0
        wb = (155.0 - s15) / 2400.0
        pts = [(1 / 3, 1 / 3),
               (a, a), (1 - 2 * a, a), (a, 1 - 2 * a),
               (b, b), (1 - 2 * b, b), (b, 1 - 2 * b)]
        wts = [9 / 80, wa, wa, wa, wb, wb, wb]
    else:
        raise PreconditionError(f"quadrature order must be 2 or 5, got {order}")
    return QuadratureRule(order, pts, wts)


def _tag_geometrically(vertices):
    r = np.sqrt(np.einsum("ij,ij->i", vertices, vertices))
    arc = np.abs(r - 1.0) <= GEOM_TOL
    thin = (vertices[:, 1] <= GEOM_TOL) & ~arc
    tags = np.zeros(len(vertices), dtype=np.int8)
    tags[arc] = ARC
    tags[thin] = THIN
    return tags


def _red_refine(vertices, triangles):
    verts = [tuple(v) for v in vertices]
    r2 = np.einsum("ij,ij->i", vertices, vertices)
    on_arc = np.abs(np.sqrt(r2) - 1.0) <= GEOM_TOL
    mid = {}

    def midpoint(i, j):
        key = (i, j) if i < j else (j, i)
        idx = mid.get(key)
        if idx is None:
            m = 0.5 * (np.asarray(verts[i]) + np.asarray(verts[j]))
            if on_arc[i] and on_arc[j]:
                m = m / np.hypot(m[0], m[1])
            idx = len(verts)
            verts.append((m[0], m[1]))
            mid[key] = idx
        return idx

    new_tris = np.empty((4 * len(triangles), 3), dtype=np.int64)
    for t, (a, b, c) in enumerate(triangles):
        ab = midpoint(a, b)
        bc = midpoint(b, c)
        ca = midpoint(c, a)
        new_tris[4 * t + 0] = (a, ab, ca)
        new_tris[4 * t + 1] = (ab, b, bc)
        new_tris[4 * t + 2] = (ca, bc, c)
        new_tris[4 * t + 3] = (ab, bc, ca)
    return np.asarray(verts, dtype=float), new_tris


def _bisect_towards_thin(vertices, triangles):
    """One conforming bisection round of elements touching the thin line."""
    verts = [tuple(v) for v in vertices]
    thin_touch = vertices[:, 1] <= GEOM_TOL
    mid = {}

    def midpoint(i, j):
        key = (i, j) if i < j else (j, i)
        idx = mid.get(key)
        if idx is None:
            m = 0.5 * (np.asarray(verts[i]) + np.asarray(verts[j]))
            idx = len(verts)
            verts.append((m[0], m[1]))
            mid[key] = idx
        return idx

    def longest_edge(a, b, c):
        pa, pb, pc = (np.asarray(verts[i]) for i in (a, b, c))
        l2 = [((pb - pc) ** 2).sum(), ((pc - pa) ** 2).sum(), ((pa - pb) ** 2).sum()]
        return int(np.argmax(l2))   # edge opposite vertex 0/1/2

    work = [tuple(t) for t in triangles]
    out = []
    for tri in work:
        if any(thin_touch[i] for i in tri):
            a, b, c = tri
            le = longest_edge(a, b, c)
            # rotate so the split edge is (b, c)
            a, b, c = ((a, b, c), (b, c, a), (c, a, b))[le]
            m = midpoint(b, c)
            out.append((a, b, m))
            out.append((a, m, c))
        else:
            out.append(tri)

    # conformity: split triangles whose edge holds a hanging midpoint
    changed = True
    while changed:
        changed = False
        nxt = []
        for a, b, c in out:
            split = None
            for (i, j, k) in ((a, b, c), (b, c, a), (c, a, b)):
                key = (i, j) if i < j else (j, i)
                if key in mid:
                    split = (k, i, j, mid[key])
                    break
            if split is None:
                nxt.append((a, b, c))
            else:
                k, i, j, m = split
                nxt.append((k, i, m))
                nxt.append((k, m, j))
                changed = True
        out = nxt
    return np.asarray(verts, dtype=float), np.asarray(out, dtype=np.int64)


def build(level, grading=0.0):
    """Half-disk mesh: 4-triangle fan, `level` red refinements, optional grading.

    New arc midpoints are projected radially onto the unit circle, so
    every refinement keeps boundary vertices on the arc. grading > 0 runs
    round(grading) extra conforming bisection rounds of elements touching
    the thin line.
    """
    level = int(level)
    if level < 0:
        raise PreconditionError("level must be >= 0")
    est_nodes = 2 * 4 ** level + 2 ** (level + 2)
    if level > 10 or est_nodes > NODE_BUDGET:
        raise ResourceError(
            f"level {level} exceeds the node budget ({est_nodes} > {NODE_BUDGET})")

    s = math.sqrt(0.5)
    vertices = np.array([
        (0.0, 0.0),
        (1.0, 0.0), (s, s), (0.0, 1.0), (-s, s), (-1.0, 0.0),
    ])
    triangles = np.array([(0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 5)], dtype=np.int64)

    for _ in range(level):
        vertices, triangles = _red_refine(vertices, triangles)

    for _ in range(int(round(float(grading)))):
        if 2 * len(vertices) > NODE_BUDGET:
            raise ResourceError("grading would exceed the node budget")
        vertices, triangles = _bisect_towards_thin(vertices, triangles)

    # snap rounding dust on the thin line to exactly zero
    snap = np.abs(vertices[:, 1]) <= GEOM_TOL
    vertices[snap, 1] = 0.0
    return HalfDiskMesh(vertices, triangles, _tag_geometrically(vertices))


def integrate(mesh, rule, integrand):
    """Integral of a pointwise field over the mesh, fixed element order.

    `integrand` maps an array of points (n, 2) to values (n,).
    """
    pts, w = mesh.quad_points(rule)
    vals = np.asarray(integrand(pts.reshape(-1, 2)), dtype=float).reshape(w.shape)
    if not np.all(np.isfinite(vals)):
        bad = int(np.argwhere(~np.isfinite(vals))[0][0])
        raise NumericError(f"non-finite integrand value in element {bad}")
    return float((vals * w).sum(axis=1).sum())


def extract_halfball_submesh(mesh, center, radius):
    """Submesh of triangles fully inside the closed half-ball, plus vertex map.

    Re-tags for the local obstacle problem: vertices on the thin line stay
    Thin, all other submesh-boundary vertices become Arc (Dirichlet).
    Returns (submesh, vertex_map) with vertex_map[new_index] = old_index.
    """
    center = np.asarray(center, dtype=float)
    radius = float(radius)
    if abs(center[1]) > GEOM_TOL:
        raise PreconditionError("half-ball center must lie on the thin line")
    if abs(center[0]) > 0.5 + GEOM_TOL:
        raise PreconditionError("half-ball center must satisfy |center| <= 1/2")
    if radius <= 2.0 * mesh.h_max:
        raise PreconditionError(
            f"radius {radius} must exceed twice the mesh size 2*h_max = {2 * mesh.h_max}")

    d2 = ((mesh.vertices - center) ** 2).sum(axis=1)
    v_in = d2 <= (radius + GEOM_TOL) ** 2
    t_in = v_in[mesh.triangles].all(axis=1)
    if int(t_in.sum()) < 10:
        raise ResolutionError(
            f"only {int(t_in.sum())} triangles inside the half-ball; mesh too coarse")

    tris_old = mesh.triangles[t_in]
    used = np.unique(tris_old)
    remap = np.full(mesh.num_vertices, -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    sub_tris = remap[tris_old]
    sub_verts = mesh.vertices[used]

    edges = np.concatenate([sub_tris[:, [0, 1]], sub_tris[:, [1, 2]], sub_tris[:, [2, 0]]])
    edges_sorted = np.sort(edges, axis=1)
    uniq, counts = np.unique(edges_sorted, axis=0, return_counts=True)
    boundary_vertex = np.zeros(len(sub_verts), dtype=bool)
    boundary_vertex[uniq[counts == 1].ravel()] = True

    tags = np.zeros(len(sub_verts), dtype=np.int8)
    on_thin = np.abs(sub_verts[:, 1]) <= GEOM_TOL
    tags[on_thin] = THIN
    tags[boundary_vertex & ~on_thin] = ARC
    return HalfDiskMesh(sub_verts, sub_tris, tags), used


def mesh_text(mesh):
    """Canonical text form; also the hashing basis for solution files."""
    lines = [f"m {mesh.num_vertices} {mesh.num_triangles}"]
    for v, tag in zip(mesh.vertices, mesh.vertex_tags):
        lines.append(f"v {v[0]:.17g} {v[1]:.17g} {_TAG_CHAR[int(tag)]}")
    for a, b, c in mesh.triangles:
        lines.append(f"t {a} {b} {c}")
    return "\n".join(lines) + "\n"


def mesh_hash(mesh):
    return hashlib.sha256(mesh_text(mesh).encode("ascii")).hexdigest()


def save_mesh(mesh, path):
    with open(path, "w", encoding="ascii") as f:
        f.write(mesh_text(mesh))


def load_mesh(path, cls=HalfDiskMesh):
    with open(path, "r", encoding="ascii") as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines or not lines[0].startswith("m "):
        raise FormatError(f"{path}: missing mesh header")
    try:
        _, nv_s, nt_s = lines[0].split()
        nv, nt = int(nv_s), int(nt_s)
    except ValueError as exc:
        raise FormatError(f"{path}: bad mesh header {lines[0]!r}") from exc
    if len(lines) != 1 + nv + nt:
        raise FormatError(f"{path}: expected {1 + nv + nt} lines, found {len(lines)}")
    verts = np.empty((nv, 2))
    tags = np.empty(nv, dtype=np.int8)
    for i in range(nv):
        parts = lines[1 + i].split()
        if len(parts) != 4 or parts[0] != "v" or parts[3] not in _CHAR_TAG:
            raise FormatError(f"{path}: bad vertex line {lines[1 + i]!r}")
        verts[i] = (float(parts[1]), float(parts[2]))
        tags[i] = _CHAR_TAG[parts[3]]
    tris = np.empty((nt, 3), dtype=np.int64)
    for i in range(nt):
        parts = lines[1 + nv + i].split()
        if len(parts) != 4 or parts[0] != "t":
            raise FormatError(f"{path}: bad triangle line {lines[1 + nv + i]!r}")
        tris[i] = (int(parts[1]), int(parts[2]), int(parts[3]))
    try:
        return cls(verts, tris, tags)
    except PreconditionError as exc:
        raise FormatError(f"{path}: invalid mesh ({exc})") from exc
