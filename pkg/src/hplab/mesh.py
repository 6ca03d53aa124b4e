"""Meshes of the unit interval and of disks/annuli around a circular obstacle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GAMMA",
    "GAMMA_R",
    "MeshError",
    "Mesh1D",
    "Mesh2D",
    "mesh_interval",
    "mesh_annulus",
    "mesh_refine",
    "validate_mesh",
    "prolongation",
    "DEFAULT_VERTEX_CAP",
]

GAMMA = 1  # obstacle boundary
GAMMA_R = 2  # truncation circle
TAG_NAMES = {GAMMA: "gamma", GAMMA_R: "gamma_R"}
DEFAULT_VERTEX_CAP = 4_000_000
MIN_ANGLE_DEG = 20.0


class MeshError(ValueError):
    """Raised for invalid mesh parameters or failed validation."""


@dataclass(frozen=True)
class Mesh1D:
    nodes: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def h(self) -> float:
        return float(np.max(np.diff(self.nodes)))


@dataclass(frozen=True, eq=False)
class Mesh2D:
    """Triangulation of ``a <= |x| <= R`` (a disk of radius R when a = 0).

    ``boundary_edges`` are oriented with the domain on their left and carry
    a tag from ``edge_tags`` (GAMMA or GAMMA_R).  ``boundary_h`` is the mesh
    size at which the boundary polygon was last fitted to the circles; it
    differs from ``h`` after nested refinement.  ``parents`` lists, for each
    vertex created by refinement, the two endpoints of its parent edge.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    edge_tags: np.ndarray
    a: float
    R: float
    boundary_h: float
    parents: np.ndarray | None = None
    parent: "Mesh2D | None" = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def edge_lengths(self) -> np.ndarray:
        """Lengths of the three edges of every triangle, shape (M, 3)."""
        if "edge_lengths" not in self._cache:
            p = self.vertices[self.triangles]
            e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
            self._cache["edge_lengths"] = np.linalg.norm(e, axis=2)
        return self._cache["edge_lengths"]

    def diameters(self) -> np.ndarray:
        return self.edge_lengths().max(axis=1)

    @property
    def h(self) -> float:
        return float(self.diameters().max())

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def min_angles(self) -> np.ndarray:
        """Smallest interior angle of each triangle in degrees."""
        L = self.edge_lengths()
        a, b, c = L[:, 0], L[:, 1], L[:, 2]
        cos_a = (b * b + c * c - a * a) / (2 * b * c)
        cos_b = (a * a + c * c - b * b) / (2 * a * c)
        cos_c = (a * a + b * b - c * c) / (2 * a * b)
        cosines = np.clip(np.stack([cos_a, cos_b, cos_c], axis=1), -1.0, 1.0)
        return np.degrees(np.arccos(cosines)).min(axis=1)

    @property
    def shape_reg(self) -> float:
        return float(self.min_angles().min())

    def tagged_edges(self, tag: int) -> np.ndarray:
        return self.boundary_edges[self.edge_tags == tag]

    def tagged_vertices(self, tag: int) -> np.ndarray:
        return np.unique(self.tagged_edges(tag))

    def boundary_loop(self, tag: int = GAMMA_R) -> np.ndarray:
        """Vertices of a tagged closed boundary in traversal order."""
        edges = self.tagged_edges(tag)
        if len(edges) == 0:
            raise MeshError(f"mesh has no edges tagged {TAG_NAMES.get(tag, tag)}")
        succ = dict(zip(edges[:, 0].tolist(), edges[:, 1].tolist()))
        start = int(edges[0, 0])
        loop = [start]
        nxt = succ[start]
        while nxt != start:
            loop.append(nxt)
            nxt = succ[nxt]
            if len(loop) > len(edges):
                raise MeshError("tagged boundary edges do not form a single loop")
        if len(loop) != len(edges):
            raise MeshError("tagged boundary edges do not form a single loop")
        return np.asarray(loop)


def mesh_interval(n_elem: int) -> Mesh1D:
    """Uniform partition of [0, 1] into ``n_elem`` elements."""
    if int(n_elem) != n_elem or n_elem < 1:
        raise MeshError("n_elem must be a positive integer")
    n_elem = int(n_elem)
    return Mesh1D(np.arange(n_elem + 1) / n_elem)


def _ring_angles(n: int, shift: float) -> np.ndarray:
    return 2.0 * np.pi * (np.arange(n) + shift) / n


def _zip_rings(inner: np.ndarray, inner_theta: np.ndarray,
               outer: np.ndarray, outer_theta: np.ndarray) -> list:
    """Triangulate the band between two concentric rings of vertices."""
    na, nb = len(inner), len(outer)
    ta = np.append(inner_theta, inner_theta[0] + 2 * np.pi)
    tb = np.append(outer_theta, outer_theta[0] + 2 * np.pi)
    tris = []
    i = j = 0
    while i < na or j < nb:
        if j == nb or (i < na and ta[i + 1] <= tb[j + 1]):
            tris.append((inner[i], inner[(i + 1) % na], outer[j % nb]))
            i += 1
        else:
            tris.append((inner[i % na], outer[(j + 1) % nb], outer[j]))
            j += 1
    return tris


def _build_graded(a: float, R: float, s: float):
    """Rings at spacing s*sqrt(3)/2, sector counts graded with the radius."""
    dr_nominal = s * math.sqrt(3.0) / 2.0
    radii = [a]
    if a > 0.0:
        # a hexagon-sized inner ring: grow geometrically until the arc
        # spacing reaches s, so the first bands are not slivers
        q = 1.0 + math.pi / 3.0 * math.sqrt(3.0) / 2.0
        r_star = 3.0 * s / math.pi
        while radii[-1] < r_star and radii[-1] * q < R - 0.5 * dr_nominal:
            radii.append(radii[-1] * q)
    n_rest = max(1, math.ceil((R - radii[-1]) / dr_nominal - 1e-12))
    radii = np.concatenate([radii[:-1], radii[-1] + (R - radii[-1]) * np.arange(n_rest + 1) / n_rest])
    n_rings = len(radii) - 1
    rings_pts, rings_idx, rings_theta = [], [], []
    start = 0
    if a == 0.0:
        rings_pts.append(np.zeros((1, 2)))
        rings_idx.append(np.array([0]))
        rings_theta.append(np.zeros(1))
        start = 1
    offset = len(rings_pts)
    count = offset
    for j in range(start, n_rings + 1):
        r = radii[j]
        n = max(6, math.ceil(2 * np.pi * r / s - 1e-9))
        th = _ring_angles(n, 0.5 * (j % 2))
        rings_pts.append(np.column_stack([r * np.cos(th), r * np.sin(th)]))
        rings_idx.append(np.arange(count, count + n))
        rings_theta.append(th)
        count += n
    tris = []
    if a == 0.0:
        ring = rings_idx[1]
        for i in range(len(ring)):
            tris.append((0, ring[i], ring[(i + 1) % len(ring)]))
        first_band = 1
    else:
        first_band = 0
    for j in range(first_band, len(rings_idx) - 1):
        tris.extend(_zip_rings(rings_idx[j], rings_theta[j], rings_idx[j + 1], rings_theta[j + 1]))
    return np.vstack(rings_pts), np.asarray(tris, dtype=np.int64), rings_idx


def _build_uniform(a: float, R: float, dr: float, n_sec: int):
    """Rings times sectors, every quad split into two triangles (a > 0)."""
    n_rings = max(1, math.ceil((R - a) / dr - 1e-12))
    radii = a + (R - a) * np.arange(n_rings + 1) / n_rings
    th = _ring_angles(n_sec, 0.0)
    pts = np.concatenate([np.column_stack([r * np.cos(th), r * np.sin(th)]) for r in radii])
    idx = np.arange(len(pts)).reshape(n_rings + 1, n_sec)
    i0 = idx[:-1]
    i1 = np.roll(i0, -1, axis=1)
    o0 = idx[1:]
    o1 = np.roll(o0, -1, axis=1)
    # alternate the diagonal between rings for a more isotropic pattern
    tris = []
    for j in range(n_rings):
        if j % 2 == 0:
            t1 = np.stack([i0[j], i1[j], o1[j]], axis=1)
            t2 = np.stack([i0[j], o1[j], o0[j]], axis=1)
        else:
            t1 = np.stack([i0[j], i1[j], o0[j]], axis=1)
            t2 = np.stack([i1[j], o1[j], o0[j]], axis=1)
        tris.append(np.concatenate([t1, t2]))
    return pts, np.concatenate(tris), [idx[j] for j in range(n_rings + 1)]


def _finish(pts, tris, rings_idx, a, R) -> Mesh2D:
    # orient every triangle counter-clockwise
    p = pts[tris]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    neg = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] < 0
    tris = tris.copy()
    tris[neg] = tris[neg][:, [0, 2, 1]]
    outer = rings_idx[-1]
    edges = [np.column_stack([outer, np.roll(outer, -1)])]
    tags = [np.full(len(outer), GAMMA_R)]
    if a > 0:
        inner = rings_idx[0]
        # clockwise around the hole keeps the domain on the left
        edges.append(np.column_stack([np.roll(inner, -1), inner]))
        tags.append(np.full(len(inner), GAMMA))
    mesh = Mesh2D(
        vertices=pts,
        triangles=tris.astype(np.int64),
        boundary_edges=np.concatenate(edges).astype(np.int64),
        edge_tags=np.concatenate(tags).astype(np.int64),
        a=float(a),
        R=float(R),
        boundary_h=0.0,
    )
    object.__setattr__(mesh, "boundary_h", mesh.h)
    return mesh


def mesh_annulus(a: float, R: float, h_target: float, *, layout: str = "graded",
                 vertex_cap: int = DEFAULT_VERTEX_CAP) -> Mesh2D:
    """Polar triangulation of ``a <= |x| <= R`` with maximal diameter <= h_target.

    ``layout="graded"`` (default) chooses the sector count of each ring from
    its circumference and joins neighbouring rings by a sweep in angle, which
    keeps triangles close to equilateral and allows a = 0.  ``layout="uniform"``
    uses one sector count for all rings and splits each polar quad in two;
    it needs a > 0.
    """
    a = float(a)
    R = float(R)
    h_target = float(h_target)
    if not (0.0 <= a < R):
        raise MeshError("need 0 <= a < R")
    if h_target <= 0.0:
        raise MeshError("h_target must be positive")
    if 0.0 < a < 1e-9 * R:
        raise MeshError("obstacle radius below 1e-9 R cannot be resolved; use a = 0")
    if a > 0.0 and h_target > R - a:
        raise MeshError("h_target must not exceed R - a")
    area = np.pi * (R * R - a * a)
    estimate = area / (0.4 * h_target * h_target)
    if estimate > vertex_cap:
        raise MeshError(f"about {estimate:.3g} vertices needed, cap is {vertex_cap}")
    if layout == "graded":
        s = h_target / 1.3
        for _ in range(60):
            mesh = _finish(*_build_graded(a, R, s), a, R)
            if mesh.h <= h_target:
                break
            s *= 0.98 * h_target / mesh.h
        else:  # pragma: no cover - the loop converges in a few steps
            raise MeshError("could not meet h_target")
    elif layout == "uniform":
        if a == 0.0:
            raise MeshError("uniform layout needs an obstacle (a > 0)")
        step = h_target / math.sqrt(2.0)
        n_sec = max(6, math.ceil(2 * np.pi * R / step))
        mesh = _finish(*_build_uniform(a, R, step, n_sec), a, R)
    else:
        raise MeshError(f"unknown layout {layout!r}")
    if mesh.n_vertices > vertex_cap:
        raise MeshError(f"{mesh.n_vertices} vertices exceed the cap {vertex_cap}")
    return mesh


def _unique_edges(tris: np.ndarray):
    e = np.concatenate([tris[:, [1, 2]], tris[:, [2, 0]], tris[:, [0, 1]]])
    es = np.sort(e, axis=1)
    uniq, inv, counts = np.unique(es, axis=0, return_inverse=True, return_counts=True)
    return uniq, inv.reshape(3, -1).T, counts


def mesh_refine(m: Mesh2D, *, project_boundary: bool = True,
                vertex_cap: int = DEFAULT_VERTEX_CAP) -> Mesh2D:
    """Red refinement: every triangle is split into four.

    With ``project_boundary`` the new boundary vertices are moved onto the
    exact circles.  Without it the boundary polygon is kept, so the
    refined P1 space contains the coarse one.
    """
    uniq, tri_edges, _ = _unique_edges(m.triangles)
    nv = m.n_vertices
    if nv + len(uniq) > vertex_cap:
        raise MeshError(f"{nv + len(uniq)} vertices exceed the cap {vertex_cap}")
    mids = 0.5 * (m.vertices[uniq[:, 0]] + m.vertices[uniq[:, 1]])
    edge_id = {tuple(e): i for i, e in enumerate(uniq.tolist())}
    new_edges, new_tags = [], []
    for (p, q), tag in zip(m.boundary_edges.tolist(), m.edge_tags.tolist()):
        mid = nv + edge_id[(min(p, q), max(p, q))]
        new_edges += [(p, mid), (mid, q)]
        new_tags += [tag, tag]
        if project_boundary:
            radius = m.R if tag == GAMMA_R else m.a
            x = mids[mid - nv]
            mids[mid - nv] = radius * x / np.hypot(x[0], x[1])
    verts = np.vstack([m.vertices, mids])
    t = m.triangles
    e12, e20, e01 = (nv + tri_edges[:, i] for i in range(3))
    tris = np.concatenate([
        np.column_stack([t[:, 0], e01, e20]),
        np.column_stack([e01, t[:, 1], e12]),
        np.column_stack([e20, e12, t[:, 2]]),
        np.column_stack([e01, e12, e20]),
    ])
    fine = Mesh2D(
        vertices=verts,
        triangles=tris,
        boundary_edges=np.asarray(new_edges, dtype=np.int64),
        edge_tags=np.asarray(new_tags, dtype=np.int64),
        a=m.a,
        R=m.R,
        boundary_h=0.0,
        parents=uniq,
        parent=m if not project_boundary else None,
    )
    object.__setattr__(fine, "boundary_h", fine.h if project_boundary else m.boundary_h)
    return fine


def prolongation(coarse: Mesh2D, fine: Mesh2D):
    """Sparse matrix mapping coarse nodal values to a nested refinement.

    ``fine`` must come from repeated ``mesh_refine(..., project_boundary=False)``
    of ``coarse`` (the same object, not a copy).
    """
    import scipy.sparse as sp

    chain = []
    m = fine
    while m is not coarse:
        if m.parent is None:
            raise MeshError("fine mesh is not a nested refinement of the coarse mesh")
        chain.append(m)
        m = m.parent
    P = sp.identity(coarse.n_vertices, format="csr")
    for level in reversed(chain):
        nc = level.parent.n_vertices
        rows = np.concatenate([np.arange(nc), np.repeat(np.arange(nc, level.n_vertices), 2)])
        cols = np.concatenate([np.arange(nc), level.parents.ravel()])
        vals = np.concatenate([np.ones(nc), np.full(2 * len(level.parents), 0.5)])
        step = sp.csr_matrix((vals, (rows, cols)), shape=(level.n_vertices, nc))
        P = step @ P
    return P.tocsr()


def validate_mesh(m: Mesh2D, *, min_angle: float = MIN_ANGLE_DEG, c_geom: float = 2.0) -> list:
    """Return a list of violated invariants (empty when the mesh is valid)."""
    problems = []
    if np.any(m.signed_areas() <= 0):
        problems.append("triangle with non-positive signed area")
    uniq, _, counts = _unique_edges(m.triangles)
    if np.any(counts > 2):
        problems.append("edge shared by more than two triangles")
    bnd = {tuple(e) for e in uniq[counts == 1].tolist()}
    tagged = {tuple(sorted(e)) for e in m.boundary_edges.tolist()}
    if bnd != tagged or len(tagged) != len(m.boundary_edges):
        problems.append("tagged edges differ from the edges with a single triangle")
    tol = c_geom * m.boundary_h ** 2 / (2 * m.R)
    rv = m.vertices[m.tagged_vertices(GAMMA_R)]
    if len(rv) == 0:
        problems.append("no edges tagged gamma_R")
    elif np.any(np.abs(np.hypot(rv[:, 0], rv[:, 1]) - m.R) > tol + 1e-12 * m.R):
        problems.append("gamma_R vertex off the truncation circle")
    if m.shape_reg < min_angle:
        problems.append(f"minimum angle {m.shape_reg:.2f} below {min_angle}")
    return problems
