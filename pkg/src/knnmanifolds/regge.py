"""Polyhedral (non-smooth) closed surfaces.

Curvature on a polyhedron is concentrated at vertices: with theta_i the sum
of face angles incident on vertex i, the deficit Delta_i = 2 pi - theta_i
plays the role of integrated curvature, and Euler's relation
2 pi chi = sum_i Delta_i is the polyhedral Gauss-Bonnet theorem.

Geodesic distances on the built-in convex solids are computed exactly by
enumerating face-sequence unfoldings: each sequence of edge-adjacent faces
is developed isometrically into the plane of the source face, and a
straight planar segment that crosses every hinge edge of the sequence is a
surface geodesic of the same length.  The minimum over valid sequences (a
few hundred at the default depth) is the exact distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "VertexData",
    "PolyhedralSurface",
    "deficit_and_euler",
    "cone_disc_area",
    "unfolded_distance",
    "unfolded_distances_batch",
    "cube",
    "tetrahedron",
    "flat_torus_mesh",
    "random_convex_polyhedron",
    "read_off",
    "builtin_polyhedron",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class VertexData:
    index: int
    theta: float
    deficit: float


class MeshError(ValueError):
    pass


def _edge_key(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


class PolyhedralSurface:
    """Closed orientable polyhedral surface.

    Either `vertices` holds embedded 3-D positions (faces must be planar
    polygons), or `edge_lengths` supplies intrinsic metric data for a
    triangle mesh with no embedding (used for flat-torus triangulations).
    """

    def __init__(
        self,
        vertices: np.ndarray | None,
        faces: Sequence[Sequence[int]],
        edge_lengths: dict | None = None,
        name: str = "polyhedron",
    ):
        self.name = name
        self.vertices = None if vertices is None else np.asarray(vertices, dtype=float)
        self.faces = [tuple(int(i) for i in f) for f in faces]
        self.edge_lengths = dict(edge_lengths) if edge_lengths else None
        if self.vertices is None and self.edge_lengths is None:
            raise MeshError("need embedded vertices or intrinsic edge lengths")
        if self.edge_lengths is not None and any(len(f) != 3 for f in self.faces):
            raise MeshError("intrinsic meshes must be triangulated")
        self._validate_closed_orientable()
        self._frames = None
        self._unfold_cache: dict = {}

    # -- combinatorics ------------------------------------------------------

    def _validate_closed_orientable(self):
        directed = set()
        undirected: dict[tuple[int, int], int] = {}
        for fi, face in enumerate(self.faces):
            if len(face) < 3 or len(set(face)) != len(face):
                raise MeshError(f"degenerate face {fi}: {face}")
            for a, b in zip(face, face[1:] + face[:1]):
                if (a, b) in directed:
                    raise MeshError(f"directed edge ({a},{b}) repeated; mesh not orientable")
                directed.add((a, b))
                undirected[_edge_key(a, b)] = undirected.get(_edge_key(a, b), 0) + 1
        bad = {e: c for e, c in undirected.items() if c != 2}
        if bad:
            raise MeshError(f"mesh not closed: edges with face count != 2: {bad}")
        self._edges = sorted(undirected)
        used = {i for f in self.faces for i in f}
        n_vert = (len(self.vertices) if self.vertices is not None
                  else max(used) + 1)
        if used != set(range(n_vert)):
            raise MeshError("isolated or out-of-range vertex indices")
        self.n_vertices = n_vert

    @property
    def n_edges(self) -> int:
        return len(self._edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def euler_characteristic_combinatorial(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    # -- metric -------------------------------------------------------------

    def edge_length(self, i: int, j: int) -> float:
        if self.edge_lengths is not None:
            return self.edge_lengths[_edge_key(i, j)]
        return float(np.linalg.norm(self.vertices[i] - self.vertices[j]))

    def corner_angle(self, face: Sequence[int], corner: int) -> float:
        """Interior angle of `face` at vertex index `corner`."""
        k = face.index(corner)
        prev_v = face[k - 1]
        next_v = face[(k + 1) % len(face)]
        if self.vertices is not None:
            a = self.vertices[prev_v] - self.vertices[corner]
            b = self.vertices[next_v] - self.vertices[corner]
            cosang = np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b))
        else:
            la = self.edge_length(corner, prev_v)
            lb = self.edge_length(corner, next_v)
            lc = self.edge_length(prev_v, next_v)
            cosang = (la**2 + lb**2 - lc**2) / (2.0 * la * lb)
        return math.acos(min(1.0, max(-1.0, float(cosang))))

    def face_area(self, fi: int) -> float:
        face = self.faces[fi]
        if self.vertices is not None:
            pts = self.vertices[list(face)]
            total = np.zeros(3)
            for k in range(1, len(face) - 1):
                total += np.cross(pts[k] - pts[0], pts[k + 1] - pts[0])
            return 0.5 * float(np.linalg.norm(total))
        a, b, c = face
        la, lb, lc = self.edge_length(a, b), self.edge_length(b, c), self.edge_length(c, a)
        s = 0.5 * (la + lb + lc)
        return math.sqrt(max(0.0, s * (s - la) * (s - lb) * (s - lc)))

    @property
    def total_area(self) -> float:
        return math.fsum(self.face_area(i) for i in range(self.n_faces))

    def normalized(self) -> "PolyhedralSurface":
        """Rescaled copy with unit total area (embedded meshes only)."""
        if self.vertices is None:
            raise MeshError("cannot rescale an intrinsic mesh by embedding")
        scale = 1.0 / math.sqrt(self.total_area)
        return PolyhedralSurface(self.vertices * scale, self.faces, name=self.name)

    # -- planar face frames and unfolding ------------------------------------

    def _face_frame(self, fi: int):
        """(origin, e1, e2, normal) orthonormal in-plane frame of face fi."""
        pts = self.vertices[list(self.faces[fi])]
        o = pts[0]
        e1 = pts[1] - o
        e1 = e1 / np.linalg.norm(e1)
        n = np.cross(pts[1] - o, pts[2] - o)
        for k in range(2, len(pts) - 1):
            if np.linalg.norm(n) > 1e-12:
                break
            n = np.cross(pts[k] - o, pts[k + 1] - o)
        n = n / np.linalg.norm(n)
        e2 = np.cross(n, e1)
        return o, e1, e2, n

    def _frames_all(self):
        if self._frames is None:
            self._frames = [self._face_frame(fi) for fi in range(self.n_faces)]
        return self._frames

    def to_plane(self, fi: int, xyz: np.ndarray) -> np.ndarray:
        """Map 3-D points on face fi into its own plane coordinates."""
        o, e1, e2, _ = self._frames_all()[fi]
        rel = np.asarray(xyz, dtype=float) - o
        return np.stack([rel @ e1, rel @ e2], axis=-1)

    def planarity_check(self, tol: float = 1e-9) -> float:
        worst = 0.0
        for fi, face in enumerate(self.faces):
            o, _, _, n = self._frames_all()[fi]
            worst = max(worst, float(np.max(np.abs((self.vertices[list(face)] - o) @ n))))
        if worst > tol:
            raise MeshError(f"non-planar face detected (deviation {worst:.2e})")
        return worst

    def face_adjacency(self) -> dict:
        """edge key -> (face_a, face_b)."""
        owners: dict[tuple[int, int], list[int]] = {}
        for fi, face in enumerate(self.faces):
            for a, b in zip(face, face[1:] + face[:1]):
                owners.setdefault(_edge_key(a, b), []).append(fi)
        return {e: tuple(fs) for e, fs in owners.items()}

    def locate(self, xyz, tol: float = 1e-9) -> int:
        """Lowest-index face containing the embedded point (within tol)."""
        xyz = np.asarray(xyz, dtype=float)
        for fi, face in enumerate(self.faces):
            o, e1, e2, n = self._frames_all()[fi]
            if abs(float((xyz - o) @ n)) > tol:
                continue
            pl = self.to_plane(fi, xyz)
            poly = self.to_plane(fi, self.vertices[list(face)])
            if _point_in_polygon(pl, poly, tol):
                return fi
        raise ValueError("point does not lie on any face")

    # -- uniform sampling -----------------------------------------------------

    def sampling_tables(self):
        """Cumulative face probabilities plus per-face fan triangulations."""
        areas = np.array([self.face_area(i) for i in range(self.n_faces)])
        cdf = np.cumsum(areas / areas.sum())
        tris = []
        for face in self.faces:
            pts = self.vertices[list(face)]
            t_areas = []
            for k in range(1, len(face) - 1):
                t_areas.append(0.5 * np.linalg.norm(np.cross(pts[k] - pts[0], pts[k + 1] - pts[0])))
            t_areas = np.asarray(t_areas)
            tris.append((pts, np.cumsum(t_areas / t_areas.sum())))
        return cdf, tris


def _point_in_polygon(p, poly, tol: float) -> bool:
    """Convex-polygon membership via consistent cross-product signs."""
    sign = 0.0
    m = len(poly)
    for i in range(m):
        a, b = poly[i], poly[(i + 1) % m]
        cr = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if abs(cr) <= tol:
            continue
        if sign == 0.0:
            sign = math.copysign(1.0, cr)
        elif math.copysign(1.0, cr) != sign:
            return False
    return True


# ---------------------------------------------------------------------------
# Deficits and Euler's relation
# ---------------------------------------------------------------------------


def deficit_and_euler(p: PolyhedralSurface) -> tuple[list[VertexData], float]:
    """Per-vertex deficit angles and chi = sum(deficits)/2pi.

    For a valid closed mesh the result agrees with the combinatorial
    Euler characteristic V - E + F.
    """
    thetas = np.zeros(p.n_vertices)
    for face in p.faces:
        for corner in face:
            thetas[corner] += p.corner_angle(face, corner)
    data = [
        VertexData(index=i, theta=float(t), deficit=float(_TWO_PI - t))
        for i, t in enumerate(thetas)
    ]
    chi = math.fsum(d.deficit for d in data) / _TWO_PI
    return data, chi


# ---------------------------------------------------------------------------
# Cone geometry
# ---------------------------------------------------------------------------


def cone_disc_area(deficit: float, r_vertex: float, l: float) -> float:
    """Exact area of a geodesic disc on a cone of the given deficit angle.

    The cone is unrolled to a planar sector of angle 2pi - deficit.  In
    polar coordinates about the apex the disc boundary is
    rho(phi) = r cos(phi) + sqrt(l^2 - r^2 sin^2(phi)), and the sector area
    integrates in closed form.  Centered at the apex this reduces to
    (1 - deficit/2pi) pi l^2; a disc that misses the apex keeps the flat
    value pi l^2; in between, the flat-value correction is O(deficit) with
    slope -(l - r)^2/2 at deficit = 0.
    """
    if not 0.0 <= deficit < _TWO_PI:
        raise ValueError(f"deficit angle must lie in [0, 2pi), got {deficit}")
    if l < 0.0 or r_vertex < 0.0:
        raise ValueError("lengths must be nonnegative")
    if l == 0.0:
        return 0.0
    cone_angle = _TWO_PI - deficit
    half = 0.5 * cone_angle
    r = r_vertex

    def seg(t: float) -> float:
        # integral of sqrt(l^2 - x^2) dx from 0 to t
        t = min(max(t, -l), l)
        return 0.5 * (t * math.sqrt(max(l * l - t * t, 0.0)) + l * l * math.asin(t / l))

    if r == 0.0:
        return half * l * l
    if r < l:
        return l * l * half + 0.5 * r * r * math.sin(2.0 * half) + 2.0 * seg(r * math.sin(half))
    # disc does not contain the apex; cap the angular half-width at the
    # tangent direction, beyond which no boundary points exist
    phi_c = min(half, math.asin(min(1.0, l / r)))
    return 4.0 * seg(r * math.sin(phi_c))


# ---------------------------------------------------------------------------
# Unfolded geodesic distances
# ---------------------------------------------------------------------------


class _Unfolding:
    """One developed face sequence: planar isometry + hinge segments."""

    __slots__ = ("face", "rot", "shift", "hinges")

    def __init__(self, face: int, rot: np.ndarray, shift: np.ndarray, hinges: list):
        self.face = face
        self.rot = rot
        self.shift = shift
        self.hinges = hinges


def _planar_isometry(b1, b2, b_ref, a1, a2, a_side_point):
    """Isometry M x + t with M in O(2) taking b1->a1, b2->a2 and placing
    b_ref on the opposite side of segment (a1,a2) from a_side_point."""
    db = b2 - b1
    da = a2 - a1
    nb = np.linalg.norm(db)
    # rotation taking db -> da
    cosr = (db @ da) / (nb * nb)
    sinr = (db[0] * da[1] - db[1] * da[0]) / (nb * nb)
    rot = np.array([[cosr, -sinr], [sinr, cosr]])
    refl = np.array([[1.0, 0.0], [0.0, -1.0]])

    def build(m):
        shift = a1 - m @ b1
        return m, shift

    for m in (rot, rot @ _reflection_across(db)):
        m, shift = build(m)
        if np.linalg.norm(m @ b2 + shift - a2) > 1e-9 * max(1.0, np.linalg.norm(a2)):
            continue
        ref_img = m @ b_ref + shift
        side_ref = _side(a1, a2, ref_img)
        side_a = _side(a1, a2, a_side_point)
        if side_ref * side_a < 0.0:
            return m, shift
    raise RuntimeError("could not orient unfolding isometry")


def _reflection_across(d):
    """Reflection across the line through the origin with direction d."""
    n2 = d @ d
    return np.array(
        [
            [(d[0] ** 2 - d[1] ** 2) / n2, 2 * d[0] * d[1] / n2],
            [2 * d[0] * d[1] / n2, (d[1] ** 2 - d[0] ** 2) / n2],
        ]
    )


def _side(a, b, p) -> float:
    return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])


def _enumerate_unfoldings(p: PolyhedralSurface, source: int, depth: int) -> list[_Unfolding]:
    adjacency = p.face_adjacency()
    neighbors: dict[int, list[tuple[int, tuple[int, int]]]] = {}
    for edge, (fa, fb) in adjacency.items():
        neighbors.setdefault(fa, []).append((fb, edge))
        neighbors.setdefault(fb, []).append((fa, edge))

    def face_plane_pts(fi):
        return p.to_plane(fi, p.vertices[list(p.faces[fi])])

    centroids = {fi: face_plane_pts(fi).mean(axis=0) for fi in range(p.n_faces)}

    out = [_Unfolding(source, np.eye(2), np.zeros(2), [])]
    stack = [(source, np.eye(2), np.zeros(2), [], 0, None)]
    while stack:
        face, rot, shift, hinges, d, came_from = stack.pop()
        if d == depth:
            continue
        for nb, edge in neighbors[face]:
            if came_from is not None and nb == came_from and len(hinges) > 0 and edge == hinges[-1][2]:
                continue  # immediate backtrack across the same hinge
            w1, w2 = edge
            a_pl = rot @ p.to_plane(face, p.vertices[w1]) + shift
            b_pl = rot @ p.to_plane(face, p.vertices[w2]) + shift
            nb1 = p.to_plane(nb, p.vertices[w1])
            nb2 = p.to_plane(nb, p.vertices[w2])
            side_pt = rot @ centroids[face] + shift
            m, t = _planar_isometry(nb1, nb2, centroids[nb], a_pl, b_pl, side_pt)
            rot2 = m
            shift2 = t
            hinges2 = hinges + [(a_pl, b_pl, edge)]
            out.append(_Unfolding(nb, rot2, shift2, hinges2))
            stack.append((nb, rot2, shift2, hinges2, d + 1, face))
    return out


def _unfoldings_by_target(p: PolyhedralSurface, source: int, depth: int):
    key = (source, depth)
    if key not in p._unfold_cache:
        table: dict[int, list[_Unfolding]] = {}
        for unf in _enumerate_unfoldings(p, source, depth):
            table.setdefault(unf.face, []).append(unf)
        packed = {}
        for face, unfs in table.items():
            rots = np.stack([u.rot for u in unfs])
            shifts = np.stack([u.shift for u in unfs])
            max_h = max(len(u.hinges) for u in unfs)
            h1 = np.zeros((len(unfs), max_h, 2))
            h2 = np.zeros((len(unfs), max_h, 2))
            hmask = np.zeros((len(unfs), max_h), dtype=bool)
            for i, u in enumerate(unfs):
                for j, (a, b, _e) in enumerate(u.hinges):
                    h1[i, j] = a
                    h2[i, j] = b
                    hmask[i, j] = True
            packed[face] = (rots, shifts, h1, h2, hmask)
        p._unfold_cache[key] = packed
    return p._unfold_cache[key]


_SEG_TOL = 1e-9


def _crossing_mask(a, b_img, h1, h2, hmask):
    """Does segment a->b cross every active hinge?  Vectorized.

    a: (2,), b_img: (n_unf, n_pts, 2), h1/h2: (n_unf, n_h, 2).
    Returns boolean (n_unf, n_pts).
    """
    d = b_img - a  # (U, P, 2)
    r = (h2 - h1)[:, None, :, :]  # (U, 1, H, 2)
    ah = (h1 - a)[:, None, :, :]  # (U, 1, H, 2)
    dd = d[:, :, None, :]  # (U, P, 1, 2)
    denom = dd[..., 0] * r[..., 1] - dd[..., 1] * r[..., 0]  # (U, P, H)
    t_num = ah[..., 0] * r[..., 1] - ah[..., 1] * r[..., 0]
    s_num = ah[..., 0] * dd[..., 1] - ah[..., 1] * dd[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = t_num / denom
        s = s_num / denom
    ok = (
        (np.abs(denom) > 1e-14)
        & (t >= -_SEG_TOL) & (t <= 1.0 + _SEG_TOL)
        & (s >= -_SEG_TOL) & (s <= 1.0 + _SEG_TOL)
    )
    ok |= ~hmask[:, None, :]  # padded hinge slots always pass
    return np.all(ok, axis=2)


def unfolded_distances_batch(
    p: PolyhedralSurface,
    a_face: int,
    a_xyz,
    b_faces,
    b_xyz,
    depth: int = 4,
) -> np.ndarray:
    """Exact geodesic distances from one point to many points.

    Points are given as (face index, embedded position).  Distances are the
    minimum over developed face sequences of the planar straight-line
    length, restricted to developments whose hinge edges the segment
    actually crosses.
    """
    a_pl = p.to_plane(a_face, np.asarray(a_xyz, dtype=float))
    b_faces = np.asarray(b_faces, dtype=int)
    b_xyz = np.asarray(b_xyz, dtype=float).reshape(-1, 3)
    out = np.full(len(b_faces), np.inf)
    tables = _unfoldings_by_target(p, a_face, depth)
    for face in np.unique(b_faces):
        sel = np.flatnonzero(b_faces == face)
        if int(face) not in tables:
            continue
        rots, shifts, h1, h2, hmask = tables[int(face)]
        b_pl = p.to_plane(int(face), b_xyz[sel])  # (P, 2)
        img = np.einsum("uij,pj->upi", rots, b_pl) + shifts[:, None, :]  # (U, P, 2)
        dist = np.linalg.norm(img - a_pl, axis=2)  # (U, P)
        valid = _crossing_mask(a_pl, img, h1, h2, hmask)
        dist = np.where(valid, dist, np.inf)
        out[sel] = dist.min(axis=0)
    if not np.all(np.isfinite(out)):
        raise RuntimeError(
            f"no valid unfolding found for some targets at depth {depth}; increase depth"
        )
    return out


def unfolded_distance(
    p: PolyhedralSurface, a_face: int, a_xyz, b_face: int, b_xyz, depth: int = 4
) -> float:
    """Exact geodesic distance between two surface points of a convex solid."""
    return float(
        unfolded_distances_batch(p, a_face, a_xyz, [b_face], [np.asarray(b_xyz)], depth)[0]
    )


def vertex_distances(p: PolyhedralSurface, face: int, xyz, depth: int = 4) -> np.ndarray:
    """Geodesic distance from a surface point to every mesh vertex."""
    adjacency: dict[int, list[int]] = {}
    for fi, f in enumerate(p.faces):
        for vtx in f:
            adjacency.setdefault(vtx, []).append(fi)
    out = np.zeros(p.n_vertices)
    for vtx, facelist in adjacency.items():
        cands = unfolded_distances_batch(
            p, face, xyz, facelist, np.tile(p.vertices[vtx], (len(facelist), 1)), depth
        )
        out[vtx] = cands.min()
    return out


# ---------------------------------------------------------------------------
# Built-in meshes
# ---------------------------------------------------------------------------


def cube(side: float | None = None) -> PolyhedralSurface:
    """Axis-aligned cube; side defaults to unit total area (6 a^2 = 1)."""
    a = side if side is not None else 1.0 / math.sqrt(6.0)
    h = a / 2.0
    vs = np.array(
        [[sx, sy, sz] for sx in (-h, h) for sy in (-h, h) for sz in (-h, h)]
    )
    # faces with outward-consistent winding
    faces = [
        (0, 1, 3, 2),  # x = -h
        (4, 6, 7, 5),  # x = +h
        (0, 4, 5, 1),  # y = -h
        (2, 3, 7, 6),  # y = +h
        (0, 2, 6, 4),  # z = -h
        (1, 5, 7, 3),  # z = +h
    ]
    return PolyhedralSurface(vs, faces, name="cube")


def tetrahedron(side: float | None = None) -> PolyhedralSurface:
    """Regular tetrahedron; side defaults to unit total area (sqrt(3) a^2 = 1)."""
    a = side if side is not None else 3.0 ** (-0.25)
    vs = np.array(
        [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
    )
    vs = vs * (a / (2.0 * math.sqrt(2.0)))
    faces = [(0, 2, 1), (0, 1, 3), (0, 3, 2), (1, 2, 3)]
    return PolyhedralSurface(vs, faces, name="tetrahedron")


def flat_torus_mesh(n: int = 4) -> PolyhedralSurface:
    """Unit flat torus triangulated on an n x n periodic grid (intrinsic).

    Every vertex is flat (deficit 0); V - E + F = 0.
    """
    if n < 3:
        raise ValueError("need n >= 3 for a simplicial torus grid")
    idx = lambda i, j: (i % n) * n + (j % n)
    faces = []
    lengths = {}
    h = 1.0 / n
    diag = math.sqrt(2.0) / n
    for i in range(n):
        for j in range(n):
            v00, v10 = idx(i, j), idx(i + 1, j)
            v01, v11 = idx(i, j + 1), idx(i + 1, j + 1)
            faces.append((v00, v10, v11))
            faces.append((v00, v11, v01))
            lengths[_edge_key(v00, v10)] = h
            lengths[_edge_key(v00, v01)] = h
            lengths[_edge_key(v00, v11)] = diag
    return PolyhedralSurface(None, faces, edge_lengths=lengths, name=f"flat-torus-mesh-{n}")


def random_convex_polyhedron(gen, n_points: int = 12) -> PolyhedralSurface:
    """Convex hull of random sphere points: a random genus-0 triangle mesh."""
    from scipy.spatial import ConvexHull

    pts = gen.normal(size=(n_points, 3))
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    hull = ConvexHull(pts)
    used = np.unique(hull.simplices)
    remap = {int(o): i for i, o in enumerate(used)}
    verts = pts[used]
    centroid = verts.mean(axis=0)
    faces = []
    for simplex in hull.simplices:
        tri = [remap[int(i)] for i in simplex]
        a, b, c = (verts[t] for t in tri)
        if np.dot(np.cross(b - a, c - a), a - centroid) < 0.0:
            tri = tri[::-1]
        faces.append(tuple(tri))
    return PolyhedralSurface(verts, faces, name="random-convex")


def read_off(path) -> PolyhedralSurface:
    """Minimal OFF mesh reader (vertices + faces, no colors)."""
    with open(path) as fh:
        tokens = [
            tok
            for line in fh
            if (stripped := line.split("#", 1)[0].strip())
            for tok in stripped.split()
        ]
    if not tokens or tokens[0] != "OFF":
        raise MeshError("not an OFF file")
    nv, nf = int(tokens[1]), int(tokens[2])
    pos = 4
    verts = np.array(tokens[pos : pos + 3 * nv], dtype=float).reshape(nv, 3)
    pos += 3 * nv
    faces = []
    for _ in range(nf):
        cnt = int(tokens[pos])
        faces.append(tuple(int(t) for t in tokens[pos + 1 : pos + 1 + cnt]))
        pos += 1 + cnt
    return PolyhedralSurface(verts, faces, name="off-mesh")


def builtin_polyhedron(name: str) -> PolyhedralSurface:
    builders = {"cube": cube, "tetrahedron": tetrahedron, "flat-torus-mesh": flat_torus_mesh}
    if name not in builders:
        raise KeyError(f"unknown polyhedron {name!r}; available: {sorted(builders)}")
    return builders[name]()
