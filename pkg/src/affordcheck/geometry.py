"""Mesh, box, ray and polygon primitives.

Conventions: world is Y-up, meters. Ground-plane quantities are 2D arrays
ordered ``(x, z)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

AREA_TOL = 1e-12
CONTACT_TOL = 1e-6
RAY_T_TOL = 1e-6

# brute force below this many (point, triangle) pairs
_BRUTE_FORCE_PAIRS = 20_000
_CHUNK_PAIRS = 500_000


class GeometryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        t = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise GeometryError("triangle index out of range")
        if not np.all(np.isfinite(v)):
            raise GeometryError("non-finite vertex coordinates")
        v.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        if t.size and np.any(self.areas() <= AREA_TOL):
            raise GeometryError("degenerate triangle (area <= 1e-12 m^2)")

    def __len__(self):
        return len(self.triangles)

    @property
    def corners(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        tri = self.vertices[self.triangles]
        return tri[:, 0], tri[:, 1], tri[:, 2]

    def areas(self) -> np.ndarray:
        a, b, c = self.corners
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def barycenters(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @staticmethod
    def concatenate(meshes: list[TriangleMesh]) -> TriangleMesh:
        if not meshes:
            return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
        verts, tris, offset = [], [], 0
        for m in meshes:
            verts.append(m.vertices)
            tris.append(m.triangles + offset)
            offset += len(m.vertices)
        return TriangleMesh(np.concatenate(verts), np.concatenate(tris))


@dataclass(frozen=True, eq=False)
class OrientedBox:
    """Box rotated by ``yaw`` radians about the vertical axis."""

    center: np.ndarray
    half_extents: np.ndarray
    yaw: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(3)
        h = np.asarray(self.half_extents, dtype=float).reshape(3)
        if np.any(h <= 0):
            raise GeometryError("half extents must be positive")
        c.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_extents", h)
        object.__setattr__(self, "yaw", float(self.yaw))

    @property
    def axes(self) -> np.ndarray:
        """Rows are the local x, y, z unit axes in world coordinates."""
        c, s = np.cos(self.yaw), np.sin(self.yaw)
        return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])

    @property
    def bottom(self) -> float:
        return float(self.center[1] - self.half_extents[1])

    @property
    def top(self) -> float:
        return float(self.center[1] + self.half_extents[1])

    def corners(self) -> np.ndarray:
        signs = np.array(
            [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
            dtype=float,
        )
        return self.center + (signs * self.half_extents) @ self.axes

    def ground_rectangle(self) -> np.ndarray:
        """Footprint corners on the ground plane, counter-clockwise in (x, z)."""
        ax = self.axes
        hx, hz = self.half_extents[0], self.half_extents[2]
        c = self.center
        pts = [
            c - hx * ax[0] - hz * ax[2],
            c + hx * ax[0] - hz * ax[2],
            c + hx * ax[0] + hz * ax[2],
            c - hx * ax[0] + hz * ax[2],
        ]
        return _ccw(np.array(pts)[:, [0, 2]])

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        local = (np.atleast_2d(points) - self.center) @ self.axes.T
        return np.all(np.abs(local) <= self.half_extents + tol, axis=1)

    def inflated(self, margin: float) -> OrientedBox:
        return OrientedBox(self.center, self.half_extents + margin, self.yaw)

    def to_mesh(self) -> TriangleMesh:
        return TriangleMesh(self.corners(), _BOX_TRIANGLES)


# corner i encodes signs (x, y, z) as bits (4, 2, 1) of i with 1 meaning +
_BOX_TRIANGLES = np.array(
    [
        [0, 1, 3], [0, 3, 2],  # -x
        [4, 6, 7], [4, 7, 5],  # +x
        [0, 4, 5], [0, 5, 1],  # -y
        [2, 3, 7], [2, 7, 6],  # +y
        [0, 2, 6], [0, 6, 4],  # -z
        [1, 5, 7], [1, 7, 3],  # +z
    ]
)


class Face(str, enum.Enum):
    FRONT = "front"
    BACK = "back"
    LEFT = "left"
    RIGHT = "right"


ZONE_COLORS = {Face.FRONT: "red", Face.RIGHT: "green", Face.BACK: "blue", Face.LEFT: "yellow"}

# (local axis index, outward sign); front faces local +z
FACE_NORMALS = {Face.FRONT: (2, 1.0), Face.BACK: (2, -1.0), Face.LEFT: (0, -1.0), Face.RIGHT: (0, 1.0)}


@dataclass(frozen=True, eq=False)
class InteractionZone:
    face: Face
    polygon: np.ndarray
    color_tag: str

    def __post_init__(self):
        p = np.asarray(self.polygon, dtype=float).reshape(4, 2)
        if abs(polygon_area(p)) <= AREA_TOL:
            raise GeometryError("degenerate interaction zone")
        p.setflags(write=False)
        object.__setattr__(self, "polygon", p)


@dataclass(frozen=True)
class DistanceResult:
    distance: float
    index: int


# --------------------------------------------------------------------------
# point / triangle distance


def closest_points_on_triangles(p, a, b, c) -> np.ndarray:
    """Closest point on triangle ``abc`` to ``p``; all inputs broadcast to (k, 3).

    Region classification after Ericson, Real-Time Collision Detection 5.1.5.
    """
    p, a, b, c = np.broadcast_arrays(p, a, b, c)
    ab, ac, ap = b - a, c - a, p - a
    bp, cp = p - b, p - c
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    with np.errstate(divide="ignore", invalid="ignore"):
        denom = va + vb + vc
        v = vb / denom
        w = vc / denom
        out = a + ab * v[:, None] + ac * w[:, None]

        in_bc = (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0)
        t_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        out = np.where(in_bc[:, None], b + (c - b) * t_bc[:, None], out)

        in_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
        t_ac = d2 / (d2 - d6)
        out = np.where(in_ac[:, None], a + ac * t_ac[:, None], out)

        in_c = (d6 >= 0) & (d5 <= d6)
        out = np.where(in_c[:, None], c, out)

        in_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
        t_ab = d1 / (d1 - d3)
        out = np.where(in_ab[:, None], a + ab * t_ab[:, None], out)

        in_b = (d3 >= 0) & (d4 <= d3)
        out = np.where(in_b[:, None], b, out)

        in_a = (d1 <= 0) & (d2 <= 0)
        out = np.where(in_a[:, None], a, out)
    return out


def _pairwise_brute(points, a, b, c) -> DistanceResult:
    n, m = len(points), len(a)
    best, best_idx = np.inf, -1
    rows = max(1, _CHUNK_PAIRS // max(m, 1))
    for start in range(0, n, rows):
        chunk = points[start : start + rows]
        k = len(chunk)
        p = np.repeat(chunk, m, axis=0)
        q = closest_points_on_triangles(p, np.tile(a, (k, 1)), np.tile(b, (k, 1)), np.tile(c, (k, 1)))
        d = np.linalg.norm(p - q, axis=1).reshape(k, m).min(axis=1)
        i = int(np.argmin(d))
        if d[i] < best:
            best, best_idx = float(d[i]), start + i
    return DistanceResult(best, best_idx)


def _pruned(points, a, b, c) -> DistanceResult:
    tree = cKDTree(points)
    centroids = (a + b + c) / 3.0
    radii = np.max(
        np.stack([np.linalg.norm(v - centroids, axis=1) for v in (a, b, c)]), axis=0
    )
    near_d, near_i = tree.query(centroids)
    q = closest_points_on_triangles(points[near_i], a, b, c)
    upper = np.linalg.norm(points[near_i] - q, axis=1)
    j = int(np.argmin(upper))
    best, best_idx = float(upper[j]), int(near_i[j])
    lower = np.maximum(near_d - radii, 0.0)
    for t in np.argsort(lower, kind="stable"):
        if lower[t] >= best:
            break
        # any point closer than `best` to the triangle lies in this ball
        cand = tree.query_ball_point(centroids[t], best + radii[t])
        if not cand:
            continue
        cand = np.asarray(cand)
        pts = points[cand]
        d = np.linalg.norm(pts - closest_points_on_triangles(pts, a[t], b[t], c[t]), axis=1)
        i = int(np.argmin(d))
        if d[i] < best:
            best, best_idx = float(d[i]), int(cand[i])
    return DistanceResult(best, best_idx)


def min_distance_points_to_mesh(points, mesh: TriangleMesh, accelerate: bool | None = None) -> DistanceResult:
    """Exact minimum Euclidean distance between a point set and a triangle mesh.

    Args:
        points: (n, 3) array.
        mesh: target surface.
        accelerate: force (True) or disable (False) k-d tree pruning. By
            default pruning kicks in for large problems only.

    Returns:
        The distance and the index of the point attaining it.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(points) == 0 or len(mesh) == 0:
        raise ValueError("min_distance requires non-empty points and mesh")
    a, b, c = mesh.corners
    if accelerate is None:
        accelerate = len(points) * len(a) > _BRUTE_FORCE_PAIRS
    if accelerate:
        return _pruned(points, a, b, c)
    return _pairwise_brute(points, a, b, c)


def min_distance_points_to_points(points, targets) -> DistanceResult:
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    targets = np.asarray(targets, dtype=float).reshape(-1, 3)
    if len(points) == 0 or len(targets) == 0:
        raise ValueError("min_distance requires non-empty inputs")
    d, _ = cKDTree(targets).query(points)
    i = int(np.argmin(d))
    return DistanceResult(float(d[i]), i)


def translate_mesh(mesh: TriangleMesh, offset) -> TriangleMesh:
    return TriangleMesh(mesh.vertices + np.asarray(offset, dtype=float), mesh.triangles)


# --------------------------------------------------------------------------
# rays


def segment_hits(occluders: TriangleMesh, origin, target) -> np.ndarray:
    """Boolean mask of triangles crossing the open segment (origin, target)."""
    if len(occluders) == 0:
        return np.zeros(0, dtype=bool)
    o = np.asarray(origin, dtype=float)
    d = np.asarray(target, dtype=float) - o
    a, b, c = occluders.corners
    e1, e2 = b - a, c - a
    pvec = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    scale = np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1) * np.linalg.norm(d)
    ok = np.abs(det) > 1e-12 * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        tvec = o - a
        u = np.einsum("ij,ij->i", tvec, pvec) * inv
        qvec = np.cross(tvec, e1)
        v = (qvec @ d) * inv
        t = np.einsum("ij,ij->i", e2, qvec) * inv
    return ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > RAY_T_TOL) & (t < 1 - RAY_T_TOL)


def ray_blocked(occluders, origin, target) -> bool:
    """True iff some occluder triangle crosses the segment strictly before ``target``."""
    if np.array_equal(np.asarray(origin, dtype=float), np.asarray(target, dtype=float)):
        raise ValueError("ray origin and target coincide")
    if isinstance(occluders, TriangleMesh):
        occluders = [occluders]
    return any(bool(segment_hits(m, origin, target).any()) for m in occluders if len(m))


# --------------------------------------------------------------------------
# ground-plane polygons


def polygon_area(poly) -> float:
    """Signed shoelace area; positive for counter-clockwise (x, z) order."""
    p = np.asarray(poly, dtype=float)
    x, z = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(z, -1)) - np.dot(np.roll(x, -1), z))


def _ccw(poly):
    return poly if polygon_area(poly) >= 0 else poly[::-1].copy()


def convex_hull_2d(points) -> np.ndarray:
    """Andrew's monotone chain; returns hull vertices counter-clockwise."""
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def project_footprint(mesh: TriangleMesh) -> np.ndarray:
    if len(mesh.vertices) == 0:
        raise ValueError("empty mesh")
    return convex_hull_2d(mesh.vertices[:, [0, 2]])


def points_in_convex_polygon(points, poly, tol: float = 1e-9) -> np.ndarray:
    """Inclusive containment test of (n, 2) points in a convex polygon."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    poly = _ccw(np.asarray(poly, dtype=float))
    inside = np.ones(len(pts), dtype=bool)
    for i in range(len(poly)):
        p0, p1 = poly[i], poly[(i + 1) % len(poly)]
        edge = p1 - p0
        rel = pts - p0
        inside &= edge[0] * rel[:, 1] - edge[1] * rel[:, 0] >= -tol * max(np.linalg.norm(edge), 1.0)
    return inside


def points_on_floor(points, floor: TriangleMesh) -> np.ndarray:
    """Ground-plane containment of (n, 2) points in the floor's projected triangles."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    inside = np.zeros(len(pts), dtype=bool)
    for tri in floor.vertices[floor.triangles][:, :, [0, 2]]:
        if abs(polygon_area(tri)) <= AREA_TOL:
            continue
        inside |= points_in_convex_polygon(pts, tri)
    return inside


def face_zones(obb: OrientedBox, depth: float = 0.75, flare: float = 1.0) -> list[InteractionZone]:
    """Four ground trapezoids flush with the vertical faces of ``obb``.

    The inner edge is the face's ground projection; the outer edge sits
    ``depth`` further out and is ``flare`` times as wide.
    """
    if depth <= 0:
        raise ValueError("zone depth must be positive")
    if flare < 1:
        raise ValueError("zone flare must be >= 1")
    ax2 = obb.axes[:, [0, 2]]
    c2 = obb.center[[0, 2]]
    zones = []
    for face in (Face.FRONT, Face.BACK, Face.LEFT, Face.RIGHT):
        k, sign = FACE_NORMALS[face]
        tk = 2 - k  # tangential axis: x for z-faces and vice versa
        n = sign * ax2[k]
        t = ax2[tk]
        hn, ht = obb.half_extents[k], obb.half_extents[tk]
        inner = c2 + n * hn
        outer = c2 + n * (hn + depth)
        poly = np.array([inner - t * ht, inner + t * ht, outer + t * ht * flare, outer - t * ht * flare])
        zones.append(InteractionZone(face, _ccw(poly), ZONE_COLORS[face]))
    return zones


# --------------------------------------------------------------------------
# separating-axis overlap tests


def _separated_on(axis, pts_a, pts_b) -> bool:
    pa, pb = pts_a @ axis, pts_b @ axis
    # penetration depth needed to separate; stays positive for a flat
    # triangle sitting inside the box's interval
    depth = min(pa.max() - pb.min(), pb.max() - pa.min())
    return depth <= CONTACT_TOL


def _candidate_axes(face_axes_a, face_axes_b, edges_a, edges_b):
    axes = list(face_axes_a) + list(face_axes_b)
    for ea in edges_a:
        for eb in edges_b:
            cr = np.cross(ea, eb)
            n = np.linalg.norm(cr)
            if n > 1e-9:
                axes.append(cr / n)
    return axes


def boxes_overlap(a: OrientedBox, b: OrientedBox) -> bool:
    pa, pb = a.corners(), b.corners()
    for axis in _candidate_axes(a.axes, b.axes, a.axes, b.axes):
        if _separated_on(axis, pa, pb):
            return False
    return True


def box_overlaps_triangle(box: OrientedBox, tri: np.ndarray) -> bool:
    edges = [tri[1] - tri[0], tri[2] - tri[1], tri[0] - tri[2]]
    normal = np.cross(edges[0], edges[1])
    normal = normal / np.linalg.norm(normal)
    pb = box.corners()
    for axis in _candidate_axes(box.axes, [normal], box.axes, edges):
        if _separated_on(axis, pb, tri):
            return False
    return True


def box_intersects(box: OrientedBox, others=(), meshes=()) -> bool:
    """True iff ``box`` penetrates any other box or any mesh triangle.

    Touching contact (overlap <= 1e-6 m along a separating axis) does not count.
    """
    for other in others:
        if boxes_overlap(box, other):
            return True
    lo = box.center - np.abs(box.axes).T @ box.half_extents
    hi = box.center + np.abs(box.axes).T @ box.half_extents
    for mesh in meshes:
        if len(mesh) == 0:
            continue
        tris = mesh.vertices[mesh.triangles]
        # AABB reject before the full SAT
        near = np.all(tris.max(axis=1) >= lo - CONTACT_TOL, axis=1) & np.all(
            tris.min(axis=1) <= hi + CONTACT_TOL, axis=1
        )
        for tri in tris[near]:
            if box_overlaps_triangle(box, tri):
                return True
    return False
