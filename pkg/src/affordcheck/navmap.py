"""Agent-conditioned 2D navigation maps.

Grid layout: row ``r`` runs along world +z, column ``c`` along world +x, and
pixel centers sit at ``origin + (c + 0.5, r + 0.5) * scale``.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from affordcheck.geometry import (
    AREA_TOL,
    points_in_convex_polygon,
    polygon_area,
    project_footprint,
)
from affordcheck.scene import AgentProfile, Posture, Scene, SceneError

DEFAULT_RESOLUTION = 256
DEFAULT_MARGIN = 0.05
FOOTPRINT_MODES = ("obb", "hull", "mesh")


class MapError(RuntimeError):
    pass


def rng_stream(seed: int, name: str) -> np.random.Generator:
    """Counter-based generator keyed by (seed, name); streams are independent."""
    seq = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, zlib.crc32(name.encode())])
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class AgentPose:
    position: tuple[float, float]
    posture: Posture = Posture.STANDING

    def __post_init__(self):
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))
        object.__setattr__(self, "posture", Posture(self.posture))


@dataclass(frozen=True, eq=False)
class NavMap:
    grid: np.ndarray
    free: np.ndarray
    floor_mask: np.ndarray
    scale: float
    origin: np.ndarray
    floor_height: float
    profile: AgentProfile
    labels: np.ndarray | None = None

    @property
    def resolution(self) -> int:
        return self.grid.shape[0]

    @property
    def agent_name(self) -> str:
        return self.profile.name

    @property
    def center(self) -> np.ndarray:
        return self.origin + 0.5 * self.resolution * self.scale

    @property
    def region_count(self) -> int:
        return int(self.labels.max()) if self.labels is not None else 0

    def scene_to_image(self, xz) -> tuple[int, int]:
        """World (x, z) to (row, col); may fall outside the grid."""
        col = int(np.floor((xz[0] - self.origin[0]) / self.scale))
        row = int(np.floor((xz[1] - self.origin[1]) / self.scale))
        return row, col

    def image_to_scene(self, row, col) -> np.ndarray:
        return self.origin + (np.stack([np.asarray(col), np.asarray(row)], axis=-1) + 0.5) * self.scale

    def in_bounds(self, row: int, col: int) -> bool:
        return 0 <= row < self.resolution and 0 <= col < self.resolution

    def pixel_centers(self) -> tuple[np.ndarray, np.ndarray]:
        ticks = self.origin[:, None] + (np.arange(self.resolution) + 0.5) * self.scale
        return np.meshgrid(ticks[0], ticks[1])  # xs[r, c], zs[r, c]

    def rasterize(self, polygon) -> np.ndarray:
        return rasterize_convex(polygon, self.origin, self.scale, self.resolution)

    def region_at(self, xz) -> int:
        if self.labels is None:
            raise MapError("navigation map is not labeled")
        row, col = self.scene_to_image(xz)
        if not self.in_bounds(row, col):
            return 0
        return int(self.labels[row, col])


def rasterize_convex(polygon, origin, scale: float, resolution: int) -> np.ndarray:
    """Mask of pixels whose centers lie inside a convex ground polygon."""
    poly = np.asarray(polygon, dtype=float)
    mask = np.zeros((resolution, resolution), dtype=bool)
    if len(poly) < 3 or abs(polygon_area(poly)) <= AREA_TOL:
        return mask
    lo = np.floor((poly.min(axis=0) - origin) / scale - 0.5).astype(int)
    hi = np.ceil((poly.max(axis=0) - origin) / scale - 0.5).astype(int)
    c0, r0 = np.maximum(lo, 0)
    c1, r1 = np.minimum(hi, resolution - 1)
    if c0 > c1 or r0 > r1:
        return mask
    cols, rows = np.meshgrid(np.arange(c0, c1 + 1), np.arange(r0, r1 + 1))
    centers = origin + (np.stack([cols.ravel(), rows.ravel()], axis=1) + 0.5) * scale
    inside = points_in_convex_polygon(centers, poly)
    mask[rows.ravel()[inside], cols.ravel()[inside]] = True
    return mask


def disk(radius_px: float) -> np.ndarray:
    r = int(np.floor(radius_px))
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
    return xx**2 + yy**2 <= radius_px**2


def erode_disk(mask: np.ndarray, radius_px: float) -> np.ndarray:
    """Binary erosion by a disk of ``radius_px`` with everything off-grid blocked.

    A pixel survives iff no blocked pixel center lies within ``radius_px``;
    evaluated through an exact Euclidean distance transform.
    """
    if radius_px < 1.0:
        return mask.copy()
    padded = np.pad(mask, 1, constant_values=False)
    dist = ndimage.distance_transform_edt(padded)[1:-1, 1:-1]
    return mask & (np.rint(dist**2) > radius_px**2)


def obstacle_footprints(scene: Scene, profile: AgentProfile, mode: str = "obb") -> list[np.ndarray]:
    """Ground polygons of every object low enough to block the agent."""
    if mode not in FOOTPRINT_MODES:
        raise ValueError(f"footprint mode must be one of {FOOTPRINT_MODES}")
    floor_y = scene.floor_height
    threshold = profile.total_height
    polys = []
    for obj in scene.objects:
        if obj.obb.bottom - floor_y > threshold:
            continue
        if mode == "obb":
            polys.append(obj.obb.ground_rectangle())
        elif mode == "hull":
            polys.append(project_footprint(obj.surface))
        else:
            mesh = obj.surface
            polys.extend(mesh.vertices[mesh.triangles][:, :, [0, 2]])
    return polys


def floor_frame(scene: Scene, resolution: int, margin: float = DEFAULT_MARGIN) -> tuple[np.ndarray, float]:
    """Grid origin and meters-per-pixel fitting the floor's bounding square."""
    xz = scene.floor.vertices[:, [0, 2]]
    lo, hi = xz.min(axis=0), xz.max(axis=0)
    side = float((hi - lo).max()) * (1.0 + margin)
    if side <= 0:
        raise SceneError(f"scene {scene.id!r}: floor has zero extent")
    center = 0.5 * (lo + hi)
    return center - 0.5 * side, side / resolution


def build_navmap(
    scene: Scene,
    profile: AgentProfile,
    resolution: int = DEFAULT_RESOLUTION,
    margin: float = DEFAULT_MARGIN,
    footprint: str = "obb",
) -> NavMap:
    """Rasterize floor and obstacles, then erode by half the clearance width."""
    if resolution < 32:
        raise ValueError("resolution must be at least 32 pixels")
    origin, scale = floor_frame(scene, resolution, margin)

    floor_mask = np.zeros((resolution, resolution), dtype=bool)
    floor_area = 0.0
    for tri in scene.floor.vertices[scene.floor.triangles][:, :, [0, 2]]:
        area = abs(polygon_area(tri))
        if area <= AREA_TOL:
            continue
        floor_area += area
        floor_mask |= rasterize_convex(tri, origin, scale, resolution)
    if floor_area <= AREA_TOL or not floor_mask.any():
        raise SceneError(f"scene {scene.id!r}: degenerate floor (zero projected area)")

    free = floor_mask.copy()
    for poly in obstacle_footprints(scene, profile, footprint):
        free &= ~rasterize_convex(poly, origin, scale, resolution)

    radius_px = (profile.clearance_width / scale) / 2.0
    grid = erode_disk(free, radius_px)
    for arr in (grid, free, floor_mask):
        arr.setflags(write=False)
    return NavMap(grid, free, floor_mask, scale, origin, scene.floor_height, profile)


def label_regions(grid: np.ndarray) -> np.ndarray:
    """4-connected labels, ids dense from 1 in raster order of first pixel."""
    labels, _ = ndimage.label(grid, structure=ndimage.generate_binary_structure(2, 1))
    return labels


def connected_regions(navmap: NavMap) -> NavMap:
    if navmap.labels is not None:
        return navmap
    labels = label_regions(navmap.grid)
    labels.setflags(write=False)
    return replace(navmap, labels=labels)


def region_sizes(navmap: NavMap) -> np.ndarray:
    """Pixel count per region; index 0 is unused."""
    return np.bincount(navmap.labels.ravel(), minlength=navmap.region_count + 1)


def largest_region(navmap: NavMap) -> int:
    navmap = connected_regions(navmap)
    sizes = region_sizes(navmap)
    if navmap.region_count == 0:
        raise MapError(f"no walkable pixel for agent {navmap.agent_name!r}")
    return int(np.argmax(sizes[1:])) + 1


def sample_pixel(mask: np.ndarray, rng: np.random.Generator) -> tuple[int, int]:
    rows, cols = np.nonzero(mask)
    k = int(rng.integers(len(rows)))
    return int(rows[k]), int(cols[k])


def initial_pose(navmap: NavMap, seed: int) -> AgentPose:
    """Random pixel of the largest region, as a world pose."""
    navmap = connected_regions(navmap)
    region = largest_region(navmap)
    row, col = sample_pixel(navmap.labels == region, rng_stream(seed, "initial_pose"))
    x, z = navmap.image_to_scene(row, col)
    return AgentPose((x, z), navmap.profile.default_posture)


def walkable_points_3d(navmap: NavMap, region_id: int) -> np.ndarray:
    """Pixel centers of a region lifted to the floor height, (k, 3)."""
    navmap = connected_regions(navmap)
    if not 1 <= region_id <= navmap.region_count:
        raise ValueError(f"unknown region id {region_id}")
    rows, cols = np.nonzero(navmap.labels == region_id)
    xz = navmap.image_to_scene(rows, cols)
    return np.column_stack([xz[:, 0], np.full(len(xz), navmap.floor_height), xz[:, 1]])


def pgm_bytes(image: np.ndarray, comment: str = "") -> bytes:
    """Binary P5 PGM encoding of an 8-bit image."""
    img = np.asarray(image, dtype=np.uint8)
    h, w = img.shape
    header = b"P5\n"
    if comment:
        header += b"# " + comment.encode("ascii") + b"\n"
    header += f"{w} {h}\n255\n".encode("ascii")
    return header + img.tobytes()


def navmap_image(navmap: NavMap, regions: bool = False) -> np.ndarray:
    if not regions:
        return np.where(navmap.grid, 255, 0).astype(np.uint8)
    navmap = connected_regions(navmap)
    n = navmap.region_count
    if n == 0:
        return np.zeros(navmap.grid.shape, dtype=np.uint8)
    gray = 55 + (200 * navmap.labels) // n
    return np.where(navmap.labels > 0, gray, 0).astype(np.uint8)


def render_navmap(navmap: NavMap, path, regions: bool = False) -> bytes:
    data = pgm_bytes(
        navmap_image(navmap, regions),
        comment=f"resolution {navmap.resolution} scale {navmap.scale:.6f}",
    )
    with open(path, "wb") as fh:
        fh.write(data)
    return data
