"""The five boolean property verifiers.

Each check returns a :class:`CheckOutcome` whose message follows a fixed
template, distances printed with two decimals.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from affordcheck.geometry import (
    FACE_NORMALS,
    Face,
    InteractionZone,
    OrientedBox,
    TriangleMesh,
    box_intersects,
    face_zones,
    min_distance_points_to_mesh,
    min_distance_points_to_points,
    points_on_floor,
    segment_hits,
)
from affordcheck.navmap import AgentPose, NavMap, rng_stream, sample_pixel
from affordcheck.scene import (
    MESH_OBB_TOLERANCE,
    AgentProfile,
    AtomicAction,
    Posture,
    PropertyKind,
    Scene,
    SceneObject,
    effective_heights,
)

NAV_PASS = "A collision-free path was found to an interaction zone."
NAV_NON_WALKABLE = "Target zones are entirely in non-walkable areas."
NAV_NO_ZONES = "No interaction zone could be resolved for the target object."

METRIC_KEYS = {
    PropertyKind.NAVIGABLE: ("agent_region", "target_regions", "zone_count"),
    PropertyKind.REACHABLE: ("required_distance_m", "reach_m", "test_height_m", "via_crouch"),
    PropertyKind.INTERACTABLE: ("required_distance_m", "reach_m", "test_height_m", "via_crouch", "point_count"),
    PropertyKind.CLEARANCE: ("zone_count", "resolved_zone_count"),
    PropertyKind.VISIBLE: ("visibility_ratio", "centroid_visible", "clear_rays", "total_rays"),
}


class EngineError(RuntimeError):
    """An internal invariant was violated."""


class ZoneResolutionError(RuntimeError):
    pass


@dataclass(frozen=True)
class CheckOutcome:
    property: PropertyKind
    status: bool
    message: str
    metrics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.message:
            raise ValueError("check outcome needs a diagnostic message")


@dataclass(frozen=True)
class VisibilityConfig:
    threshold: float = 0.15
    eye_samples: int = 5
    eye_jitter_radius: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("visibility threshold must lie in (0, 1)")
        if self.eye_samples < 1:
            raise ValueError("need at least one eye sample")
        if self.eye_jitter_radius < 0:
            raise ValueError("eye jitter radius must be non-negative")


# --------------------------------------------------------------------------
# zone resolution


class ZoneResolver(Protocol):
    def __call__(
        self, obj: SceneObject, action: AtomicAction, navmap: NavMap, zones: list[InteractionZone]
    ) -> list[InteractionZone]: ...


class FreeSpaceResolver:
    """Keeps every face zone that touches obstacle-free floor.

    Free floor is the agent-independent mask before clearance erosion, so a
    zone squeezed shut for a wide agent is still selected and the failure is
    reported by the navigability check.
    """

    def __call__(self, obj, action, navmap, zones):
        return [z for z in zones if (navmap.rasterize(z.polygon) & navmap.free).any()]


class AnnotationResolver:
    """Faces listed per (category, action); unlisted pairs use ``fallback``."""

    def __init__(self, table: dict[tuple[str, str], list[str]], fallback: ZoneResolver | None = None):
        self.table = {(c, AtomicAction(a).value): [Face(f) for f in faces] for (c, a), faces in table.items()}
        self.fallback = fallback or FreeSpaceResolver()

    @classmethod
    def from_json(cls, path) -> AnnotationResolver:
        """Reads ``{"sofa": {"sit_on": ["front"]}, ...}``."""
        with open(path) as fh:
            raw = json.load(fh)
        table = {(cat, act): faces for cat, acts in raw.items() for act, faces in acts.items()}
        return cls(table)

    def __call__(self, obj, action, navmap, zones):
        faces = self.table.get((obj.category, AtomicAction(action).value))
        if faces is None:
            return self.fallback(obj, action, navmap, zones)
        return [z for z in zones if z.face in faces]


def resolve_zones(
    resolver: ZoneResolver,
    obj: SceneObject,
    action: AtomicAction,
    navmap: NavMap,
    depth: float = 0.75,
    flare: float = 1.0,
) -> list[InteractionZone]:
    zones = face_zones(obj.obb, depth, flare)
    try:
        return list(resolver(obj, action, navmap, zones))
    except Exception as exc:  # noqa: BLE001 - any resolver failure is recorded in the trace
        raise ZoneResolutionError(f"zone resolver failed: {exc}") from exc


# --------------------------------------------------------------------------
# functional part providers


class FunctionalPartProvider(Protocol):
    def __call__(self, obj: SceneObject, action: AtomicAction) -> np.ndarray: ...


class MeshSurfaceProvider:
    """Whole object surface: vertices plus triangle barycenters."""

    def __init__(self, area_weighted: int = 0, seed: int = 0):
        self.area_weighted = area_weighted
        self.seed = seed

    def __call__(self, obj, action):
        mesh = obj.surface
        pts = [mesh.vertices, mesh.barycenters()]
        if self.area_weighted:
            pts.append(sample_surface(mesh, self.area_weighted, rng_stream(self.seed, f"surface/{obj.id}")))
        return np.concatenate(pts)


class FixturePartProvider:
    """Point clouds keyed by (object_id, action); missing keys yield no points."""

    def __init__(self, table: dict[tuple[str, str], np.ndarray]):
        self.table = {
            (oid, AtomicAction(a).value): np.asarray(p, dtype=float).reshape(-1, 3) for (oid, a), p in table.items()
        }

    @classmethod
    def from_json(cls, path) -> FixturePartProvider:
        """Reads ``{"cabinet_1": {"open": [[x, y, z], ...]}, ...}``."""
        with open(path) as fh:
            raw = json.load(fh)
        return cls({(oid, act): pts for oid, acts in raw.items() for act, pts in acts.items()})

    def __call__(self, obj, action):
        pts = self.table.get((obj.id, AtomicAction(action).value), np.zeros((0, 3)))
        if len(pts) and not obj.obb.contains(pts, MESH_OBB_TOLERANCE).all():
            raise ValueError(f"functional part points for {obj.id!r} lie outside its inflated box")
        return pts


def sample_surface(mesh: TriangleMesh, count: int, rng: np.random.Generator) -> np.ndarray:
    areas = mesh.areas()
    tri = rng.choice(len(areas), size=count, p=areas / areas.sum())
    u, v = rng.random(count), rng.random(count)
    flip = u + v > 1
    u[flip], v[flip] = 1 - u[flip], 1 - v[flip]
    a, b, c = (x[tri] for x in mesh.corners)
    return a + (b - a) * u[:, None] + (c - a) * v[:, None]


# --------------------------------------------------------------------------
# navigability


def _format_regions(ids) -> str:
    return "[" + " ".join(str(int(i)) for i in ids) + "]"


def check_navigable(
    navmap: NavMap, pose: AgentPose, zones: list[InteractionZone], rng_seed: int, stream: str = "navigate"
) -> tuple[CheckOutcome, AgentPose]:
    """Connectivity between the agent's region and any target zone.

    On success the agent moves to a random pixel where the first reachable
    zone meets its region; on failure the pose is returned unchanged.
    """
    if navmap.labels is None:
        raise EngineError("navigation map must be labeled before navigation checks")
    row, col = navmap.scene_to_image(pose.position)
    agent_region = int(navmap.labels[row, col]) if navmap.in_bounds(row, col) else 0
    if agent_region == 0:
        raise EngineError(f"agent pose {pose.position} is not on a walkable pixel")

    masks = [navmap.rasterize(z.polygon) for z in zones]
    under = np.unique(np.concatenate([navmap.labels[m] for m in masks])) if masks else np.zeros(0, int)
    metrics = {"agent_region": agent_region, "target_regions": [int(i) for i in under], "zone_count": len(zones)}

    if not zones:
        return CheckOutcome(PropertyKind.NAVIGABLE, False, NAV_NO_ZONES, metrics), pose
    for mask in masks:
        hit = mask & (navmap.labels == agent_region)
        if hit.any():
            r, c = sample_pixel(hit, rng_stream(rng_seed, stream))
            x, z = navmap.image_to_scene(r, c)
            return CheckOutcome(PropertyKind.NAVIGABLE, True, NAV_PASS, metrics), AgentPose((x, z), pose.posture)
    if not (under > 0).any():
        return CheckOutcome(PropertyKind.NAVIGABLE, False, NAV_NON_WALKABLE, metrics), pose
    msg = (
        "Agent and target zones are in different, disconnected walkable areas "
        f"(Agent area: {agent_region}, Target areas: {_format_regions(under)})."
    )
    return CheckOutcome(PropertyKind.NAVIGABLE, False, msg, metrics), pose


# --------------------------------------------------------------------------
# reach


def _min_distance(floor_points, target) -> float:
    if isinstance(target, TriangleMesh):
        return min_distance_points_to_mesh(floor_points, target).distance
    return min_distance_points_to_points(floor_points, target).distance


def _shift(target, h: float):
    offset = np.array([0.0, -h, 0.0])
    if isinstance(target, TriangleMesh):
        return TriangleMesh(target.vertices + offset, target.triangles)
    return np.asarray(target, dtype=float).reshape(-1, 3) + offset


def reach_test(floor_points, target, profile: AgentProfile, posture: Posture) -> tuple[bool, float, float, bool]:
    """(passed, required distance, tested height, via crouch) over shoulder then crouch height."""
    floor_points = np.asarray(floor_points, dtype=float).reshape(-1, 3)
    if len(floor_points) == 0:
        raise ValueError("reach test needs at least one floor point")
    if not isinstance(target, TriangleMesh):
        target = np.asarray(target, dtype=float).reshape(-1, 3)
    if len(target) == 0:
        raise ValueError("reach target geometry is empty")
    heights = effective_heights(profile, posture)
    tried = []
    for h, crouching in ((heights.shoulder, False), (heights.crouch, True)):
        d = _min_distance(floor_points, _shift(target, h))
        if d <= profile.reach_radius:
            return True, d, h, crouching
        tried.append((d, h))
    d, h = min(tried)
    return False, d, h, False


def _reach_message(subject_ok: str, subject_fail: str, ok: bool, d: float, reach: float, crouch: bool) -> str:
    if ok:
        via = " (via crouching)" if crouch else ""
        return f"{subject_ok}{via}. Required distance: {d:.2f}m, Agent's reach: {reach:.2f}m."
    return f"{subject_fail}. Required distance: {d:.2f}m, exceeds Agent's reach: {reach:.2f}m."


def check_reachable(floor_points, target, profile: AgentProfile, posture: Posture) -> CheckOutcome:
    ok, d, h, crouch = reach_test(floor_points, target, profile, posture)
    msg = _reach_message("Object is reachable", "Object not reachable", ok, d, profile.reach_radius, crouch)
    metrics = {"required_distance_m": d, "reach_m": profile.reach_radius, "test_height_m": h, "via_crouch": crouch}
    return CheckOutcome(PropertyKind.REACHABLE, ok, msg, metrics)


def check_interactable(
    obj: SceneObject,
    action: AtomicAction,
    provider: FunctionalPartProvider,
    floor_points,
    profile: AgentProfile,
    posture: Posture,
) -> CheckOutcome:
    volume = np.asarray(provider(obj, action), dtype=float).reshape(-1, 3)
    if len(volume) == 0:
        msg = f"No functional part identified for action '{AtomicAction(action).value}' on object '{obj.id}'."
        metrics = {"required_distance_m": None, "reach_m": profile.reach_radius, "test_height_m": None,
                   "via_crouch": False, "point_count": 0}
        return CheckOutcome(PropertyKind.INTERACTABLE, False, msg, metrics)
    ok, d, h, crouch = reach_test(floor_points, volume, profile, posture)
    msg = _reach_message(
        "Interactable volume is reachable", "Interactable volume not reachable", ok, d, profile.reach_radius, crouch
    )
    metrics = {"required_distance_m": d, "reach_m": profile.reach_radius, "test_height_m": h,
               "via_crouch": crouch, "point_count": len(volume)}
    return CheckOutcome(PropertyKind.INTERACTABLE, ok, msg, metrics)


# --------------------------------------------------------------------------
# clearance


@dataclass(frozen=True)
class ClearanceBox:
    box: OrientedBox
    zone_face: Face


def clearance_box(obb: OrientedBox, face: Face) -> ClearanceBox:
    """Box flush with ``face``, as wide and tall as the face, as deep as the
    object's smaller horizontal extent."""
    k, sign = FACE_NORMALS[Face(face)]
    depth = 2.0 * min(obb.half_extents[0], obb.half_extents[2])
    normal = sign * obb.axes[k]
    center = obb.center + normal * (obb.half_extents[k] + depth / 2.0)
    half = obb.half_extents.copy()
    half[k] = depth / 2.0
    return ClearanceBox(OrientedBox(center, half, obb.yaw), Face(face))


def check_clearance(
    obj: SceneObject, zones: list[InteractionZone], scene: Scene, strict: bool = False
) -> tuple[CheckOutcome, list[tuple[ClearanceBox, bool, bool]]]:
    """Collision-free articulation space in front of at least one zone.

    Returns the outcome and, per zone, ``(box, collides, inside_floor)``.
    """
    others = [o.obb for o in scene.others(obj.id)]
    evaluated = []
    for zone in zones:
        cb = clearance_box(obj.obb, zone.face)
        collides = box_intersects(cb.box, others, scene.walls)
        probe = cb.box.ground_rectangle() if strict else cb.box.center[[0, 2]][None, :]
        inside = bool(points_on_floor(probe, scene.floor).all())
        evaluated.append((cb, collides, inside))
    k = sum(1 for _, collides, inside in evaluated if not collides and inside)
    metrics = {"zone_count": k, "resolved_zone_count": len(zones)}
    if not zones:
        msg = "No interaction zones to test for clearance."
    elif k:
        msg = f"Found {k} collision-free interaction zones."
    else:
        msg = f"No collision-free interaction zone among {len(zones)} resolved zones."
    return CheckOutcome(PropertyKind.CLEARANCE, k > 0, msg, metrics), evaluated


# --------------------------------------------------------------------------
# visibility


def eye_positions(pose: AgentPose, profile: AgentProfile, floor_height: float, cfg: VisibilityConfig,
                  rng: np.random.Generator) -> np.ndarray:
    """Nominal eye point plus jitter drawn uniformly from a ball."""
    eye_y = floor_height + effective_heights(profile, pose.posture).eye
    center = np.array([pose.position[0], eye_y, pose.position[1]])
    n = cfg.eye_samples
    direction = rng.normal(size=(n, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = cfg.eye_jitter_radius * rng.random(n) ** (1.0 / 3.0)
    return center + direction * radius[:, None]


def target_keypoints(obj: SceneObject) -> np.ndarray:
    """Box centroid followed by its eight corners."""
    return np.vstack([obj.obb.center, obj.obb.corners()])


def occluders_for(scene: Scene, target_id: str) -> TriangleMesh:
    return TriangleMesh.concatenate([o.surface for o in scene.others(target_id)] + list(scene.walls))


def count_clear_rays(eyes, targets, occluders: TriangleMesh) -> np.ndarray:
    """(n_eye, n_target) boolean matrix of unobstructed rays."""
    clear = np.ones((len(eyes), len(targets)), dtype=bool)
    if len(occluders) == 0:
        return clear
    for i, e in enumerate(eyes):
        for j, t in enumerate(targets):
            clear[i, j] = not segment_hits(occluders, e, t).any()
    return clear


def visibility_passes(ratio: float, threshold: float) -> bool:
    return ratio > threshold


def check_visible(
    pose: AgentPose,
    profile: AgentProfile,
    target: SceneObject,
    scene: Scene,
    cfg: VisibilityConfig = VisibilityConfig(),
    rng: np.random.Generator | None = None,
) -> CheckOutcome:
    rng = rng if rng is not None else rng_stream(0, "eyes")
    eyes = eye_positions(pose, profile, scene.floor_height, cfg, rng)
    clear = count_clear_rays(eyes, target_keypoints(target), occluders_for(scene, target.id))
    n_clear, total = int(clear.sum()), clear.size
    ratio = n_clear / total
    centroid = bool(clear[:, 0].any())
    ok = visibility_passes(ratio, cfg.threshold)
    state = "Visible" if centroid else "Occluded"
    if ok:
        msg = f"Object is robustly visible ({100 * ratio:.1f}% clear, Centroid: {state})."
    else:
        msg = (f"Object is not sufficiently visible ({100 * ratio:.1f}% clear, Centroid: {state}), "
               f"threshold {100 * cfg.threshold:.1f}%.")
    metrics = {"visibility_ratio": ratio, "centroid_visible": centroid, "clear_rays": n_clear, "total_rays": total}
    return CheckOutcome(PropertyKind.VISIBLE, ok, msg, metrics)
