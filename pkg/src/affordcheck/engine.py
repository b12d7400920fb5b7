"""Plan grounding: runs every step's required checks and builds the report."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from affordcheck.checks import (
    NAV_NO_ZONES,
    CheckOutcome,
    ClearanceBox,
    FreeSpaceResolver,
    FunctionalPartProvider,
    MeshSurfaceProvider,
    VisibilityConfig,
    ZoneResolutionError,
    ZoneResolver,
    check_clearance,
    check_interactable,
    check_navigable,
    check_reachable,
    check_visible,
    resolve_zones,
)
from affordcheck.geometry import InteractionZone
from affordcheck.navmap import (
    DEFAULT_MARGIN,
    DEFAULT_RESOLUTION,
    AgentPose,
    NavMap,
    build_navmap,
    connected_regions,
    initial_pose,
    rng_stream,
    walkable_points_3d,
)
from affordcheck.scene import (
    AgentProfile,
    AtomicAction,
    Plan,
    Posture,
    PropertyKind,
    Scene,
    required_properties,
)

_SEATING_ACTIONS = (AtomicAction.SIT_ON, AtomicAction.LIE_ON)


@dataclass(frozen=True)
class VerificationConfig:
    resolution: int = DEFAULT_RESOLUTION
    margin: float = DEFAULT_MARGIN
    zone_depth: float = 0.75
    zone_flare: float = 1.0
    visibility: VisibilityConfig = field(default_factory=VisibilityConfig)
    strict_clearance: bool = False
    footprint: str = "obb"
    seed: int = 0

    def __post_init__(self):
        if self.resolution < 32:
            raise ValueError("resolution must be at least 32")
        if self.zone_depth <= 0 or self.zone_flare < 1 or self.margin < 0:
            raise ValueError("zone depth must be positive, flare >= 1, margin >= 0")


@dataclass(frozen=True)
class StepResult:
    action: AtomicAction
    object_id: str
    success: bool
    trace: tuple[CheckOutcome, ...]


@dataclass(frozen=True)
class DiagnosticReport:
    scene_id: str
    agent_name: str
    task_text: str
    steps: tuple[StepResult, ...]
    overall_success: bool
    insight: str
    seed: int

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "agent": self.agent_name,
            "task": self.task_text,
            "seed": self.seed,
            "overall_success": self.overall_success,
            "insight": self.insight,
            "steps": [
                {
                    "action": s.action.value,
                    "object_id": s.object_id,
                    "success": s.success,
                    "checks": [
                        {
                            "property": c.property.value,
                            "status": c.status,
                            "message": c.message,
                            "metrics": {k: _clean(v) for k, v in c.metrics.items()},
                        }
                        for c in s.trace
                    ],
                }
                for s in self.steps
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> DiagnosticReport:
        steps = tuple(
            StepResult(
                AtomicAction(s["action"]),
                s["object_id"],
                bool(s["success"]),
                tuple(CheckOutcome(PropertyKind(c["property"]), bool(c["status"]), c["message"], dict(c["metrics"]))
                      for c in s["checks"]),
            )
            for s in d["steps"]
        )
        return cls(d["scene_id"], d["agent"], d["task"], steps, bool(d["overall_success"]), d["insight"], int(d["seed"]))


def _clean(value):
    """JSON-stable metric values; floats rounded to micrometers."""
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return round(float(value), 6)
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


@dataclass
class StepArtifacts:
    """Intermediate geometry kept for debug export."""

    zones: list[InteractionZone] = field(default_factory=list)
    clearance: list[tuple[ClearanceBox, bool, bool]] = field(default_factory=list)
    pose_before: AgentPose | None = None
    pose_after: AgentPose | None = None


def _next_posture(profile: AgentProfile, posture: Posture, action: AtomicAction, success: bool) -> Posture:
    if profile.is_wheeled or not success:
        return posture
    if action in _SEATING_ACTIONS:
        return Posture.SEATED
    if action is AtomicAction.NAVIGATE_TO:
        return Posture.STANDING
    return posture


def ground_plan(
    plan: Plan,
    scene: Scene,
    profile: AgentProfile,
    cfg: VerificationConfig = VerificationConfig(),
    resolver: ZoneResolver | None = None,
    parts: FunctionalPartProvider | None = None,
    navmap: NavMap | None = None,
    artifacts: list[StepArtifacts] | None = None,
) -> DiagnosticReport:
    """Verify every plan step against its required properties.

    Each property of a step is evaluated even after an earlier one fails,
    and later steps still run after a failed step. The agent only moves on
    a successful navigability check.

    Args:
        plan: ordered (action, object) steps.
        scene: target scene; every plan object must exist in it.
        profile: agent embodiment.
        cfg: run configuration including the seed.
        resolver: zone resolver, free-floor overlap by default.
        parts: functional part provider, whole-surface sampler by default.
        navmap: prebuilt map for (scene, profile), built when omitted.
        artifacts: if given, receives one :class:`StepArtifacts` per step.

    Returns:
        The diagnostic report.
    """
    plan.validate_against(scene)
    resolver = resolver or FreeSpaceResolver()
    parts = parts or MeshSurfaceProvider()
    if navmap is None:
        navmap = build_navmap(scene, profile, cfg.resolution, cfg.margin, cfg.footprint)
    navmap = connected_regions(navmap)
    pose = initial_pose(navmap, cfg.seed)

    steps = []
    for t, step in enumerate(plan.steps, start=1):
        obj = scene.object(step.object_id)
        art = StepArtifacts(pose_before=pose)
        zones: list[InteractionZone] = []
        trace = []
        for prop in required_properties(step.action):
            if prop is PropertyKind.NAVIGABLE:
                try:
                    zones = resolve_zones(resolver, obj, step.action, navmap, cfg.zone_depth, cfg.zone_flare)
                except ZoneResolutionError as exc:
                    zones = []
                    outcome = CheckOutcome(prop, False, f"{NAV_NO_ZONES} ({exc})",
                                           {"agent_region": navmap.region_at(pose.position),
                                            "target_regions": [], "zone_count": 0})
                else:
                    outcome, pose = check_navigable(navmap, pose, zones, cfg.seed, stream=f"navigate/{t}")
                art.zones = zones
            elif prop is PropertyKind.REACHABLE:
                floor = walkable_points_3d(navmap, navmap.region_at(pose.position))
                outcome = check_reachable(floor, obj.surface, profile, pose.posture)
            elif prop is PropertyKind.INTERACTABLE:
                floor = walkable_points_3d(navmap, navmap.region_at(pose.position))
                outcome = check_interactable(obj, step.action, parts, floor, profile, pose.posture)
            elif prop is PropertyKind.CLEARANCE:
                outcome, art.clearance = check_clearance(obj, zones, scene, cfg.strict_clearance)
            else:
                outcome = check_visible(pose, profile, obj, scene, cfg.visibility, rng_stream(cfg.seed, f"eyes/{t}"))
            trace.append(outcome)
        success = all(c.status for c in trace)
        pose = AgentPose(pose.position, _next_posture(profile, pose.posture, step.action, success))
        art.pose_after = pose
        if artifacts is not None:
            artifacts.append(art)
        steps.append(StepResult(step.action, step.object_id, success, tuple(trace)))

    overall = all(s.success for s in steps)
    report = DiagnosticReport(scene.id, profile.name, plan.task, tuple(steps), overall, "", cfg.seed)
    return DiagnosticReport(scene.id, profile.name, plan.task, tuple(steps), overall, summarize(report), cfg.seed)


def _metric_phrase(check: CheckOutcome) -> str:
    m = check.metrics
    if check.property in (PropertyKind.REACHABLE, PropertyKind.INTERACTABLE) and m.get("required_distance_m") is not None:
        return f"required distance {m['required_distance_m']:.2f}m exceeds {m['reach_m']:.2f}m reach"
    if check.property is PropertyKind.VISIBLE:
        return f"{100 * m['visibility_ratio']:.1f}% of sight lines clear"
    if check.property is PropertyKind.CLEARANCE:
        return f"{m['zone_count']} of {m['resolved_zone_count']} zones collision-free"
    return check.message.rstrip(".")


def summarize(report: DiagnosticReport) -> str:
    """Deterministic one-paragraph insight naming the first failing step."""
    failed = next((i for i, s in enumerate(report.steps) if not s.success), None)
    if failed is None:
        return f"Plan is fully executable for agent {report.agent_name}."
    step = report.steps[failed]
    bad = [c for c in step.trace if not c.status]
    parts = [f"{c.property.value} failed ({_metric_phrase(c)})" for c in bad]
    later = sum(1 for s in report.steps[failed + 1 :] if not s.success)
    text = (f"Plan fails at step {failed + 1} ({step.action.value} on {step.object_id}): "
            + "; ".join(parts) + ".")
    if later:
        text += f" {later} later step(s) also fail."
    return text
