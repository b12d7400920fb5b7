"""Scene, agent and plan types plus the action taxonomy."""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from affordcheck.geometry import OrientedBox, TriangleMesh

MESH_OBB_TOLERANCE = 0.05
SEATED_SHOULDER_SCALE = 0.70


class SceneError(ValueError):
    pass


class PlanError(ValueError):
    pass


class Locomotion(str, enum.Enum):
    WALK = "walk"
    WHEEL = "wheel"


class Posture(str, enum.Enum):
    STANDING = "standing"
    SEATED = "seated"


class ActionFamily(str, enum.Enum):
    MOBILITY = "mobility"
    CONTACT = "contact"
    HANDLING = "handling"
    PERCEPTION = "perception"


class PropertyKind(str, enum.Enum):
    NAVIGABLE = "navigable"
    REACHABLE = "reachable"
    INTERACTABLE = "interactable"
    CLEARANCE = "clearance"
    VISIBLE = "visible"


class AtomicAction(str, enum.Enum):
    NAVIGATE_TO = "navigate_to"
    SIT_ON = "sit_on"
    LIE_ON = "lie_on"
    TOGGLE = "toggle"
    PICKUP_FROM = "pickup_from"
    RELEASE_ON = "release_on"
    OPEN = "open"
    CLOSE = "close"
    PUT_IN = "put_in"
    TAKE_OUT_OF = "take_out_of"
    LOOK_AT = "look_at"

    @property
    def family(self) -> ActionFamily:
        return ACTION_FAMILIES[self]


ACTION_FAMILIES = {
    AtomicAction.NAVIGATE_TO: ActionFamily.MOBILITY,
    AtomicAction.SIT_ON: ActionFamily.MOBILITY,
    AtomicAction.LIE_ON: ActionFamily.MOBILITY,
    AtomicAction.TOGGLE: ActionFamily.CONTACT,
    AtomicAction.PICKUP_FROM: ActionFamily.CONTACT,
    AtomicAction.RELEASE_ON: ActionFamily.CONTACT,
    AtomicAction.OPEN: ActionFamily.HANDLING,
    AtomicAction.CLOSE: ActionFamily.HANDLING,
    AtomicAction.PUT_IN: ActionFamily.HANDLING,
    AtomicAction.TAKE_OUT_OF: ActionFamily.HANDLING,
    AtomicAction.LOOK_AT: ActionFamily.PERCEPTION,
}

_P = PropertyKind
FAMILY_PROPERTIES = {
    ActionFamily.MOBILITY: (_P.NAVIGABLE,),
    ActionFamily.CONTACT: (_P.NAVIGABLE, _P.REACHABLE),
    ActionFamily.HANDLING: (_P.NAVIGABLE, _P.REACHABLE, _P.INTERACTABLE, _P.CLEARANCE),
    ActionFamily.PERCEPTION: (_P.VISIBLE,),
}


def required_properties(action: AtomicAction | str) -> list[PropertyKind]:
    """Ordered property checks an action must pass."""
    return list(FAMILY_PROPERTIES[AtomicAction(action).family])


@dataclass(frozen=True)
class AgentProfile:
    name: str
    locomotion: Locomotion
    clearance_width: float
    standing_shoulder_height: float
    shoulder_to_eye_offset: float
    eye_to_top_offset: float
    crouch_factor: float
    reach_radius: float
    posture_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "locomotion", Locomotion(self.locomotion))
        lengths = (
            self.clearance_width,
            self.standing_shoulder_height,
            self.shoulder_to_eye_offset,
            self.eye_to_top_offset,
            self.reach_radius,
        )
        if any(not np.isfinite(v) or v <= 0 for v in lengths):
            raise ValueError(f"profile {self.name!r}: all lengths must be positive")
        if not 0.0 <= self.crouch_factor <= 1.0:
            raise ValueError(f"profile {self.name!r}: crouch_factor must lie in [0, 1]")
        if not 0.0 < self.posture_scale <= 1.0:
            raise ValueError(f"profile {self.name!r}: posture_scale must lie in (0, 1]")
        if self.locomotion is Locomotion.WHEEL and self.posture_scale >= 1.0:
            raise ValueError(f"profile {self.name!r}: wheeled profiles need posture_scale < 1")

    @property
    def is_wheeled(self) -> bool:
        return self.locomotion is Locomotion.WHEEL

    @property
    def total_height(self) -> float:
        return self.standing_shoulder_height + self.shoulder_to_eye_offset + self.eye_to_top_offset

    @property
    def default_posture(self) -> Posture:
        return Posture.SEATED if self.is_wheeled else Posture.STANDING

    def to_dict(self) -> dict:
        d = asdict(self)
        d["locomotion"] = self.locomotion.value
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> AgentProfile:
        return cls(**d)


BUILTIN_PROFILES = {
    "adult": AgentProfile("adult", Locomotion.WALK, 0.40, 1.45, 0.20, 0.10, 0.40, 0.70, 1.0),
    "child": AgentProfile("child", Locomotion.WALK, 0.30, 0.85, 0.15, 0.10, 0.50, 0.40, 1.0),
    "wheelchair": AgentProfile("wheelchair", Locomotion.WHEEL, 0.65, 1.45, 0.20, 0.10, 0.10, 0.70, 0.70),
}


def builtin_profile(name: str) -> AgentProfile:
    try:
        return BUILTIN_PROFILES[name]
    except KeyError:
        raise KeyError(f"unknown agent profile {name!r}; expected one of {sorted(BUILTIN_PROFILES)}") from None


class Heights(NamedTuple):
    shoulder: float
    eye: float
    crouch: float
    total: float


def effective_heights(profile: AgentProfile, posture: Posture | str) -> Heights:
    """Shoulder, eye, crouch and total heights above the floor for a posture."""
    posture = Posture(posture)
    base = profile.standing_shoulder_height
    if profile.is_wheeled:
        shoulder = base * profile.posture_scale
    elif posture is Posture.SEATED:
        shoulder = SEATED_SHOULDER_SCALE * base
    else:
        shoulder = base
    return Heights(
        shoulder=shoulder,
        eye=shoulder + profile.shoulder_to_eye_offset,
        crouch=profile.crouch_factor * base,
        total=profile.total_height,
    )


@dataclass(frozen=True, eq=False)
class SceneObject:
    id: str
    category: str
    obb: OrientedBox
    mesh: TriangleMesh | None = None

    @property
    def surface(self) -> TriangleMesh:
        """World-space mesh, falling back to the box itself."""
        return self.mesh if self.mesh is not None else self.obb.to_mesh()

    def mesh_within_obb(self, tol: float = MESH_OBB_TOLERANCE) -> bool:
        if self.mesh is None:
            return True
        return bool(self.obb.contains(self.mesh.vertices, tol).all())


@dataclass(frozen=True, eq=False)
class Scene:
    id: str
    floor: TriangleMesh
    walls: tuple[TriangleMesh, ...] = ()
    objects: tuple[SceneObject, ...] = ()
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "walls", tuple(self.walls))
        object.__setattr__(self, "objects", tuple(self.objects))
        if len(self.floor) == 0:
            raise SceneError(f"scene {self.id!r}: floor mesh is empty")
        index = {}
        for obj in self.objects:
            if obj.id in index:
                raise SceneError(f"scene {self.id!r}: duplicate object id {obj.id!r}")
            index[obj.id] = obj
        object.__setattr__(self, "_index", index)

    def object(self, object_id: str) -> SceneObject:
        try:
            return self._index[object_id]
        except KeyError:
            raise PlanError(f"object {object_id!r} not found in scene {self.id!r}") from None

    def __contains__(self, object_id: str) -> bool:
        return object_id in self._index

    @property
    def floor_height(self) -> float:
        return float(self.floor.vertices[:, 1].min())

    def others(self, object_id: str) -> list[SceneObject]:
        return [o for o in self.objects if o.id != object_id]


@dataclass(frozen=True)
class PlanStep:
    action: AtomicAction
    object_id: str

    def __post_init__(self):
        object.__setattr__(self, "action", AtomicAction(self.action))


@dataclass(frozen=True)
class Plan:
    steps: tuple[PlanStep, ...]
    agent: str = ""
    task: str = ""

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    def __len__(self):
        return len(self.steps)

    def validate_against(self, scene: Scene) -> None:
        missing = [s.object_id for s in self.steps if s.object_id not in scene]
        if missing:
            raise PlanError(f"plan references objects missing from scene {scene.id!r}: {sorted(set(missing))}")
