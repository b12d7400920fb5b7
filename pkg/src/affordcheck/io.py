"""File formats: scenes, plans, profiles, OBJ meshes, JSONL records, reports."""

from __future__ import annotations

import json
import warnings
from pathlib import Path

import jsonschema
import numpy as np

from affordcheck.engine import DiagnosticReport
from affordcheck.geometry import AREA_TOL, GeometryError, OrientedBox, TriangleMesh
from affordcheck.metrics import LabelRecord, PredictionRecord
from affordcheck.scene import (
    BUILTIN_PROFILES,
    MESH_OBB_TOLERANCE,
    AgentProfile,
    Plan,
    PlanStep,
    Scene,
    SceneObject,
)


class InputError(ValueError):
    """Invalid input file; ``errors`` lists every violation found."""

    def __init__(self, path, errors):
        self.path = str(path)
        self.errors = list(errors) if not isinstance(errors, str) else [errors]
        super().__init__(f"{self.path}: " + "; ".join(self.errors))

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "path": self.path, "messages": self.errors}


class SceneWarning(UserWarning):
    pass


_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_MESH = {
    "oneOf": [
        {"type": "string"},
        {
            "type": "object",
            "required": ["vertices", "triangles"],
            "properties": {
                "vertices": {"type": "array", "items": _VEC3, "minItems": 3},
                "triangles": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 3, "maxItems": 3},
                    "minItems": 1,
                },
            },
        },
    ]
}
SCENE_SCHEMA = {
    "type": "object",
    "required": ["id", "floor", "objects"],
    "properties": {
        "id": {"type": "string", "minLength": 1},
        "floor": _MESH,
        "walls": {"type": "array", "items": _MESH},
        "objects": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "category", "position", "size"],
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "category": {"type": "string"},
                    "position": _VEC3,
                    "yaw": {"type": "number"},
                    "size": {**_VEC3, "items": {"type": "number", "exclusiveMinimum": 0}},
                    "mesh": {"type": "string"},
                },
            },
        },
    },
}
PLAN_SCHEMA = {
    "type": "object",
    "required": ["steps"],
    "properties": {
        "agent": {"type": "string"},
        "task": {"type": "string"},
        "steps": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["action", "object_id"],
                "properties": {"action": {"type": "string"}, "object_id": {"type": "string"}},
            },
        },
    },
}


def _read_json(path):
    path = Path(path)
    if not path.is_file():
        raise InputError(path, "file not found")
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(path, f"invalid JSON: {exc}") from None


def _schema_errors(doc, schema) -> list[str]:
    errors = sorted(jsonschema.Draft7Validator(schema).iter_errors(doc), key=lambda e: list(e.absolute_path))
    return [f"{'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}" for e in errors]


def load_obj(path) -> TriangleMesh:
    """ASCII OBJ reader for ``v`` and ``f`` records; polygons are fan-triangulated."""
    verts, faces = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = []
                for tok in parts[1:]:
                    i = int(tok.split("/")[0])
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                if len(idx) < 3:
                    raise GeometryError(f"{path}:{lineno}: face with fewer than 3 vertices")
                faces.extend([idx[0], idx[k], idx[k + 1]] for k in range(1, len(idx) - 1))
    v = np.array(verts, dtype=float).reshape(-1, 3)
    f = np.array(faces, dtype=np.int64).reshape(-1, 3)
    if len(f):
        if f.min() < 0 or f.max() >= len(v):
            raise GeometryError(f"{path}: face index out of range")
        a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
        keep = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1) > AREA_TOL
        f = f[keep]
    return TriangleMesh(v, f)


def write_obj(mesh: TriangleMesh, path) -> None:
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


def _mesh_from(mesh_ref, base: Path, where: str, errors: list[str]) -> TriangleMesh | None:
    try:
        if isinstance(mesh_ref, str):
            p = base / mesh_ref
            if not p.is_file():
                errors.append(f"{where}: mesh file {mesh_ref!r} not found")
                return None
            return load_obj(p)
        return TriangleMesh(mesh_ref["vertices"], mesh_ref["triangles"])
    except (GeometryError, ValueError) as exc:
        errors.append(f"{where}: {exc}")
        return None


def scene_from_dict(doc: dict, base: Path = Path(".")) -> Scene:
    errors = _schema_errors(doc, SCENE_SCHEMA)
    for i, o in enumerate(doc.get("objects", []) if isinstance(doc.get("objects"), list) else []):
        if isinstance(o, dict):
            for key in ("rotation", "quaternion", "orientation"):
                if key in o:
                    errors.append(f"objects/{i}: '{key}' is not supported; use yaw-only rotation in radians")
    if errors:
        raise InputError(doc.get("id", "<scene>") if isinstance(doc, dict) else "<scene>", errors)

    floor = _mesh_from(doc["floor"], base, "floor", errors)
    walls = [_mesh_from(w, base, f"walls/{i}", errors) for i, w in enumerate(doc.get("walls", []))]
    objects, seen = [], set()
    for i, o in enumerate(doc["objects"]):
        if o["id"] in seen:
            errors.append(f"objects/{i}: duplicate object id {o['id']!r}")
        seen.add(o["id"])
        obb = OrientedBox(o["position"], np.asarray(o["size"], dtype=float) / 2.0, o.get("yaw", 0.0))
        mesh = _mesh_from(o["mesh"], base, f"objects/{i}/mesh", errors) if "mesh" in o else None
        obj = SceneObject(o["id"], o["category"], obb, mesh)
        if not obj.mesh_within_obb(MESH_OBB_TOLERANCE):
            warnings.warn(
                f"object {o['id']!r}: mesh extends beyond its box by more than {MESH_OBB_TOLERANCE} m",
                SceneWarning,
                stacklevel=2,
            )
        objects.append(obj)
    if floor is not None and len(floor) == 0:
        errors.append("floor: mesh has no triangles")
    if errors:
        raise InputError(doc["id"], errors)
    return Scene(doc["id"], floor, tuple(walls), tuple(objects))


def load_scene(path) -> Scene:
    path = Path(path)
    doc = _read_json(path)
    try:
        return scene_from_dict(doc, path.parent)
    except InputError as exc:
        raise InputError(path, exc.errors) from None


def scene_to_dict(scene: Scene) -> dict:
    def mesh(m):
        return {"vertices": m.vertices.tolist(), "triangles": m.triangles.tolist()}

    objs = []
    for o in scene.objects:
        d = {
            "id": o.id,
            "category": o.category,
            "position": o.obb.center.tolist(),
            "yaw": o.obb.yaw,
            "size": (2 * o.obb.half_extents).tolist(),
        }
        objs.append(d)
    return {"id": scene.id, "floor": mesh(scene.floor), "walls": [mesh(w) for w in scene.walls], "objects": objs}


def load_plan(path) -> Plan:
    doc = _read_json(path)
    errors = _schema_errors(doc, PLAN_SCHEMA)
    steps = []
    if not errors:
        for i, s in enumerate(doc["steps"]):
            try:
                steps.append(PlanStep(s["action"], s["object_id"]))
            except ValueError:
                errors.append(f"steps/{i}: unknown action {s['action']!r}")
    if errors:
        raise InputError(path, errors)
    return Plan(tuple(steps), doc.get("agent", ""), doc.get("task", ""))


def plan_to_dict(plan: Plan) -> dict:
    return {
        "agent": plan.agent,
        "task": plan.task,
        "steps": [{"action": s.action.value, "object_id": s.object_id} for s in plan.steps],
    }


def load_profile(name_or_path) -> AgentProfile:
    if str(name_or_path) in BUILTIN_PROFILES:
        return BUILTIN_PROFILES[str(name_or_path)]
    doc = _read_json(name_or_path)
    try:
        return AgentProfile.from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise InputError(name_or_path, str(exc)) from None


def write_report(report: DiagnosticReport, path) -> str:
    text = report.to_json()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return text


def load_report(path) -> DiagnosticReport:
    return DiagnosticReport.from_dict(_read_json(path))


def read_jsonl(path) -> list[dict]:
    path = Path(path)
    if not path.is_file():
        raise InputError(path, "file not found")
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                try:
                    rows.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise InputError(path, f"line {lineno}: {exc}") from None
    return rows


def write_jsonl(rows, path) -> None:
    with open(path, "w") as fh:
        for r in rows:
            fh.write(json.dumps(r) + "\n")


def load_labels(path) -> list[LabelRecord]:
    out = []
    for i, r in enumerate(read_jsonl(path)):
        try:
            out.append(
                LabelRecord(
                    r["task_id"],
                    r["agent_name"],
                    int(r.get("step_count", len(r["action_labels"]))),
                    bool(r["task_label"]),
                    tuple(r["action_labels"]),
                    tuple(r["failing_properties"]) if r.get("failing_properties") is not None else None,
                )
            )
        except (KeyError, ValueError) as exc:
            raise InputError(path, f"record {i}: {exc}") from None
    return out


def load_predictions(path, mode: str) -> list[PredictionRecord]:
    out = []
    for i, r in enumerate(read_jsonl(path)):
        try:
            out.append(
                PredictionRecord(
                    r["task_id"],
                    r.get("mode", mode),
                    r.get("task_pred"),
                    tuple(r["action_preds"]) if r.get("action_preds") is not None else None,
                )
            )
        except (KeyError, ValueError) as exc:
            raise InputError(path, f"record {i}: {exc}") from None
    return out
