"""Synthetic 4 x 4 m micro-scenes with hand-derived per-profile outcomes.

Five layouts, each instantiated under four rigid placements (identity,
translation, mirror, mirror + translation) for 20 scenes in total.

Expected outcomes per layout (A = adult, C = child, W = wheelchair):

open_room      armchair in the middle, ceiling lamp above it (bottom at
               2.2 m, above every agent so not an obstacle).
               navigate_to/sit_on armchair, look_at lamp: everything passes.
narrow_gap     divider leaves a 0.55 m gap to the left wall. Eroded gap is
               0.15 m (A), 0.25 m (C) and closed (W, 0.65 m clearance).
               navigate_to/pickup_from cabinet behind the divider: W fails
               both navigations; W reach fails too (nearest own-region floor
               is > 1.5 m from the cabinet).
high_shelf     wall shelf with its underside at 1.9 m. pickup_from:
               A reaches 1.90 - 1.45 = 0.45 <= 0.70; C needs
               1.90 - 0.85 = 1.05 > 0.40; W needs 1.90 - 1.015 = 0.885 > 0.70.
blocked_cabinet corner cabinet; ottoman blocks the front clearance box and
               a side table the side one. Navigation, reach and
               interaction pass for all, clearance fails for all.
partition      full-height divider hides the tv; the plant shares the
               agent's side. look_at tv fails, look_at plant passes.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

ROOM = 4.0
WALL_HEIGHT = 2.5
PROFILES = ("adult", "child", "wheelchair")
PLACEMENTS = (
    ("id", False, (0.0, 0.0)),
    ("shift", False, (7.3, -2.1)),
    ("mirror", True, (0.0, 0.0)),
    ("mirror_shift", True, (-3.2, 5.5)),
)


def _obj(oid, category, center, size, yaw=0.0):
    return {"id": oid, "category": category, "position": list(center), "size": list(size), "yaw": yaw}


LAYOUTS = {
    "open_room": {
        "objects": [
            _obj("armchair", "armchair", (2.0, 0.45, 2.0), (0.8, 0.9, 0.8)),
            _obj("lamp", "ceiling_lamp", (2.0, 2.3, 2.0), (0.4, 0.2, 0.4)),
        ],
        "task": "Walk to the armchair, sit down and look at the lamp.",
        "steps": [("navigate_to", "armchair"), ("sit_on", "armchair"), ("look_at", "lamp")],
    },
    "narrow_gap": {
        "objects": [
            _obj("divider", "half_wall", (2.275, 0.5, 2.5), (3.45, 1.0, 0.2)),
            _obj("cabinet", "cabinet", (3.0, 0.4, 3.8), (0.6, 0.8, 0.4)),
        ],
        "task": "Go to the cabinet behind the divider and pick something up.",
        "steps": [("navigate_to", "cabinet"), ("pickup_from", "cabinet")],
    },
    "high_shelf": {
        "objects": [
            _obj("shelf", "wall_shelf", (2.0, 2.05, 3.85), (1.0, 0.3, 0.3), math.pi),
        ],
        "task": "Take a book from the wall shelf.",
        "steps": [("pickup_from", "shelf")],
    },
    "blocked_cabinet": {
        "objects": [
            _obj("cabinet", "cabinet", (0.4, 0.5, 3.75), (0.8, 1.0, 0.5), math.pi),
            _obj("ottoman", "ottoman", (0.4, 0.2, 3.15), (0.6, 0.4, 0.5)),
            _obj("side_table", "side_table", (0.975, 0.3, 3.7), (0.25, 0.6, 0.4)),
        ],
        "task": "Walk to the corner cabinet and open it.",
        "steps": [("navigate_to", "cabinet"), ("open", "cabinet")],
    },
    "partition": {
        "objects": [
            _obj("partition", "partition_wall", (2.0, 1.25, 3.0), (4.0, 2.5, 0.2)),
            _obj("tv", "tv_stand", (2.0, 0.25, 3.5), (0.5, 0.5, 0.5)),
            _obj("plant", "plant", (1.0, 0.4, 1.0), (0.4, 0.8, 0.4)),
        ],
        "task": "Look at the tv, then at the plant.",
        "steps": [("look_at", "tv"), ("look_at", "plant")],
    },
}

# (passes, evaluated) per layout, profile and property
_ALL = {"adult": None, "child": None, "wheelchair": None}
EXPECTED_COUNTS = {
    "open_room": {p: {"navigable": (2, 2), "visible": (1, 1)} for p in _ALL},
    "narrow_gap": {
        "adult": {"navigable": (2, 2), "reachable": (1, 1)},
        "child": {"navigable": (2, 2), "reachable": (1, 1)},
        "wheelchair": {"navigable": (0, 2), "reachable": (0, 1)},
    },
    "high_shelf": {
        "adult": {"navigable": (1, 1), "reachable": (1, 1)},
        "child": {"navigable": (1, 1), "reachable": (0, 1)},
        "wheelchair": {"navigable": (1, 1), "reachable": (0, 1)},
    },
    "blocked_cabinet": {
        p: {"navigable": (2, 2), "reachable": (1, 1), "interactable": (1, 1), "clearance": (0, 1)} for p in _ALL
    },
    "partition": {p: {"visible": (1, 2)} for p in _ALL},
}
EXPECTED_TASK_SUCCESS = {
    "open_room": {"adult": True, "child": True, "wheelchair": True},
    "narrow_gap": {"adult": True, "child": True, "wheelchair": False},
    "high_shelf": {"adult": True, "child": False, "wheelchair": False},
    "blocked_cabinet": {"adult": False, "child": False, "wheelchair": False},
    "partition": {"adult": False, "child": False, "wheelchair": False},
}


def _quad(p0, p1, p2, p3):
    return {"vertices": [p0, p1, p2, p3], "triangles": [[0, 1, 2], [0, 2, 3]]}


def _room():
    r, h = ROOM, WALL_HEIGHT
    floor = _quad([0, 0, 0], [r, 0, 0], [r, 0, r], [0, 0, r])
    walls = [
        _quad([0, 0, 0], [r, 0, 0], [r, h, 0], [0, h, 0]),
        _quad([0, 0, r], [r, 0, r], [r, h, r], [0, h, r]),
        _quad([0, 0, 0], [0, 0, r], [0, h, r], [0, h, 0]),
        _quad([r, 0, 0], [r, 0, r], [r, h, r], [r, h, 0]),
    ]
    return floor, walls


def _place_point(p, mirror, shift):
    x, y, z = p
    if mirror:
        x = ROOM - x
    return [x + shift[0], y, z + shift[1]]


def _place_mesh(mesh, mirror, shift):
    return {"vertices": [_place_point(v, mirror, shift) for v in mesh["vertices"]], "triangles": mesh["triangles"]}


def scene_doc(layout: str, placement: int = 0) -> dict:
    """Scene file document for one layout under one rigid placement."""
    tag, mirror, shift = PLACEMENTS[placement]
    floor, walls = _room()
    objects = []
    for o in LAYOUTS[layout]["objects"]:
        objects.append(
            {
                **o,
                "position": _place_point(o["position"], mirror, shift),
                "yaw": -o["yaw"] if mirror else o["yaw"],
            }
        )
    return {
        "id": f"{layout}-{tag}",
        "floor": _place_mesh(floor, mirror, shift),
        "walls": [_place_mesh(w, mirror, shift) for w in walls],
        "objects": objects,
    }


def plan_doc(layout: str) -> dict:
    layout_def = LAYOUTS[layout]
    return {"task": layout_def["task"], "steps": [{"action": a, "object_id": o} for a, o in layout_def["steps"]]}


def expected_summary(placements: int = len(PLACEMENTS)) -> dict:
    """Per-profile pass rates implied by the layout table."""
    out = {}
    for profile in PROFILES:
        counts: dict[str, list[int]] = {}
        tasks = 0
        for layout, per_profile in EXPECTED_COUNTS.items():
            for prop, (ok, n) in per_profile[profile].items():
                c = counts.setdefault(prop, [0, 0])
                c[0] += ok * placements
                c[1] += n * placements
            tasks += EXPECTED_TASK_SUCCESS[layout][profile] * placements
        out[profile] = {
            "task_success": tasks / (len(LAYOUTS) * placements),
            **{prop: ok / n for prop, (ok, n) in counts.items()},
        }
    return out


def write_suite(directory) -> Path:
    """Write scenes, plans and an audit manifest; returns the manifest path."""
    directory = Path(directory)
    (directory / "scenes").mkdir(parents=True, exist_ok=True)
    (directory / "plans").mkdir(parents=True, exist_ok=True)
    runs = []
    for layout in LAYOUTS:
        plan_path = directory / "plans" / f"{layout}.json"
        plan_path.write_text(json.dumps(plan_doc(layout), indent=2) + "\n")
        for k in range(len(PLACEMENTS)):
            doc = scene_doc(layout, k)
            scene_path = directory / "scenes" / f"{doc['id']}.json"
            scene_path.write_text(json.dumps(doc, indent=2) + "\n")
            for profile in PROFILES:
                runs.append(
                    {
                        "scene": f"scenes/{scene_path.name}",
                        "plan": f"plans/{plan_path.name}",
                        "agent": profile,
                    }
                )
    manifest = directory / "manifest.json"
    manifest.write_text(json.dumps({"seed": 0, "runs": runs}, indent=2) + "\n")
    return manifest
