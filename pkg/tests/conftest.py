import numpy as np
import pytest

from affordcheck.io import scene_from_dict
from affordcheck.microscenes import _room


def room_doc(objects, scene_id="room"):
    floor, walls = _room()
    return {"id": scene_id, "floor": floor, "walls": walls, "objects": objects}


def box(oid, center, size, yaw=0.0, category=None):
    return {"id": oid, "category": category or oid, "position": list(center), "size": list(size), "yaw": yaw}


def make_room(objects=(), scene_id="room"):
    """4 x 4 m room on [0, 4]^2 with 2.5 m walls."""
    return scene_from_dict(room_doc(list(objects), scene_id))


def gap_room():
    """Wall-to-wall divider leaving a 0.55 m gap at the left wall."""
    return make_room([box("divider", (2.275, 0.5, 2.5), (3.45, 1.0, 0.2)),
                      box("cabinet", (3.0, 0.4, 3.8), (0.6, 0.8, 0.4))], "gap_room")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion."""
    rows = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", ()))
            if "criterion" in props and rep.when == "call":
                rows.append((props["criterion"], props.get("title", ""), outcome == "passed"))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for n, title, ok in sorted(rows):
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}")
