import json
import warnings
from pathlib import Path

import numpy as np
import pytest

from affordcheck import microscenes
from affordcheck.cli import main
from affordcheck.engine import DiagnosticReport
from affordcheck.geometry import OrientedBox
from affordcheck.io import (
    InputError,
    SceneWarning,
    load_obj,
    load_plan,
    load_profile,
    load_report,
    load_scene,
    scene_from_dict,
    scene_to_dict,
    write_obj,
    write_report,
)
from affordcheck.scene import builtin_profile
from conftest import box, room_doc

GOLDEN = Path(__file__).parent / "golden"


def write(path, doc):
    path.write_text(json.dumps(doc))
    return path


def test_minimal_scene(tmp_path):
    s = load_scene(write(tmp_path / "s.json", room_doc([box("a", (1, 0.5, 1), (1, 1, 1))])))
    assert len(s.objects) == 1 and len(s.walls) == 4


def test_scene_round_trip():
    s = scene_from_dict(room_doc([box("a", (1, 0.5, 1), (1, 1, 1), 0.3)]))
    again = scene_from_dict(scene_to_dict(s))
    assert np.allclose(again.object("a").obb.corners(), s.object("a").obb.corners())


def test_duplicate_id_named(tmp_path):
    doc = room_doc([box("a", (1, 0.5, 1), (1, 1, 1)), box("a", (2, 0.5, 2), (1, 1, 1))])
    with pytest.raises(InputError) as err:
        load_scene(write(tmp_path / "s.json", doc))
    assert any("'a'" in m for m in err.value.errors)


def test_all_errors_reported():
    doc = room_doc([{"id": "a", "category": "x", "position": [0, 0], "size": [1, -1, 1], "quaternion": [1, 0, 0, 0]}])
    with pytest.raises(InputError) as err:
        scene_from_dict(doc)
    assert len(err.value.errors) >= 3


def test_mesh_outside_box_warns(tmp_path):
    mesh = OrientedBox([1, 0.5, 1], [1.0, 0.5, 0.5]).to_mesh()
    write_obj(mesh, tmp_path / "m.obj")
    doc = room_doc([{**box("a", (1, 0.5, 1), (1, 1, 1)), "mesh": "m.obj"}])
    with pytest.warns(SceneWarning):
        s = load_scene(write(tmp_path / "s.json", doc))
    assert len(s.object("a").surface) == 12


def test_missing_mesh_file(tmp_path):
    doc = room_doc([{**box("a", (1, 0.5, 1), (1, 1, 1)), "mesh": "nope.obj"}])
    with pytest.raises(InputError):
        load_scene(write(tmp_path / "s.json", doc))


def test_obj_polygons_and_negative_indices(tmp_path):
    p = tmp_path / "q.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 1 0 1\nv 0 0 1\nf 1/1 2/2 3/3 4/4\nf -4 -3 -2\n")
    m = load_obj(p)
    assert len(m) == 3 and m.areas().sum() == pytest.approx(1.5)


def test_plan_and_profile(tmp_path):
    plan = load_plan(write(tmp_path / "p.json", {"task": "t", "steps": [{"action": "open", "object_id": "a"}]}))
    assert plan.steps[0].action.value == "open"
    with pytest.raises(InputError):
        load_plan(write(tmp_path / "bad.json", {"steps": [{"action": "fly", "object_id": "a"}]}))
    custom = tmp_path / "agent.json"
    custom.write_text(builtin_profile("child").to_json())
    assert load_profile(custom) == builtin_profile("child")
    assert load_profile("adult") is builtin_profile("adult")


@pytest.fixture(scope="module")
def suite(tmp_path_factory):
    d = tmp_path_factory.mktemp("suite")
    microscenes.write_suite(d)
    return d


def run(args, capsys=None):
    code = main([str(a) for a in args])
    return code


def test_verify_pass_and_report_round_trip(suite, tmp_path):
    out = tmp_path / "r.json"
    code = run(["verify", "--scene", suite / "scenes/open_room-id.json", "--plan", suite / "plans/open_room.json",
                "--agent", "adult", "--seed", 0, "--out", out])
    assert code == 0
    rep = load_report(out)
    assert rep.overall_success
    p2 = tmp_path / "r2.json"
    write_report(rep, p2)
    assert p2.read_bytes() == out.read_bytes()


def test_verify_corridor_wheelchair(suite, tmp_path, capsys):
    out = tmp_path / "r.json"
    code = run(["verify", "--scene", suite / "scenes/narrow_gap-id.json", "--plan", suite / "plans/narrow_gap.json",
                "--agent", "wheelchair", "--out", out, "--debug-dir", tmp_path / "dbg"])
    assert code == 1
    rep = json.loads(out.read_text())
    assert rep["steps"][0]["checks"][0]["property"] == "navigable"
    assert rep["steps"][0]["checks"][0]["status"] is False
    names = sorted(p.name for p in (tmp_path / "dbg").iterdir())
    assert names == ["clearance_boxes.json", "navmap.pgm", "regions.pgm", "step_01_zones.pgm", "step_02_zones.pgm"]


def test_verify_missing_plan(suite, tmp_path, capsys):
    code = run(["verify", "--scene", suite / "scenes/open_room-id.json", "--plan", tmp_path / "none.json",
                "--agent", "adult", "--out", tmp_path / "r.json"])
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "InputError" and "not found" in err["messages"][0]


def test_verify_unknown_agent(suite, tmp_path, capsys):
    code = run(["verify", "--scene", suite / "scenes/open_room-id.json", "--plan", suite / "plans/open_room.json",
                "--agent", "robot", "--out", tmp_path / "r.json"])
    assert code == 2


def test_navmap_command(suite, tmp_path):
    out = tmp_path / "m.pgm"
    assert run(["navmap", "--scene", suite / "scenes/narrow_gap-id.json", "--agent", "wheelchair",
                "--resolution", 64, "--out", out, "--regions"]) == 0
    data = out.read_bytes()
    assert data.startswith(b"P5\n# resolution 64")
    assert len(set(data[-64 * 64:])) == 3


def test_metrics_command(tmp_path):
    labels = [{"task_id": "a", "agent_name": "adult", "task_label": True, "action_labels": [True]},
              {"task_id": "b", "agent_name": "child", "task_label": False, "action_labels": [True, False, True],
               "failing_properties": [None, "reachable", None]}]
    direct = [{"task_id": "a", "task_pred": True}, {"task_id": "b", "task_pred": True}]
    dec = [{"task_id": "a", "action_preds": [True]}, {"task_id": "b", "action_preds": [True, False, True]}]
    for name, rows in (("l", labels), ("d", direct), ("c", dec)):
        (tmp_path / f"{name}.jsonl").write_text("".join(json.dumps(r) + "\n" for r in rows))
    out = tmp_path / "m.json"
    assert run(["metrics", "--labels", tmp_path / "l.jsonl", "--direct", tmp_path / "d.jsonl",
                "--decomposed", tmp_path / "c.jsonl", "--out", out]) == 0
    m = json.loads(out.read_text())
    assert m["direct"]["task_accuracy"] == 0.5 and m["decomposed"]["task_accuracy"] == 1.0
    assert m["consistency"] == 50.0


def test_reward_command(tmp_path):
    labels = [{"task_id": "b", "agent_name": "child", "task_label": False, "action_labels": [True, False],
               "failing_properties": [None, "navigable"]}]
    comps = [{"task_id": "b", "completion": "<think>no path</think><answer>False</answer>"},
             {"task_id": "b", "completion": "<think>fine</think><answer>True</answer>"},
             {"task_id": "b", "action_index": 0, "completion": "<think>ok</think><answer>True</answer>"}]
    (tmp_path / "l.jsonl").write_text("".join(json.dumps(r) + "\n" for r in labels))
    (tmp_path / "x.jsonl").write_text("".join(json.dumps(r) + "\n" for r in comps))
    out = tmp_path / "r.jsonl"
    assert run(["reward", "--labels", tmp_path / "l.jsonl", "--completions", tmp_path / "x.jsonl", "--out", out]) == 0
    rows = [json.loads(line) for line in out.read_text().splitlines()]
    assert [r["reward"] for r in rows] == [4.5, 0.5, 2.5]
    assert abs(sum(r["advantage"] for r in rows)) < 1e-12


def test_audit_reports_errors(tmp_path, suite):
    manifest = {"runs": [{"scene": str(suite / "scenes/open_room-id.json"), "plan": "missing.json", "agent": "adult"}]}
    (tmp_path / "m.json").write_text(json.dumps(manifest))
    assert run(["audit", "--manifest", tmp_path / "m.json", "--out", tmp_path / "s.json"]) == 0
    s = json.loads((tmp_path / "s.json").read_text())
    assert s["errors"] == 1 and s["runs"][0]["error"]["error"] == "InputError"
    assert run(["audit", "--manifest", tmp_path / "nope.json", "--out", tmp_path / "s.json"]) == 2


@pytest.mark.parametrize("layout", list(microscenes.LAYOUTS))
def test_golden_reports(layout):
    scene = scene_from_dict(microscenes.scene_doc(layout, 0))
    from affordcheck.engine import VerificationConfig, ground_plan
    from affordcheck.scene import Plan, PlanStep

    plan_def = microscenes.plan_doc(layout)
    plan = Plan(tuple(PlanStep(s["action"], s["object_id"]) for s in plan_def["steps"]), task=plan_def["task"])
    for agent in microscenes.PROFILES:
        text = ground_plan(plan, scene, builtin_profile(agent), VerificationConfig(seed=0)).to_json()
        golden = GOLDEN / f"{layout}-{agent}.json"
        assert text == golden.read_text(), golden.name
        assert DiagnosticReport.from_dict(json.loads(text)).to_json() == text


def test_quiet_loading_of_suite(suite):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        for p in sorted((suite / "scenes").iterdir()):
            load_scene(p)
