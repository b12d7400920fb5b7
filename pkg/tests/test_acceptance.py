"""Exit criteria, one test per criterion at the pinned tolerances."""

import dataclasses
import itertools
import json
import time

import numpy as np
import pytest

from affordcheck import microscenes
from affordcheck.checks import (
    VisibilityConfig,
    check_navigable,
    check_reachable,
    check_visible,
    visibility_passes,
)
from affordcheck.cli import main
from affordcheck.engine import VerificationConfig, ground_plan
from affordcheck.geometry import (
    Face,
    InteractionZone,
    TriangleMesh,
    min_distance_points_to_mesh,
    min_distance_points_to_points,
    translate_mesh,
)
from affordcheck.io import scene_from_dict
from affordcheck.metrics import ConfusionCounts, mcc
from affordcheck.navmap import (
    AgentPose,
    NavMap,
    build_navmap,
    connected_regions,
    label_regions,
    walkable_points_3d,
)
from affordcheck.rewards import group_advantage, grpo_reward
from affordcheck.scene import AtomicAction, Plan, PlanStep, PropertyKind, builtin_profile, required_properties
from conftest import box, gap_room, make_room
from oracles import flood_fill_labels

pytestmark = pytest.mark.acceptance

ADULT, CHILD, WHEEL = (builtin_profile(n) for n in ("adult", "child", "wheelchair"))


@pytest.fixture
def criterion(record_property):
    def mark(n, title):
        record_property("criterion", n)
        record_property("title", title)

    return mark


# 1 ----------------------------------------------------------------------------


def test_c01_gap_navigability(criterion):
    criterion(1, "0.55 m gap: adult through, wheelchair blocked (two regions), < 1 s")
    start = time.perf_counter()
    scene = gap_room()
    p = Plan((PlanStep("navigate_to", "cabinet"),))
    cfg = VerificationConfig(seed=0)
    adult = ground_plan(p, scene, ADULT, cfg)
    wheel_map = connected_regions(build_navmap(scene, WHEEL))
    wheel = ground_plan(p, scene, WHEEL, cfg, navmap=wheel_map)
    elapsed = time.perf_counter() - start
    assert adult.steps[0].trace[0].status is True
    assert wheel.steps[0].trace[0].status is False
    assert wheel_map.region_count == 2
    assert connected_regions(build_navmap(scene, ADULT)).region_count == 1
    assert elapsed < 1.0, elapsed


# 2 ----------------------------------------------------------------------------


def test_c02_reach_fixture(criterion):
    criterion(2, "cloud 2.0 m above walkable floor: adult 0.55 pass, child 1.15 fail")
    scene = make_room()
    for profile, expect_ok, expect_d in ((ADULT, True, 0.55), (CHILD, False, 1.15)):
        nav = connected_regions(build_navmap(scene, profile))
        floor = walkable_points_3d(nav, 1)
        x, _, z = floor[len(floor) // 2]
        # lowest point sits straight above a walkable cell center
        cloud = np.array([[x, 2.0, z], [x + 0.03, 2.05, z], [x, 2.1, z - 0.02], [x - 0.01, 2.2, z + 0.04]])
        out = check_reachable(floor, cloud, profile, "standing")
        assert out.status is expect_ok
        assert abs(out.metrics["required_distance_m"] - expect_d) < 1e-6
    # the crouched attempt (shoulder 0.425 m) is farther still
    crouch_h = CHILD.standing_shoulder_height * CHILD.crouch_factor
    crouch_d = min_distance_points_to_points(floor, cloud - [0, crouch_h, 0]).distance
    assert abs(crouch_d - 1.575) < 1e-6 and crouch_d > CHILD.reach_radius


# 3 ----------------------------------------------------------------------------


def test_c03_shift_equivalence(criterion):
    criterion(3, "mesh shift vs lifted points, 200 instances, < 1e-9 m")
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(200):
        pts = rng.uniform(-2, 2, size=(rng.integers(1, 40), 3))
        nv, nt = rng.integers(3, 20), rng.integers(1, 15)
        verts = rng.uniform(-2, 3, size=(nv, 3))
        tris = np.array([rng.choice(nv, 3, replace=False) for _ in range(nt)])
        mesh = TriangleMesh(verts, tris)
        h = rng.uniform(0, 2)
        shifted = min_distance_points_to_mesh(pts, translate_mesh(mesh, [0, -h, 0])).distance
        lifted = min_distance_points_to_mesh(pts + [0, h, 0], mesh).distance
        worst = max(worst, abs(shifted - lifted))
    assert worst < 1e-9, worst


# 4 ----------------------------------------------------------------------------


def random_scene(rng, k):
    objs = []
    for i in range(k):
        c = rng.uniform(0.2, 3.8, 2)
        s = rng.uniform(0.1, 1.2, 2)
        objs.append(box(f"o{i}", (c[0], 0.4, c[1]), (s[0], 0.8, s[1]), rng.uniform(-np.pi, np.pi)))
    return make_room(objs)


def test_c04_erosion_monotone(criterion):
    criterion(4, "walkable(0.65) <= walkable(0.40) <= walkable(0.30), 100 scenes")
    rng = np.random.default_rng(4)
    violations = 0
    for _ in range(100):
        scene = random_scene(rng, int(rng.integers(0, 9)))
        grids = [build_navmap(scene, dataclasses.replace(ADULT, clearance_width=w), 128).grid
                 for w in (0.30, 0.40, 0.65)]
        violations += int((grids[2] & ~grids[1]).sum() + (grids[1] & ~grids[0]).sum())
    assert violations == 0


# 5 ----------------------------------------------------------------------------


def test_c05_components_vs_flood_fill(criterion):
    criterion(5, "connected components equal flood fill, 50 grids")
    rng = np.random.default_rng(5)
    for _ in range(50):
        shape = tuple(rng.integers(5, 60, 2))
        grid = rng.random(shape) < rng.uniform(0.3, 0.8)
        assert np.array_equal(label_regions(grid), flood_fill_labels(grid))


# 6 ----------------------------------------------------------------------------


def test_c06_visibility_extremes_and_threshold(criterion, monkeypatch):
    criterion(6, "visibility 1.0 pass, 0.0 fail, 0.15 fail, 0.16 pass")
    open_scene = make_room([box("tv", (2, 0.5, 3), (1, 1, 1))])
    out = check_visible(AgentPose((2, 1)), ADULT, open_scene.object("tv"), open_scene)
    assert out.metrics["visibility_ratio"] == 1.0 and out.status
    walled = make_room([box("tv", (2, 0.5, 3), (1, 1, 1)), box("wall", (2, 1.25, 2), (4, 2.5, 0.1))])
    out = check_visible(AgentPose((2, 1)), ADULT, walled.object("tv"), walled)
    assert out.metrics["visibility_ratio"] == 0.0 and not out.status

    assert not visibility_passes(0.15, 0.15)
    assert visibility_passes(0.16, 0.15)
    # drive the full check with ray matrices holding exactly 15% and 16% clear rays
    import affordcheck.checks as checks

    for n_eyes, n_clear, expect in ((20, 27, False), (25, 36, True)):
        clear = np.zeros(n_eyes * 9, dtype=bool)
        clear[:n_clear] = True
        monkeypatch.setattr(checks, "count_clear_rays", lambda e, t, o, c=clear, n=n_eyes: c.reshape(n, 9))
        res = check_visible(AgentPose((2, 1)), ADULT, open_scene.object("tv"), open_scene,
                            VisibilityConfig(eye_samples=n_eyes))
        assert res.metrics["visibility_ratio"] == n_clear / (n_eyes * 9)
        assert res.status is expect


# 7 ----------------------------------------------------------------------------


def fixture_scenes():
    living = make_room([
        box("sofa", (2.0, 0.4, 3.2), (1.8, 0.8, 0.8)),
        box("tv", (2.0, 0.6, 0.6), (1.0, 0.6, 0.4)),
        box("cabinet", (3.6, 0.5, 1.8), (0.6, 1.0, 0.4), np.pi / 2),
        box("lamp", (0.5, 0.8, 3.5), (0.3, 1.6, 0.3)),
    ], "living")
    return [living, gap_room()] + [
        scene_from_dict(microscenes.scene_doc(k, 0)) for k in ("blocked_cabinet", "partition")
    ]


def test_c07_report_conjunctions(criterion):
    criterion(7, "conjunction laws on 500 random plans; reach and region message strings")
    rng = np.random.default_rng(7)
    scenes = fixture_scenes()
    cfg = VerificationConfig(resolution=96)
    maps = {(s.id, p.name): build_navmap(s, p, 96) for s in scenes for p in (ADULT, CHILD, WHEEL)}
    actions = list(AtomicAction)
    violations = 0
    for i in range(500):
        scene = scenes[i % len(scenes)]
        profile = (ADULT, CHILD, WHEEL)[int(rng.integers(3))]
        ids = [o.id for o in scene.objects]
        steps = tuple(PlanStep(actions[int(rng.integers(len(actions)))], ids[int(rng.integers(len(ids)))])
                      for _ in range(int(rng.integers(0, 6))))
        rep = ground_plan(Plan(steps), scene, profile, dataclasses.replace(cfg, seed=i),
                          navmap=maps[scene.id, profile.name])
        violations += rep.overall_success != all(s.success for s in rep.steps)
        for s in rep.steps:
            violations += s.success != all(c.status for c in s.trace)
            violations += [c.property for c in s.trace] != required_properties(s.action)
    assert violations == 0

    ok = check_reachable([[0, 0, 0]], [[0, 1.45, 0.21]], ADULT, "standing")
    assert ok.message == "Object is reachable. Required distance: 0.21m, Agent's reach: 0.70m."
    bad = check_reachable([[0, 0, 0]], [[0, 1.45, 0.78]], ADULT, "standing")
    assert bad.message == "Object not reachable. Required distance: 0.78m, exceeds Agent's reach: 0.70m."
    g = np.zeros((9, 9), dtype=bool)
    g[:6, 0:2] = True
    g[:6, 4:6] = True
    nav = connected_regions(NavMap(g, g, g, 1.0, np.zeros(2), 0.0, ADULT))
    zone = InteractionZone(Face.FRONT, [[3, 0], [5, 0], [5, 2], [3, 2]], "red")
    out, _ = check_navigable(nav, AgentPose((0.5, 0.5)), [zone], 0)
    assert out.message == ("Agent and target zones are in different, disconnected walkable areas "
                           "(Agent area: 1, Target areas: [0 2]).")


# 8 ----------------------------------------------------------------------------


def test_c08_determinism(criterion, tmp_path):
    criterion(8, "verify seed 42 twice: byte-identical report and PGM")
    microscenes.write_suite(tmp_path)
    outputs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        code = main(["verify", "--scene", str(tmp_path / "scenes/blocked_cabinet-id.json"),
                     "--plan", str(tmp_path / "plans/blocked_cabinet.json"), "--agent", "adult",
                     "--seed", "42", "--out", str(d / "report.json"), "--debug-dir", str(d)])
        assert code == 1
        outputs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    assert outputs[0] == outputs[1]
    assert any(name.endswith(".pgm") for name in outputs[0])


# 9 ----------------------------------------------------------------------------


def test_c09_mcc(criterion):
    criterion(9, "MCC equals correlation oracle on 1000 tables; 1.0, 0.0, swap")
    rng = np.random.default_rng(9)
    for _ in range(1000):
        tp, tn, fp, fn = (int(v) for v in rng.integers(0, 60, 4))
        c = ConfusionCounts(tp, tn, fp, fn)
        labels = np.repeat([1, 0, 0, 1], [tp, tn, fp, fn])
        preds = np.repeat([1, 0, 1, 0], [tp, tn, fp, fn])
        if labels.std() == 0 or preds.std() == 0:
            oracle = 0.0
        else:
            oracle = float(np.corrcoef(labels, preds)[0, 1])
        assert abs(mcc(c) - oracle) < 1e-12
        assert mcc(ConfusionCounts(tn, tp, fn, fp)) == mcc(c)
    assert mcc(ConfusionCounts(17, 9, 0, 0)) == 1.0
    assert mcc(ConfusionCounts(5, 5, 5, 5)) == 0.0


# 10 ---------------------------------------------------------------------------


def _completion(format_ok, placeholder, answer, keyword):
    think = "reasoning process here" if placeholder else ("no clear path" if keyword else "hmm")
    body = f"<think>{think}</think><answer>{answer}</answer>"
    return body if format_ok else body.replace("<think>", "").replace("</think>", " ")


def test_c10_reward_truth_table(criterion):
    criterion(10, "reward totals within the allowed set; 4.5, 2.5, -1.0 examples")
    allowed = {-1.0, 0.0, 0.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5}
    seen = set()
    for fmt, ph, ans, label, kw in itertools.product([True, False], [True, False], ["True", "False"],
                                                     [True, False], [True, False]):
        total = grpo_reward(_completion(fmt, ph, ans, kw), label, PropertyKind.NAVIGABLE).total
        assert total in allowed
        seen.add(total)
    assert {-1.0, 0.5, 2.5, 3.5, 4.5} <= seen
    assert grpo_reward("<think>No clear path to the bed.</think><answer>False</answer>", False,
                       PropertyKind.NAVIGABLE).total == 4.5
    assert grpo_reward("<think>Looks fine.</think><answer>True</answer>", True).total == 2.5
    assert grpo_reward("<think>reasoning process here</think><answer>False</answer>", False,
                       PropertyKind.NAVIGABLE).total == -1.0


# 11 ---------------------------------------------------------------------------


def test_c11_group_advantage(criterion):
    criterion(11, "group advantage: constant group zeros, mean 0 within 1e-12")
    assert np.array_equal(group_advantage([2.5] * 8), np.zeros(8))
    rng = np.random.default_rng(11)
    for _ in range(200):
        r = rng.choice([-1.0, 0.0, 0.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5], size=int(rng.integers(1, 17)))
        assert abs(group_advantage(r).mean()) < 1e-12


# 12 ---------------------------------------------------------------------------


def test_c12_microscene_audit(criterion, tmp_path):
    criterion(12, "audit of 20 micro-scenes x 3 profiles, < 30 s, exact pass rates")
    manifest = microscenes.write_suite(tmp_path)
    start = time.perf_counter()
    code = main(["audit", "--manifest", str(manifest), "--out", str(tmp_path / "summary.json"), "--workers", "4"])
    elapsed = time.perf_counter() - start
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["errors"] == 0 and len(summary["runs"]) == 60
    got = {a: {k: v for k, v in rates.items() if v is not None} for a, rates in summary["rates"].items()}
    assert got == microscenes.expected_summary()
    assert elapsed < 30.0, elapsed
