"""Command-line entry point: verify, navmap, metrics, reward, audit.

Exit codes: 0 success (for ``verify``: plan executable), 1 plan not
executable, 2 invalid input (a JSON error object is written to stderr).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from affordcheck.checks import AnnotationResolver, FixturePartProvider, VisibilityConfig
from affordcheck.engine import StepArtifacts, VerificationConfig, ground_plan
from affordcheck.geometry import GeometryError
from affordcheck.io import (
    InputError,
    load_labels,
    load_plan,
    load_predictions,
    load_profile,
    load_scene,
    read_jsonl,
    write_jsonl,
    write_report,
)
from affordcheck.metrics import DataError, consistency, task_metrics
from affordcheck.navmap import build_navmap, connected_regions, navmap_image, pgm_bytes, render_navmap
from affordcheck.rewards import grpo_reward, group_advantage
from affordcheck.scene import PlanError, PropertyKind, SceneError

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
AUDIT_COLUMNS = ("task_success",) + tuple(
    p.value
    for p in (
        PropertyKind.NAVIGABLE,
        PropertyKind.REACHABLE,
        PropertyKind.INTERACTABLE,
        PropertyKind.VISIBLE,
        PropertyKind.CLEARANCE,
    )
)
_INPUT_ERRORS = (InputError, SceneError, PlanError, DataError, GeometryError, KeyError, ValueError)


def _error_payload(exc: Exception) -> dict:
    if isinstance(exc, InputError):
        return exc.to_dict()
    return {"error": type(exc).__name__, "messages": [str(exc).strip("'\"")]}


def _config(args) -> VerificationConfig:
    return VerificationConfig(
        resolution=args.resolution,
        zone_depth=args.zone_depth,
        zone_flare=args.zone_flare,
        strict_clearance=args.strict_clearance,
        seed=args.seed,
        visibility=VisibilityConfig(),
    )


def run_verification(scene_path, plan_path, agent, cfg: VerificationConfig, parts=None, zones=None, artifacts=None):
    scene = load_scene(scene_path)
    plan = load_plan(plan_path)
    profile = load_profile(agent)
    resolver = AnnotationResolver.from_json(zones) if zones else None
    provider = FixturePartProvider.from_json(parts) if parts else None
    return ground_plan(plan, scene, profile, cfg, resolver, provider, artifacts=artifacts), scene, profile


def _write_debug(directory: Path, scene, profile, cfg, artifacts: list[StepArtifacts]) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    nav = connected_regions(build_navmap(scene, profile, cfg.resolution, cfg.margin, cfg.footprint))
    render_navmap(nav, directory / "navmap.pgm")
    render_navmap(nav, directory / "regions.pgm", regions=True)
    boxes = []
    for t, art in enumerate(artifacts, start=1):
        img = np.where(nav.grid, 128, 0).astype(np.uint8)
        for z in art.zones:
            img[nav.rasterize(z.polygon)] = 255
        (directory / f"step_{t:02d}_zones.pgm").write_bytes(pgm_bytes(img, f"step {t} interaction zones"))
        for cb, collides, inside in art.clearance:
            boxes.append(
                {
                    "step": t,
                    "face": cb.zone_face.value,
                    "center": cb.box.center.tolist(),
                    "half_extents": cb.box.half_extents.tolist(),
                    "yaw": cb.box.yaw,
                    "collides": collides,
                    "inside_floor": inside,
                }
            )
    (directory / "clearance_boxes.json").write_text(json.dumps(boxes, indent=2) + "\n")


def cmd_verify(args) -> int:
    cfg = _config(args)
    artifacts: list[StepArtifacts] = []
    report, scene, profile = run_verification(args.scene, args.plan, args.agent, cfg, args.parts, args.zones, artifacts)
    write_report(report, args.out)
    if args.debug_dir:
        _write_debug(Path(args.debug_dir), scene, profile, cfg, artifacts)
    print(report.insight)
    return EXIT_OK if report.overall_success else EXIT_FAIL


def cmd_navmap(args) -> int:
    nav = build_navmap(load_scene(args.scene), load_profile(args.agent), args.resolution)
    render_navmap(nav, args.out, regions=args.regions)
    return EXIT_OK


def cmd_metrics(args) -> int:
    labels = load_labels(args.labels)
    out = {}
    direct = load_predictions(args.direct, "direct") if args.direct else None
    decomposed = load_predictions(args.decomposed, "decomposed") if args.decomposed else None
    if direct is not None:
        out["direct"] = task_metrics(labels, direct)
    if decomposed is not None:
        out["decomposed"] = task_metrics(labels, decomposed)
    if direct is not None and decomposed is not None:
        out["consistency"] = consistency(direct, decomposed)
    if not out:
        raise DataError("provide --direct and/or --decomposed predictions")
    Path(args.out).write_text(json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def _reward_label(record, action_index):
    if action_index is None:
        label = record.task_label
        failing = None
        if not label and record.failing_properties:
            failing = next((p for p in record.failing_properties if p is not None), None)
        return label, failing
    label = record.action_labels[action_index]
    failing = record.failing_properties[action_index] if record.failing_properties else None
    return label, failing


def cmd_reward(args) -> int:
    labels = {r.task_id: r for r in load_labels(args.labels)}
    rows = read_jsonl(args.completions)
    out, groups = [], {}
    for i, row in enumerate(rows):
        if row.get("task_id") not in labels or "completion" not in row:
            raise InputError(args.completions, f"record {i}: needs a known task_id and a completion")
        label, failing = _reward_label(labels[row["task_id"]], row.get("action_index"))
        r = grpo_reward(row["completion"], label, failing)
        out.append(
            {
                "task_id": row["task_id"],
                "action_index": row.get("action_index"),
                "group": row.get("group", row["task_id"]),
                "r_format": r.r_format,
                "r_correct": r.r_correct,
                "r_spatial": r.r_spatial,
                "reward": r.total,
                "matched_keywords": list(r.matched_keywords),
            }
        )
        groups.setdefault(out[-1]["group"], []).append(i)
    for idx in groups.values():
        adv = group_advantage([out[i]["reward"] for i in idx], args.epsilon)
        for i, a in zip(idx, adv):
            out[i]["advantage"] = float(a)
    write_jsonl(out, args.out)
    return EXIT_OK


def _audit_one(base: Path, run: dict, seed: int):
    cfg = VerificationConfig(seed=int(run.get("seed", seed)))
    opt = {k: base / run[k] for k in ("parts", "zones") if run.get(k)}
    try:
        report, _, profile = run_verification(base / run["scene"], base / run["plan"], _agent_ref(base, run["agent"]),
                                              cfg, opt.get("parts"), opt.get("zones"))
    except _INPUT_ERRORS as exc:
        return {"scene": run["scene"], "plan": run["plan"], "agent": run["agent"], "error": _error_payload(exc)}, None
    return {
        "scene": run["scene"],
        "plan": run["plan"],
        "agent": profile.name,
        "overall_success": report.overall_success,
        "insight": report.insight,
    }, report


def _agent_ref(base: Path, agent: str):
    candidate = base / agent
    return candidate if candidate.suffix == ".json" else agent


def audit_summary(reports) -> dict:
    """Per-agent pass rates over every evaluated check, plus task success."""
    counts: dict[str, dict[str, list[int]]] = {}
    for rep in reports:
        c = counts.setdefault(rep.agent_name, {k: [0, 0] for k in AUDIT_COLUMNS})
        c["task_success"][0] += rep.overall_success
        c["task_success"][1] += 1
        for step in rep.steps:
            for check in step.trace:
                c[check.property.value][0] += check.status
                c[check.property.value][1] += 1
    rates = {
        agent: {k: (ok / n if n else None) for k, (ok, n) in c.items()} for agent, c in counts.items()
    }
    return {"columns": list(AUDIT_COLUMNS), "rates": rates, "counts": counts}


def cmd_audit(args) -> int:
    manifest_path = Path(args.manifest)
    if not manifest_path.is_file():
        raise InputError(manifest_path, "file not found")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(manifest_path, f"invalid JSON: {exc}") from None
    if not isinstance(manifest, dict) or not isinstance(manifest.get("runs"), list):
        raise InputError(manifest_path, "manifest needs a 'runs' list")
    bad = [i for i, r in enumerate(manifest["runs"]) if not {"scene", "plan", "agent"} <= set(r)]
    if bad:
        raise InputError(manifest_path, [f"runs/{i}: needs scene, plan and agent" for i in bad])
    base = manifest_path.parent
    seed = int(manifest.get("seed", 0))
    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        results = list(pool.map(lambda r: _audit_one(base, r, seed), manifest["runs"]))
    summary = audit_summary([rep for _, rep in results if rep is not None])
    summary["runs"] = [row for row, _ in results]
    summary["errors"] = sum(1 for _, rep in results if rep is None)
    Path(args.out).write_text(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="affordcheck", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="ground a plan in a scene for one agent")
    v.add_argument("--scene", required=True)
    v.add_argument("--plan", required=True)
    v.add_argument("--agent", required=True, help="built-in profile name or profile JSON path")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", required=True)
    v.add_argument("--debug-dir")
    v.add_argument("--resolution", type=int, default=256)
    v.add_argument("--zone-depth", type=float, default=0.75)
    v.add_argument("--zone-flare", type=float, default=1.0)
    v.add_argument("--parts", help="functional part fixture JSON")
    v.add_argument("--zones", help="interaction zone annotation JSON")
    v.add_argument("--strict-clearance", action="store_true")
    v.set_defaults(func=cmd_verify)

    n = sub.add_parser("navmap", help="write the agent's navigation map as PGM")
    n.add_argument("--scene", required=True)
    n.add_argument("--agent", required=True)
    n.add_argument("--resolution", type=int, default=256)
    n.add_argument("--out", required=True)
    n.add_argument("--regions", action="store_true", help="shade connected regions")
    n.set_defaults(func=cmd_navmap)

    m = sub.add_parser("metrics", help="score feasibility predictions")
    m.add_argument("--labels", required=True)
    m.add_argument("--direct")
    m.add_argument("--decomposed")
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_metrics)

    r = sub.add_parser("reward", help="rewards and group advantages for completions")
    r.add_argument("--labels", required=True)
    r.add_argument("--completions", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--epsilon", type=float, default=1e-4)
    r.set_defaults(func=cmd_reward)

    a = sub.add_parser("audit", help="verify many (scene, plan, agent) runs")
    a.add_argument("--manifest", required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--workers", type=int, default=1)
    a.set_defaults(func=cmd_audit)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        print(json.dumps(_error_payload(exc)), file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
