"""Command-line driver.

Exit codes: 0 success, 2 usage/config/schema/input error, 1 internal
invariant failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import tempfile
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from PIL import Image

from . import bench_eval as be
from . import fixture as fx
from .answerers import answer_all
from .config import ConfigError, PipelineConfig, config_from_mapping, load_config
from .figures import write_report_figures
from .metadata_graph import GraphSchemaError, build_graph, load_graph, serialize_graph
from .projection import generate_view_set, render_perspective
from .prompt_render import GridStyle, emit_prompts, image_sha256, prompt_sha256, render_grid
from .schemas import (
    EPISODE_SCHEMA,
    PREDICTION_SCHEMA,
    TARGET_SCHEMA,
    SchemaError,
    detections_doc,
    dumps_line,
    load_detections,
    load_redetections,
    read_jsonl,
    redetection_doc,
    validate,
)
from .sphere_geom import DomainError, ErpImage
from .ssca import SscaDimError, check_suite, load_params, save_params, SscaParams
from .task_gen import (
    FAMILIES,
    MixtureError,
    MixtureSpec,
    CANONICAL_RATIOS,
    generate_all,
    natural_ratios,
    read_tasks,
    sample_canonical,
    write_tasks,
)
from .verify_merge import VerificationError, run_pipeline, verified_entities

log = logging.getLogger("panokit")

USER_ERRORS = (SchemaError, ConfigError, MixtureError, be.EvalError, GraphSchemaError, VerificationError,
               DomainError, SscaDimError, FileNotFoundError, IsADirectoryError, KeyError, ValueError)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# I/O helpers


def _atomic_write(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_text(path, text: str) -> None:
    _atomic_write(path, text.encode("utf-8"))


def _write_json(path, doc: Any) -> None:
    _write_text(path, json.dumps(doc, indent=1, ensure_ascii=False) + "\n")


def _write_png(path, data: np.ndarray) -> None:
    import io

    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(data)).save(buf, format="PNG", optimize=False)
    _atomic_write(path, buf.getvalue())


def _read_erp(path) -> ErpImage:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    if p.suffix == ".npy":
        return ErpImage(np.load(p))
    with Image.open(p) as im:
        data = np.asarray(im.convert("RGB") if im.mode not in ("L", "RGB") else im)
    return ErpImage(data)


def _header(cfg: PipelineConfig, kind: str, **extra) -> Dict[str, Any]:
    doc = {"kind": kind, "config_sha256": cfg.sha256, "config": cfg.to_doc()}
    doc.update(extra)
    return doc


# ---------------------------------------------------------------------------
# Config handling

# flag name -> config key
_OVERRIDES = {
    "confidence": "confidence", "nms_iou": "nms_iou", "merge_iou": "merge_iou", "semantic_iou": "semantic_iou",
    "min_support": "min_support", "h_fov": "h_fov_deg", "stride": "yaw_stride_deg", "v_fov": "v_fov_deg",
    "view_size": "view_size", "angle_eps": "angle_eps_deg", "length_eps": "length_eps_m", "edge_cap": "edge_cap",
    "seed": "seed", "n_options": "n_options", "seam_margin": "seam_margin_deg", "mixture": "mixture",
    "total": "mixture_total", "per_scene_cap": "per_scene_cap", "yaw_tol": "yaw_tol_deg",
    "pitch_tol": "pitch_tol_deg", "success_radius": "success_radius_m",
}


def _config(args) -> PipelineConfig:
    cfg = load_config(getattr(args, "config", None))
    overrides = {}
    for flag, key in _OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "no_consistency", False):
        overrides["consistency_check"] = False
    ratios = getattr(args, "ratios", None)
    if ratios:
        overrides["mixture_ratios"] = _parse_ratios(ratios)
        overrides.setdefault("mixture", "custom")
    return config_from_mapping(overrides, cfg) if overrides else cfg


def _parse_ratios(text: str) -> Dict[str, float]:
    out = {}
    for part in text.split(","):
        if "=" not in part:
            raise ConfigError(f"--ratios expects family=value pairs, got {part!r}")
        k, v = part.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError as exc:
            raise ConfigError(f"--ratios: bad value for {k.strip()!r}") from exc
    return out


# ---------------------------------------------------------------------------
# Subcommands


def cmd_make_fixture(args) -> int:
    out = Path(args.out)
    data = fx.make_fixture()
    _write_png(out / "erp.png", data.erp.data)
    buf = _npy_bytes(data.depth.data)
    _atomic_write(out / "depth.npy", buf)
    doc = detections_doc(fx.PANORAMA_ID, data.detections, "erp.png", fx.WIDTH, fx.HEIGHT, "depth.npy")
    _write_text(out / "detections.jsonl", dumps_line(doc))
    _write_text(out / "redetections.jsonl",
                "".join(dumps_line(redetection_doc(r, fx.PANORAMA_ID)) for r in data.redetections))
    _write_text(out / "episodes.jsonl", "".join(dumps_line(e) for e in fx.VLN_EPISODES))
    _write_text(out / "targets.jsonl", "".join(dumps_line(t) for t in fx.direction_targets()))
    _write_json(out / "efficiency.json", {"baseline": fx.EFFICIENCY_BASELINE, "rows": list(fx.EFFICIENCY_ROWS)})
    print(f"wrote fixture to {out}")
    return 0


def _npy_bytes(arr: np.ndarray) -> bytes:
    import io

    buf = io.BytesIO()
    np.save(buf, np.ascontiguousarray(arr, dtype="<f8"), allow_pickle=False)
    return buf.getvalue()


def cmd_project(args) -> int:
    cfg = _config(args)
    erp = _read_erp(args.erp)
    if erp.is_depth:
        raise UsageError("project expects a color ERP image")
    views = generate_view_set(math.radians(cfg.h_fov_deg), math.radians(cfg.yaw_stride_deg),
                              [math.radians(p) for p in cfg.pitch_rings_deg],
                              None if cfg.v_fov_deg is None else math.radians(cfg.v_fov_deg), cfg.view_size)
    out = Path(args.out)
    # name and content hash rather than the full path, so manifests do not depend on where inputs live
    src = Path(args.erp)
    manifest = _header(cfg, "views", erp=src.name, erp_sha256=hashlib.sha256(src.read_bytes()).hexdigest(), views=[])
    for i, spec in enumerate(views):
        name = f"view_{i:02d}.png"
        img = render_perspective(erp, spec)
        _write_png(out / name, img)
        entry = {"index": i, "file": name, "sha256": image_sha256(img)}
        entry.update({k: (round(v, 9) if isinstance(v, float) else v) for k, v in spec.to_degrees().items()})
        manifest["views"].append(entry)
    _write_json(out / "views.json", manifest)
    print(f"{len(views)} views written to {out}")
    return 0


def _resolve(base: Path, rel: Optional[str]) -> Optional[Path]:
    if rel is None:
        return None
    p = Path(rel)
    return p if p.is_absolute() else base / p


def _build_one(pano, redets, depth_path, cfg: PipelineConfig):
    result = run_pipeline(pano.views, redets, cfg.confidence, cfg.nms_iou, cfg.merge_iou, cfg.semantic_iou,
                          cfg.min_support, cfg.consistency_check, cfg.samples_per_edge)
    depth = _read_erp(depth_path) if depth_path is not None else None
    if depth is not None and not depth.is_depth:
        raise UsageError(f"{depth_path}: not a single-channel depth map")
    width = pano.width or (depth.width if depth is not None else 0)
    height = pano.height or (depth.height if depth is not None else 0)
    graph = build_graph(verified_entities(result), depth, pano.panorama_id, width, height, cfg.edge_cap,
                        math.radians(cfg.angle_eps_deg), cfg.length_eps_m)
    graph.meta = {"config_sha256": cfg.sha256, "drop_counts": result.drop_counts()}
    report = {
        "panorama_id": pano.panorama_id,
        "config_sha256": cfg.sha256,
        "drop_counts": result.drop_counts(),
        "drops": [{"stage": d.stage, "id": d.item_id, "label": d.label, "detail": d.detail} for d in result.drops],
        "stale_redetections": result.stale_redets,
        "kept": [c.id for c in result.candidates],
    }
    return graph, report


def cmd_build_graph(args) -> int:
    cfg = _config(args)
    det_path = Path(args.detections)
    panos = load_detections(det_path)
    if not panos:
        raise UsageError(f"{det_path}: no panoramas")
    redets = load_redetections(args.redetections)
    ids = [p.panorama_id for p in panos]
    if len(set(ids)) != len(ids):
        raise SchemaError(str(det_path), "duplicate panorama_id")

    def work(pano):
        group = redets.get(pano.panorama_id, []) + (redets.get("", []) if len(panos) == 1 else [])
        depth = Path(args.depth) if args.depth else _resolve(det_path.parent, pano.depth_path)
        return _build_one(pano, group, depth, cfg)

    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        results = list(pool.map(work, sorted(panos, key=lambda p: p.panorama_id)))

    out = Path(args.out)
    if len(results) == 1:
        graph, report = results[0]
        _write_text(out, serialize_graph(graph))
        report_path = Path(args.report) if args.report else out.with_name(out.stem + ".drops.json")
        _write_json(report_path, {"config": cfg.to_doc(), **report})
        _print_drops(report, graph)
    else:
        for graph, report in results:
            _write_text(out / f"{graph.panorama_id}.graph.json", serialize_graph(graph))
            _write_json(out / f"{graph.panorama_id}.drops.json", {"config": cfg.to_doc(), **report})
            _print_drops(report, graph)
    return 0


def _print_drops(report, graph) -> None:
    counts = report["drop_counts"]
    print(f"{report['panorama_id']}: {len(graph.nodes)} entities, {len(graph.edges)} edges; dropped "
          + ", ".join(f"{k}={v}" for k, v in counts.items()))


def _load_graphs(paths: Sequence[str]):
    graphs = {}
    for p in paths:
        g = load_graph(p)
        if g.panorama_id in graphs:
            raise SchemaError(str(p), f"duplicate panorama_id {g.panorama_id!r}")
        graphs[g.panorama_id] = g
    return graphs


def cmd_gen_tasks(args) -> int:
    cfg = _config(args)
    graphs = _load_graphs(args.graph)
    pool = []
    for pid in sorted(graphs):
        pool += generate_all(graphs[pid], cfg.seed, cfg.n_options, cfg.seam_margin_deg)
    if cfg.mixture == "none":
        tasks = pool
    else:
        ratios = {"canonical": CANONICAL_RATIOS, "natural": None, "custom": cfg.mixture_ratios}[cfg.mixture]
        if ratios is None:
            ratios = natural_ratios(pool)
        total = cfg.mixture_total or len(pool)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            tasks = sample_canonical(pool, MixtureSpec(ratios, total, cfg.per_scene_cap, cfg.seed))
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    write_tasks(args.out, tasks, cfg.sha256, prompt_sha256())
    counts = {f: sum(t.family == f for t in tasks) for f in FAMILIES}
    print(f"{len(tasks)} tasks from {len(pool)} generated: " + ", ".join(f"{k}={v}" for k, v in counts.items()))
    return 0


def cmd_answer(args) -> int:
    cfg = _config(args)
    tasks = read_tasks(args.tasks)
    graphs = _load_graphs(args.graph or [])
    if args.mode == "oracle" and not graphs:
        raise UsageError("the oracle answerer needs --graph")
    records = answer_all(tasks, graphs, args.mode, cfg.seed)
    _write_text(args.out, "".join(dumps_line(r) for r in records))
    print(f"{len(records)} {args.mode} predictions written to {args.out}")
    return 0


def _load_predictions(path) -> Dict[str, Optional[str]]:
    records = []
    for lineno, rec in read_jsonl(path):
        validate(rec, PREDICTION_SCHEMA, f"line {lineno}")
        records.append(rec)
    return be.index_predictions(records)


def _eval_bench(args, cfg):
    if not args.tasks or not args.predictions:
        raise UsageError("bench mode needs --tasks and --predictions")
    tasks = read_tasks(args.tasks)
    preds = _load_predictions(args.predictions)
    report = be.score_bench(tasks, preds)
    report["direction"] = be.score_directions(tasks, preds, cfg.yaw_tol_deg, cfg.pitch_tol_deg)
    mc = report["mc"]
    rows = [(op, acc) for op, acc in mc["per_operator"].items()]
    text = [be.format_table(["operator", "accuracy"], rows),
            f"MC accuracy {mc['accuracy']:.4f} over {mc['count']} items ({mc['invalid']} invalid)",
            f"BFOV mIoU {report['bfov']['miou']:.4f} over {report['bfov']['count']} items",
            f"direction hit {report['direction']['success']:.4f} over {report['direction']['count']} items"]
    return report, "\n".join(text)


def _eval_hstar(args, cfg):
    if not args.targets or not args.predictions:
        raise UsageError("hstar mode needs --targets and --predictions")
    targets = []
    for lineno, doc in read_jsonl(args.targets):
        validate(doc, TARGET_SCHEMA, f"line {lineno}")
        doc = dict(doc)
        doc.setdefault("yaw_tol", cfg.yaw_tol_deg)
        doc.setdefault("pitch_tol", cfg.pitch_tol_deg)
        targets.append(be.DirectionTarget.from_doc(doc))
    preds = _load_predictions(args.predictions)
    dirs = [be.parse_direction(preds.get(t.id)) for t in targets]
    report = be.score_direction_hit(dirs, targets)
    report["tolerance_note"] = (f"tolerance defaults yaw {cfg.yaw_tol_deg:g} deg / pitch {cfg.pitch_tol_deg:g} deg "
                                "are shipped defaults")
    rows = [("overall", report["success"]), ("yaw only", report["yaw_acc"]), ("pitch only", report["pitch_acc"])]
    rows += [(k, v) for k, v in report["per_kind"].items()]
    return report, report["tolerance_note"] + "\n" + be.format_table(["subset", "hit rate"], rows)


def _eval_vln(args, cfg):
    if not args.episodes:
        raise UsageError("vln mode needs --episodes")
    eps = []
    for lineno, doc in read_jsonl(args.episodes):
        validate(doc, EPISODE_SCHEMA, f"line {lineno}")
        eps.append(be.Episode.from_doc(doc))
    report = be.score_vln(eps, cfg.success_radius_m)
    rows = [(k, report[k]) for k in ("NE", "OSR", "SR", "SPL")]
    return report, be.format_table(["metric", "value"], rows)


def _eval_efficiency(args, cfg):
    if not args.rows:
        raise UsageError("efficiency mode needs --rows")
    with open(args.rows, encoding="utf-8") as fh:
        doc = json.load(fh)
    baseline = args.baseline or doc.get("baseline")
    if not baseline:
        raise UsageError("no baseline row given")
    table = be.efficiency_report(doc["rows"], baseline)
    report = {"baseline": baseline, "rows": table}
    rows = [(r["name"], f"{r['steps']:.2f}", f"{r['tokens'] / 1000:.1f}k", r["relative_cost_text"]) for r in table]
    return report, be.format_table(["method", "steps", "tokens", "rel. cost"], rows)


def cmd_eval(args) -> int:
    cfg = _config(args)
    handler = {"bench": _eval_bench, "hstar": _eval_hstar, "vln": _eval_vln, "efficiency": _eval_efficiency}[args.mode]
    report, text = handler(args, cfg)
    doc = _header(cfg, f"eval-{args.mode}", report=report)
    print(text)
    if args.out:
        _write_json(args.out, doc)
    if args.figures:
        for path in write_report_figures(args.mode, report, args.figures):
            print(f"figure: {path}")
    return 0


def _parse_dims(text: str) -> Dict[str, int]:
    dims = {"N": 8, "d": 16, "h": 2}
    for part in text.split(","):
        k, _, v = part.partition("=")
        if k.strip() not in dims or not v.strip().isdigit():
            raise UsageError(f"--dims expects N=..,d=..,h=.. got {text!r}")
        dims[k.strip()] = int(v)
    return dims


def cmd_ssca_check(args) -> int:
    dims = _parse_dims(args.dims) if args.dims else {"N": 8, "d": 16, "h": 2}
    if dims["h"] < 1 or dims["d"] % dims["h"]:
        raise UsageError(f"d={dims['d']} is not divisible by h={dims['h']}")
    if args.save_params:
        save_params(SscaParams.init(dims["d"], dims["h"], seed=args.seed), args.save_params)
    if args.params:
        p = load_params(args.params)
        print(f"loaded snapshot F={p.n_freqs} d={p.d} h={p.heads}")
    rows = check_suite(dims["N"], dims["d"], dims["h"], seeds=args.seeds, self_test=args.self_test)
    width = max(len(r[0]) for r in rows)
    for name, ok, detail in rows:
        print(f"{'PASS' if ok else 'FAIL'}  {name.ljust(width)}  {detail}")
    return 0 if all(ok for _, ok, _ in rows) else 1


def cmd_prompts(args) -> int:
    bundle = emit_prompts()
    if args.out:
        for name, text in bundle.items():
            _write_text(Path(args.out) / f"{name}.txt", text)
    for name, text in bundle.items():
        print(f"{name}: sha256 {hashlib.sha256(text.encode('utf-8')).hexdigest()}")
    print(f"bundle: sha256 {bundle.sha256}")
    return 0


def cmd_render_grid(args) -> int:
    erp = _read_erp(args.erp)
    out, _ = render_grid(erp, GridStyle(labels=not args.no_labels))
    _write_png(args.out, out.data)
    print(f"grid image sha256 {image_sha256(out.data)}")
    return 0


# ---------------------------------------------------------------------------
# Parser


def _add_config(p) -> None:
    p.add_argument("--config", help="JSON or YAML config document; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="panokit", description="Panoramic spatial data and evaluation toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-fixture", help="write the bundled synthetic scene and evaluation fixtures")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_fixture)

    p = sub.add_parser("project", help="render overlapping perspective views from an ERP image")
    p.add_argument("erp")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--h-fov", type=float, help="view horizontal FoV in degrees (default 120, reference setting)")
    p.add_argument("--stride", type=float, help="yaw stride in degrees (default 60, reference setting)")
    p.add_argument("--v-fov", type=float, help="vertical FoV in degrees (default: same as --h-fov)")
    p.add_argument("--view-size", type=int, help="output view width in pixels (default 512)")
    _add_config(p)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("build-graph", help="verify detections and build the metadata graph")
    p.add_argument("--detections", required=True)
    p.add_argument("--redetections", required=True)
    p.add_argument("--depth", help="depth map (.npy or 16-bit image); overrides depth_path in the detections")
    p.add_argument("--out", required=True, help="graph file, or a directory when several panoramas are given")
    p.add_argument("--report", help="drop report path (default: <out>.drops.json)")
    p.add_argument("--workers", type=int, default=1, help="parallel panoramas (default 1)")
    p.add_argument("--confidence", type=float, help="detector confidence cutoff, kept when >= (default 0.3, reference setting)")
    p.add_argument("--nms-iou", type=float, help="per-view NMS IoU, suppressed when > (default 0.5, reference setting)")
    p.add_argument("--merge-iou", type=float, help="cross-view ERP IoU for merging, merged when > (default 0.6, reference setting)")
    p.add_argument("--semantic-iou", type=float, help="re-detection IoU, kept when > (default 0.7, reference setting)")
    p.add_argument("--min-support", type=int, help="minimum supporting views inside multi-view overlaps (default 1)")
    p.add_argument("--no-consistency", action="store_true", help="disable the multi-view consistency drop")
    p.add_argument("--angle-eps", type=float, help="angular dead-zone in degrees (default 5, shipped default)")
    p.add_argument("--length-eps", type=float, help="3D dead-zone in meters (default 0.15, shipped default)")
    p.add_argument("--edge-cap", type=int, help="keep only the k nearest neighbours per node (default: all pairs)")
    _add_config(p)
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("gen-tasks", help="generate QA tasks from graphs and sample a mixture")
    p.add_argument("--graph", required=True, nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="generation and sampling seed (default 0)")
    p.add_argument("--n-options", type=int, help="options per multiple-choice item (default 4)")
    p.add_argument("--seam-margin", type=float, help="seam anchor margin in degrees (default 20, shipped default)")
    p.add_argument("--mixture", choices=["none", "canonical", "natural", "custom"],
                   help="none keeps every item; canonical samples 36.8/11.1/27.5/24.4/0.2 percent over semantic/angular/refframe/depth3d/erp_property")
    p.add_argument("--ratios", help="custom ratios, e.g. semantic=0.5,refframe=0.5 (must sum to 1)")
    p.add_argument("--total", type=int, help="sampled item count (default: pool size)")
    p.add_argument("--per-scene-cap", type=int, help="max items per scene per family")
    _add_config(p)
    p.set_defaults(func=cmd_gen_tasks)

    p = sub.add_parser("answer", help="produce reference predictions (oracle or random)")
    p.add_argument("--tasks", required=True)
    p.add_argument("--graph", nargs="*")
    p.add_argument("--mode", choices=["oracle", "random"], default="oracle")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    _add_config(p)
    p.set_defaults(func=cmd_answer)

    p = sub.add_parser("eval", help="score predictions, direction hits, navigation episodes or efficiency rows")
    p.add_argument("mode", choices=["bench", "hstar", "vln", "efficiency"])
    p.add_argument("--tasks")
    p.add_argument("--predictions")
    p.add_argument("--targets")
    p.add_argument("--episodes")
    p.add_argument("--rows", help="efficiency rows JSON: {baseline, rows: [{name, steps, total_tokens|tokens_per_call}]}")
    p.add_argument("--baseline")
    p.add_argument("--yaw-tol", type=float, help="direction-hit yaw tolerance in degrees (default 15, shipped default)")
    p.add_argument("--pitch-tol", type=float, help="direction-hit pitch tolerance in degrees (default 15, shipped default)")
    p.add_argument("--success-radius", type=float, help="navigation success radius in meters (default 3, standard value)")
    p.add_argument("--out", help="machine-readable report (JSON)")
    p.add_argument("--figures", help="directory for PNG figures")
    _add_config(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ssca-check", help="run the SSCA numeric property suite")
    p.add_argument("--dims", help="N=..,d=..,h=.. (default N=8,d=16,h=2)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", type=int, default=20, help="gradient-check seeds (default 20)")
    p.add_argument("--self-test", action="store_true", help="also run negative controls")
    p.add_argument("--params", help="load and validate a parameter snapshot")
    p.add_argument("--save-params", help="write an initialized parameter snapshot")
    p.set_defaults(func=cmd_ssca_check)

    p = sub.add_parser("prompts", help="emit the prompt templates and their hashes")
    p.add_argument("--out", help="directory for the .txt files")
    p.set_defaults(func=cmd_prompts)

    p = sub.add_parser("render-grid", help="overlay the yaw/pitch grid on an ERP image")
    p.add_argument("erp")
    p.add_argument("--out", required=True)
    p.add_argument("--no-labels", action="store_true")
    p.set_defaults(func=cmd_render_grid)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except USER_ERRORS as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
