"""Interchange file formats.

All files are UTF-8, LF line endings. Line-delimited files hold one JSON
object per line; every record carries ``schema_version``. Angles are degrees.

detections (one document per panorama)::

    {"schema_version": 1, "panorama_id": "...", "image_path": "...",
     "depth_path": "..." (optional), "image": {"width": W, "height": H},
     "views": [{"yaw", "pitch", "h_fov", "v_fov", "width", "height",
                "boxes": [{"id" (optional), "x_min", "y_min", "x_max", "y_max",
                           "confidence", "label"}]}]}

re-detections::

    {"schema_version": 1, "candidate_id": "...", "phrase": "...",
     "bfov": [yaw, pitch, x_fov, y_fov], "category", "attributes",
     "description" (optional annotation fields)}

predictions::  {"task_id": "...", "raw_text": "..."}
episodes::     {"id", "trajectory": [[x, y, z], ...], "goal": [x, y, z],
                "shortest_path_length": l, "executed_path_length" (optional)}
direction targets (H*-style)::
    {"id", "kind" (e.g. HOS/HPS), "yaw", "pitch", "yaw_tol", "pitch_tol"}
    or {"id", "kind", "region": [yaw, pitch, x_fov, y_fov]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence

import jsonschema

from .projection import PerspBox, PerspViewSpec
from .sphere_geom import Bfov, bfov_degrees_valid
from .verify_merge import ReDetection, ViewDetections

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """A document violates its schema; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


_num = {"type": "number"}
_bfov = {"type": "array", "items": _num, "minItems": 4, "maxItems": 4}

DETECTIONS_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "panorama_id", "views"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "panorama_id": {"type": "string"},
        "image_path": {"type": "string"},
        "depth_path": {"type": "string"},
        "image": {
            "type": "object",
            "required": ["width", "height"],
            "additionalProperties": False,
            "properties": {"width": {"type": "integer"}, "height": {"type": "integer"}},
        },
        "views": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["yaw", "pitch", "h_fov", "v_fov", "width", "height", "boxes"],
                "additionalProperties": False,
                "properties": {
                    "yaw": _num, "pitch": _num, "h_fov": _num, "v_fov": _num,
                    "width": {"type": "integer", "minimum": 1},
                    "height": {"type": "integer", "minimum": 1},
                    "boxes": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["x_min", "y_min", "x_max", "y_max", "confidence", "label"],
                            "additionalProperties": False,
                            "properties": {
                                "id": {"type": "string"},
                                "x_min": _num, "y_min": _num, "x_max": _num, "y_max": _num,
                                "confidence": {"type": "number", "minimum": 0, "maximum": 1},
                                "label": {"type": "string", "minLength": 1},
                            },
                        },
                    },
                },
            },
        },
    },
}

REDETECTION_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "candidate_id", "bfov"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "panorama_id": {"type": "string"},
        "candidate_id": {"type": "string"},
        "phrase": {"type": "string"},
        "bfov": _bfov,
        "category": {"type": "string"},
        "attributes": {"type": "array", "items": {"type": "string"}},
        "description": {"type": "string"},
    },
}

PREDICTION_SCHEMA = {
    "type": "object",
    "required": ["task_id", "raw_text"],
    "properties": {"task_id": {"type": "string"}, "raw_text": {"type": ["string", "null"]}},
}

_point = {"type": "array", "items": _num, "minItems": 2, "maxItems": 3}
EPISODE_SCHEMA = {
    "type": "object",
    "required": ["trajectory", "goal", "shortest_path_length"],
    "properties": {
        "id": {"type": ["string", "integer"]},
        "trajectory": {"type": "array", "items": _point, "minItems": 1},
        "goal": _point,
        "shortest_path_length": _num,
        "executed_path_length": _num,
    },
}

TARGET_SCHEMA = {
    "type": "object",
    "required": ["id"],
    "properties": {
        "id": {"type": "string"},
        "kind": {"type": "string"},
        "yaw": _num, "pitch": _num, "yaw_tol": _num, "pitch_tol": _num,
        "region": _bfov,
    },
}


def validate(doc: Any, schema: dict, where: str = "") -> None:
    validator = jsonschema.Draft7Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        parts = [where] if where else []
        for p in err.absolute_path:
            parts.append(f"[{p}]" if isinstance(p, int) else str(p))
        path = ".".join(parts).replace(".[", "[") or "<root>"
        if err.validator == "required":
            missing = [k for k in err.validator_value if isinstance(err.instance, dict) and k not in err.instance]
            if missing:
                path = f"{path}.{missing[0]}" if path != "<root>" else missing[0]
        raise SchemaError(path, err.message)


def read_jsonl(path) -> Iterator[tuple]:
    """Yield (line_number, record) for each non-blank line."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"line {lineno}", f"invalid JSON ({exc.msg})") from exc


def dumps_line(record: Dict[str, Any]) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(", ", ": ")) + "\n"


def write_jsonl(path, records: Iterable[Dict[str, Any]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dumps_line(rec))


# ---------------------------------------------------------------------------
# Detections


@dataclass
class PanoramaDetections:
    panorama_id: str
    image_path: Optional[str]
    depth_path: Optional[str]
    width: Optional[int]
    height: Optional[int]
    views: List[ViewDetections]


def parse_detections_doc(doc: Dict[str, Any], where: str = "") -> PanoramaDetections:
    validate(doc, DETECTIONS_SCHEMA, where)
    views = []
    for vi, v in enumerate(doc["views"]):
        vpath = f"{where}.views[{vi}]" if where else f"views[{vi}]"
        try:
            spec = PerspViewSpec.from_degrees(v["yaw"], v["pitch"], v["h_fov"], v["v_fov"], v["width"], v["height"])
        except ValueError as exc:
            raise SchemaError(vpath, str(exc)) from exc
        boxes = []
        for bi, b in enumerate(v["boxes"]):
            try:
                boxes.append(PerspBox(b["x_min"], b["y_min"], b["x_max"], b["y_max"], b["confidence"], b["label"],
                                      b.get("id", f"v{vi}b{bi}")))
            except ValueError as exc:
                raise SchemaError(f"{vpath}.boxes[{bi}]", str(exc)) from exc
        try:
            views.append(ViewDetections(spec, tuple(boxes), doc["panorama_id"]))
        except ValueError as exc:
            raise SchemaError(vpath, str(exc)) from exc
    image = doc.get("image", {})
    return PanoramaDetections(doc["panorama_id"], doc.get("image_path"), doc.get("depth_path"),
                              image.get("width"), image.get("height"), views)


def load_detections(path) -> List[PanoramaDetections]:
    out = []
    for lineno, doc in read_jsonl(path):
        out.append(parse_detections_doc(doc, f"line {lineno}"))
    return out


def detections_doc(panorama_id: str, views: Sequence[ViewDetections], image_path: Optional[str] = None,
                   width: Optional[int] = None, height: Optional[int] = None,
                   depth_path: Optional[str] = None) -> Dict[str, Any]:
    doc: Dict[str, Any] = {"schema_version": SCHEMA_VERSION, "panorama_id": panorama_id}
    if image_path is not None:
        doc["image_path"] = image_path
    if depth_path is not None:
        doc["depth_path"] = depth_path
    if width is not None:
        doc["image"] = {"width": int(width), "height": int(height)}
    doc["views"] = []
    for v in views:
        vd = {k: (round(val, 9) if isinstance(val, float) else val) for k, val in v.view.to_degrees().items()}
        vd["boxes"] = [
            {"id": b.id, "x_min": b.x_min, "y_min": b.y_min, "x_max": b.x_max, "y_max": b.y_max,
             "confidence": b.confidence, "label": b.label}
            for b in v.boxes
        ]
        doc["views"].append(vd)
    return doc


# ---------------------------------------------------------------------------
# Re-detections


def parse_redetection(doc: Dict[str, Any], where: str = "") -> ReDetection:
    validate(doc, REDETECTION_SCHEMA, where)
    vals = [float(v) for v in doc["bfov"]]
    if not bfov_degrees_valid(*vals):
        raise SchemaError(f"{where}.bfov" if where else "bfov", f"out-of-range BFOV {vals}")
    return ReDetection(
        candidate_id=doc["candidate_id"],
        bfov=Bfov.from_degrees(*vals),
        phrase=doc.get("phrase", ""),
        attributes=tuple(doc.get("attributes", ())),
        description=doc.get("description", ""),
        category=doc.get("category"),
    )


def load_redetections(path) -> Dict[str, List[ReDetection]]:
    """Re-detections grouped by panorama id ("" when the record names none)."""
    out: Dict[str, List[ReDetection]] = {}
    for lineno, doc in read_jsonl(path):
        red = parse_redetection(doc, f"line {lineno}")
        out.setdefault(doc.get("panorama_id", ""), []).append(red)
    return out


def redetection_doc(r: ReDetection, panorama_id: Optional[str] = None) -> Dict[str, Any]:
    doc: Dict[str, Any] = {"schema_version": SCHEMA_VERSION}
    if panorama_id is not None:
        doc["panorama_id"] = panorama_id
    doc["candidate_id"] = r.candidate_id
    doc["phrase"] = r.phrase
    doc["bfov"] = [round(v, 6) for v in r.bfov.to_degrees()]
    if r.category is not None:
        doc["category"] = r.category
    if r.attributes:
        doc["attributes"] = list(r.attributes)
    if r.description:
        doc["description"] = r.description
    return doc
