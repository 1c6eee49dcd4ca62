"""Per-panorama metadata graph: verified entity nodes and pairwise relation edges.

Documents are JSON with angles in degrees and distances in meters. Floats
are rounded to 9 decimals so that parse -> serialize is byte-stable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import frame_transform as ft
from .sphere_geom import (
    Bfov,
    ErpImage,
    SphericalDirection,
    angular_distance,
    pixels_to_angles,
    wrap_angle,
)

GRAPH_SCHEMA_VERSION = 1
_DECIMALS = 9


class GraphSchemaError(ValueError):
    """Document does not match the graph schema; message starts with the field path."""


class DuplicateIdError(ValueError):
    pass


@dataclass(frozen=True)
class EntityNode:
    id: str
    category: str
    footprint: Bfov
    attributes: Tuple[str, ...] = ()
    description: str = ""
    phrase: str = ""
    distance: Optional[float] = None
    context: Optional[Dict[str, Any]] = None
    confidence: Optional[float] = None

    def __post_init__(self) -> None:
        if self.distance is not None and not (math.isfinite(self.distance) and self.distance > 0):
            raise ValueError(f"node {self.id}: distance must be finite and > 0, got {self.distance!r}")
        object.__setattr__(self, "attributes", tuple(self.attributes))

    @property
    def center(self) -> SphericalDirection:
        return self.footprint.center

    def with_distance(self, distance: Optional[float]) -> "EntityNode":
        return EntityNode(self.id, self.category, self.footprint, self.attributes, self.description,
                          self.phrase, distance, self.context, self.confidence)


@dataclass(frozen=True)
class RelationEdge:
    from_id: str
    to_id: str
    delta_yaw: float
    delta_pitch: float
    delta_depth: Optional[float]
    r2d: str
    r3d: Optional[ft.Relation3D]


@dataclass
class MetadataGraph:
    panorama_id: str
    width: int
    height: int
    nodes: List[EntityNode]
    edges: List[RelationEdge]
    partial: bool = False
    edge_cap: Optional[int] = None
    angle_eps: float = ft.DEFAULT_ANGLE_EPS
    length_eps: float = ft.DEFAULT_LENGTH_EPS
    meta: Dict[str, Any] = field(default_factory=dict)

    def node(self, node_id: str) -> EntityNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def edge(self, from_id: str, to_id: str) -> RelationEdge:
        for e in self.edges:
            if e.from_id == from_id and e.to_id == to_id:
                return e
        raise KeyError((from_id, to_id))

    @property
    def has_depth(self) -> bool:
        return any(n.distance is not None for n in self.nodes)


def aggregate_depth(depth: ErpImage, footprint: Bfov) -> Optional[float]:
    """Median depth over pixels whose centers fall inside the footprint.

    Membership is separable on the ERP raster: columns by wrapped yaw,
    rows by pitch. Returns None when no pixel center lies inside.
    """
    if not isinstance(depth, ErpImage) or not depth.is_depth:
        raise TypeError("aggregate_depth needs a single-channel depth ERP image")
    h, w = depth.height, depth.width
    yaw, _ = pixels_to_angles(np.arange(w) + 0.5, np.zeros(w), w, h)
    _, pitch = pixels_to_angles(np.zeros(h), np.arange(h) + 0.5, w, h)
    rect = footprint.rect()
    cols = np.mod(yaw - rect.yaw_start, 2.0 * math.pi) <= rect.yaw_width
    rows = (pitch >= rect.pitch_lo) & (pitch <= rect.pitch_hi)
    if not cols.any() or not rows.any():
        return None
    return float(np.median(depth.data[np.ix_(rows, cols)]))


def compute_edge(a: EntityNode, b: EntityNode, angle_eps: float = ft.DEFAULT_ANGLE_EPS,
                 length_eps: float = ft.DEFAULT_LENGTH_EPS) -> RelationEdge:
    """Relation of ``a`` with respect to ``b``."""
    d_yaw = wrap_angle(a.center.yaw - b.center.yaw)
    d_pitch = a.center.pitch - b.center.pitch
    has_depth = a.distance is not None and b.distance is not None
    d_depth = a.distance - b.distance if has_depth else None
    r2d = ft.relative_direction(a.center, b.center, angle_eps)
    r3d = ft.relative_3d(a, b, length_eps) if has_depth else None
    return RelationEdge(a.id, b.id, d_yaw, d_pitch, d_depth, r2d, r3d)


def _pairs(nodes: Sequence[EntityNode], edge_cap: Optional[int]) -> List[Tuple[int, int]]:
    n = len(nodes)
    if edge_cap is None or edge_cap >= n - 1:
        return [(i, j) for i in range(n) for j in range(n) if i != j]
    chosen = set()
    for i in range(n):
        others = sorted((j for j in range(n) if j != i),
                        key=lambda j: (angular_distance(nodes[i].center, nodes[j].center), nodes[j].id))
        for j in others[:edge_cap]:
            chosen.add((i, j))
            chosen.add((j, i))
    return sorted(chosen)


def build_graph(
    entities: Sequence[EntityNode],
    depth: Optional[ErpImage] = None,
    panorama_id: str = "",
    width: int = 0,
    height: int = 0,
    edge_cap: Optional[int] = None,
    angle_eps: float = ft.DEFAULT_ANGLE_EPS,
    length_eps: float = ft.DEFAULT_LENGTH_EPS,
) -> MetadataGraph:
    seen = set()
    for e in entities:
        if e.id in seen:
            raise DuplicateIdError(f"duplicate entity id {e.id!r}")
        seen.add(e.id)
    nodes = []
    for e in sorted(entities, key=lambda e: e.id):
        if depth is not None and e.distance is None:
            d = aggregate_depth(depth, e.footprint)
            e = e.with_distance(d if d is not None and d > 0 else None)
        nodes.append(e)
    if depth is not None and not width:
        width, height = depth.width, depth.height
    edges = [compute_edge(nodes[i], nodes[j], angle_eps, length_eps) for i, j in _pairs(nodes, edge_cap)]
    partial = edge_cap is not None and edge_cap < len(nodes) - 1
    return MetadataGraph(panorama_id, width, height, nodes, edges, partial, edge_cap if partial else None,
                         angle_eps, length_eps)


# ---------------------------------------------------------------------------
# Serialization


def _r(x: float) -> float:
    v = round(float(x), _DECIMALS)
    return 0.0 if v == 0 else v


def _deg(x: float) -> float:
    return _r(math.degrees(x))


def _node_doc(n: EntityNode) -> Dict[str, Any]:
    yaw, pitch, xf, yf = n.footprint.to_degrees()
    doc: Dict[str, Any] = {
        "id": n.id,
        "category": n.category,
        "attributes": list(n.attributes),
        "description": n.description,
        "phrase": n.phrase,
        "bfov": [_r(yaw), _r(pitch), _r(xf), _r(yf)],
        "distance": None if n.distance is None else _r(n.distance),
    }
    if n.confidence is not None:
        doc["confidence"] = _r(n.confidence)
    if n.context is not None:
        doc["context"] = n.context
    return doc


def _edge_doc(e: RelationEdge) -> Dict[str, Any]:
    return {
        "from": e.from_id,
        "to": e.to_id,
        "delta_yaw": _deg(e.delta_yaw),
        "delta_pitch": _deg(e.delta_pitch),
        "delta_depth": None if e.delta_depth is None else _r(e.delta_depth),
        "r2d": e.r2d,
        "r3d": None if e.r3d is None else {
            "lateral": e.r3d.lateral,
            "vertical": e.r3d.vertical,
            "depth": e.r3d.depth_axis,
            "label": e.r3d.label,
        },
    }


def graph_to_doc(g: MetadataGraph) -> Dict[str, Any]:
    doc: Dict[str, Any] = {
        "schema_version": GRAPH_SCHEMA_VERSION,
        "panorama_id": g.panorama_id,
        "image": {"width": g.width, "height": g.height},
        "partial": g.partial,
        "edge_cap": g.edge_cap,
        "angle_eps_deg": _deg(g.angle_eps),
        "length_eps_m": _r(g.length_eps),
    }
    if g.meta:
        doc["meta"] = g.meta
    doc["nodes"] = [_node_doc(n) for n in g.nodes]
    doc["edges"] = [_edge_doc(e) for e in g.edges]
    return doc


def serialize_graph(g: MetadataGraph) -> str:
    return json.dumps(graph_to_doc(g), indent=1, ensure_ascii=False) + "\n"


def _req(doc: Dict[str, Any], key: str, path: str):
    if not isinstance(doc, dict):
        raise GraphSchemaError(f"{path or '<root>'}: expected an object")
    if key not in doc:
        raise GraphSchemaError(f"{path + '.' if path else ''}{key}: missing required field")
    return doc[key]


def _parse_node(doc: Dict[str, Any], path: str) -> EntityNode:
    bfov = _req(doc, "bfov", path)
    if not (isinstance(bfov, list) and len(bfov) == 4):
        raise GraphSchemaError(f"{path}.bfov: expected [yaw, pitch, x_fov, y_fov]")
    try:
        footprint = Bfov.from_degrees(*(float(v) for v in bfov))
        return EntityNode(
            id=str(_req(doc, "id", path)),
            category=str(_req(doc, "category", path)),
            footprint=footprint,
            attributes=tuple(doc.get("attributes", [])),
            description=doc.get("description", ""),
            phrase=doc.get("phrase", ""),
            distance=doc.get("distance"),
            context=doc.get("context"),
            confidence=doc.get("confidence"),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, GraphSchemaError):
            raise
        raise GraphSchemaError(f"{path}: {exc}") from exc


def _parse_edge(doc: Dict[str, Any], path: str) -> RelationEdge:
    r3d = doc.get("r3d")
    rel = None
    if r3d is not None:
        rel = ft.Relation3D(_req(r3d, "lateral", path + ".r3d"), _req(r3d, "vertical", path + ".r3d"),
                            _req(r3d, "depth", path + ".r3d"))
    dd = doc.get("delta_depth")
    return RelationEdge(
        from_id=str(_req(doc, "from", path)),
        to_id=str(_req(doc, "to", path)),
        delta_yaw=math.radians(float(_req(doc, "delta_yaw", path))),
        delta_pitch=math.radians(float(_req(doc, "delta_pitch", path))),
        delta_depth=None if dd is None else float(dd),
        r2d=str(_req(doc, "r2d", path)),
        r3d=rel,
    )


def doc_to_graph(doc: Dict[str, Any]) -> MetadataGraph:
    version = _req(doc, "schema_version", "")
    if version != GRAPH_SCHEMA_VERSION:
        raise GraphSchemaError(f"schema_version: unsupported version {version!r}")
    image = _req(doc, "image", "")
    nodes_doc = _req(doc, "nodes", "")
    edges_doc = _req(doc, "edges", "")
    if not isinstance(nodes_doc, list):
        raise GraphSchemaError("nodes: expected a list")
    if not isinstance(edges_doc, list):
        raise GraphSchemaError("edges: expected a list")
    nodes = [_parse_node(n, f"nodes[{i}]") for i, n in enumerate(nodes_doc)]
    edges = [_parse_edge(e, f"edges[{i}]") for i, e in enumerate(edges_doc)]
    return MetadataGraph(
        panorama_id=str(_req(doc, "panorama_id", "")),
        width=int(_req(image, "width", "image")),
        height=int(_req(image, "height", "image")),
        nodes=nodes,
        edges=edges,
        partial=bool(doc.get("partial", False)),
        edge_cap=doc.get("edge_cap"),
        angle_eps=math.radians(float(doc.get("angle_eps_deg", math.degrees(ft.DEFAULT_ANGLE_EPS)))),
        length_eps=float(doc.get("length_eps_m", ft.DEFAULT_LENGTH_EPS)),
        meta=doc.get("meta", {}),
    )


def parse_graph(text: str) -> MetadataGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphSchemaError(f"<root>: invalid JSON ({exc})") from exc
    return doc_to_graph(doc)


def load_graph(path) -> MetadataGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())
