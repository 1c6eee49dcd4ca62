"""Capability-aligned question generation from metadata graphs.

Every generator is deterministic in (graph, seed). Multiple-choice items
store their options and the key letter; ``recompute_answer`` rederives the
correct option text from the graph alone, without generator state, and is
what the oracle answerer and the self-consistency tests use.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import math
import random
import string
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from . import frame_transform as ft
from .metadata_graph import EntityNode, MetadataGraph
from .sphere_geom import angular_distance, format_bfov, format_direction

log = logging.getLogger(__name__)

FAMILIES = ("semantic", "angular", "refframe", "depth3d", "erp_property")

OPERATOR_FAMILY = {
    "identification": "semantic",
    "attribute_qa": "semantic",
    "existence": "semantic",
    "counting": "semantic",
    "scene_captioning": "semantic",
    "absolute_direction": "angular",
    "angular_center": "angular",
    "angular_footprint": "angular",
    "referring_grounding": "angular",
    "relative_direction": "refframe",
    "camera_rotation": "refframe",
    "object_reorientation": "refframe",
    "observer_distance": "depth3d",
    "distance_ordering": "depth3d",
    "relative_3d_position": "depth3d",
    "compound_3d_relation": "depth3d",
    "seam_continuity": "erp_property",
}

# Canonical family mixture (fractions of the sampled set).
CANONICAL_RATIOS = {"semantic": 0.368, "angular": 0.111, "refframe": 0.275, "depth3d": 0.244, "erp_property": 0.002}

COMMON_CATEGORIES = (
    "chair", "table", "sofa", "lamp", "door", "window", "plant", "painting", "television", "bed",
    "car", "person", "bicycle", "bench", "tree", "sign", "trash can", "shelf", "clock", "bottle",
)
COMMON_ATTRIBUTES = (
    "red", "blue", "green", "white", "black", "wooden", "metal", "large", "small", "round", "striped", "glass",
)
TURN_DEGREES = (45, 90, 135, 180)
SYSTEM_PROMPT_ID = "pano-native-system/v1"
TASK_SCHEMA_VERSION = 1


class MixtureError(ValueError):
    pass


@dataclass
class TaskInstance:
    id: str
    family: str
    operator: str
    prompt: str
    answer_kind: str  # choice | bfov | direction | text
    answer: str
    options: Tuple[str, ...] = ()
    provenance: Dict[str, Any] = field(default_factory=dict)

    @property
    def scene(self) -> str:
        return self.provenance.get("panorama_id", "")

    @property
    def answer_text(self) -> str:
        if self.answer_kind == "choice":
            return self.options[string.ascii_uppercase.index(self.answer)]
        return self.answer

    def to_doc(self) -> Dict[str, Any]:
        doc = {
            "schema_version": TASK_SCHEMA_VERSION,
            "id": self.id,
            "family": self.family,
            "operator": self.operator,
            "answer_kind": self.answer_kind,
            "system_prompt_id": SYSTEM_PROMPT_ID,
            "prompt": self.prompt,
            "options": list(self.options),
            "answer": self.answer,
            "provenance": self.provenance,
        }
        return doc

    @classmethod
    def from_doc(cls, doc: Dict[str, Any]) -> "TaskInstance":
        return cls(doc["id"], doc["family"], doc["operator"], doc["prompt"], doc["answer_kind"], doc["answer"],
                   tuple(doc.get("options", ())), doc.get("provenance", {}))


def _norm(text: str) -> str:
    return " ".join(str(text).strip().lower().split())


def entity_ref(node: EntityNode) -> str:
    return f"{node.phrase or node.category} [{node.id}]"


def _rng(seed, graph: MetadataGraph, operator: str) -> random.Random:
    return random.Random(f"{seed}|{graph.panorama_id}|{operator}")


def _choice_item(rng: random.Random, key: str, distractors: Sequence[str], n_options: int) -> Tuple[Tuple[str, ...], str]:
    seen = {_norm(key)}
    pool = []
    for d in distractors:
        if _norm(d) not in seen:
            seen.add(_norm(d))
            pool.append(d)
    picked = rng.sample(pool, min(n_options - 1, len(pool)))
    options = [key] + picked
    rng.shuffle(options)
    return tuple(options), string.ascii_uppercase[options.index(key)]


def _mc_prompt(question: str, options: Sequence[str]) -> str:
    lines = [question, "Options:"]
    lines += [f"{string.ascii_uppercase[i]}. {opt}" for i, opt in enumerate(options)]
    lines.append("Answer with the option letter only.")
    return "\n".join(lines)


class _Builder:
    def __init__(self, graph: MetadataGraph, operator: str, n_options: int):
        self.graph = graph
        self.operator = operator
        self.family = OPERATOR_FAMILY[operator]
        self.n_options = n_options
        self.items: List[TaskInstance] = []

    def _id(self) -> str:
        return f"{self.graph.panorama_id}/{self.operator}/{len(self.items):04d}"

    def _prov(self, nodes: Sequence[str], params: Optional[Dict[str, Any]]) -> Dict[str, Any]:
        prov: Dict[str, Any] = {"panorama_id": self.graph.panorama_id, "nodes": list(nodes)}
        if params:
            prov["params"] = params
        return prov

    def choice(self, rng, question, key, distractors, nodes, params=None, n_options=None):
        options, letter = _choice_item(rng, key, distractors, n_options or self.n_options)
        if len(options) < 2:
            return
        self.items.append(TaskInstance(self._id(), self.family, self.operator, _mc_prompt(question, options),
                                       "choice", letter, options, self._prov(nodes, params)))

    def open(self, kind, question, answer, nodes, params=None):
        self.items.append(TaskInstance(self._id(), self.family, self.operator, question, kind, answer, (),
                                       self._prov(nodes, params)))


# ---------------------------------------------------------------------------
# Recompute-from-graph (shared by generation and the oracle answerer)


def caption_text(graph: MetadataGraph) -> str:
    parts = []
    for n in graph.nodes:
        parts.append(f"a {n.category} to the {ft.absolute_sector(n.center, graph.angle_eps).lateral}")
    if not parts:
        return "The panorama contains no verified entities."
    return "The panorama shows " + "; ".join(parts) + "."


def count_text(n: int) -> str:
    return str(n)


def ordering_text(nodes: Sequence[EntityNode]) -> str:
    return " < ".join(entity_ref(n) for n in nodes)


def recompute_answer(task: TaskInstance, graph: MetadataGraph) -> str:
    """Correct answer text for a task, derived from the graph only."""
    prov = task.provenance
    ids = prov.get("nodes", [])
    params = prov.get("params", {})
    nodes = [graph.node(i) for i in ids]
    eps = graph.angle_eps
    op = task.operator
    if op == "identification":
        return nodes[0].category
    if op == "attribute_qa":
        attrs = {_norm(a) for a in nodes[0].attributes}
        hits = [o for o in task.options if _norm(o) in attrs]
        return hits[0] if len(hits) == 1 else ""
    if op == "existence":
        cat = _norm(params["category"])
        return "yes" if any(_norm(n.category) == cat for n in graph.nodes) else "no"
    if op == "counting":
        cat = _norm(params["category"])
        return count_text(sum(_norm(n.category) == cat for n in graph.nodes))
    if op == "scene_captioning":
        return caption_text(graph)
    if op == "absolute_direction":
        return ft.absolute_sector(nodes[0].center, eps).lateral
    if op == "angular_center":
        return format_direction(nodes[0].center, 2)
    if op in ("angular_footprint", "referring_grounding"):
        return format_bfov(nodes[0].footprint, 2)
    if op == "relative_direction":
        return ft.relative_direction(nodes[0].center, nodes[1].center, eps)
    if op == "camera_rotation":
        return ft.sector_after_rotation(nodes[0].center, math.radians(params["turn_deg"]))
    if op == "object_reorientation":
        return ft.sector_after_reorientation(nodes[1].center, nodes[0].center)
    if op == "observer_distance":
        nearest = ft.observer_distance_rank(nodes)[0]
        return entity_ref(graph.node(nearest))
    if op == "distance_ordering":
        ranked = ft.observer_distance_rank(nodes)
        return ordering_text([graph.node(i) for i in ranked])
    if op in ("relative_3d_position", "compound_3d_relation"):
        return ft.relative_3d(nodes[0], nodes[1], graph.length_eps).label
    if op == "seam_continuity":
        return entity_ref(ft.seam_nearest(nodes[0], nodes[1:], use_3d=bool(params.get("use_3d"))))
    raise ValueError(f"unknown operator {op!r}")


# ---------------------------------------------------------------------------
# Generators


def gen_semantic(graph: MetadataGraph, seed=0, n_options: int = 4) -> List[TaskInstance]:
    out: List[TaskInstance] = []
    if not graph.nodes:
        return out
    cats_present = sorted({n.category for n in graph.nodes})
    cat_vocab = cats_present + [c for c in COMMON_CATEGORIES if c not in cats_present]

    b = _Builder(graph, "identification", n_options)
    rng = _rng(seed, graph, b.operator)
    for n in graph.nodes:
        q = f"Describe the highlighted entity at BFOV {format_bfov(n.footprint, 2)}. Which category does it belong to?"
        b.choice(rng, q, n.category, [c for c in cat_vocab if _norm(c) != _norm(n.category)], [n.id])
    out += b.items

    b = _Builder(graph, "attribute_qa", n_options)
    rng = _rng(seed, graph, b.operator)
    attr_vocab = sorted({a for n in graph.nodes for a in n.attributes}) + list(COMMON_ATTRIBUTES)
    for n in graph.nodes:
        if not n.attributes:
            continue
        own = {_norm(a) for a in n.attributes}
        key = sorted(n.attributes)[0]
        q = f"Which visual attribute does {entity_ref(n)} have?"
        b.choice(rng, q, key, [a for a in attr_vocab if _norm(a) not in own], [n.id])
    out += b.items

    b = _Builder(graph, "existence", n_options)
    rng = _rng(seed, graph, b.operator)
    absent = [c for c in COMMON_CATEGORIES if c not in cats_present]
    negatives = rng.sample(absent, min(len(absent), len(cats_present)))
    for cat in sorted(cats_present + negatives):
        key = "yes" if cat in cats_present else "no"
        q = f"Is there a {cat} anywhere in the panorama?"
        b.choice(rng, q, key, ["no" if key == "yes" else "yes"], [], {"category": cat}, n_options=2)
    out += b.items

    b = _Builder(graph, "counting", n_options)
    rng = _rng(seed, graph, b.operator)
    for cat in cats_present:
        n = sum(node.category == cat for node in graph.nodes)
        distract = [str(k) for k in (n - 1, n + 1, n + 2, n + 3) if k >= 0][: n_options - 1]
        q = f"How many instances of {cat} are visible in the full panorama?"
        b.choice(rng, q, count_text(n), distract, [], {"category": cat})
    out += b.items

    b = _Builder(graph, "scene_captioning", n_options)
    b.open("text", "Describe the panorama concisely, naming each entity and its direction.", caption_text(graph),
           [n.id for n in graph.nodes])
    out += b.items
    return out


def gen_angular(graph: MetadataGraph, seed=0, n_options: int = 4) -> List[TaskInstance]:
    out: List[TaskInstance] = []
    eps = graph.angle_eps
    b = _Builder(graph, "absolute_direction", n_options)
    rng = _rng(seed, graph, b.operator)
    for n in graph.nodes:
        key = ft.absolute_sector(n.center, eps).lateral
        q = f"Which direction sector relative to the observer contains {entity_ref(n)}?"
        b.choice(rng, q, key, [s for s in ft.SECTORS if s != key], [n.id])
    out += b.items

    b = _Builder(graph, "angular_center", n_options)
    for n in graph.nodes:
        q = f"Predict the center direction of {entity_ref(n)} as [yaw, pitch] in degrees."
        b.open("direction", q, format_direction(n.center, 2), [n.id])
    out += b.items

    b = _Builder(graph, "angular_footprint", n_options)
    for n in graph.nodes:
        q = f"Predict the BFOV [yaw, pitch, x_fov, y_fov] in degrees that localizes {entity_ref(n)}."
        b.open("bfov", q, format_bfov(n.footprint, 2), [n.id])
    out += b.items

    b = _Builder(graph, "referring_grounding", n_options)
    for n in graph.nodes:
        if not n.phrase:
            continue
        q = f"Localize the entity described as \"{n.phrase}\". Answer with its BFOV [yaw, pitch, x_fov, y_fov] in degrees."
        b.open("bfov", q, format_bfov(n.footprint, 2), [n.id])
    out += b.items
    return out


def gen_refframe(graph: MetadataGraph, seed=0, n_options: int = 4) -> List[TaskInstance]:
    out: List[TaskInstance] = []
    if len(graph.nodes) < 2:
        return out
    eps = graph.angle_eps
    b = _Builder(graph, "relative_direction", n_options)
    rng = _rng(seed, graph, b.operator)
    for a, ref in itertools.permutations(graph.nodes, 2):
        key = ft.relative_direction(a.center, ref.center, eps)
        q = f"Keeping the observer orientation fixed, where is {entity_ref(a)} relative to {entity_ref(ref)}?"
        b.choice(rng, q, key, [l for l in ft.R2D_LABELS if l != key], [a.id, ref.id])
    out += b.items

    b = _Builder(graph, "camera_rotation", n_options)
    rng = _rng(seed, graph, b.operator)
    turns = [s * t for t in TURN_DEGREES for s in (1, -1)]
    for n in graph.nodes:
        for turn in sorted(rng.sample(turns, 2)):
            key = ft.sector_after_rotation(n.center, math.radians(turn))
            q = (f"The observer stays in place and turns {'right' if turn > 0 else 'left'} by {abs(turn)} degrees. "
                 f"In which direction sector is {entity_ref(n)} now?")
            b.choice(rng, q, key, [s for s in ft.SECTORS if s != key], [n.id], {"turn_deg": turn})
    out += b.items

    b = _Builder(graph, "object_reorientation", n_options)
    rng = _rng(seed, graph, b.operator)
    for facing, target in itertools.permutations(graph.nodes, 2):
        if angular_distance(facing.center, target.center) <= eps:
            continue
        key = ft.sector_after_reorientation(target.center, facing.center)
        q = (f"If the observer turns to face {entity_ref(facing)}, in which direction sector is "
             f"{entity_ref(target)}?")
        b.choice(rng, q, key, [s for s in ft.SECTORS if s != key], [facing.id, target.id])
    out += b.items
    return out


def _near_miss_labels(rel: ft.Relation3D) -> List[str]:
    axes = {
        "depth": ("in front of", "behind", "same-depth"),
        "lateral": ("left", "right", "centered"),
        "vertical": ("above", "below", "level"),
    }
    cur = {"depth": rel.depth_axis, "lateral": rel.lateral, "vertical": rel.vertical}
    out = []
    for axis, values in axes.items():
        for v in values:
            if v == cur[axis]:
                continue
            alt = dict(cur, **{axis: v})
            label = ft.Relation3D(alt["lateral"], alt["vertical"], alt["depth"]).label
            if label != "same-position":
                out.append(label)
    return out


def gen_depth3d(graph: MetadataGraph, seed=0, n_options: int = 4) -> List[TaskInstance]:
    out: List[TaskInstance] = []
    nodes = [n for n in graph.nodes if n.distance is not None]
    if len(nodes) < 2:
        log.warning("graph %s has fewer than two entities with depth; no depth tasks", graph.panorama_id)
        return out
    gap = graph.length_eps

    b = _Builder(graph, "observer_distance", n_options)
    rng = _rng(seed, graph, b.operator)
    for n in nodes:
        farther = [m for m in nodes if m.distance - n.distance > gap]
        if len(farther) < n_options - 1:
            continue
        others = rng.sample(farther, min(n_options - 1, len(farther)))
        opts = [n] + others
        q = "Which of the listed entities is physically closest to the observer?"
        b.choice(rng, q, entity_ref(n), [entity_ref(m) for m in others], sorted(m.id for m in opts))
    out += b.items

    b = _Builder(graph, "distance_ordering", n_options)
    rng = _rng(seed, graph, b.operator)
    triples = [t for t in itertools.combinations(nodes, 3)
               if all(abs(x.distance - y.distance) > gap for x, y in itertools.combinations(t, 2))]
    for trip in rng.sample(triples, min(len(nodes), len(triples))):
        ranked = sorted(trip, key=lambda m: (m.distance, m.id))
        key = ordering_text(ranked)
        perms = [ordering_text(p) for p in itertools.permutations(ranked) if list(p) != ranked]
        q = "Order these entities from nearest to farthest from the observer."
        b.choice(rng, q, key, perms, sorted(m.id for m in trip))
    out += b.items

    b = _Builder(graph, "relative_3d_position", n_options)
    rng = _rng(seed, graph, b.operator)
    for a, ref in itertools.permutations(nodes, 2):
        rel = ft.relative_3d(a, ref, graph.length_eps)
        if rel.label == "same-position":
            continue
        q = f"In the observer-centered 3D frame, what is the position of {entity_ref(a)} relative to {entity_ref(ref)}?"
        b.choice(rng, q, rel.label, [l for l in ft.R3D_LABELS if l != rel.label], [a.id, ref.id])
    out += b.items

    b = _Builder(graph, "compound_3d_relation", n_options)
    rng = _rng(seed, graph, b.operator)
    for a, ref in itertools.permutations(nodes, 2):
        rel = ft.relative_3d(a, ref, graph.length_eps)
        if rel.non_neutral_axes < 2:
            continue
        q = f"Which combined relation holds for {entity_ref(a)} with respect to {entity_ref(ref)}?"
        b.choice(rng, q, rel.label, _near_miss_labels(rel), [a.id, ref.id])
    out += b.items
    return out


def gen_seam(graph: MetadataGraph, seed=0, n_options: int = 4, margin_deg: float = 20.0,
             use_3d: bool = False) -> List[TaskInstance]:
    b = _Builder(graph, "seam_continuity", n_options)
    rng = _rng(seed, graph, b.operator)
    margin = math.radians(margin_deg)
    anchors = [n for n in graph.nodes if ft.in_seam_margin(n.center, margin)]
    if not anchors or len(graph.nodes) < 3:
        log.warning("graph %s has no usable seam anchors; no seam tasks", graph.panorama_id)
        return []
    for anchor in anchors:
        others = [n for n in graph.nodes if n.id != anchor.id]
        if len(others) < 2:
            continue
        key = ft.seam_nearest(anchor, others, use_3d)
        dist = lambda n: angular_distance(anchor.center, n.center)
        farther = [n for n in others if n.id != key.id and dist(n) > dist(key) + math.radians(1.0)]
        if not farther:
            continue
        picked = rng.sample(farther, min(n_options - 1, len(farther)))
        q = (f"{entity_ref(anchor)} lies near the left/right border of the ERP panorama. "
             f"Which listed entity is nearest to it in the full 360-degree scene?")
        b.choice(rng, q, entity_ref(key), [entity_ref(n) for n in picked],
                 [anchor.id] + sorted([key.id] + [n.id for n in picked]), {"use_3d": use_3d} if use_3d else None)
    return b.items


GENERATORS: Dict[str, Callable[..., List[TaskInstance]]] = {
    "semantic": gen_semantic,
    "angular": gen_angular,
    "refframe": gen_refframe,
    "depth3d": gen_depth3d,
    "erp_property": gen_seam,
}


def generate_all(graph: MetadataGraph, seed=0, n_options: int = 4, seam_margin_deg: float = 20.0) -> List[TaskInstance]:
    out: List[TaskInstance] = []
    for fam in FAMILIES:
        if fam == "erp_property":
            out += gen_seam(graph, seed, n_options, seam_margin_deg)
        else:
            out += GENERATORS[fam](graph, seed, n_options)
    return out


# ---------------------------------------------------------------------------
# Canonical mixture


@dataclass
class MixtureSpec:
    ratios: Dict[str, float]
    total: int
    per_scene_cap: Optional[int] = None
    seed: int = 0

    def __post_init__(self) -> None:
        unknown = sorted(set(self.ratios) - set(FAMILIES))
        if unknown:
            raise MixtureError(f"unknown families in mixture: {unknown}")
        if any(r < 0 for r in self.ratios.values()):
            raise MixtureError("mixture ratios must be non-negative")
        total = sum(self.ratios.values())
        if abs(total - 1.0) > 1e-9:
            raise MixtureError(f"mixture ratios sum to {total!r}, expected 1")
        if self.total < 0:
            raise MixtureError("total must be non-negative")
        if self.per_scene_cap is not None and self.per_scene_cap < 1:
            raise MixtureError("per-scene cap must be >= 1")


def natural_ratios(pool: Sequence[TaskInstance]) -> Dict[str, float]:
    counts = {f: 0 for f in FAMILIES}
    for t in pool:
        counts[t.family] += 1
    n = sum(counts.values())
    if n == 0:
        raise MixtureError("empty task pool")
    ratios = {f: c / n for f, c in counts.items() if c}
    # absorb float dust so the ratios sum to exactly 1
    last = max(ratios, key=lambda f: ratios[f])
    ratios[last] = 1.0 - sum(v for f, v in ratios.items() if f != last)
    return ratios


def allocate(ratios: Dict[str, float], total: int) -> Dict[str, int]:
    """Largest-remainder apportionment of ``total`` over families."""
    raw = {f: ratios.get(f, 0.0) * total for f in FAMILIES}
    counts = {f: int(math.floor(v)) for f, v in raw.items()}
    rest = total - sum(counts.values())
    order = sorted(FAMILIES, key=lambda f: (-(raw[f] - counts[f]), FAMILIES.index(f)))
    for f in order[:rest]:
        counts[f] += 1
    return counts


def sample_canonical(pool: Sequence[TaskInstance], spec: MixtureSpec) -> List[TaskInstance]:
    """Seeded family-ratio sampling with a per-scene cap inside each family."""
    targets = allocate(spec.ratios, spec.total)
    eligible: Dict[str, List[TaskInstance]] = {}
    for fam in FAMILIES:
        rng = random.Random(f"{spec.seed}|mixture|{fam}")
        by_scene: Dict[str, List[TaskInstance]] = {}
        for t in pool:
            if t.family == fam:
                by_scene.setdefault(t.scene, []).append(t)
        items: List[TaskInstance] = []
        for scene in sorted(by_scene):
            group = sorted(by_scene[scene], key=lambda t: t.id)
            rng.shuffle(group)
            items += group if spec.per_scene_cap is None else group[: spec.per_scene_cap]
        rng.shuffle(items)
        eligible[fam] = items

    empty = [f for f in FAMILIES if targets[f] > 0 and not eligible[f]]
    if empty:
        raise MixtureError(f"no eligible items for families with positive ratio: {empty}")
    short = [f for f in FAMILIES if targets[f] > len(eligible[f])]
    if short:
        scale = min(len(eligible[f]) / targets[f] for f in FAMILIES if targets[f] > 0)
        new_total = int(math.floor(spec.total * scale))
        warnings.warn(f"task pool too small for families {short}; scaling total {spec.total} -> {new_total}")
        targets = allocate(spec.ratios, new_total)
        targets = {f: min(targets[f], len(eligible[f])) for f in FAMILIES}

    picked: List[TaskInstance] = []
    for fam in FAMILIES:
        picked += sorted(eligible[fam][: targets[fam]], key=lambda t: t.id)
    return picked


# ---------------------------------------------------------------------------
# Task files


def tasks_header(tasks: Sequence[TaskInstance], config_hash: str = "", prompt_hash: str = "") -> Dict[str, Any]:
    counts = {f: 0 for f in FAMILIES}
    for t in tasks:
        counts[t.family] += 1
    return {
        "_header": True,
        "schema_version": TASK_SCHEMA_VERSION,
        "kind": "tasks",
        "system_prompt_id": SYSTEM_PROMPT_ID,
        "prompt_sha256": prompt_hash,
        "config_sha256": config_hash,
        "family_counts": counts,
        "count": len(tasks),
    }


def write_tasks(path, tasks: Sequence[TaskInstance], config_hash: str = "", prompt_hash: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(tasks_header(tasks, config_hash, prompt_hash), ensure_ascii=False) + "\n")
        for t in tasks:
            fh.write(json.dumps(t.to_doc(), ensure_ascii=False) + "\n")


def read_tasks(path) -> List[TaskInstance]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            doc = json.loads(line)
            if doc.get("_header"):
                continue
            out.append(TaskInstance.from_doc(doc))
    return out


def tasks_digest(tasks: Iterable[TaskInstance]) -> str:
    h = hashlib.sha256()
    for t in tasks:
        h.update(json.dumps(t.to_doc(), sort_keys=True).encode())
    return h.hexdigest()
