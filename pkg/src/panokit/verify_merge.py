"""Geometric and semantic verification of perspective-view detections.

Stages, each a pure filter over its input:

  filter_confidence -> nms_view -> merge_cross_view -> semantic_verify

Every removed item is recorded by ``run_pipeline`` in a drop report with one
of the reasons ``confidence``, ``nms``, ``consistency``, ``semantic`` or
``unverified``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .projection import PerspBox, PerspViewSpec, persp_box_to_bfov, view_contains_rect
from .sphere_geom import Bfov, SphericalDirection, bfov_iou, covering_arc

log = logging.getLogger(__name__)

DEFAULT_CONFIDENCE = 0.3
DEFAULT_NMS_IOU = 0.5
DEFAULT_MERGE_IOU = 0.6
DEFAULT_SEMANTIC_IOU = 0.7


class VerificationError(ValueError):
    pass


def normalize_label(label: str) -> str:
    return " ".join(label.strip().lower().split())


@dataclass(frozen=True)
class ViewDetections:
    view: PerspViewSpec
    boxes: Tuple[PerspBox, ...]
    panorama_id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "boxes", tuple(self.boxes))
        for b in self.boxes:
            if not b.inside(self.view):
                raise VerificationError(f"box {b.id or b} lies outside the view raster")

    def with_boxes(self, boxes: Sequence[PerspBox]) -> "ViewDetections":
        return ViewDetections(self.view, tuple(boxes), self.panorama_id)


@dataclass(frozen=True)
class CandidateEntity:
    id: str
    bfov: Bfov
    confidence: float
    label: str
    source_views: Tuple[int, ...]
    member_ids: Tuple[str, ...] = ()

    @property
    def support_count(self) -> int:
        return len(self.source_views)


@dataclass(frozen=True)
class ReDetection:
    candidate_id: str
    bfov: Bfov
    phrase: str = ""
    attributes: Tuple[str, ...] = ()
    description: str = ""
    category: Optional[str] = None


@dataclass
class Drop:
    stage: str
    item_id: str
    label: str
    detail: str = ""


# ---------------------------------------------------------------------------
# Stages


def filter_confidence(dets: ViewDetections, threshold: float = DEFAULT_CONFIDENCE) -> ViewDetections:
    """Keep boxes with confidence >= threshold, in input order."""
    return dets.with_boxes([b for b in dets.boxes if b.confidence >= threshold])


def box_iou(a: PerspBox, b: PerspBox) -> float:
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def nms_view(dets: ViewDetections, iou_threshold: float = DEFAULT_NMS_IOU) -> ViewDetections:
    """Greedy per-label NMS; survivors keep input order.

    Priority is confidence descending, then smaller area, then input order.
    A box is suppressed when its IoU with a kept box of the same label
    exceeds the threshold.
    """
    order = sorted(range(len(dets.boxes)), key=lambda i: (-dets.boxes[i].confidence, dets.boxes[i].area, i))
    kept: List[int] = []
    for i in order:
        box = dets.boxes[i]
        label = normalize_label(box.label)
        if any(normalize_label(dets.boxes[k].label) == label and box_iou(box, dets.boxes[k]) > iou_threshold for k in kept):
            continue
        kept.append(i)
    return dets.with_boxes([dets.boxes[i] for i in sorted(kept)])


def cover_bfovs(bfovs: Sequence[Bfov]) -> Bfov:
    """Minimal wrap-aware rectangle covering all footprints."""
    rects = [b.rect() for b in bfovs]
    start, width = covering_arc((r.yaw_start, r.yaw_width) for r in rects)
    lo = min(r.pitch_lo for r in rects)
    hi = max(r.pitch_hi for r in rects)
    width = min(width, math.pi)
    return Bfov(SphericalDirection(start + 0.5 * width, 0.5 * (lo + hi)), width, hi - lo)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


@dataclass
class MergeResult:
    candidates: List[CandidateEntity]
    dropped: List[CandidateEntity] = field(default_factory=list)


def merge_cross_view(
    per_view: Sequence[ViewDetections],
    erp_iou_threshold: float = DEFAULT_MERGE_IOU,
    min_support: int = 1,
    consistency_check: bool = True,
    samples_per_edge: int = 16,
) -> MergeResult:
    """Reproject boxes to BFOVs and merge same-label footprints across views.

    Members are linked when their ERP IoU exceeds the threshold; each
    connected component becomes one candidate. A candidate seen in fewer
    than ``min_support`` views is dropped only if its footprint lies fully
    inside at least two views (it should have been seen more often).
    """
    pano_ids = {d.panorama_id for d in per_view}
    if len(pano_ids) > 1:
        raise VerificationError(f"views reference different panoramas: {sorted(pano_ids)}")
    members: List[Tuple[int, PerspBox, Bfov]] = []
    for vi, dets in enumerate(per_view):
        for bi, box in enumerate(dets.boxes):
            box_id = box.id or f"v{vi}b{bi}"
            if not box.id:
                box = replace(box, id=box_id)
            members.append((vi, box, persp_box_to_bfov(dets.view, box, samples_per_edge)))

    uf = _UnionFind(len(members))
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            if normalize_label(members[i][1].label) != normalize_label(members[j][1].label):
                continue
            if bfov_iou(members[i][2], members[j][2]) > erp_iou_threshold:
                uf.union(i, j)

    groups: Dict[int, List[int]] = {}
    for i in range(len(members)):
        groups.setdefault(uf.find(i), []).append(i)

    result = MergeResult([])
    for idx in groups.values():
        group = [members[i] for i in idx]
        anchor = min(group, key=lambda m: (-m[1].confidence, m[1].id))
        cand = CandidateEntity(
            id=anchor[1].id,
            bfov=cover_bfovs([m[2] for m in group]),
            confidence=max(m[1].confidence for m in group),
            label=normalize_label(anchor[1].label),
            source_views=tuple(sorted({m[0] for m in group})),
            member_ids=tuple(sorted(m[1].id for m in group)),
        )
        if consistency_check and cand.support_count < min_support:
            covering = sum(view_contains_rect(d.view, cand.bfov.rect(), samples_per_edge) for d in per_view)
            if covering >= 2:
                result.dropped.append(cand)
                continue
        result.candidates.append(cand)
    result.candidates.sort(key=lambda c: c.id)
    result.dropped.sort(key=lambda c: c.id)
    return result


@dataclass
class SemanticResult:
    kept: List[CandidateEntity]
    rejected: List[CandidateEntity]
    unverified: List[CandidateEntity]
    best_iou: Dict[str, float]


def semantic_verify(
    candidates: Sequence[CandidateEntity],
    redets: Sequence[ReDetection],
    iou_threshold: float = DEFAULT_SEMANTIC_IOU,
) -> SemanticResult:
    """Keep candidates whose re-detection overlaps them with IoU > threshold."""
    by_id = {c.id: c for c in candidates}
    dangling = sorted({r.candidate_id for r in redets if r.candidate_id not in by_id})
    if dangling:
        raise VerificationError(f"re-detections reference unknown candidates: {', '.join(dangling)}")
    best: Dict[str, float] = {}
    for r in redets:
        iou = bfov_iou(by_id[r.candidate_id].bfov, r.bfov)
        best[r.candidate_id] = max(best.get(r.candidate_id, -1.0), iou)
    out = SemanticResult([], [], [], best)
    for c in candidates:
        if c.id not in best:
            out.unverified.append(c)
        elif best[c.id] > iou_threshold:
            out.kept.append(c)
        else:
            out.rejected.append(c)
    return out


# ---------------------------------------------------------------------------
# Full pipeline


@dataclass
class PipelineResult:
    candidates: List[CandidateEntity]
    redets: Dict[str, ReDetection]
    drops: List[Drop]
    merged: List[CandidateEntity]
    stale_redets: List[str]

    def drop_counts(self) -> Dict[str, int]:
        counts = {k: 0 for k in ("confidence", "nms", "consistency", "semantic", "unverified")}
        for d in self.drops:
            counts[d.stage] += 1
        return counts


def run_pipeline(
    per_view: Sequence[ViewDetections],
    redets: Sequence[ReDetection],
    confidence: float = DEFAULT_CONFIDENCE,
    nms_iou: float = DEFAULT_NMS_IOU,
    merge_iou: float = DEFAULT_MERGE_IOU,
    semantic_iou: float = DEFAULT_SEMANTIC_IOU,
    min_support: int = 1,
    consistency_check: bool = True,
    samples_per_edge: int = 16,
) -> PipelineResult:
    """Run all stages and collect a drop report.

    Boxes without an explicit id get ``v<view>b<box>`` from their position in
    the input. Re-detections may reference any detection id; those whose
    detection did not end up anchoring a candidate are reported as stale.
    Ids that match no detection at all are an error.
    """
    drops: List[Drop] = []
    staged: List[ViewDetections] = []
    all_ids = set()
    for vi, dets in enumerate(per_view):
        boxes = tuple(b if b.id else replace(b, id=f"v{vi}b{bi}") for bi, b in enumerate(dets.boxes))
        all_ids.update(b.id for b in boxes)
        dets = dets.with_boxes(boxes)
        conf = filter_confidence(dets, confidence)
        kept = {b.id for b in conf.boxes}
        drops += [Drop("confidence", b.id, normalize_label(b.label), f"confidence {b.confidence:g} < {confidence:g}")
                  for b in dets.boxes if b.id not in kept]
        nms = nms_view(conf, nms_iou)
        kept = {b.id for b in nms.boxes}
        drops += [Drop("nms", b.id, normalize_label(b.label), f"suppressed at IoU > {nms_iou:g}")
                  for b in conf.boxes if b.id not in kept]
        staged.append(nms)

    unknown = sorted({r.candidate_id for r in redets if r.candidate_id not in all_ids})
    if unknown:
        raise VerificationError(f"re-detections reference unknown candidates: {', '.join(unknown)}")

    merged = merge_cross_view(staged, merge_iou, min_support, consistency_check, samples_per_edge)
    drops += [Drop("consistency", c.id, c.label, f"support {c.support_count} < {min_support} inside a multi-view overlap")
              for c in merged.dropped]

    live = {c.id for c in merged.candidates}
    stale = sorted({r.candidate_id for r in redets if r.candidate_id not in live})
    usable = [r for r in redets if r.candidate_id in live]
    sem = semantic_verify(merged.candidates, usable, semantic_iou)
    drops += [Drop("semantic", c.id, c.label, f"re-detection IoU {sem.best_iou[c.id]:.4f} <= {semantic_iou:g}")
              for c in sem.rejected]
    drops += [Drop("unverified", c.id, c.label, "no re-detection record") for c in sem.unverified]

    best_redet: Dict[str, ReDetection] = {}
    for r in usable:
        cand = next(c for c in merged.candidates if c.id == r.candidate_id)
        cur = best_redet.get(r.candidate_id)
        if cur is None or bfov_iou(cand.bfov, r.bfov) > bfov_iou(cand.bfov, cur.bfov):
            best_redet[r.candidate_id] = r
    if stale:
        log.info("%d re-detections refer to detections that anchor no candidate", len(stale))
    return PipelineResult(sem.kept, best_redet, drops, merged.candidates, stale)


def verified_entities(result: PipelineResult):
    """Graph nodes for the verified candidates (footprint = merged BFOV)."""
    from .metadata_graph import EntityNode

    out = []
    for c in result.candidates:
        r = result.redets.get(c.id)
        out.append(EntityNode(
            id=c.id,
            category=normalize_label(r.category) if r and r.category else c.label,
            footprint=c.bfov,
            attributes=tuple(r.attributes) if r else (),
            description=r.description if r else "",
            phrase=r.phrase if r else "",
            confidence=c.confidence,
            context={"source_views": list(c.source_views), "members": list(c.member_ids)},
        ))
    return out
