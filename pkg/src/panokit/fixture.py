"""Bundled synthetic scene used by tests, the CLI demo and golden files.

An 800x400 ERP with eight entities (three chairs, a seam-straddling door and
a plant just across the seam), a depth map with a 10 m background, and
detections over the default six-view set. A handful of distractor boxes and
re-detections are placed just past each verification threshold so that
every stage of the pipeline has something to drop:

  - a 0.25-confidence bottle and a 0.32-confidence clock (the latter has no
    re-detection and ends up unverified)
  - an in-view duplicate chair box at box IoU ~0.55
  - a sofa whose two views disagree, ERP IoU ~0.62 between the boxes
  - a lamp re-detection at IoU ~0.72 and a vase re-detection at IoU ~0.5

Everything here is computed, not hand-typed, so the numbers follow the
geometry code. Distractor placements are found by bisection on a yaw shift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .projection import PerspBox, PerspViewSpec, angles_to_persp_pixels, generate_view_set, rect_boundary_angles, \
    persp_box_to_bfov, view_contains_rect
from .sphere_geom import Bfov, ErpImage, SphericalDirection, bfov_iou, pixels_to_angles
from .verify_merge import ReDetection, ViewDetections, filter_confidence, merge_cross_view, nms_view

WIDTH, HEIGHT = 800, 400
BACKGROUND_DEPTH = 10.0
PANORAMA_ID = "fixture-scene"
VIEW_SIZE = 512


@dataclass(frozen=True)
class FixtureEntity:
    key: str
    category: str
    yaw: float  # degrees
    pitch: float
    x_fov: float
    y_fov: float
    distance: float
    color: Tuple[int, int, int]
    attributes: Tuple[str, ...]
    phrase: str

    @property
    def bfov(self) -> Bfov:
        return Bfov.from_degrees(self.yaw, self.pitch, self.x_fov, self.y_fov)


ENTITIES = (
    FixtureEntity("chair_a", "chair", 30, -15, 20, 24, 2.0, (200, 60, 40), ("red", "wooden"), "the red wooden chair"),
    FixtureEntity("chair_b", "chair", 80, -14, 18, 22, 3.5, (60, 60, 200), ("blue",), "the blue chair on the right"),
    FixtureEntity("chair_c", "chair", -60, -12, 18, 22, 5.0, (220, 220, 220), ("white", "metal"), "the white metal chair"),
    FixtureEntity("table", "table", 0, -25, 28, 16, 2.5, (140, 90, 40), ("wooden", "round"), "the round wooden table"),
    FixtureEntity("lamp", "lamp", -120, 20, 12, 30, 4.0, (250, 230, 90), ("metal",), "the tall floor lamp"),
    FixtureEntity("door", "door", 178, 5, 20, 50, 6.0, (90, 50, 30), ("wooden", "large"), "the door behind the observer"),
    FixtureEntity("plant", "plant", -168, -22, 14, 20, 3.0, (40, 160, 60), ("green", "small"), "the potted plant"),
    FixtureEntity("sofa", "sofa", 148, -10, 30, 22, 4.5, (110, 110, 120), ("large", "striped"), "the striped sofa"),
)

DEFAULT_H_FOV = math.radians(120.0)
DEFAULT_STRIDE = math.radians(60.0)


def default_views() -> List[PerspViewSpec]:
    return generate_view_set(DEFAULT_H_FOV, DEFAULT_STRIDE, out_width=VIEW_SIZE)


def _pixel_grid(width: int, height: int) -> Tuple[np.ndarray, np.ndarray]:
    yaw, _ = pixels_to_angles(np.arange(width) + 0.5, np.zeros(width), width, height)
    _, pitch = pixels_to_angles(np.zeros(height), np.arange(height) + 0.5, width, height)
    return yaw, pitch


def _mask(bfov: Bfov, yaw: np.ndarray, pitch: np.ndarray) -> np.ndarray:
    rect = bfov.rect()
    cols = np.mod(yaw - rect.yaw_start, 2.0 * math.pi) <= rect.yaw_width
    rows = (pitch >= rect.pitch_lo) & (pitch <= rect.pitch_hi)
    return rows[:, None] & cols[None, :]


def make_erp(width: int = WIDTH, height: int = HEIGHT) -> ErpImage:
    """RGB panorama: a pitch gradient with one flat-colored patch per entity."""
    yaw, pitch = _pixel_grid(width, height)
    sky = np.array([150, 180, 220], dtype=np.float64)
    floor = np.array([120, 110, 90], dtype=np.float64)
    t = (pitch[:, None] / math.pi + 0.5)[..., None]
    img = np.broadcast_to(floor + t * (sky - floor), (height, width, 3)).copy()
    # faint yaw texture so perspective views are not flat
    img += 12.0 * np.sin(4.0 * yaw)[None, :, None]
    for e in ENTITIES:
        img[_mask(e.bfov, yaw, pitch)] = e.color
    return ErpImage(np.clip(np.round(img), 0, 255).astype(np.uint8))


def make_depth(width: int = WIDTH, height: int = HEIGHT) -> ErpImage:
    yaw, pitch = _pixel_grid(width, height)
    depth = np.full((height, width), BACKGROUND_DEPTH)
    for e in ENTITIES:
        depth[_mask(e.bfov, yaw, pitch)] = e.distance
    return ErpImage(depth)


def project_bfov_box(view: PerspViewSpec, bfov: Bfov, samples_per_edge: int = 32) -> Optional[Tuple[float, ...]]:
    """Tight perspective box around a footprint, or None if it leaves the view."""
    rect = bfov.rect()
    if not view_contains_rect(view, rect, samples_per_edge):
        return None
    yaw, pitch = rect_boundary_angles(rect, samples_per_edge)
    x, y, _ = angles_to_persp_pixels(view, yaw, pitch)
    return (round(float(x.min()), 3), round(float(y.min()), 3), round(float(x.max()), 3), round(float(y.max()), 3))


def _bisect(fn, lo: float, hi: float, target: float, iters: int = 60) -> float:
    """Solve fn(x) = target for fn decreasing on [lo, hi]."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fn(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _shifted(b: Bfov, d_yaw: float) -> Bfov:
    return Bfov(SphericalDirection(b.yaw + d_yaw, b.pitch), b.x_fov, b.y_fov)


def _box_iou_shift(base: Tuple[float, ...], shift: float) -> Tuple[float, ...]:
    x0, y0, x1, y1 = base
    return (round(x0 + shift, 3), y0, round(x1 + shift, 3), y1)


def _box_iou(a, b) -> float:
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    area = lambda r: (r[2] - r[0]) * (r[3] - r[1])
    return inter / (area(a) + area(b) - inter)


@dataclass
class FixtureData:
    erp: ErpImage
    depth: ErpImage
    views: List[PerspViewSpec]
    detections: List[ViewDetections]
    redetections: List[ReDetection]


def _entity(key: str) -> FixtureEntity:
    return next(e for e in ENTITIES if e.key == key)


def make_detections(views: Optional[Sequence[PerspViewSpec]] = None) -> List[ViewDetections]:
    views = list(views or default_views())
    per_view: List[List[PerspBox]] = [[] for _ in views]
    for e in ENTITIES:
        seen = 0
        for vi, view in enumerate(views):
            box = project_bfov_box(view, e.bfov)
            if box is None:
                continue
            conf = round(0.9 - 0.05 * seen, 2)
            per_view[vi].append(PerspBox(*box, confidence=conf, label=e.category, id=f"{e.key}@v{vi}"))
            seen += 1
        if not seen:
            raise RuntimeError(f"fixture entity {e.key} is not fully visible in any view")

    def first_view(key: str) -> int:
        return next(vi for vi, boxes in enumerate(per_view) if any(b.id.startswith(key + "@") for b in boxes))

    # in-view duplicate of chair_a at box IoU ~0.55
    vi = first_view("chair_a")
    base = next(b for b in per_view[vi] if b.id.startswith("chair_a@"))
    coords = (base.x_min, base.y_min, base.x_max, base.y_max)
    s = _bisect(lambda t: _box_iou(coords, _box_iou_shift(coords, t)), 0.0, base.x_max - base.x_min, 0.55)
    per_view[vi].append(PerspBox(*_box_iou_shift(coords, s), confidence=0.6, label="chair", id="dup_chair"))

    # low-confidence clutter
    vi = first_view("table")
    table = _entity("table")
    bottle = _shifted(Bfov.from_degrees(table.yaw, table.pitch + 14, 6, 8), 0.0)
    per_view[vi].append(PerspBox(*project_bfov_box(views[vi], bottle), confidence=0.25, label="bottle", id="bottle"))
    clock = Bfov.from_degrees(-100, 35, 8, 8)
    vi = next(i for i, v in enumerate(views) if project_bfov_box(v, clock) is not None)
    per_view[vi].append(PerspBox(*project_bfov_box(views[vi], clock), confidence=0.32, label="clock", id="clock"))

    # a spurious vase (it will fail semantic verification)
    vase = Bfov.from_degrees(55, 30, 10, 14)
    vi = next(i for i, v in enumerate(views) if project_bfov_box(v, vase) is not None)
    per_view[vi].append(PerspBox(*project_bfov_box(views[vi], vase), confidence=0.7, label="vase", id="vase"))

    # the sofa's second-view box is poorly localized: ERP IoU ~0.62 with the first
    sofa = _entity("sofa")
    sofa_views = [vi for vi, boxes in enumerate(per_view) if any(b.id.startswith("sofa@") for b in boxes)]
    primary_vi, other_vi = sofa_views[0], sofa_views[1]
    primary = next(b for b in per_view[primary_vi] if b.id.startswith("sofa@"))
    primary_bfov = persp_box_to_bfov(views[primary_vi], primary)
    toward = 1.0 if math.sin(views[other_vi].view_yaw - sofa.bfov.yaw) > 0 else -1.0

    def sofa_iou(shift_deg: float) -> float:
        box = project_bfov_box(views[other_vi], _shifted(sofa.bfov, toward * math.radians(shift_deg)))
        if box is None:
            return 0.0
        return bfov_iou(primary_bfov, persp_box_to_bfov(views[other_vi], PerspBox(*box, 0.5, "sofa")))

    s = _bisect(sofa_iou, 0.0, 20.0, 0.62)
    box = project_bfov_box(views[other_vi], _shifted(sofa.bfov, toward * math.radians(s)))
    per_view[other_vi] = [b if not b.id.startswith("sofa@") else PerspBox(*box, b.confidence, b.label, b.id)
                          for b in per_view[other_vi]]

    return [ViewDetections(v, tuple(b), PANORAMA_ID) for v, b in zip(views, per_view)]


REDET_TARGETS = {"lamp": 0.72, "vase": 0.5}
REDET_DEFAULT_IOU = 0.9


def make_redetections(detections: Sequence[ViewDetections]) -> List[ReDetection]:
    """Re-detections for every entity anchor plus the vase, at tuned IoUs.

    The clock gets none.
    """
    merged = merge_cross_view([nms_view(filter_confidence(d)) for d in detections])
    by_key = {c.id.split("@")[0]: c for c in merged.candidates}
    out = []
    for key in sorted(by_key):
        cand = by_key[key]
        if key in ("clock", "dup_chair", "bottle"):
            continue
        target = REDET_TARGETS.get(key, REDET_DEFAULT_IOU)
        s = _bisect(lambda t: bfov_iou(cand.bfov, _shifted(cand.bfov, t)), 0.0, cand.bfov.x_fov, target)
        bfov = _shifted(cand.bfov, s)
        # stored in degrees with 6 decimals; round here so in-memory and on-disk agree
        bfov = Bfov.from_degrees(*[round(v, 6) for v in bfov.to_degrees()])
        if key in ("vase",):
            out.append(ReDetection(cand.id, bfov, phrase="a small vase on the shelf", category="vase"))
            continue
        e = _entity(key)
        out.append(ReDetection(cand.id, bfov, phrase=e.phrase, attributes=e.attributes,
                               description=f"{e.phrase} seen from the observer position", category=e.category))
    return out


def make_fixture() -> FixtureData:
    views = default_views()
    dets = make_detections(views)
    return FixtureData(make_erp(), make_depth(), views, dets, make_redetections(dets))


# ---------------------------------------------------------------------------
# Evaluation fixtures

# Three episodes whose metrics are easy to recompute by hand (positions in
# meters, goal at the origin).
VLN_EPISODES = (
    # straight to within 2 m of the goal: success, p = 8, l = 8 -> SPL 1
    {"id": "ep-success", "trajectory": [[10, 0, 0], [6, 0, 0], [2, 0, 0]], "goal": [0, 0, 0],
     "shortest_path_length": 8.0},
    # passes 1 m from the goal then ends 5 m away: OSR hit, SR miss
    {"id": "ep-overshoot", "trajectory": [[0, 0, 6], [0, 0, 1], [0, 0, -5]], "goal": [0, 0, 0],
     "shortest_path_length": 5.0},
    # detour: ends exactly 3 m away (boundary counts as success), p = 20, l = 10 -> SPL 0.5
    {"id": "ep-detour", "trajectory": [[0, 0, 13], [10, 0, 13], [10, 0, 3], [0, 0, 3]], "goal": [0, 0, 0],
     "shortest_path_length": 10.0, "executed_path_length": 20.0},
)

# Efficiency rows: steps and effective input tokens per method.
EFFICIENCY_ROWS = (
    {"name": "persp-rotation-4b", "steps": 6.27, "total_tokens": "29.6k"},
    {"name": "persp-rotation-8b", "steps": 6.34, "total_tokens": "29.9k"},
    {"name": "persp-rotation-tuned-a", "steps": 3.70, "total_tokens": "19.2k"},
    {"name": "persp-rotation-tuned-b", "steps": 3.58, "total_tokens": "18.7k"},
    {"name": "direct-erp", "steps": 1.00, "total_tokens": "16.5k"},
)
EFFICIENCY_BASELINE = "direct-erp"

# Direction-hit targets over fixture entities: object-search style targets use
# the entity footprint as region, path-search style ones use a tolerance.
def direction_targets() -> List[Dict]:
    out = []
    for e in ENTITIES:
        out.append({"id": f"hos-{e.key}", "kind": "HOS", "region": [e.yaw, e.pitch, e.x_fov, e.y_fov]})
        out.append({"id": f"hps-{e.key}", "kind": "HPS", "yaw": e.yaw, "pitch": 0.0})
    return out
