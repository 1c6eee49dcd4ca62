"""Observer-centered reference frames: sectors, relative directions, camera
rotation, object-conditioned reorientation and viewer-centered 3D relations.

Label vocabulary (shared verbatim by task generation and evaluation):

  lateral sectors   front, front-right, right, back-right, back, back-left,
                    left, front-left
  vertical          above, level, below
  2D relation       left/right x above/below joined with "-", or "aligned"
  3D relation       front/behind, left/right, above/below joined in that
                    order with "-", or "same-position"
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import List, Optional, Sequence

import numpy as np

from .projection import rotation_yaw_pitch
from .sphere_geom import (
    SphericalDirection,
    angular_distance,
    direction_to_ray,
    ray_to_direction,
    wrap_angle,
)

SECTORS = ("front", "front-right", "right", "back-right", "back", "back-left", "left", "front-left")
VERTICAL = ("above", "level", "below")

DEFAULT_ANGLE_EPS = math.radians(5.0)
DEFAULT_LENGTH_EPS = 0.15

R2D_LABELS = ("left", "right", "above", "below", "left-above", "left-below", "right-above", "right-below", "aligned")

_OPPOSITE = {
    "left": "right",
    "right": "left",
    "above": "below",
    "below": "above",
    "front": "behind",
    "behind": "front",
}


def _r3d_labels() -> tuple:
    out = []
    for depth, lateral, vertical in product(("front", "behind", None), ("left", "right", None), ("above", "below", None)):
        parts = [p for p in (depth, lateral, vertical) if p]
        if parts:
            out.append("-".join(parts))
    return tuple(out)


R3D_LABELS = _r3d_labels()


class DepthRequiredError(ValueError):
    def __init__(self, what: str = "depth required"):
        super().__init__(what)


@dataclass(frozen=True)
class SectorLabel:
    lateral: str
    vertical: str

    def __str__(self) -> str:
        return self.lateral if self.vertical == "level" else f"{self.lateral}, {self.vertical}"


@dataclass(frozen=True)
class Relation3D:
    lateral: str  # left | right | centered
    vertical: str  # above | below | level
    depth_axis: str  # in front of | behind | same-depth

    @property
    def label(self) -> str:
        depth = {"in front of": "front", "behind": "behind"}.get(self.depth_axis)
        lateral = self.lateral if self.lateral != "centered" else None
        vertical = self.vertical if self.vertical != "level" else None
        parts = [p for p in (depth, lateral, vertical) if p]
        return "-".join(parts) if parts else "same-position"

    def reversed(self) -> "Relation3D":
        depth = {"in front of": "behind", "behind": "in front of"}.get(self.depth_axis, self.depth_axis)
        return Relation3D(_OPPOSITE.get(self.lateral, self.lateral), _OPPOSITE.get(self.vertical, self.vertical), depth)

    @property
    def non_neutral_axes(self) -> int:
        return sum((self.lateral != "centered", self.vertical != "level", self.depth_axis != "same-depth"))


def opposite_label(label: str) -> str:
    """Mirror a composite relation label axis by axis ("right-above" -> "left-below")."""
    if label in ("aligned", "same-position"):
        return label
    return "-".join(_OPPOSITE.get(p, p) for p in label.split("-"))


def absolute_sector(d: SphericalDirection, vertical_eps: float = DEFAULT_ANGLE_EPS) -> SectorLabel:
    idx = int(math.floor((d.yaw + math.pi / 8) / (math.pi / 4))) % 8
    if d.pitch > vertical_eps:
        vertical = "above"
    elif d.pitch < -vertical_eps:
        vertical = "below"
    else:
        vertical = "level"
    return SectorLabel(SECTORS[idx], vertical)


def relative_direction(target: SphericalDirection, reference: SphericalDirection, eps: float = DEFAULT_ANGLE_EPS) -> str:
    """2D relation of ``target`` with respect to ``reference``, observer fixed."""
    d_yaw = wrap_angle(target.yaw - reference.yaw)
    d_pitch = target.pitch - reference.pitch
    lateral = "right" if d_yaw > eps else "left" if d_yaw < -eps else None
    vertical = "above" if d_pitch > eps else "below" if d_pitch < -eps else None
    parts = [p for p in (lateral, vertical) if p]
    return "-".join(parts) if parts else "aligned"


def camera_rotate(d: SphericalDirection, turn: float) -> SphericalDirection:
    """Direction of ``d`` after the observer turns in place by ``turn`` (right positive)."""
    return SphericalDirection(wrap_angle(d.yaw - turn), d.pitch)


def reorient_to_object(target: SphericalDirection, new_front: SphericalDirection) -> SphericalDirection:
    """Direction of ``target`` once ``new_front`` becomes the front (zero roll)."""
    if target == new_front:
        return SphericalDirection(0.0, 0.0)
    rot = rotation_yaw_pitch(new_front.yaw, new_front.pitch).T
    r = rot @ direction_to_ray(target).as_array()
    r /= np.linalg.norm(r)
    return ray_to_direction(r)


def position_3d(direction: SphericalDirection, distance: float) -> np.ndarray:
    return distance * direction_to_ray(direction).as_array()


def relation_3d(pos_a: np.ndarray, pos_b: np.ndarray, eps_len: float = DEFAULT_LENGTH_EPS) -> Relation3D:
    dx, dy, dz = (np.asarray(pos_a, dtype=np.float64) - np.asarray(pos_b, dtype=np.float64)).tolist()
    lateral = "right" if dx > eps_len else "left" if dx < -eps_len else "centered"
    vertical = "above" if dy > eps_len else "below" if dy < -eps_len else "level"
    # nearer along the forward axis is "in front of"
    depth = "in front of" if dz < -eps_len else "behind" if dz > eps_len else "same-depth"
    return Relation3D(lateral, vertical, depth)


def _node_center(node) -> SphericalDirection:
    return node.footprint.center


def relative_3d(a, b, eps_len: float = DEFAULT_LENGTH_EPS) -> Relation3D:
    """Viewer-centered 3D relation of entity ``a`` with respect to ``b``."""
    if a.distance is None or b.distance is None:
        raise DepthRequiredError()
    return relation_3d(position_3d(_node_center(a), a.distance), position_3d(_node_center(b), b.distance), eps_len)


def observer_distance_rank(nodes: Sequence) -> List[str]:
    """Node ids ordered nearest first; ties by id."""
    missing = [n.id for n in nodes if n.distance is None]
    if missing:
        raise DepthRequiredError(f"depth required for {', '.join(missing)}")
    return [n.id for n in sorted(nodes, key=lambda n: (n.distance, n.id))]


def in_seam_margin(d: SphericalDirection, margin: float) -> bool:
    return abs(d.yaw) >= math.pi - margin


def seam_nearest(anchor, others: Sequence, use_3d: bool = False):
    """Entity nearest to ``anchor`` on the sphere (or in 3D when requested)."""
    if not others:
        raise ValueError("seam_nearest needs at least one candidate")

    def key(node):
        if use_3d:
            if anchor.distance is None or node.distance is None:
                raise DepthRequiredError()
            pa = position_3d(_node_center(anchor), anchor.distance)
            pn = position_3d(_node_center(node), node.distance)
            return (float(np.linalg.norm(pa - pn)), node.id)
        return (angular_distance(_node_center(anchor), _node_center(node)), node.id)

    return min(others, key=key)


def sector_after_rotation(d: SphericalDirection, turn: float) -> str:
    return absolute_sector(camera_rotate(d, turn)).lateral


def sector_after_reorientation(target: SphericalDirection, facing: SphericalDirection) -> str:
    return absolute_sector(reorient_to_object(target, facing)).lateral


def describe_turn(turn: float) -> str:
    deg = int(round(math.degrees(abs(turn))))
    return f"turn {'right' if turn > 0 else 'left'} {deg} degrees"

