"""Equirectangular (ERP) and unit-sphere coordinate algebra.

Convention:
  - Image: u in [0, W) left to right, v in [0, H] top to bottom. (u, v) is the
    continuous coordinate of a pixel's top-left sample; pixel centers add 0.5.
  - Yaw in [-pi, pi), 0 = front (+z), positive = observer's right (+x).
  - Pitch in [-pi/2, pi/2], positive = up (+y).
  - Ray: (x, y, z) = (cos(pitch) sin(yaw), sin(pitch), cos(pitch) cos(yaw)).

Angles are radians everywhere in this module except the ``*_degrees`` helpers
and the BFOV text form, which are the external (degree) representation.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


class DomainError(ValueError):
    """Raised when an input lies outside the domain of a geometric operation."""


def wrap_angle(angle: float) -> float:
    """Wrap an angle in radians into [-pi, pi)."""
    out = math.fmod(angle + math.pi, TWO_PI)
    if out < 0.0:
        out += TWO_PI
    out -= math.pi
    if out >= math.pi:
        out -= TWO_PI
    return out


def wrap_angles(angles: np.ndarray) -> np.ndarray:
    """Vectorized :func:`wrap_angle`."""
    out = np.mod(np.asarray(angles, dtype=np.float64) + np.pi, TWO_PI) - np.pi
    return np.where(out >= np.pi, out - TWO_PI, out)


@dataclass(frozen=True)
class SphericalDirection:
    """Observer-centered direction. Yaw is normalized on construction."""

    yaw: float
    pitch: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.yaw) and math.isfinite(self.pitch)):
            raise DomainError(f"direction must be finite, got yaw={self.yaw}, pitch={self.pitch}")
        if not -HALF_PI <= self.pitch <= HALF_PI:
            raise DomainError(f"pitch {self.pitch!r} rad outside [-pi/2, pi/2]")
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    @classmethod
    def from_degrees(cls, yaw: float, pitch: float) -> "SphericalDirection":
        return cls(math.radians(yaw), math.radians(pitch))

    def to_degrees(self) -> Tuple[float, float]:
        return math.degrees(self.yaw), math.degrees(self.pitch)


@dataclass(frozen=True)
class UnitRay:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        norm = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if not abs(norm - 1.0) <= 1e-9:
            raise DomainError(f"ray is not unit length (norm={norm!r})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)


@dataclass
class ErpImage:
    """A full-surround ERP raster, color (H, W, 3) uint8 or depth (H, W) float.

    Depth maps hold finite non-negative meters.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.ndim == 3 and arr.shape[2] == 1:
            arr = arr[:, :, 0]
        if arr.ndim not in (2, 3) or (arr.ndim == 3 and arr.shape[2] != 3):
            raise DomainError(f"ERP data must be (H, W) or (H, W, 3), got shape {arr.shape}")
        h, w = arr.shape[:2]
        if h <= 0 or w != 2 * h:
            raise DomainError(f"ERP image must satisfy W = 2H, got W={w}, H={h}")
        if arr.ndim == 2:
            arr = arr.astype(np.float64, copy=False)
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise DomainError("depth samples must be finite and >= 0")
        self.data = arr

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else 3

    @property
    def is_depth(self) -> bool:
        return self.channels == 1


def pixel_to_direction(u: float, v: float, width: float, height: float) -> SphericalDirection:
    """Map a continuous ERP pixel coordinate to its spherical direction."""
    if not (width > 0 and height > 0):
        raise DomainError(f"image dimensions must be positive, got W={width}, H={height}")
    if not 0.0 <= u < width:
        raise DomainError(f"u={u!r} outside [0, {width})")
    if not 0.0 <= v <= height:
        raise DomainError(f"v={v!r} outside [0, {height}]")
    yaw = TWO_PI * (u / width - 0.5)
    pitch = math.pi * (0.5 - v / height)
    return SphericalDirection(yaw, pitch)


def direction_to_pixel(d: SphericalDirection, width: float, height: float) -> Tuple[float, float]:
    """Exact inverse of :func:`pixel_to_direction`."""
    if not (width > 0 and height > 0):
        raise DomainError(f"image dimensions must be positive, got W={width}, H={height}")
    u = (d.yaw / TWO_PI + 0.5) * width
    if u >= width:
        u -= width
    v = (0.5 - d.pitch / math.pi) * height
    return u, v


def pixels_to_angles(u: np.ndarray, v: np.ndarray, width: float, height: float) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized pixel map; returns (yaw, pitch) arrays, yaw wrapped."""
    yaw = wrap_angles(TWO_PI * (np.asarray(u, dtype=np.float64) / width - 0.5))
    pitch = np.pi * (0.5 - np.asarray(v, dtype=np.float64) / height)
    return yaw, pitch


def angles_to_pixels(yaw: np.ndarray, pitch: np.ndarray, width: float, height: float) -> Tuple[np.ndarray, np.ndarray]:
    u = (np.asarray(yaw, dtype=np.float64) / TWO_PI + 0.5) * width
    v = (0.5 - np.asarray(pitch, dtype=np.float64) / np.pi) * height
    return u, v


# float multiples of pi/2 get exact sin/cos so axis directions map to exact axis rays
_QUARTER_TURNS = {k * HALF_PI: ((0.0, 1.0, 0.0, -1.0)[k % 4], (1.0, 0.0, -1.0, 0.0)[k % 4]) for k in range(-4, 5)}


def _sincos(a: float) -> Tuple[float, float]:
    hit = _QUARTER_TURNS.get(a)
    return hit if hit is not None else (math.sin(a), math.cos(a))


def _sincos_array(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    s, c = np.sin(a), np.cos(a)
    for angle, (sv, cv) in _QUARTER_TURNS.items():
        hit = a == angle
        if hit.any():
            s = np.where(hit, sv, s)
            c = np.where(hit, cv, c)
    return s, c


def direction_to_ray(d: SphericalDirection) -> UnitRay:
    sy, cy = _sincos(d.yaw)
    sp, cp = _sincos(d.pitch)
    return UnitRay(cp * sy, sp, cp * cy)


def angles_to_rays(yaw: np.ndarray, pitch: np.ndarray) -> np.ndarray:
    """(..., 3) array of unit rays for broadcastable yaw/pitch arrays."""
    yaw = np.asarray(yaw, dtype=np.float64)
    pitch = np.asarray(pitch, dtype=np.float64)
    yaw, pitch = np.broadcast_arrays(yaw, pitch)
    sy, cy = _sincos_array(yaw)
    sp, cp = _sincos_array(pitch)
    return np.stack([cp * sy, sp, cp * cy], axis=-1)


# Below this horizontal norm the ray is treated as a pole and yaw is pinned to 0.
_POLE_EPS = 1e-12


def ray_to_direction(r: UnitRay | Sequence[float]) -> SphericalDirection:
    """Inverse of :func:`direction_to_ray`; yaw is 0 at the poles."""
    if not isinstance(r, UnitRay):
        x, y, z = (float(c) for c in r)
        norm = math.sqrt(x * x + y * y + z * z)
        if not abs(norm - 1.0) <= 1e-9:
            raise DomainError(f"ray is not unit length (norm={norm!r})")
    else:
        x, y, z = r.x, r.y, r.z
    horiz = math.hypot(x, z)
    pitch = math.atan2(y, horiz)
    yaw = 0.0 if horiz < _POLE_EPS else math.atan2(x, z)
    return SphericalDirection(yaw, min(max(pitch, -HALF_PI), HALF_PI))


def rays_to_angles(rays: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    rays = np.asarray(rays, dtype=np.float64)
    x, y, z = rays[..., 0], rays[..., 1], rays[..., 2]
    horiz = np.hypot(x, z)
    pitch = np.arctan2(y, horiz)
    yaw = np.where(horiz < _POLE_EPS, 0.0, np.arctan2(x, z))
    return wrap_angles(yaw), pitch


def angular_distance(a: SphericalDirection, b: SphericalDirection) -> float:
    """Great-circle angle between two directions, in [0, pi].

    Uses atan2(|a x b|, a . b), which equals arccos(a . b) but keeps full
    precision for nearly identical or antipodal directions.
    """
    ra = direction_to_ray(a).as_array()
    rb = direction_to_ray(b).as_array()
    return math.atan2(float(np.linalg.norm(np.cross(ra, rb))), float(np.dot(ra, rb)))


# ---------------------------------------------------------------------------
# BFOV and angular rectangles


@dataclass(frozen=True)
class Bfov:
    """Angular footprint: center direction plus angular width/height (radians)."""

    center: SphericalDirection
    x_fov: float
    y_fov: float

    def __post_init__(self) -> None:
        for name, val in (("x_fov", self.x_fov), ("y_fov", self.y_fov)):
            if not (math.isfinite(val) and 0.0 < val <= math.pi + 1e-12):
                raise DomainError(f"{name}={val!r} rad outside (0, pi]")

    @classmethod
    def from_degrees(cls, yaw: float, pitch: float, x_fov: float, y_fov: float) -> "Bfov":
        return cls(SphericalDirection.from_degrees(yaw, pitch), math.radians(x_fov), math.radians(y_fov))

    @property
    def yaw(self) -> float:
        return self.center.yaw

    @property
    def pitch(self) -> float:
        return self.center.pitch

    def to_degrees(self) -> Tuple[float, float, float, float]:
        yaw, pitch = self.center.to_degrees()
        return yaw, pitch, math.degrees(self.x_fov), math.degrees(self.y_fov)

    def rect(self) -> "AngularRect":
        return AngularRect.from_bfov(self)

    def to_text(self, decimals: int = 6) -> str:
        return format_bfov(self, decimals)


@dataclass(frozen=True)
class AngularRect:
    """Rectangle on the yaw-pitch domain.

    The yaw side is the circular interval [yaw_start, yaw_start + yaw_width)
    with yaw_start in [-pi, pi); it may cross the seam.
    """

    yaw_start: float
    yaw_width: float
    pitch_lo: float
    pitch_hi: float

    def __post_init__(self) -> None:
        if self.pitch_lo > self.pitch_hi:
            raise DomainError("pitch_lo must not exceed pitch_hi")
        if not 0.0 <= self.yaw_width <= TWO_PI:
            raise DomainError(f"yaw width {self.yaw_width!r} outside [0, 2pi]")

    @classmethod
    def from_bfov(cls, b: Bfov) -> "AngularRect":
        lo = max(b.pitch - 0.5 * b.y_fov, -HALF_PI)
        hi = min(b.pitch + 0.5 * b.y_fov, HALF_PI)
        return cls(wrap_angle(b.yaw - 0.5 * b.x_fov), b.x_fov, lo, hi)

    @property
    def yaw_lo(self) -> float:
        return self.yaw_start

    @property
    def yaw_hi(self) -> float:
        """End of the yaw interval, wrapped; less than yaw_lo when crossing the seam."""
        return wrap_angle(self.yaw_start + self.yaw_width)

    @property
    def area(self) -> float:
        return self.yaw_width * (self.pitch_hi - self.pitch_lo)

    def contains(self, d: SphericalDirection, tol: float = 0.0) -> bool:
        offset = (d.yaw - self.yaw_start) % TWO_PI
        in_yaw = offset <= self.yaw_width + tol or offset >= TWO_PI - tol
        return in_yaw and self.pitch_lo - tol <= d.pitch <= self.pitch_hi + tol

    def contains_angles(self, yaw: np.ndarray, pitch: np.ndarray) -> np.ndarray:
        """Vectorized membership (closed rectangle)."""
        offset = np.mod(np.asarray(yaw, dtype=np.float64) - self.yaw_start, TWO_PI)
        pitch = np.asarray(pitch, dtype=np.float64)
        return (offset <= self.yaw_width) & (pitch >= self.pitch_lo) & (pitch <= self.pitch_hi)

    def to_bfov(self) -> Bfov:
        center = SphericalDirection(self.yaw_start + 0.5 * self.yaw_width, 0.5 * (self.pitch_lo + self.pitch_hi))
        return Bfov(center, min(self.yaw_width, math.pi), self.pitch_hi - self.pitch_lo)


def circular_overlap(start_a: float, width_a: float, start_b: float, width_b: float) -> float:
    """Length of the intersection of two arcs on the circle (widths <= 2pi)."""
    if width_a >= TWO_PI:
        return min(width_b, TWO_PI)
    if width_b >= TWO_PI:
        return width_a
    a0 = start_a % TWO_PI
    b0 = start_b % TWO_PI
    total = 0.0
    for shift in (-TWO_PI, 0.0, TWO_PI):
        lo = max(a0, b0 + shift)
        hi = min(a0 + width_a, b0 + shift + width_b)
        if hi > lo:
            total += hi - lo
    return min(total, width_a, width_b)


def rect_iou(a: AngularRect, b: AngularRect) -> float:
    yaw_overlap = circular_overlap(a.yaw_start, a.yaw_width, b.yaw_start, b.yaw_width)
    pitch_overlap = max(0.0, min(a.pitch_hi, b.pitch_hi) - max(a.pitch_lo, b.pitch_lo))
    inter = yaw_overlap * pitch_overlap
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def bfov_iou(a: Bfov, b: Bfov) -> float:
    """Wrap-aware IoU of two BFOVs on the (unweighted) yaw-pitch domain."""
    return rect_iou(a.rect(), b.rect())


_ARC_SLACK = 1e-12


def covering_arc(arcs: Iterable[Tuple[float, float]]) -> Tuple[float, float]:
    """Smallest circular interval covering arcs given as (start, width).

    The cover is the complement of the largest uncovered gap. Each candidate
    gap opens at some arc's end and runs to the nearest arc start after it.
    """
    items = [(s % TWO_PI, min(max(w, 0.0), TWO_PI)) for s, w in arcs]
    if not items:
        raise DomainError("covering_arc needs at least one arc")
    if any(w >= TWO_PI for _, w in items):
        return wrap_angle(items[0][0]), TWO_PI
    best: Optional[Tuple[float, float]] = None
    for s_i, w_i in items:
        end = (s_i + w_i) % TWO_PI
        # covered only when strictly inside some arc; the slack absorbs s + w rounding
        if any((end - s_j) % TWO_PI < w_j - _ARC_SLACK for s_j, w_j in items):
            continue
        gap = min((s_j - end) % TWO_PI for s_j, _ in items)
        if gap == 0.0 and len(items) == 1:
            gap = TWO_PI
        start = wrap_angle(end + gap)
        cand = (gap, start)
        if best is None or gap > best[0] or (gap == best[0] and start < best[1]):
            best = cand
    if best is None or best[0] <= 0.0:
        return wrap_angle(items[0][0]), TWO_PI
    gap, start = best
    if gap >= TWO_PI:
        # single point
        return start, 0.0
    return start, TWO_PI - gap


def minimal_arc(yaws: Iterable[float]) -> Tuple[float, float]:
    """Smallest circular interval containing all points, as (start, width).

    The interval is the complement of the largest gap between sorted yaws.
    """
    pts = sorted(wrap_angle(y) for y in yaws)
    if not pts:
        raise DomainError("minimal_arc needs at least one yaw")
    if len(pts) == 1:
        return pts[0], 0.0
    gaps = [pts[i + 1] - pts[i] for i in range(len(pts) - 1)]
    gaps.append(pts[0] + TWO_PI - pts[-1])
    k = max(range(len(gaps)), key=lambda i: (gaps[i], -i))
    start = pts[(k + 1) % len(pts)]
    return start, TWO_PI - gaps[k]


# ---------------------------------------------------------------------------
# Degree text form "[yaw, pitch, x_fov, y_fov]"


def format_number(value: float, decimals: int = 6) -> str:
    text = f"{value:.{decimals}f}".rstrip("0").rstrip(".")
    return "0" if text in ("-0", "") else text


def format_bfov(b: Bfov, decimals: int = 6) -> str:
    return "[" + ", ".join(format_number(v, decimals) for v in b.to_degrees()) + "]"


def format_direction(d: SphericalDirection, decimals: int = 6) -> str:
    return "[" + ", ".join(format_number(v, decimals) for v in d.to_degrees()) + "]"


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_BFOV_RE = re.compile(r"\[\s*(" + _NUM + r")\s*,\s*(" + _NUM + r")\s*,\s*(" + _NUM + r")\s*,\s*(" + _NUM + r")\s*\]")
_DIR_RE = re.compile(r"\[\s*(" + _NUM + r")\s*,\s*(" + _NUM + r")\s*\]")


def bfov_degrees_valid(yaw: float, pitch: float, x_fov: float, y_fov: float) -> bool:
    """Range rule of the degree form: yaw [-180, 180), pitch [-90, 90), fovs (0, 180]."""
    vals = (yaw, pitch, x_fov, y_fov)
    if not all(math.isfinite(v) for v in vals):
        return False
    return -180.0 <= yaw < 180.0 and -90.0 <= pitch < 90.0 and 0.0 < x_fov <= 180.0 and 0.0 < y_fov <= 180.0


def parse_bfov_text(text: str) -> Optional[Bfov]:
    """Parse the first "[yaw, pitch, x_fov, y_fov]" group; None if absent or out of range."""
    if not isinstance(text, str):
        return None
    m = _BFOV_RE.search(text)
    if m is None:
        return None
    try:
        vals = [float(g) for g in m.groups()]
    except ValueError:
        return None
    if not bfov_degrees_valid(*vals):
        return None
    return Bfov.from_degrees(*vals)


def parse_direction_text(text: str) -> Optional[SphericalDirection]:
    """Parse the first "[yaw, pitch]" pair in degrees; None if absent or out of range."""
    if not isinstance(text, str):
        return None
    m = _DIR_RE.search(text)
    if m is None:
        return None
    yaw, pitch = (float(g) for g in m.groups())
    if not (math.isfinite(yaw) and math.isfinite(pitch)):
        return None
    if not (-180.0 <= yaw < 180.0 and -90.0 <= pitch <= 90.0):
        return None
    return SphericalDirection.from_degrees(yaw, pitch)
