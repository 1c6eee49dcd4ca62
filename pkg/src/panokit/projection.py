"""Gnomonic (pinhole) views of an ERP panorama and reprojection back to BFOVs.

A view looks along (view_yaw, view_pitch) with zero roll. Camera frame:
+x right, +y up, +z forward. World = R_y(yaw) @ R_x(pitch) @ camera.
View pixel coordinates are continuous; pixel (i, j) has its center at
(i + 0.5, j + 0.5) and the optical axis passes through (W/2, H/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .sphere_geom import (
    TWO_PI,
    AngularRect,
    Bfov,
    DomainError,
    ErpImage,
    SphericalDirection,
    angles_to_pixels,
    angles_to_rays,
    minimal_arc,
    rays_to_angles,
    wrap_angle,
)


class ConfigError(ValueError):
    pass


def rotation_yaw_pitch(yaw: float, pitch: float) -> np.ndarray:
    """Zero-roll rotation taking the camera frame to the world frame.

    Yaw about +y first, then pitch about the rotated x axis; maps [0, 0, 1]
    to the ray of (yaw, pitch). Its transpose re-centers the world on that
    direction.
    """
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    r_yaw = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
    r_pitch = np.array([[1.0, 0.0, 0.0], [0.0, cp, sp], [0.0, -sp, cp]])
    return r_yaw @ r_pitch


@dataclass(frozen=True)
class PerspViewSpec:
    view_yaw: float
    view_pitch: float
    h_fov: float
    v_fov: float
    out_width: int
    out_height: int

    def __post_init__(self) -> None:
        for name, val in (("h_fov", self.h_fov), ("v_fov", self.v_fov)):
            if not 0.0 < val < math.pi:
                raise ConfigError(f"{name}={math.degrees(val):.6g} deg must lie in (0, 180)")
        if self.out_width <= 0 or self.out_height <= 0:
            raise ConfigError("view output dimensions must be positive")
        if not -0.5 * math.pi <= self.view_pitch <= 0.5 * math.pi:
            raise ConfigError("view pitch outside [-90, 90] deg")
        object.__setattr__(self, "view_yaw", wrap_angle(self.view_yaw))

    @classmethod
    def from_degrees(cls, yaw: float, pitch: float, h_fov: float, v_fov: float, width: int, height: int) -> "PerspViewSpec":
        return cls(math.radians(yaw), math.radians(pitch), math.radians(h_fov), math.radians(v_fov), int(width), int(height))

    def to_degrees(self) -> dict:
        return {
            "yaw": math.degrees(self.view_yaw),
            "pitch": math.degrees(self.view_pitch),
            "h_fov": math.degrees(self.h_fov),
            "v_fov": math.degrees(self.v_fov),
            "width": self.out_width,
            "height": self.out_height,
        }

    @property
    def focal(self) -> Tuple[float, float]:
        return (0.5 * self.out_width / math.tan(0.5 * self.h_fov), 0.5 * self.out_height / math.tan(0.5 * self.v_fov))

    @property
    def center(self) -> SphericalDirection:
        return SphericalDirection(self.view_yaw, self.view_pitch)

    def rotation(self) -> np.ndarray:
        return rotation_yaw_pitch(self.view_yaw, self.view_pitch)


@dataclass(frozen=True)
class PerspBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    confidence: float
    label: str
    id: str = ""

    def __post_init__(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise DomainError(f"degenerate box {self.x_min, self.y_min, self.x_max, self.y_max}")
        if not 0.0 <= self.confidence <= 1.0:
            raise DomainError(f"confidence {self.confidence!r} outside [0, 1]")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def inside(self, spec: PerspViewSpec) -> bool:
        return self.x_min >= 0 and self.y_min >= 0 and self.x_max <= spec.out_width and self.y_max <= spec.out_height


def generate_view_set(
    h_fov: float,
    yaw_stride: float,
    pitch_rings: Sequence[float] = (0.0,),
    v_fov: Optional[float] = None,
    out_width: int = 512,
    out_height: Optional[int] = None,
) -> List[PerspViewSpec]:
    """Overlapping views: one per (pitch ring, yaw multiple of the stride).

    Yaws start at -180 deg. ``v_fov`` defaults to ``h_fov`` and the output
    height follows the pinhole aspect ratio unless given.
    """
    if yaw_stride <= 0:
        raise ConfigError("yaw stride must be positive")
    count = TWO_PI / yaw_stride
    n = int(round(count))
    if n < 1 or abs(count - n) > 1e-9:
        raise ConfigError(f"yaw stride {math.degrees(yaw_stride):.6g} deg does not divide 360 deg")
    if h_fov < yaw_stride - 1e-12:
        raise ConfigError("h_fov smaller than the yaw stride leaves uncovered yaw gaps")
    v_fov = h_fov if v_fov is None else v_fov
    if out_height is None:
        out_height = max(1, int(round(out_width * math.tan(0.5 * v_fov) / math.tan(0.5 * h_fov))))
    views = []
    for pitch in pitch_rings:
        for k in range(n):
            views.append(PerspViewSpec(-math.pi + k * yaw_stride, pitch, h_fov, v_fov, out_width, out_height))
    return views


def _camera_rays(spec: PerspViewSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    fx, fy = spec.focal
    cx = (np.asarray(x, dtype=np.float64) - 0.5 * spec.out_width) / fx
    cy = -(np.asarray(y, dtype=np.float64) - 0.5 * spec.out_height) / fy
    cam = np.stack([cx, cy, np.ones_like(cx)], axis=-1)
    return cam / np.linalg.norm(cam, axis=-1, keepdims=True)


def persp_pixels_to_angles(spec: PerspViewSpec, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """World (yaw, pitch) of continuous view pixel coordinates (no range check)."""
    world = _camera_rays(spec, x, y) @ spec.rotation().T
    yaw, pitch = rays_to_angles(world)
    on_axis = (np.asarray(x) == 0.5 * spec.out_width) & (np.asarray(y) == 0.5 * spec.out_height)
    if np.any(on_axis):
        yaw = np.where(on_axis, spec.view_yaw, yaw)
        pitch = np.where(on_axis, spec.view_pitch, pitch)
    return yaw, pitch


def persp_pixel_to_direction(spec: PerspViewSpec, x: float, y: float) -> SphericalDirection:
    if not (0.0 <= x <= spec.out_width):
        raise DomainError(f"x={x!r} outside view raster [0, {spec.out_width}]")
    if not (0.0 <= y <= spec.out_height):
        raise DomainError(f"y={y!r} outside view raster [0, {spec.out_height}]")
    yaw, pitch = persp_pixels_to_angles(spec, np.array(x), np.array(y))
    return SphericalDirection(float(yaw), float(pitch))


def angles_to_persp_pixels(spec: PerspViewSpec, yaw: np.ndarray, pitch: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Project world directions into a view: (x, y, in_front)."""
    cam = angles_to_rays(yaw, pitch) @ spec.rotation()
    fx, fy = spec.focal
    z = cam[..., 2]
    in_front = z > 1e-12
    safe = np.where(in_front, z, 1.0)
    x = 0.5 * spec.out_width + fx * cam[..., 0] / safe
    y = 0.5 * spec.out_height - fy * cam[..., 1] / safe
    return x, y, in_front


def sample_bilinear_wrap(erp: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Bilinear lookup at continuous (u, v); column W wraps to 0, rows clamp."""
    h, w = erp.shape[:2]
    u = np.mod(u, w)
    v = np.clip(v, 0.0, h - 1)
    u0 = np.floor(u).astype(np.int64)
    v0 = np.floor(v).astype(np.int64)
    fu = u - u0
    fv = v - v0
    u0 %= w
    u1 = (u0 + 1) % w
    v1 = np.minimum(v0 + 1, h - 1)
    src = erp.astype(np.float64, copy=False)
    if src.ndim == 3:
        fu = fu[..., None]
        fv = fv[..., None]
    top = src[v0, u0] * (1 - fu) + src[v0, u1] * fu
    bot = src[v1, u0] * (1 - fu) + src[v1, u1] * fu
    return top * (1 - fv) + bot * fv


def render_perspective(erp: ErpImage, spec: PerspViewSpec) -> np.ndarray:
    """Render a pinhole view by bilinear sampling of the ERP.

    Returns an array with the ERP's dtype: uint8 color views are rounded,
    depth views stay float.
    """
    if not isinstance(erp, ErpImage):
        erp = ErpImage(erp)
    xs = np.arange(spec.out_width) + 0.5
    ys = np.arange(spec.out_height) + 0.5
    gx, gy = np.meshgrid(xs, ys)
    yaw, pitch = persp_pixels_to_angles(spec, gx, gy)
    u, v = angles_to_pixels(yaw, pitch, erp.width, erp.height)
    out = sample_bilinear_wrap(erp.data, u, v)
    if erp.data.dtype == np.uint8:
        return np.clip(np.rint(out), 0, 255).astype(np.uint8)
    return out


def _box_boundary(box: PerspBox, samples_per_edge: int) -> Tuple[np.ndarray, np.ndarray]:
    t = np.linspace(0.0, 1.0, samples_per_edge)
    xs = box.x_min + t * (box.x_max - box.x_min)
    ys = box.y_min + t * (box.y_max - box.y_min)
    bx = np.concatenate([xs, np.full_like(ys, box.x_max), xs[::-1], np.full_like(ys, box.x_min)])
    by = np.concatenate([np.full_like(xs, box.y_min), ys, np.full_like(xs, box.y_max), ys[::-1]])
    return bx, by


def persp_box_samples(spec: PerspViewSpec, box: PerspBox, samples_per_edge: int = 16) -> Tuple[np.ndarray, np.ndarray]:
    """World (yaw, pitch) of the sampled box boundary."""
    if samples_per_edge < 2:
        raise ConfigError("samples_per_edge must be >= 2")
    bx, by = _box_boundary(box, samples_per_edge)
    return persp_pixels_to_angles(spec, bx, by)


def persp_box_to_bfov(spec: PerspViewSpec, box: PerspBox, samples_per_edge: int = 16) -> Bfov:
    """Minimal wrap-aware angular rectangle around the box boundary samples."""
    yaw, pitch = persp_box_samples(spec, box, samples_per_edge)
    start, width = minimal_arc(yaw.tolist())
    lo, hi = float(pitch.min()), float(pitch.max())
    width = min(max(width, 1e-9), math.pi)
    return Bfov(SphericalDirection(start + 0.5 * width, 0.5 * (lo + hi)), width, max(hi - lo, 1e-9))


def rect_boundary_angles(rect: AngularRect, samples_per_edge: int = 16) -> Tuple[np.ndarray, np.ndarray]:
    """Samples along the border of an angular rectangle."""
    t = np.linspace(0.0, 1.0, samples_per_edge)
    yaws = rect.yaw_start + t * rect.yaw_width
    pitches = rect.pitch_lo + t * (rect.pitch_hi - rect.pitch_lo)
    yaw = np.concatenate([yaws, np.full_like(pitches, yaws[-1]), yaws, np.full_like(pitches, yaws[0])])
    pitch = np.concatenate([np.full_like(yaws, rect.pitch_lo), pitches, np.full_like(yaws, rect.pitch_hi), pitches])
    return yaw, pitch


def view_contains_rect(spec: PerspViewSpec, rect: AngularRect, samples_per_edge: int = 16) -> bool:
    """True when the rectangle's border projects entirely inside the view raster."""
    yaw, pitch = rect_boundary_angles(rect, samples_per_edge)
    x, y, front = angles_to_persp_pixels(spec, yaw, pitch)
    return bool(np.all(front & (x >= 0) & (x <= spec.out_width) & (y >= 0) & (y <= spec.out_height)))
