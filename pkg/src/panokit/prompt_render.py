"""Prompt templates for ERP-native tasks and the coordinate-grid overlay.

The three template strings are reproduced verbatim (math markup rendered as
plain text). ``render_grid`` draws 1-px yaw/pitch lines, a center crosshair
and numeric labels from an embedded 3x5 bitmap font so the output is
pixel-identical on every platform.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from .sphere_geom import ErpImage

SYSTEM_PROMPT = """\
You are a multimodal assistant specialized in ERP (equirectangular projection) panoramic image understanding.

The input image is an ERP panorama representing the full 360-degree surrounding scene captured from a single fixed viewpoint.
It should be interpreted as a continuous panoramic observation centered at the current observer, rather than as a standard perspective image.

All directional and spatial judgments are defined in an observer-centered reference frame anchored at the current observer.
The image center corresponds to the current front direction.

BFOV is represented as [yaw, pitch, x_fov, y_fov] in degrees.
In this representation, yaw and pitch denote the center direction of the target object, while x_fov and y_fov denote the angular width and angular height covering the target object.

Positive yaw corresponds to the observer's right, and negative yaw corresponds to the observer's left.
Positive pitch corresponds to the upward direction, and negative pitch corresponds to the downward direction.
The valid range of yaw is [-180°, 180°), the valid range of pitch is [-90°, 90°), and the valid ranges of x_fov and y_fov are (0°, 180°].

Relative direction is defined by comparing the center direction of the target object with that of the reference object while keeping the current observer orientation fixed.

Camera rotation is defined as an in-place change of observer orientation without any change in observer position.
Under this operation, the current front direction is updated according to the specified turn angle and turn direction, and the target object is then judged in the rotated observer frame.

Object-conditioned reorientation is defined as an in-place reorientation in which the center direction of the specified facing object becomes the new front direction.
The target object is then judged in the reoriented observer frame.

Physical distance is defined in scene 3D space relative to the current observer, namely the current camera position.

Relative 3D position is defined as the positional relation of one object to another in the current observer-centered 3D frame.

Return only the requested answer in the required format unless explicitly instructed otherwise.
"""

TEXT_APPENDIX = """\
Reference System (Equirectangular Projection):
- Image center: yaw 0°, corresponding to the front direction.
- Left and right image boundaries: yaw ±180°, corresponding to the back direction.
- Yaw 90°: one quarter of the image width to the right of the center.
- Yaw -90°: one quarter of the image width to the left of the center.
- Vertical axis: pitch 0° is the horizon, pitch 90° is the top (zenith), and pitch -90° is the bottom (nadir).
"""

VISUAL_APPENDIX = """\
Visual Guidance System:
- The image is overlaid with a coordinate grid and numerical labels.
- Green vertical lines represent yaw angles. Numerical labels (e.g., -180,-150,...,0,...,180) are shown at the top and bottom.
- Blue horizontal lines represent pitch angles. Numerical labels (e.g., -90,-75,...,0,...,90) are shown at the left and right ends.
- A yellow crosshair marks the front direction at (0°,0°).

Task: Use the visual grid lines and numerical labels as a ruler to estimate the target center direction [yaw,pitch]. Interpolate between lines if the target does not lie exactly on a grid intersection.
"""


@dataclass(frozen=True)
class PromptBundle:
    system_prompt: str
    text_appendix: str
    visual_appendix: str

    def items(self) -> List[Tuple[str, str]]:
        return [("system_prompt", self.system_prompt), ("text_appendix", self.text_appendix),
                ("visual_appendix", self.visual_appendix)]

    @property
    def sha256(self) -> str:
        h = hashlib.sha256()
        for name, text in self.items():
            h.update(name.encode("utf-8") + b"\0" + text.encode("utf-8") + b"\0")
        return h.hexdigest()


def emit_prompts() -> PromptBundle:
    norm = lambda s: s.replace("\r\n", "\n")
    return PromptBundle(norm(SYSTEM_PROMPT), norm(TEXT_APPENDIX), norm(VISUAL_APPENDIX))


def prompt_sha256() -> str:
    return emit_prompts().sha256


# ---------------------------------------------------------------------------
# Grid overlay

GREEN = (0, 255, 0)
BLUE = (0, 0, 255)
YELLOW = (255, 255, 0)


@dataclass(frozen=True)
class GridStyle:
    yaw_step: int = 30
    pitch_step: int = 15
    yaw_color: Tuple[int, int, int] = GREEN
    pitch_color: Tuple[int, int, int] = BLUE
    crosshair_color: Tuple[int, int, int] = YELLOW
    crosshair_half: int = 6
    labels: bool = True

    def __post_init__(self) -> None:
        if self.yaw_step <= 0 or 360 % self.yaw_step:
            raise ValueError("yaw_step must divide 360")
        if self.pitch_step <= 0 or 180 % self.pitch_step:
            raise ValueError("pitch_step must divide 180")


# 3x5 glyphs, rows top to bottom, bit 2 = left column
_FONT: Dict[str, Tuple[int, ...]] = {
    "0": (7, 5, 5, 5, 7), "1": (2, 6, 2, 2, 7), "2": (7, 1, 7, 4, 7), "3": (7, 1, 7, 1, 7),
    "4": (5, 5, 7, 1, 1), "5": (7, 4, 7, 1, 7), "6": (7, 4, 7, 5, 7), "7": (7, 1, 1, 1, 1),
    "8": (7, 5, 7, 5, 7), "9": (7, 5, 7, 1, 7), "-": (0, 0, 7, 0, 0),
}
GLYPH_W, GLYPH_H = 3, 5


def round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def yaw_column(yaw_deg: float, width: int) -> int:
    return round_half_up((yaw_deg / 360.0 + 0.5) * width) % width


def pitch_row(pitch_deg: float, height: int) -> int:
    return min(round_half_up((0.5 - pitch_deg / 180.0) * height), height - 1)


def _text_mask(text: str) -> np.ndarray:
    cols = len(text) * (GLYPH_W + 1) - 1
    out = np.zeros((GLYPH_H, max(cols, 0)), dtype=bool)
    for i, ch in enumerate(text):
        for r, bits in enumerate(_FONT[ch]):
            for c in range(GLYPH_W):
                if bits >> (GLYPH_W - 1 - c) & 1:
                    out[r, i * (GLYPH_W + 1) + c] = True
    return out


def _stamp(mask: np.ndarray, glyphs: np.ndarray, top: int, left: int) -> None:
    h, w = mask.shape
    gh, gw = glyphs.shape
    top = int(np.clip(top, 0, max(h - gh, 0)))
    left = int(np.clip(left, 0, max(w - gw, 0)))
    region = mask[top:top + gh, left:left + gw]
    region |= glyphs[: region.shape[0], : region.shape[1]]


def grid_masks(width: int, height: int, style: GridStyle = GridStyle()) -> Dict[str, np.ndarray]:
    """Boolean masks for yaw lines, pitch lines, crosshair and labels."""
    yaw_m = np.zeros((height, width), dtype=bool)
    pitch_m = np.zeros_like(yaw_m)
    cross_m = np.zeros_like(yaw_m)
    label_m = np.zeros_like(yaw_m)
    yaws = list(range(-180, 180, style.yaw_step))
    pitches = list(range(-90, 91, style.pitch_step))
    for y in yaws:
        yaw_m[:, yaw_column(y, width)] = True
    for p in pitches:
        pitch_m[pitch_row(p, height), :] = True
    cu, cv = width // 2, height // 2
    k = style.crosshair_half
    cross_m[cv, max(cu - k, 0): cu + k + 1] = True
    cross_m[max(cv - k, 0): cv + k + 1, cu] = True
    if style.labels:
        for y in yaws + [180]:
            g = _text_mask(str(y))
            col = yaw_column(y, width) if y != 180 else width - 1
            left = col + 2 if y != 180 else col - g.shape[1] - 1
            _stamp(label_m, g, 2, left)
            _stamp(label_m, g, height - GLYPH_H - 2, left)
        for p in pitches:
            g = _text_mask(str(p))
            row = pitch_row(p, height)
            top = row + 2 if p > -90 else row - GLYPH_H - 1
            _stamp(label_m, g, top, 2)
            _stamp(label_m, g, top, width - g.shape[1] - 2)
    return {"yaw": yaw_m, "pitch": pitch_m, "crosshair": cross_m, "labels": label_m}


def render_grid(erp: ErpImage, style: GridStyle = GridStyle()) -> Tuple[ErpImage, np.ndarray]:
    """Overlay the grid on a copy of ``erp``; returns (image, drawn mask).

    Paint order is pitch lines, yaw lines, labels (white), crosshair.
    Grayscale or depth inputs are promoted to 8-bit RGB first.
    """
    data = erp.data
    if data.ndim == 2 or data.shape[2] == 1:
        gray = data if data.ndim == 2 else data[..., 0]
        if gray.dtype != np.uint8:
            peak = float(gray.max()) or 1.0
            gray = np.round(np.asarray(gray, dtype=np.float64) / peak * 255).astype(np.uint8)
        data = np.repeat(gray[..., None], 3, axis=2)
    out = np.array(data[..., :3], dtype=np.uint8, copy=True)
    masks = grid_masks(erp.width, erp.height, style)
    out[masks["pitch"]] = style.pitch_color
    out[masks["yaw"]] = style.yaw_color
    out[masks["labels"]] = (255, 255, 255)
    out[masks["crosshair"]] = style.crosshair_color
    drawn = masks["pitch"] | masks["yaw"] | masks["labels"] | masks["crosshair"]
    return ErpImage(out), drawn


def image_sha256(data: np.ndarray) -> str:
    arr = np.ascontiguousarray(data, dtype=np.uint8)
    h = hashlib.sha256()
    h.update(f"{arr.shape}".encode())
    h.update(arr.tobytes())
    return h.hexdigest()
