"""Pipeline configuration: defaults, file loading, overrides and hashing."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import yaml

from .task_gen import FAMILIES, CANONICAL_RATIOS


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    # verification thresholds
    confidence: float = 0.3
    nms_iou: float = 0.5
    merge_iou: float = 0.6
    semantic_iou: float = 0.7
    min_support: int = 1
    consistency_check: bool = True
    samples_per_edge: int = 16
    # view set
    h_fov_deg: float = 120.0
    yaw_stride_deg: float = 60.0
    v_fov_deg: Optional[float] = None
    pitch_rings_deg: tuple = (0.0,)
    view_size: int = 512
    # relation dead-zones
    angle_eps_deg: float = 5.0
    length_eps_m: float = 0.15
    edge_cap: Optional[int] = None
    # task generation and mixture
    seed: int = 0
    n_options: int = 4
    seam_margin_deg: float = 20.0
    mixture: str = "none"  # none | canonical | natural | custom
    mixture_ratios: Dict[str, float] = field(default_factory=lambda: dict(CANONICAL_RATIOS))
    mixture_total: int = 0
    per_scene_cap: Optional[int] = None
    # scoring
    yaw_tol_deg: float = 15.0
    pitch_tol_deg: float = 15.0
    success_radius_m: float = 3.0

    def validate(self) -> "PipelineConfig":
        for name in ("confidence", "nms_iou", "merge_iou"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.semantic_iou < 0:
            raise ConfigError("semantic_iou must be >= 0")
        if self.mixture not in ("none", "canonical", "natural", "custom"):
            raise ConfigError(f"mixture must be none, canonical, natural or custom, got {self.mixture!r}")
        unknown = sorted(set(self.mixture_ratios) - set(FAMILIES))
        if unknown:
            raise ConfigError(f"mixture_ratios: unknown families {unknown}")
        if self.n_options < 2 or self.n_options > 26:
            raise ConfigError("n_options must lie in [2, 26]")
        if self.samples_per_edge < 2:
            raise ConfigError("samples_per_edge must be >= 2")
        return self

    def to_doc(self) -> Dict[str, Any]:
        doc = dataclasses.asdict(self)
        doc["pitch_rings_deg"] = list(self.pitch_rings_deg)
        return doc

    @property
    def sha256(self) -> str:
        blob = json.dumps(self.to_doc(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


_FIELDS = {f.name: f for f in dataclasses.fields(PipelineConfig)}


def config_from_mapping(doc: Mapping[str, Any], base: Optional[PipelineConfig] = None) -> PipelineConfig:
    unknown = sorted(set(doc) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    values = (base or PipelineConfig()).to_doc()
    for key, value in doc.items():
        if value is None:
            values[key] = None
            continue
        kind = _FIELDS[key].type
        if kind == "bool" and not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false")
        if key == "pitch_rings_deg":
            value = tuple(float(v) for v in value)
        elif key == "mixture_ratios":
            if not isinstance(value, Mapping):
                raise ConfigError(f"{key}: expected a mapping of family to ratio")
            value = {str(k): float(v) for k, v in value.items()}
        elif kind in ("int", "Optional[int]"):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{key}: expected an integer")
        elif kind in ("float", "Optional[float]"):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{key}: expected a number")
            value = float(value)
        elif kind == "str" and not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string")
        values[key] = value
    values["pitch_rings_deg"] = tuple(values["pitch_rings_deg"])
    return PipelineConfig(**values).validate()


def load_config(path: Optional[str]) -> PipelineConfig:
    if not path:
        return PipelineConfig().validate()
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text) if p.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, Mapping):
        raise ConfigError("config document must be a mapping")
    return config_from_mapping(doc)
