"""Scoring: multiple-choice accuracy, BFOV mIoU, direction hits, VLN metrics
and efficiency accounting.

Parsers never raise; anything they cannot read becomes an invalid
prediction, which every scorer counts as wrong (zero IoU, no hit). A
missing prediction is treated exactly like an invalid one.
"""

from __future__ import annotations

import math
import re
import string
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .sphere_geom import (
    AngularRect,
    Bfov,
    SphericalDirection,
    bfov_iou,
    parse_bfov_text,
    parse_direction_text,
    wrap_angle,
)
from .task_gen import TaskInstance

SUCCESS_RADIUS = 3.0
DEFAULT_YAW_TOL_DEG = 15.0
DEFAULT_PITCH_TOL_DEG = 15.0


class EvalError(ValueError):
    pass


@dataclass
class Prediction:
    task_id: str
    raw_text: Optional[str]
    payload: Any = None  # letter | Bfov | SphericalDirection | None

    @property
    def valid(self) -> bool:
        return self.payload is not None


# ---------------------------------------------------------------------------
# Parsing

_WRAPPED = re.compile(r"[\(\[\{<\"'*]*([A-Za-z])[\)\]\}>\"'*]*[.:,;!?]*$")


def parse_choice(raw: Optional[str], n_options: int = 4) -> Optional[str]:
    """First standalone option letter, or None.

    A token is standalone when, after stripping brackets, quotes and trailing
    punctuation, it is a single letter. "A" and "I" inside running text would
    be ambiguous with English words, so lowercase "a"/"i" only count when the
    whole response is that letter or it is wrapped, e.g. "(a)". Two distinct
    candidate letters make the response invalid.
    """
    if raw is None or not (2 <= n_options <= 26):
        return None
    valid = set(string.ascii_uppercase[:n_options])
    tokens = raw.strip().split()
    found: List[str] = []
    for tok in tokens:
        m = _WRAPPED.fullmatch(tok)
        if not m:
            continue
        letter = m.group(1)
        wrapped = tok != letter and tok[0] in "([{<\"'*"
        if letter.islower() and len(tokens) > 1 and not wrapped:
            continue
        if letter.upper() == "A" and letter.isupper() and len(tokens) > 1 and not wrapped and _looks_like_article(tok, tokens):
            continue
        if letter.upper() in valid:
            found.append(letter.upper())
    distinct = sorted(set(found))
    return distinct[0] if len(distinct) == 1 else None


def _looks_like_article(tok: str, tokens: Sequence[str]) -> bool:
    # "A chair is ..." at sentence start: an article, not an answer
    i = tokens.index(tok)
    return tok == "A" and i + 1 < len(tokens) and tokens[i + 1][:1].islower()


def parse_bfov(raw: Optional[str]) -> Optional[Bfov]:
    if raw is None:
        return None
    return parse_bfov_text(raw)


def parse_direction(raw: Optional[str]) -> Optional[SphericalDirection]:
    if raw is None:
        return None
    return parse_direction_text(raw)


def parse_prediction(task: TaskInstance, raw: Optional[str]) -> Prediction:
    if task.answer_kind == "choice":
        payload = parse_choice(raw, len(task.options))
    elif task.answer_kind == "bfov":
        payload = parse_bfov(raw)
    elif task.answer_kind == "direction":
        payload = parse_direction(raw)
    else:
        payload = raw.strip() if raw and raw.strip() else None
    return Prediction(task.id, raw, payload)


def index_predictions(records: Sequence[Mapping[str, Any]]) -> Dict[str, Optional[str]]:
    out: Dict[str, Optional[str]] = {}
    for rec in records:
        tid = rec["task_id"]
        if tid in out:
            raise EvalError(f"duplicate prediction for task {tid!r}")
        out[tid] = rec.get("raw_text")
    return out


# ---------------------------------------------------------------------------
# Benchmark scoring


def score_mc(tasks: Sequence[TaskInstance], preds: Mapping[str, Optional[str]]) -> Dict[str, Any]:
    """Accuracy overall and per operator; invalid and missing count as wrong."""
    per: Dict[str, List[int]] = {}
    invalid = 0
    for t in tasks:
        if t.answer_kind != "choice":
            continue
        letter = parse_choice(preds.get(t.id), len(t.options))
        invalid += letter is None
        per.setdefault(t.operator, []).append(int(letter == t.answer))
    hits = [h for v in per.values() for h in v]
    return {
        "accuracy": float(np.mean(hits)) if hits else 0.0,
        "count": len(hits),
        "invalid": invalid,
        "per_operator": {k: float(np.mean(v)) for k, v in sorted(per.items())},
    }


def _truth_bfov(task: TaskInstance) -> Bfov:
    b = parse_bfov_text(task.answer)
    if b is None:
        raise EvalError(f"task {task.id}: stored answer is not a BFOV")
    return b


def score_bfov(tasks: Sequence[TaskInstance], preds: Mapping[str, Optional[str]]) -> Dict[str, Any]:
    ious = []
    invalid = 0
    for t in tasks:
        if t.answer_kind != "bfov":
            continue
        pred = parse_bfov(preds.get(t.id))
        if pred is None:
            invalid += 1
            ious.append(0.0)
        else:
            ious.append(bfov_iou(pred, _truth_bfov(t)))
    return {"miou": float(np.mean(ious)) if ious else 0.0, "count": len(ious), "invalid": invalid}


def score_directions(tasks: Sequence[TaskInstance], preds: Mapping[str, Optional[str]],
                     yaw_tol_deg: float = DEFAULT_YAW_TOL_DEG, pitch_tol_deg: float = DEFAULT_PITCH_TOL_DEG) -> Dict[str, Any]:
    """Angular-center items scored as tolerance hits."""
    items = [t for t in tasks if t.answer_kind == "direction"]
    dirs = [parse_direction(preds.get(t.id)) for t in items]
    targets = [DirectionTarget(t.id, "center", parse_direction_text(t.answer),
                               math.radians(yaw_tol_deg), math.radians(pitch_tol_deg)) for t in items]
    return score_direction_hit(dirs, targets)


def score_bench(tasks: Sequence[TaskInstance], preds: Mapping[str, Optional[str]]) -> Dict[str, Any]:
    known = {t.id for t in tasks}
    stray = sorted(set(preds) - known)
    return {
        "mc": score_mc(tasks, preds),
        "bfov": score_bfov(tasks, preds),
        "direction": score_directions(tasks, preds),
        "text_items_unscored": sum(t.answer_kind == "text" for t in tasks),
        "unmatched_predictions": stray,
    }


# ---------------------------------------------------------------------------
# Direction hits


@dataclass(frozen=True)
class DirectionTarget:
    id: str
    kind: str
    center: Optional[SphericalDirection] = None
    yaw_tol: float = math.radians(DEFAULT_YAW_TOL_DEG)
    pitch_tol: float = math.radians(DEFAULT_PITCH_TOL_DEG)
    region: Optional[Bfov] = None

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "DirectionTarget":
        if "region" in doc:
            return cls(doc["id"], doc.get("kind", ""), region=Bfov.from_degrees(*doc["region"]))
        return cls(doc["id"], doc.get("kind", ""), SphericalDirection.from_degrees(doc["yaw"], doc["pitch"]),
                   math.radians(doc.get("yaw_tol", DEFAULT_YAW_TOL_DEG)),
                   math.radians(doc.get("pitch_tol", DEFAULT_PITCH_TOL_DEG)))


def _hit(pred: Optional[SphericalDirection], target: DirectionTarget) -> Tuple[bool, bool, bool]:
    """(hit, yaw hit, pitch hit)."""
    if pred is None:
        return False, False, False
    if target.region is not None:
        rect: AngularRect = target.region.rect()
        yaw_ok = bool(np.mod(pred.yaw - rect.yaw_start, 2 * math.pi) <= rect.yaw_width)
        pitch_ok = rect.pitch_lo <= pred.pitch <= rect.pitch_hi
    else:
        yaw_ok = abs(wrap_angle(pred.yaw - target.center.yaw)) <= target.yaw_tol + 1e-12
        pitch_ok = abs(pred.pitch - target.center.pitch) <= target.pitch_tol + 1e-12
    return yaw_ok and pitch_ok, yaw_ok, pitch_ok


def score_direction_hit(preds: Sequence[Optional[SphericalDirection]], targets: Sequence[DirectionTarget]) -> Dict[str, Any]:
    if len(preds) != len(targets):
        raise EvalError("predictions and targets differ in length")
    rows = [_hit(p, t) for p, t in zip(preds, targets)]
    out: Dict[str, Any] = {"count": len(rows), "invalid": sum(p is None for p in preds)}
    for name, k in (("success", 0), ("yaw_acc", 1), ("pitch_acc", 2)):
        out[name] = float(np.mean([r[k] for r in rows])) if rows else 0.0
    kinds = sorted({t.kind for t in targets if t.kind})
    out["per_kind"] = {
        kind: float(np.mean([r[0] for r, t in zip(rows, targets) if t.kind == kind])) for kind in kinds
    }
    return out


# ---------------------------------------------------------------------------
# Navigation


@dataclass
class Episode:
    trajectory: np.ndarray
    goal: np.ndarray
    shortest_path_length: float
    executed_path_length: Optional[float] = None
    id: str = ""

    def __post_init__(self) -> None:
        self.trajectory = np.atleast_2d(np.asarray(self.trajectory, dtype=np.float64))
        self.goal = np.asarray(self.goal, dtype=np.float64)
        if self.trajectory.size == 0:
            raise EvalError(f"episode {self.id}: empty trajectory")
        if not self.shortest_path_length > 0:
            raise EvalError(f"episode {self.id}: shortest path length must be > 0")
        if self.executed_path_length is None:
            steps = np.diff(self.trajectory, axis=0)
            self.executed_path_length = float(np.linalg.norm(steps, axis=1).sum())
        if self.executed_path_length < 0:
            raise EvalError(f"episode {self.id}: negative executed path length")

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "Episode":
        return cls(doc["trajectory"], doc["goal"], float(doc["shortest_path_length"]),
                   doc.get("executed_path_length"), str(doc.get("id", "")))


def _euclid(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b))


def score_vln(episodes: Sequence[Episode], radius: float = SUCCESS_RADIUS,
              distance: Callable[[np.ndarray, np.ndarray], float] = _euclid) -> Dict[str, float]:
    if not episodes:
        raise EvalError("no episodes")
    ne, sr, osr, spl = [], [], [], []
    for ep in episodes:
        d_final = distance(ep.trajectory[-1], ep.goal)
        d_min = min(distance(p, ep.goal) for p in ep.trajectory)
        s = float(d_final <= radius)
        ne.append(d_final)
        sr.append(s)
        osr.append(float(d_min <= radius))
        spl.append(s * ep.shortest_path_length / max(ep.executed_path_length, ep.shortest_path_length))
    return {"NE": float(np.mean(ne)), "OSR": float(np.mean(osr)), "SR": float(np.mean(sr)),
            "SPL": float(np.mean(spl)), "count": len(episodes)}


# ---------------------------------------------------------------------------
# Efficiency

_TOKENS = re.compile(r"^\s*([0-9]*\.?[0-9]+)\s*([kKmM]?)\s*$")


def parse_tokens(value) -> float:
    """Token counts as numbers or shorthand strings ("16.5k", "1.2M")."""
    if isinstance(value, (int, float)):
        return float(value)
    m = _TOKENS.match(str(value))
    if not m:
        raise EvalError(f"cannot read token count {value!r}")
    scale = {"": 1.0, "k": 1e3, "m": 1e6}[m.group(2).lower()]
    return float(m.group(1)) * scale


def efficiency_report(rows: Sequence[Mapping[str, Any]], baseline: str) -> List[Dict[str, Any]]:
    table = []
    for r in rows:
        if "total_tokens" in r:
            tokens = parse_tokens(r["total_tokens"])
        elif "tokens_per_call" in r:
            tokens = float(r["steps"]) * parse_tokens(r["tokens_per_call"])
        else:
            raise EvalError(f"row {r.get('name')!r}: needs total_tokens or tokens_per_call")
        table.append({"name": r["name"], "steps": float(r.get("steps", 1.0)), "tokens": tokens})
    base = next((t for t in table if t["name"] == baseline), None)
    if base is None:
        raise EvalError(f"baseline row {baseline!r} not found")
    for t in table:
        t["relative_cost"] = round(t["tokens"] / base["tokens"], 2)
        t["relative_cost_text"] = f"{t['relative_cost']:.2f}×"
    return table


# ---------------------------------------------------------------------------
# Chance interval


def binomial_interval(n: int, p: float, level: float = 0.99) -> Tuple[float, float]:
    """Central interval for the success fraction of Binomial(n, p)."""
    lo, hi = stats.binom.interval(level, n, p)
    return lo / n, hi / n


# ---------------------------------------------------------------------------
# Text rendering


def format_table(headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    cells = [[str(h) for h in headers]] + [[_cell(v) for v in r] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _cell(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)
