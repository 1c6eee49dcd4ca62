"""Reference answerers: a graph-backed oracle and a seeded uniform guesser."""

from __future__ import annotations

import random
import string
from typing import Dict, List, Mapping, Sequence

from .metadata_graph import MetadataGraph
from .sphere_geom import format_number
from .task_gen import TaskInstance, recompute_answer


def oracle_answer(task: TaskInstance, graph: MetadataGraph) -> str:
    truth = recompute_answer(task, graph)
    if task.answer_kind == "choice":
        for i, opt in enumerate(task.options):
            if opt == truth:
                return string.ascii_uppercase[i]
        return ""
    return truth


def random_answer(task: TaskInstance, rng: random.Random) -> str:
    if task.answer_kind == "choice":
        return string.ascii_uppercase[rng.randrange(len(task.options))]
    if task.answer_kind == "bfov":
        vals = (rng.uniform(-180, 180), rng.uniform(-90, 90), rng.uniform(1, 180), rng.uniform(1, 180))
        return "[" + ", ".join(format_number(v, 2) for v in vals) + "]"
    if task.answer_kind == "direction":
        return f"[{format_number(rng.uniform(-180, 180), 2)}, {format_number(rng.uniform(-90, 90), 2)}]"
    return ""


def answer_all(tasks: Sequence[TaskInstance], graphs: Mapping[str, MetadataGraph], mode: str,
               seed: int = 0) -> List[Dict[str, str]]:
    """Prediction records in task order."""
    rng = random.Random(f"{seed}|random-answerer")
    out = []
    for t in tasks:
        if mode == "oracle":
            graph = graphs.get(t.scene)
            if graph is None:
                raise KeyError(f"no graph for panorama {t.scene!r} (task {t.id})")
            raw = oracle_answer(t, graph)
        elif mode == "random":
            raw = random_answer(t, rng)
        else:
            raise ValueError(f"unknown answerer {mode!r}")
        out.append({"task_id": t.id, "raw_text": raw})
    return out
