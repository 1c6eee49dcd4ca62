"""Report figures (PNG, Agg backend, no embedded metadata)."""

from __future__ import annotations

import os
from typing import Dict, List, Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_PNG_META = {"Software": None}


def _save(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_PNG_META)
    plt.close(fig)
    return path


def bar_chart(values: Mapping[str, float], path: str, title: str, ylabel: str, ylim=(0.0, 1.0)) -> str:
    names = list(values)
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(names) + 2), 3.2))
    ax.bar(range(len(names)), [values[n] for n in names], color="#4c72b0")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if ylim is not None:
        ax.set_ylim(*ylim)
    return _save(fig, path)


def write_report_figures(mode: str, report: Dict, out_dir: str) -> List[str]:
    """Figures for one eval report; returns the written paths in order."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    if mode == "bench":
        per_op = report["mc"]["per_operator"]
        if per_op:
            paths.append(bar_chart(per_op, os.path.join(out_dir, "bench_accuracy.png"),
                                   "Multiple-choice accuracy by operator", "accuracy"))
    elif mode == "hstar":
        rates = {"success": report["success"], "yaw": report["yaw_acc"], "pitch": report["pitch_acc"]}
        rates.update({f"{k} success": v for k, v in report["per_kind"].items()})
        paths.append(bar_chart(rates, os.path.join(out_dir, "hstar_hits.png"), "Direction hit rates", "rate"))
    elif mode == "vln":
        rates = {k: report[k] for k in ("OSR", "SR", "SPL")}
        paths.append(bar_chart(rates, os.path.join(out_dir, "vln_metrics.png"), "Navigation metrics", "rate"))
    elif mode == "efficiency":
        costs = {r["name"]: r["relative_cost"] for r in report["rows"]}
        top = max(costs.values()) * 1.1 if costs else 1.0
        paths.append(bar_chart(costs, os.path.join(out_dir, "efficiency_cost.png"), "Relative inference cost",
                               "relative cost", ylim=(0.0, top)))
    return paths
