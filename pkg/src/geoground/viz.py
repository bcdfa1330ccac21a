"""Report rendering: delimited summaries plus matplotlib figures.

The CLI report paths write a CSV next to one PNG per view: generated
instances get a drawing of the realized configuration and an aggregate
figure; grounding runs get a per-node CSV, a status breakdown, and a depth
histogram.  Everything renders through the Agg backend so it works headless.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import Circle as CirclePatch

__all__ = [
    "draw_instance",
    "write_instances_csv",
    "draw_instances_summary",
    "write_ground_csv",
    "draw_ground_figures",
    "render_instance_report",
    "render_ground_report",
]


def _point_entries(coords: Dict[str, dict]) -> Dict[str, Sequence[float]]:
    return {
        name: entry["coords"]
        for name, entry in coords.items()
        if entry["kind"] == "point" and len(entry["coords"]) == 2
    }


def draw_instance(obj: dict, path: Path) -> None:
    """Plot one instance's 2D realization: points, lines, circles."""
    coords = obj["realization"]["coords"]
    points = _point_entries(coords)
    fig, ax = plt.subplots(figsize=(5, 5))
    xs = [p[0] for p in points.values()] or [0.0, 1.0]
    ys = [p[1] for p in points.values()] or [0.0, 1.0]
    pad = 0.25 * max(max(xs) - min(xs), max(ys) - min(ys), 1e-6)
    lo_x, hi_x = min(xs) - pad, max(xs) + pad
    lo_y, hi_y = min(ys) - pad, max(ys) + pad

    for name, entry in coords.items():
        if entry["kind"] == "line" and len(entry["point"]) == 2:
            px, py = entry["point"]
            dx, dy = entry["direction"]
            span = 2.0 * max(hi_x - lo_x, hi_y - lo_y)
            ax.plot(
                [px - span * dx, px + span * dx],
                [py - span * dy, py + span * dy],
                color="0.6",
                lw=1.0,
                zorder=1,
            )
            ax.annotate(name, (px, py), color="0.4", fontsize=8)
        elif entry["kind"] == "circle" and len(entry["center"]) == 2:
            ax.add_patch(
                CirclePatch(entry["center"], entry["radius"], fill=False, color="tab:blue", lw=1.0)
            )
            ax.annotate(name, entry["center"], color="tab:blue", fontsize=8)

    for name, (x, y) in points.items():
        ax.plot([x], [y], "o", color="tab:red", ms=4, zorder=3)
        ax.annotate(name, (x, y), textcoords="offset points", xytext=(4, 4), fontsize=9)

    ax.set_xlim(lo_x, hi_x)
    ax.set_ylim(lo_y, hi_y)
    ax.set_aspect("equal")
    ax.set_title(f"seed {obj['seed']}: {obj['goal']}", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_instances_csv(objs: List[dict], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["seed", "steps", "objects", "premises", "goal", "goal_predicate",
             "trace_edges", "attempts", "coord_resamples"]
        )
        for obj in objs:
            steps = [s for s in obj["dsl"].splitlines() if s.strip()]
            writer.writerow(
                [
                    obj["seed"],
                    len(steps),
                    len(obj["realization"]["coords"]),
                    len(obj["premises"]),
                    obj["goal"],
                    obj["goal"].split("(", 1)[0],
                    len(obj["trace"]["edges"]),
                    obj["meta"].get("attempts", ""),
                    obj["meta"].get("coord_resamples", ""),
                ]
            )


def draw_instances_summary(objs: List[dict], path: Path) -> None:
    """Goal-predicate counts and step-count histogram, side by side."""
    preds: Dict[str, int] = {}
    steps: List[int] = []
    for obj in objs:
        pred = obj["goal"].split("(", 1)[0]
        preds[pred] = preds.get(pred, 0) + 1
        steps.append(len([s for s in obj["dsl"].splitlines() if s.strip()]))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    names = sorted(preds)
    ax1.bar(range(len(names)), [preds[n] for n in names], color="tab:blue")
    ax1.set_xticks(range(len(names)))
    ax1.set_xticklabels(names, rotation=45, ha="right")
    ax1.set_title("goal predicates")
    ax1.set_ylabel("instances")
    if steps:
        ax2.hist(steps, bins=range(min(steps), max(steps) + 2), color="tab:green", rwidth=0.9)
    ax2.set_title("construction length")
    ax2.set_xlabel("steps")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_instance_report(jsonl_path: Path, out_dir: Path, max_drawings: int = 8) -> List[Path]:
    """CSV plus figures for a JSONL instance file; returns written paths."""
    out_dir.mkdir(parents=True, exist_ok=True)
    objs = [json.loads(line) for line in Path(jsonl_path).read_text().splitlines() if line.strip()]
    written: List[Path] = []
    csv_path = out_dir / "instances.csv"
    write_instances_csv(objs, csv_path)
    written.append(csv_path)
    if objs:
        summary = out_dir / "summary.png"
        draw_instances_summary(objs, summary)
        written.append(summary)
    for obj in objs[:max_drawings]:
        if obj["realization"]["space_dim"] != 2:
            continue
        fig_path = out_dir / f"instance_{obj['seed']}.png"
        draw_instance(obj, fig_path)
        written.append(fig_path)
    return written


# ---------------------------------------------------------------------------
# grounding-run reports
# ---------------------------------------------------------------------------

def write_ground_csv(report: dict, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "parent", "depth", "status", "concept", "detail"])
        for node in report["nodes"]:
            writer.writerow(
                [node["index"], node["parent"] if node["parent"] is not None else "",
                 node["depth"], node["status"], node["concept"], node["detail"]]
            )


def _tree_positions(report: dict) -> Dict[int, tuple]:
    """Simple tiered layout: x by in-order leaf position, y by depth."""
    children: Dict[Optional[int], List[int]] = {}
    for node in report["nodes"]:
        children.setdefault(node["parent"], []).append(node["index"])
    positions: Dict[int, tuple] = {}
    next_x = [0.0]

    def place(idx: int, depth: int) -> float:
        kids = children.get(idx, [])
        if not kids:
            x = next_x[0]
            next_x[0] += 1.0
        else:
            x = sum(place(k, depth + 1) for k in kids) / len(kids)
        positions[idx] = (x, -depth)
        return x

    for root in children.get(None, []):
        place(root, 0)
    return positions


def draw_ground_figures(report: dict, out_dir: Path) -> List[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []

    statuses: Dict[str, int] = {}
    for node in report["nodes"]:
        statuses[node["status"]] = statuses.get(node["status"], 0) + 1
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    names = sorted(statuses)
    colors = {"dim": "tab:blue", "axiom": "tab:orange", "lemma": "tab:green", "open": "tab:red"}
    ax1.bar(range(len(names)), [statuses[n] for n in names],
            color=[colors.get(n, "0.5") for n in names])
    ax1.set_xticks(range(len(names)))
    ax1.set_xticklabels(names)
    ax1.set_title(f"{report['scene']}: node statuses")
    depths = [node["depth"] for node in report["nodes"]]
    ax2.hist(depths, bins=range(1, max(depths) + 2), color="0.6", rwidth=0.9)
    ax2.set_title("node depths")
    ax2.set_xlabel("depth")
    fig.tight_layout()
    status_path = out_dir / "ground_status.png"
    fig.savefig(status_path, dpi=120)
    plt.close(fig)
    written.append(status_path)

    positions = _tree_positions(report)
    fig, ax = plt.subplots(figsize=(10, 6))
    by_index = {node["index"]: node for node in report["nodes"]}
    for node in report["nodes"]:
        if node["parent"] is not None and node["parent"] in positions:
            x1, y1 = positions[node["parent"]]
            x2, y2 = positions[node["index"]]
            ax.plot([x1, x2], [y1, y2], color="0.7", lw=0.8, zorder=1)
    for idx, (x, y) in positions.items():
        node = by_index[idx]
        ax.plot([x], [y], "o", color=colors.get(node["status"], "0.5"), ms=8, zorder=2)
        label = node["concept"] if len(node["concept"]) <= 24 else node["concept"][:21] + "..."
        ax.annotate(label, (x, y), textcoords="offset points", xytext=(0, 7),
                    fontsize=7, ha="center")
    ax.set_axis_off()
    ax.set_title(f"grounding graph: {report['scene']}")
    fig.tight_layout()
    tree_path = out_dir / "ground_tree.png"
    fig.savefig(tree_path, dpi=120)
    plt.close(fig)
    written.append(tree_path)
    return written


def render_ground_report(report: dict, out_dir: Path) -> List[Path]:
    """CSV plus figures for a grounding run report; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "ground_nodes.csv"
    write_ground_csv(report, csv_path)
    return [csv_path] + draw_ground_figures(report, out_dir)
