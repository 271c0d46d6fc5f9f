"""Render trajectory plots and training curves from formnav's exported logs.

Consumes only the documented line-delimited JSON schemas (trajectory export
schema version 1 and the per-episode metrics log); never writes to its inputs.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

SUPPORTED_TRAJECTORY_SCHEMA = 1

# Color conventions for the trajectory plots: leader path in green, follower
# paths in yellow/orange tones, the leader goal as a red star, pedestrians as
# circles in a neutral blue.
LEGEND_COLORS = {
    "leader": "green",
    "goal": "red",
    "pedestrian": "steelblue",
}
FOLLOWER_COLORS = ("gold", "orange", "darkorange", "goldenrod")


class SchemaError(ValueError):
    """Input file does not match the supported export schema."""


@dataclass(frozen=True)
class PlotJob:
    input_paths: tuple[str, ...]
    output_path: str
    smoothing_window: int = 200
    kind: str = "trajectories"  # trajectories | training-curves

    def __post_init__(self):
        if self.smoothing_window < 1:
            raise ValueError("smoothing window must be >= 1")
        if self.kind not in ("trajectories", "training-curves"):
            raise ValueError(f"unknown plot kind {self.kind!r}")
        object.__setattr__(self, "input_paths", tuple(self.input_paths))


def read_jsonl(path: str) -> list[dict]:
    records = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def follower_color(index: int) -> str:
    return FOLLOWER_COLORS[index % len(FOLLOWER_COLORS)]


def moving_average(values, window: int) -> np.ndarray:
    """Trailing mean over up to ``window`` samples; window 1 is the raw series."""
    x = np.asarray(values, dtype=np.float64)
    if window <= 1 or x.size == 0:
        return x
    csum = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(1, x.size + 1)
    lo = np.maximum(idx - window, 0)
    return (csum[idx] - csum[lo]) / (idx - lo)


def _check_trajectory_schema(records: list[dict], path: str) -> None:
    if not records:
        raise SchemaError(f"{path}: no trajectory records")
    for rec in records:
        version = rec.get("schema_version")
        if version != SUPPORTED_TRAJECTORY_SCHEMA:
            raise SchemaError(
                f"{path}: schema version {version!r}, expected {SUPPORTED_TRAJECTORY_SCHEMA}"
            )


def plot_trajectories(job: PlotJob) -> list[str]:
    """One image per episode found in the export; returns the written paths."""
    if len(job.input_paths) != 1:
        raise ValueError("trajectory plots take exactly one export file")
    path = job.input_paths[0]
    records = read_jsonl(path)
    _check_trajectory_schema(records, path)

    episodes: dict[int, list[dict]] = {}
    for rec in records:
        episodes.setdefault(rec["episode"], []).append(rec)

    base, ext = os.path.splitext(job.output_path)
    ext = ext or ".png"
    written = []
    for ep_id, recs in sorted(episodes.items()):
        recs.sort(key=lambda r: r["t"])
        n_agents = len(recs[0]["agents"])
        kinds = [a["kind"] for a in recs[0]["agents"]]
        xs = np.array([[r["agents"][i]["x"] for i in range(n_agents)] for r in recs])
        ys = np.array([[r["agents"][i]["y"] for i in range(n_agents)] for r in recs])

        fig, ax = plt.subplots(figsize=(6, 6))
        follower_idx = 0
        for i, kind in enumerate(kinds):
            if kind == "leader":
                color, label, z = LEGEND_COLORS["leader"], "leader", 3
            elif kind == "follower":
                color, label, z = follower_color(follower_idx), f"follower {follower_idx}", 2
                follower_idx += 1
            else:
                color, label, z = LEGEND_COLORS["pedestrian"], None, 1
            ax.plot(xs[:, i], ys[:, i], color=color, label=label, zorder=z, lw=1.5)
            radius = recs[-1]["agents"][i]["radius"]
            ax.add_patch(
                plt.Circle(
                    (xs[-1, i], ys[-1, i]), radius, color=color, alpha=0.6, zorder=z
                )
            )
        gx, gy = recs[0]["goal"]
        ax.plot(
            [gx], [gy], marker="*", color=LEGEND_COLORS["goal"], markersize=16,
            linestyle="none", label="goal", zorder=4,
        )
        ax.set_aspect("equal")
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        ax.set_title(f"episode {ep_id} ({recs[-1]['termination']})")
        ax.legend(loc="upper right", fontsize=8)
        out = job.output_path if len(episodes) == 1 else f"{base}_ep{ep_id}{ext}"
        fig.savefig(out, dpi=120, bbox_inches="tight")
        plt.close(fig)
        written.append(out)
    return written


def plot_training_curves(job: PlotJob) -> str:
    """Moving-average success / reward / separation curves, one line per log."""
    if not job.input_paths:
        raise ValueError("training-curve plots need at least one metrics log")
    runs = []
    for path in job.input_paths:
        records = read_jsonl(path)
        if not records:
            raise SchemaError(f"{path}: no metrics records")
        records.sort(key=lambda r: r["episode"])
        runs.append((os.path.basename(path), records))

    fig, axes = plt.subplots(1, 3, figsize=(15, 4))
    w = job.smoothing_window
    for name, records in runs:
        episodes = [r["episode"] for r in records]
        success = moving_average([float(r["success"]) for r in records], w)
        reward = moving_average([float(np.sum(r["returns"])) for r in records], w)
        min_sep = moving_average([r["min_separation"] for r in records], w)
        axes[0].plot(episodes, success, label=name)
        axes[1].plot(episodes, reward, label=name)
        axes[2].plot(episodes, min_sep, label=name)
    axes[0].set_ylabel("success rate")
    axes[1].set_ylabel("total reward")
    axes[2].set_ylabel("min distance to collision [m]")
    for ax in axes:
        ax.set_xlabel("episode")
        ax.legend(fontsize=8)
        ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(job.output_path, dpi=120)
    plt.close(fig)
    return job.output_path
