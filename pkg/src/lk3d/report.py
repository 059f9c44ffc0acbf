"""Matplotlib figure rendering for the CLI report paths.

Figures are written next to the delimited outputs (PNG, Agg backend, no
display required).  Each helper takes already-computed pipeline results,
so rendering stays out of the timed paths.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_keypoint_figure(scan, keypoints, path) -> None:
    """Top-down view: scan points in gray, aggregation keypoints in red."""
    fig, ax = plt.subplots(figsize=(7, 7))
    step = max(len(scan) // 60000, 1)  # cap draw cost on large scans
    ax.scatter(scan.xyz[::step, 0], scan.xyz[::step, 1], s=0.5, c="0.7", linewidths=0)
    if keypoints:
        kx = [kp.centroid[0] for kp in keypoints]
        ky = [kp.centroid[1] for kp in keypoints]
        ax.scatter(kx, ky, s=18, c="crimson", marker="x", label=f"{len(keypoints)} keypoints")
        ax.legend(loc="upper right")
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("aggregation keypoints")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def save_match_figure(keypoints_a, keypoints_b, pairs, path) -> None:
    """Both keypoint sets side by side with match lines."""
    fig, ax = plt.subplots(figsize=(9, 6))
    ax_a = np.array([kp.centroid[:2] for kp in keypoints_a]).reshape(-1, 2)
    ax_b = np.array([kp.centroid[:2] for kp in keypoints_b]).reshape(-1, 2)
    shift = 0.0
    if len(ax_a) and len(ax_b):
        shift = float(ax_a[:, 0].max() - ax_b[:, 0].min()) + 10.0
    ax.scatter(ax_a[:, 0], ax_a[:, 1], s=12, c="tab:blue", label="set A")
    ax.scatter(ax_b[:, 0] + shift, ax_b[:, 1], s=12, c="tab:orange", label="set B")
    for p in pairs:
        xa, ya = ax_a[p.index_a]
        xb, yb = ax_b[p.index_b]
        ax.plot([xa, xb + shift], [ya, yb], lw=0.5, c="tab:green", alpha=0.6)
    ax.set_aspect("equal")
    ax.legend(loc="upper right")
    ax.set_title(f"{len(pairs)} descriptor matches")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def save_residual_figure(residuals, path) -> None:
    """Histogram of correspondence residuals after the pose solve."""
    fig, ax = plt.subplots(figsize=(6, 4))
    res = np.asarray(residuals, dtype=np.float64)
    if res.size:
        ax.hist(res, bins=min(40, max(5, res.size // 5)), color="tab:blue")
    ax.set_xlabel("residual [m]")
    ax.set_ylabel("count")
    ax.set_title("registration residuals")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def save_latency_figure(report, path) -> None:
    """Bar chart of per-stage latency statistics with the realtime budget line."""
    fig, ax = plt.subplots(figsize=(6, 4))
    stages = list(report.stages.keys())
    x = np.arange(len(stages))
    for off, (attr, color) in enumerate(
            [("mean_ms", "tab:blue"), ("median_ms", "tab:orange"), ("p95_ms", "tab:red")]):
        vals = [getattr(report.stages[s], attr) for s in stages]
        ax.bar(x + (off - 1) * 0.25, vals, width=0.25, color=color, label=attr[:-3])
    ax.axhline(report.budget_ms, ls="--", c="k", lw=1, label="budget")
    ax.set_xticks(x, stages)
    ax.set_ylabel("ms")
    ax.set_title(f"latency, {report.points} points")
    ax.legend()
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
