"""Figure rendering for run artifacts: files only, no interactive backends."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .core import Demonstration, RolloutRecord


def plot_history(history, path) -> None:
    """Per-evaluation fitness with the running best overlaid."""
    rows = list(history)
    indices = [row[0] for row in rows]
    fitness = [row[1] for row in rows]
    best = [row[2] for row in rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(indices, fitness, ".", markersize=3, alpha=0.4, label="evaluation")
    ax.plot(indices, best, drawstyle="steps-post", linewidth=1.8, label="best so far")
    ax.set_xlabel("evaluation")
    ax.set_ylabel("cumulative reward")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_tracking(demo: Demonstration, rollout: RolloutRecord, path) -> None:
    """Demonstrated vs realized joint angles, one panel per joint."""
    joints = demo.joint_count
    fig, axes = plt.subplots(joints, 1, figsize=(7, 2.4 * joints), squeeze=False)
    steps = np.arange(rollout.states.shape[0])
    demo_steps = np.arange(demo.states.shape[0])
    for j in range(joints):
        ax = axes[j, 0]
        ax.plot(demo_steps, demo.states[:, j], "--", linewidth=1.5, label="demonstration")
        ax.plot(steps, rollout.states[:, j], linewidth=1.2, label="controller")
        ax.set_ylabel(f"joint {j} angle (rad)")
        if j == 0:
            ax.legend(loc="best")
    axes[-1, 0].set_xlabel("step")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_compare(rows, path) -> None:
    """Scaled-score bars for the agents of a comparison run."""
    agents = [row[0] for row in rows]
    scores = [row[2] for row in rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    bars = ax.bar(agents, scores)
    for bar, score in zip(bars, scores):
        ax.annotate(
            f"{score:.3f}",
            (bar.get_x() + bar.get_width() / 2, bar.get_height()),
            ha="center",
            va="bottom",
            fontsize=9,
        )
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.axhline(1.0, color="gray", linewidth=0.8, linestyle=":")
    ax.set_ylabel("scaled score")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
