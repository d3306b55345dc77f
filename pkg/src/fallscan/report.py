"""Matplotlib report figures written next to the delimited run outputs.

These are analyst-facing summaries (survivor curve, magnitude histogram,
quiver view); the canonical overlay/diff rasters come from visualize.py.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .image import ImageGray
from .motion import MotionField, ThresholdSweepResult


def save_sweep_curve(sweep: ThresholdSweepResult, path: str | Path) -> None:
    ts = [e.ts for e in sweep.entries]
    counts = [e.surviving_count for e in sweep.entries]
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.step(ts, counts, where="post", color="tab:red")
    ax.set_xlabel("cutoff threshold (px)")
    ax.set_ylabel("surviving features")
    ax.set_title("Survivors vs cutoff threshold")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_magnitude_histogram(field: MotionField, ts: float, path: str | Path) -> None:
    mags = [v.magnitude for v in field.vectors]
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    if mags:
        ax.hist(mags, bins=40, color="tab:gray")
    ax.axvline(ts, color="tab:red", linestyle="--", label=f"cutoff {ts:g} px")
    ax.set_xlabel("residual magnitude (px)")
    ax.set_ylabel("features")
    ax.set_title("Residual magnitudes after stabilization")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_quiver(base: ImageGray, field: MotionField, scale: float, path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(7.0, 7.0 * base.height / max(base.width, 1)))
    ax.imshow(base.pixels, cmap="gray", vmin=0.0, vmax=1.0)
    if len(field) > 0:
        xs = np.array([v.origin[0] for v in field.vectors])
        ys = np.array([v.origin[1] for v in field.vectors])
        us = np.array([v.residual_delta[0] for v in field.vectors]) * scale
        vs = np.array([v.residual_delta[1] for v in field.vectors]) * scale
        ax.quiver(xs, ys, us, vs, angles="xy", scale_units="xy", scale=1.0, color="red", width=0.003)
    ax.set_axis_off()
    fig.tight_layout(pad=0.1)
    fig.savefig(path, dpi=120)
    plt.close(fig)
