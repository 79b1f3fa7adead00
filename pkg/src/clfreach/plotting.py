"""Trajectory figures rendered to SVG files.

Output is deterministic: element ids are salted with a fixed string and the
SVG date metadata is stripped, so identical inputs produce identical bytes.
Each trajectory path carries a ``traj-NNN`` group id.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "clfreach"

import matplotlib.pyplot as plt
import numpy as np


def tool_points(chain, records) -> np.ndarray:
    """(n, 3) tool translations recomputed from the logged joint angles."""
    return np.array([chain.forward(r.theta, check=False).translation
                     for r in records])


def trajectory_figure(logs: list, chains: list):
    """Top-view tool paths plus the selected-value trace for each log."""
    fig, (ax_xy, ax_v) = plt.subplots(1, 2, figsize=(11, 4.5))
    for i, (records, chain) in enumerate(zip(logs, chains)):
        pts = tool_points(chain, records)
        line, = ax_xy.plot(pts[:, 0], pts[:, 1], lw=1.0)
        line.set_gid(f"traj-{i:03d}")
        ax_xy.plot(pts[0, 0], pts[0, 1], marker="o", ms=3,
                   color=line.get_color())
        t = [r.t for r in records if r.v_hat_min is not None]
        v = [r.v_hat_min for r in records if r.v_hat_min is not None]
        if t:
            vline, = ax_v.plot(t, v, lw=1.0, color=line.get_color())
            vline.set_gid(f"vtrace-{i:03d}")
    ax_xy.set_xlabel("x [m]")
    ax_xy.set_ylabel("y [m]")
    ax_xy.set_title("tool path (top view)")
    ax_xy.set_aspect("equal", adjustable="datalim")
    ax_v.set_xlabel("t [s]")
    ax_v.set_ylabel("selected value")
    ax_v.set_title("value vs time")
    ax_v.set_yscale("log")
    fig.tight_layout()
    return fig


def save_svg(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
