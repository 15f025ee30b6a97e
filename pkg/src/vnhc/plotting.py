"""Figures for a simulated trajectory.

Works from the column dictionary produced by :func:`vnhc.runner.read_csv`,
so it can be pointed at any trajectory CSV after the fact.
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

PANEL_SIZE = (4.0, 3.0)


def wrap_angle(x):
    """Wrap to ``(-pi, pi]``."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2 * np.pi)


def _count(cols: Dict[str, np.ndarray], prefix: str) -> int:
    k = 0
    while f"{prefix}{k + 1}" in cols:
        k += 1
    return k


def _style(ax, xlabel, ylabel, title):
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=10)
    ax.grid(True, alpha=0.3)


def plot_trajectory(cols: Dict[str, np.ndarray], out_dir, prefix: str = "run",
                    wrap: bool = False, fmt: str = "png") -> List[Path]:
    """Write angles, phase portraits, energy, control and constraint panels.

    Returns the written paths: one combined figure plus one file per panel.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t = cols["t"]
    n, m = _count(cols, "q"), _count(cols, "u")
    q = [wrap_angle(cols[f"q{i + 1}"]) if wrap else cols[f"q{i + 1}"] for i in range(n)]
    dq = [cols[f"dq{i + 1}"] for i in range(n)]

    def angles(ax):
        for i in range(n):
            ax.plot(t, q[i], label=f"$q_{i + 1}$")
        ax.legend(fontsize=8)
        _style(ax, "t [s]", "angle [rad]", "angles")

    def phase(i):
        def draw(ax):
            ax.plot(q[i], dq[i], lw=1)
            ax.plot(q[i][:1], dq[i][:1], "o", ms=4)
            _style(ax, f"$q_{i + 1}$", rf"$\dot q_{i + 1}$", f"phase space $(q_{i + 1}, \\dot q_{i + 1})$")
        return draw

    def energy(ax):
        ax.plot(t, cols["E"])
        _style(ax, "t [s]", "E", "energy")

    def control(ax):
        for a in range(m):
            ax.plot(t, cols[f"u{a + 1}"], label=f"$u_{a + 1}$")
        if m > 1:
            ax.legend(fontsize=8)
        _style(ax, "t [s]", "u", "control")

    def constraint(ax):
        for a in range(m):
            ax.plot(t, cols[f"phi{a + 1}"], label=rf"$\phi_{a + 1}$")
        if m > 1:
            ax.legend(fontsize=8)
        _style(ax, "t [s]", r"$\phi$", "constraint")

    panels = [("angles", angles)] + [(f"phase_q{i + 1}", phase(i)) for i in range(n)]
    panels.append(("energy", energy))
    if m:
        panels += [("control", control), ("constraint", constraint)]

    written = []
    ncols = 3
    nrows = -(-len(panels) // ncols)
    fig, axes = plt.subplots(nrows, ncols, figsize=(PANEL_SIZE[0] * ncols, PANEL_SIZE[1] * nrows),
                             squeeze=False)
    for ax, (_, draw) in zip(axes.flat, panels):
        draw(ax)
    for ax in list(axes.flat)[len(panels):]:
        ax.set_visible(False)
    fig.tight_layout()
    path = out_dir / f"{prefix}_overview.{fmt}"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    for name, draw in panels:
        fig, ax = plt.subplots(figsize=PANEL_SIZE)
        draw(ax)
        fig.tight_layout()
        path = out_dir / f"{prefix}_{name}.{fmt}"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written
