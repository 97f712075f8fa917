"""Optional static figures (needs matplotlib)."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def plot_phase_diagram(grid, path: Path) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ax_x, ax_y = grid.axes
    fig, ax = plt.subplots(figsize=(4.5, 3.6))
    W = np.ma.masked_invalid(grid.W.T)
    mesh = ax.pcolormesh(grid.x, grid.y, W, shading="nearest", cmap="viridis")
    ax.contourf(grid.x, grid.y, (~grid.stable.T).astype(float), levels=[0.5, 1.5], colors="none",
                hatches=["//"])
    if ax_x.scale == "log":
        ax.set_xscale("log")
    ax.set_xlabel(ax_x.name)
    ax.set_ylabel(ax_y.name)
    fig.colorbar(mesh, ax=ax, label="W")
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
