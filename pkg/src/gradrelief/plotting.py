"""Report figures.  Uses ``matplotlib.figure.Figure`` directly (no pyplot state)."""

from __future__ import annotations

import numpy as np
from matplotlib.figure import Figure

from .optimize import StyleReport

LOSS_LABELS = {"l1s": "L1 gradient", "l2s": "L2 gradient", "cosine": "cosine normal"}


def _profile_row(mask: np.ndarray) -> int:
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        return mask.shape[0] // 2
    return int((rows[0] + rows[-1]) // 2)


def style_figure(heights: dict[str, np.ndarray], mask: np.ndarray, report: StyleReport,
                 path, dpi: int = 120) -> None:
    """Reliefs per loss, a cross-section through the figure, and the two metrics."""
    kinds = list(heights)
    fig = Figure(figsize=(3.2 * max(len(kinds), 2), 6.4))
    grid = fig.add_gridspec(2, max(len(kinds), 2))
    vmax = max(float(np.max(h)) for h in heights.values()) if heights else 1.0
    for i, kind in enumerate(kinds):
        ax = fig.add_subplot(grid[0, i])
        ax.imshow(heights[kind], cmap="gray", vmin=0.0, vmax=vmax)
        ax.set_title(LOSS_LABELS.get(kind, kind), fontsize=10)
        ax.set_xticks([])
        ax.set_yticks([])

    row = _profile_row(mask)
    ax = fig.add_subplot(grid[1, : max(len(kinds), 2) - 1])
    for kind in kinds:
        ax.plot(heights[kind][row], lw=1.0, label=LOSS_LABELS.get(kind, kind))
    ax.set_xlabel("u (px)")
    ax.set_ylabel(f"height, row {row}")
    ax.legend(fontsize=8, frameon=False)

    ax = fig.add_subplot(grid[1, -1])
    x = np.arange(len(kinds))
    flat = [report.background_mean_abs[k] for k in kinds]
    sharp = [report.silhouette_sharpness[k] for k in kinds]
    ax.bar(x - 0.2, flat, width=0.4, label="background mean |h|")
    ax.set_yscale("log" if min(flat, default=0) > 0 else "linear")
    ax.set_xticks(x, kinds)
    ax2 = ax.twinx()
    ax2.bar(x + 0.2, sharp, width=0.4, color="tab:orange", label="silhouette mean |grad h|")
    lo, hi = min(sharp, default=0.0), max(sharp, default=1.0)
    pad = max(hi - lo, 1e-6)
    ax2.set_ylim(max(lo - pad, 0.0), hi + pad)
    handles = ax.get_legend_handles_labels()[0] + ax2.get_legend_handles_labels()[0]
    ax.legend(handles=handles, loc="upper center", bbox_to_anchor=(0.5, -0.12), fontsize=7, frameon=False)
    ax.set_title("style metrics", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)


def layers_figure(source: np.ndarray, structure: np.ndarray, detail: np.ndarray | None,
                  relief: np.ndarray, path, dpi: int = 120) -> None:
    panels = [("source", source), ("structure", structure)]
    if detail is not None:
        panels.append(("detail", detail))
    panels.append(("relief", relief))
    fig = Figure(figsize=(3.0 * len(panels), 3.2))
    for i, (title, img) in enumerate(panels):
        ax = fig.add_subplot(1, len(panels), i + 1)
        ax.imshow(img, cmap="gray")
        ax.set_title(title, fontsize=10)
        ax.set_xticks([])
        ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
