"""Figures for the experiment drivers, rendered to files with the Agg backend."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 110,
    "savefig.bbox": "tight",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
}

REGION_COLORS = {1: "#7f7f7f", 2: "#1f77b4", 3: "#2ca02c", 4: "#d62728", 5: "#9467bd", 6: "#ff7f0e"}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def toy_table_figure(table: np.ndarray, path) -> Path:
    """Heat map of the 8 x 6 region table (rows: init, final, conditionals)."""
    labels = ["init", "final"] + [f"from U{j}" for j in range(1, 7)]
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(6.5, 4.5))
        ax.grid(False)
        im = ax.imshow(np.nan_to_num(table), cmap="Blues", vmin=0, vmax=1)
        for (r, c), val in np.ndenumerate(table):
            if np.isfinite(val):
                ax.text(c, r, f"{val:.2f}", ha="center", va="center", fontsize=8,
                        color="white" if val > 0.6 else "black")
        ax.set_xticks(range(6), [f"U{j}" for j in range(1, 7)])
        ax.set_yticks(range(len(labels)), labels)
        ax.set_xlabel("region")
        fig.colorbar(im, ax=ax, fraction=0.046)
        return _save(fig, path)


def limit_points_figure(proj: np.ndarray, regions: np.ndarray, path) -> Path:
    """Projected outputs of trained networks on the plane orthogonal to (1,1,1)."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(5, 5))
        for j in range(1, 7):
            m = regions == j
            if m.any():
                ax.scatter(proj[m, 0], proj[m, 1], s=4, alpha=0.5, color=REGION_COLORS[j], label=f"U{j}")
        ax.set_aspect("equal", adjustable="datalim")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.legend(markerscale=3, fontsize=8)
        return _save(fig, path)


def _region_boundaries(ax, lim: float) -> None:
    # lines b = 0, w + b = 0, 2w + b = 0 in the (w, b) plane
    w = np.array([-lim, lim])
    for slope in (0.0, -1.0, -2.0):
        ax.plot(w, slope * w, color="black", lw=0.6, alpha=0.6)


def saddle_figure(wb: np.ndarray, proj: np.ndarray, iters: np.ndarray, losses: np.ndarray,
                  regions, plateaus, path) -> Path:
    """Parameter path in the (w, b) plane, projected outputs and the loss."""
    regions = np.asarray([int(r) for r in regions])
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, 3, figsize=(14, 4))
        ax = axes[0]
        lim = 1.2 * float(np.abs(wb).max() + 0.1)
        _region_boundaries(ax, lim)
        ax.plot(wb[:, 0], wb[:, 1], color="0.6", lw=0.6)
        ax.scatter(wb[:, 0], wb[:, 1], s=5, c=[REGION_COLORS[r] for r in regions])
        ax.scatter(wb[:1, 0], wb[:1, 1], marker="s", s=40, color="0.4", zorder=3)
        ax.set_xlim(-lim, lim)
        ax.set_ylim(-lim, lim)
        ax.set_xlabel("w")
        ax.set_ylabel("b")
        ax = axes[1]
        ax.plot(proj[:, 0], proj[:, 1], color="0.6", lw=0.6)
        ax.scatter(proj[:, 0], proj[:, 1], s=5, c=[REGION_COLORS[r] for r in regions])
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax = axes[2]
        ax.semilogy(iters, losses, color="black", lw=1)
        for start, end in plateaus:
            ax.axvspan(start, end, color="tab:orange", alpha=0.15)
        ax.set_xlabel("iteration")
        ax.set_ylabel("loss")
        return _save(fig, path)


def cpl_figures(losses: np.ndarray, local_dims: np.ndarray, seen: np.ndarray, out_dir) -> list[Path]:
    """Bubble charts of (final loss, local dimension) and (final loss, seen regions)."""
    out = []
    key = np.round(np.maximum(losses, 0.0), 4)
    for values, name, label in ((local_dims, "cpl_local_dim_vs_loss.png", "local dimension"),
                                (seen, "cpl_seen_regions_vs_loss.png", "seen regions")):
        pairs, counts = np.unique(np.stack([key, values]), axis=1, return_counts=True)
        with plt.rc_context(RC):
            fig, ax = plt.subplots()
            ax.scatter(pairs[0], pairs[1], s=60 * np.sqrt(counts), alpha=0.4)
            for (x, y), c in zip(pairs.T, counts):
                ax.annotate(str(c), (x, y), ha="center", va="center", fontsize=8)
            ax.set_xlabel("final training loss")
            ax.set_ylabel(label)
            out.append(_save(fig, Path(out_dir) / name))
    return out


def cpl_prediction_figure(grid: np.ndarray, target: np.ndarray, X: np.ndarray, Y: np.ndarray,
                          preds: dict, path) -> Path:
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.plot(grid, target, color="0.7", lw=3, label="target")
        ax.scatter(X, Y, s=12, color="black", zorder=3, label="sample")
        for name, pred in preds.items():
            ax.plot(grid, pred, lw=1, label=name)
        ax.set_xlabel("x")
        ax.legend(fontsize=8)
        return _save(fig, path)


def sweep_figure(x: np.ndarray, series: dict, xlabel: str, path, logy: bool = False) -> Path:
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for name, values in series.items():
            ax.plot(x, values, marker="o", ms=3, label=name)
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.legend(fontsize=8)
        return _save(fig, path)
