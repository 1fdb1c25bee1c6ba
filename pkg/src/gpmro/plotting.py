"""Figure emission for experiment reports.

All figures render through the Agg backend straight to SVG files next to the
CSV outputs; nothing here opens a window.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .domain import MixedStrategy

_STYLE = {
    "figure.figsize": (7.0, 4.2),
    "font.size": 10,
    "axes.labelsize": 10,
    "axes.titlesize": 11,
    "legend.fontsize": 9,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "gpmro",  # deterministic ids inside the SVG
}

_COLORS = {
    "gp-mro": "tab:blue",
    "clss": "tab:gray",
    "stableopt": "tab:orange",
    "gp-ucb": "tab:green",
    "randmaxmin": "tab:red",
}


def performance_figure(
    curves: dict[str, np.ndarray], checkpoints, path, title: str = "Worst-case performance"
) -> None:
    """One series per algorithm: median over seeds with an interquartile band.

    ``curves`` maps algorithm name to an (n_seeds, n_checkpoints) array.
    """
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        x = np.asarray(checkpoints)
        for name, arr in curves.items():
            arr = np.atleast_2d(np.asarray(arr))
            med = np.median(arr, axis=0)
            color = _COLORS.get(name)
            ax.plot(x, med, label=name, color=color)
            if arr.shape[0] > 1:
                lo = np.percentile(arr, 25, axis=0)
                hi = np.percentile(arr, 75, axis=0)
                ax.fill_between(x, lo, hi, alpha=0.2, color=color, linewidth=0)
        ax.set_xlabel("iteration")
        ax.set_ylabel("worst-case expected reward")
        ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def support_figure(
    table: np.ndarray,
    strategies: dict[str, MixedStrategy],
    path,
    title: str = "Reward and returned strategies",
) -> None:
    """Reward columns over the decision grid with the strategies' mass overlaid."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        n = table.shape[0]
        xs = np.arange(n)
        for j in range(table.shape[1]):
            ax.plot(xs, table[:, j], color="0.8", linewidth=0.6, zorder=1)
        ax.plot(xs, table.min(axis=1), color="0.3", linewidth=1.2, label="worst-case reward")
        ax2 = ax.twinx()
        for name, strat in strategies.items():
            color = _COLORS.get(name)
            ax2.vlines(strat.indices, 0, strat.probs, color=color, linewidth=2, label=name)
            ax2.plot(strat.indices, strat.probs, "o", color=color, markersize=3)
        ax.set_xlabel("decision index")
        ax.set_ylabel("reward")
        ax2.set_ylabel("strategy mass")
        ax2.set_ylim(bottom=0)
        handles, labels = ax.get_legend_handles_labels()
        h2, l2 = ax2.get_legend_handles_labels()
        ax.legend(handles + h2, labels + l2, loc="upper center", ncol=2)
        ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def trajectories_figure(
    paths: list[tuple[np.ndarray, np.ndarray]],
    road_halfwidth: float,
    path,
    title: str = "Closed-loop trajectories",
) -> None:
    """Plan-view AV/HV paths for a handful of episodes; AV solid, HV dashed."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(8.0, 3.2))
        x_max = 1.0
        for av_path, hv_path in paths:
            ax.plot(av_path[:, 0], av_path[:, 1], color="tab:blue", alpha=0.6)
            ax.plot(hv_path[:, 0], hv_path[:, 1], color="tab:red", alpha=0.6, linestyle="--")
            x_max = max(x_max, av_path[:, 0].max(), hv_path[:, 0].max())
        for y in (-road_halfwidth, road_halfwidth):
            ax.axhline(y, color="0.4", linewidth=1.0)
        ax.axhline(0.0, color="0.7", linewidth=0.8, linestyle=":")
        ax.set_xlim(-5, x_max + 5)
        ax.set_xlabel("longitudinal position [m]")
        ax.set_ylabel("lateral position [m]")
        ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
