"""Matplotlib renderings saved next to the CSV reports.

Everything here is a thin, file-only layer: the CSV stays the primary
interface and these figures are the quick-look companions written alongside
it.  Imports of matplotlib are deferred so command paths that never plot do
not pay for it.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from .mechanism import CounterOutput

__all__ = ["save_factorization_figure", "save_stream_figure", "save_sweep_figure"]


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    return plt


def save_factorization_figure(
    path,
    base: np.ndarray,
    lhat: np.ndarray,
    rhat: np.ndarray,
) -> None:
    """Triptych of the exact left factor, its binned version, and the right factor."""
    plt = _pyplot()
    fig, axes = plt.subplots(1, 3, figsize=(10.5, 3.6), constrained_layout=True)
    for ax, m, title in zip(
        axes,
        (base, lhat, rhat),
        ("exact left factor", "binned left factor", "completed right factor"),
    ):
        ax.imshow(np.clip(m, 0.0, 1.0), cmap="Greys", vmin=0.0, vmax=1.0)
        ax.set_title(title, fontsize=10)
        ax.set_xticks([])
        ax.set_yticks([])
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sweep_figure(path, rows: Sequence[dict]) -> None:
    """Error ratio against buffer size, one line per n, baselines as markers."""
    plt = _pyplot()
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.8), constrained_layout=True)
    grid = [r for r in rows if r["method"] == "sqrt_binned"]
    baselines = [r for r in rows if r["method"] != "sqrt_binned"]
    for ax, key, label in zip(axes, ("mean_se_ratio", "max_se_ratio"), ("mean", "max")):
        for n in sorted({r["n"] for r in grid}):
            pts = sorted((r for r in grid if r["n"] == n), key=lambda r: r["bin_size"])
            ax.plot(
                [r["bin_size"] for r in pts],
                [r[key] for r in pts],
                marker="o",
                markersize=3,
                label=f"n={n}",
            )
        for r in baselines:
            ax.scatter(
                [r["bin_size"]],
                [r[key]],
                marker="x" if r["method"] == "binary" else "^",
                color="black",
                zorder=3,
            )
            ax.annotate(r["method"], (r["bin_size"], r[key]), fontsize=7,
                        textcoords="offset points", xytext=(4, 2))
        ax.axhline(1.0, color="grey", linewidth=0.8, linestyle="--")
        ax.set_xlabel("buffer size")
        ax.set_ylabel(f"{label} squared-error ratio")
        ax.set_xscale("log")
    handles, labels = axes[0].get_legend_handles_labels()
    if handles:
        axes[0].legend(fontsize=8)
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_stream_figure(path, outputs: Sequence["CounterOutput"]) -> None:
    """True and noisy prefix sums over the run."""
    plt = _pyplot()
    steps = [o.step for o in outputs]
    fig, ax = plt.subplots(figsize=(7.0, 3.6), constrained_layout=True)
    ax.plot(steps, [o.noisy_prefix for o in outputs], label="noisy prefix", linewidth=1.0)
    ax.plot(steps, [o.true_prefix for o in outputs], label="true prefix", linewidth=1.4)
    ax.set_xlabel("step")
    ax.set_ylabel("prefix sum")
    ax.legend(fontsize=8)
    fig.savefig(path, dpi=150)
    plt.close(fig)
