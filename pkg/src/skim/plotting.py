"""Benchmark figures: input/output rasters, cross-correlations and receptive fields.

Figures are built on ``matplotlib.figure.Figure`` directly (no pyplot state),
and SVG output is made reproducible by fixing the hash salt and dropping the
date stamp.
"""

from __future__ import annotations

import matplotlib as mpl
from matplotlib.figure import Figure
import numpy as np

from .events import to_dense

STYLE = {
    "font.size": 8,
    "axes.titlesize": 9,
    "axes.labelsize": 8,
    "legend.fontsize": 7,
    "xtick.labelsize": 7,
    "ytick.labelsize": 7,
    "svg.hashsalt": "skim",
    "svg.fonttype": "path",
}


def _raster(ax, rows: np.ndarray, labels, t0: int, color="k"):
    for i, row in enumerate(rows):
        t = np.nonzero(row)[0] + t0
        ax.vlines(t, i + 0.1, i + 0.9, color=color, linewidth=0.8)
    ax.set_yticks(np.arange(len(labels)) + 0.5, labels)
    ax.set_ylim(0, len(labels))
    ax.invert_yaxis()


def plot_activity(ax, scenario, z, start: int = 0, span: int = 3000):
    """Input channels, composite target and network output over a time window
    with attention shaded (grey while positive)."""
    stop = min(start + span, scenario.n_steps)
    x = to_dense(scenario.inputs)[:, start:stop]
    tgt = to_dense(scenario.composite_target)[:, start:stop]
    rows = np.vstack([x, tgt, np.asarray(z)[None, start:stop]])
    labels = [f"in{i}" for i in range(x.shape[0])] + ["target", "output"]
    att = scenario.attention.values[0, start:stop]
    pos = att > 0
    edges = np.flatnonzero(np.diff(np.concatenate([[0], pos.astype(int), [0]])))
    for a, b in zip(edges[::2], edges[1::2]):
        ax.axvspan(start + a, start + b, color="0.85", linewidth=0)
    _raster(ax, rows, labels, start)
    ax.set_xlim(start, stop)
    ax.set_xlabel("timestep")


def plot_xcorr(ax, confusion):
    for key, curve in confusion.references.items():
        ax.plot(curve.lags, curve.values, color="k", linewidth=1.2, label=f"ideal {key}")
    for key, curve in confusion.curves.items():
        correct = key in confusion.correct_zero_lag
        ax.plot(curve.lags, curve.values, linestyle="-" if correct else ":",
                linewidth=1.0, label=key)
    ax.set_xlabel("lag (timesteps)")
    ax.set_ylabel("cross-correlation")
    ax.legend(frameon=False, ncol=2)


def plot_strf(ax, strf, word=None, title=""):
    lim = float(np.max(np.abs(strf.field))) or 1.0
    n_ch, n_lags = strf.field.shape
    # lag increases to the left so the word reads in forward time
    ax.imshow(strf.field[:, ::-1], cmap="gray", vmin=-lim, vmax=lim, aspect="auto",
              extent=(-(n_lags - 0.5), 0.5, n_ch - 0.5, -0.5), interpolation="nearest")
    if word is not None:
        for t, c in word.events:
            ax.plot(-(word.duration - 1 - t), c, "o", mfc="none", mec="tab:red", ms=4)
    ax.set_xlabel("time before output event")
    ax.set_ylabel("channel")
    ax.set_title(title or f"STRF ({strf.n_trigger_events} events)")


def benchmark_figure(result, strfs=None, span: int = 3000) -> Figure:
    """One page: activity rasters, cross-correlations and (optionally) the STRFs
    for both attention states."""
    with mpl.rc_context(STYLE):
        fig = Figure(figsize=(8, 9), layout="constrained")
        n_rows = 3 if strfs else 2
        gs = fig.add_gridspec(n_rows, 2)
        plot_activity(fig.add_subplot(gs[0, :]), result.test, result.z_test, 0, span)
        plot_xcorr(fig.add_subplot(gs[1, :]), result.confusion)
        if strfs:
            wa, wb = result.test.words
            for i, (label, strf, word) in enumerate(
                [("attention +", strfs.get(1.0), wa), ("attention -", strfs.get(-1.0), wb)]
            ):
                if strf is not None:
                    plot_strf(fig.add_subplot(gs[2, i]), strf, word,
                              f"STRF, {label} ({strf.n_trigger_events} events)")
    return fig


def save_svg(fig: Figure, path) -> None:
    with mpl.rc_context(STYLE):
        fig.savefig(path, format="svg", metadata={"Date": None})
