"""Figure rendering for report outputs.

All figures are written as SVG with a fixed hash salt and no timestamp
metadata, so re-rendering the same tables produces byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "zicount"

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_SVG_KW = {"format": "svg", "metadata": {"Date": None}}


def _unit_axes(ax):
    ax.plot([0, 1], [0, 1], ls="--", lw=0.8, color="grey", zorder=1)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel("base zero probability")
    ax.set_ylabel("altered zero probability")


def render_curves(tables, path, title=None):
    """All curves on one set of unit-square axes, with overlay points."""
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    _unit_axes(ax)
    for table in tables:
        ax.plot(table.grid, table.pit0, lw=1.4, label=table.label, zorder=2)
        if table.points is not None:
            ax.plot(table.points[:, 0], table.points[:, 1], "o", ms=4, zorder=3)
    ax.legend(fontsize=8, loc="lower right")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, **_SVG_KW)
    plt.close(fig)


def render_curve_panels(tables, path, ncols=3):
    """One unit-square panel per curve (observed points overlaid)."""
    n = len(tables)
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(3.1 * ncols, 3.1 * nrows),
                             squeeze=False)
    for ax in axes.ravel()[n:]:
        ax.set_visible(False)
    for ax, table in zip(axes.ravel(), tables):
        _unit_axes(ax)
        ax.plot(table.grid, table.pit0, lw=1.4, zorder=2)
        if table.points is not None:
            ax.plot(table.points[:, 0], table.points[:, 1], "o", ms=4,
                    color="black", zorder=3)
        ax.set_title(table.label, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, **_SVG_KW)
    plt.close(fig)


def render_fitted_vs_observed(tables, path):
    """Fitted-vs-observed scatter panels, one column per model.

    ``tables`` maps a model label to its list of per-cell rows; the top row
    compares zero proportions, the bottom row compares means.
    """
    labels = list(tables)
    ncols = len(labels)
    fig, axes = plt.subplots(2, ncols, figsize=(3.0 * ncols, 6.2), squeeze=False)
    for j, label in enumerate(labels):
        rows = tables[label]
        top, bottom = axes[0][j], axes[1][j]
        top.plot([0, 1], [0, 1], ls="--", lw=0.8, color="grey")
        top.plot([r.zero_prob_fit for r in rows],
                 [r.zero_prop_obs for r in rows], "o", ms=4)
        lim = 1.15 * max(max(r.zero_prob_fit for r in rows),
                         max(r.zero_prop_obs for r in rows), 0.05)
        top.set_xlim(0, lim)
        top.set_ylim(0, lim)
        top.set_title(label, fontsize=9)
        top.set_xlabel("fitted zero probability", fontsize=8)
        top.set_ylabel("observed zero proportion", fontsize=8)

        hi = 1.15 * max(max(r.mean_fit for r in rows),
                        max(r.mean_obs for r in rows))
        bottom.plot([0, hi], [0, hi], ls="--", lw=0.8, color="grey")
        bottom.plot([r.mean_fit for r in rows],
                    [r.mean_obs for r in rows], "o", ms=4)
        bottom.set_xlim(0, hi)
        bottom.set_ylim(0, hi)
        bottom.set_xlabel("fitted mean", fontsize=8)
        bottom.set_ylabel("observed mean", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SVG_KW)
    plt.close(fig)


def render_zero_diagnostic(diag, path, title=None):
    """Binned observed zero fraction against fitted zero probability."""
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    x = [b.pi0_fit_mean for b in diag.bins]
    y = [b.zero_frac for b in diag.bins]
    lim = 1.15 * max(max(x), max(y), 0.05)
    ax.plot([0, lim], [0, lim], ls="--", lw=0.8, color="grey")
    ax.plot(x, y, "o-", ms=5)
    ax.set_xlim(0, lim)
    ax.set_ylim(0, lim)
    ax.set_xlabel("mean fitted zero probability (bin)")
    ax.set_ylabel("observed zero fraction (bin)")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, **_SVG_KW)
    plt.close(fig)
