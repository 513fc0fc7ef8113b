"""SVG figures: output uncertainty, scatterplots and index bar charts.

Every panel, bar group and threshold line carries a ``gid`` so the SVG can
be inspected structurally.
"""
from __future__ import annotations

import itertools
import os
import tempfile

import matplotlib

matplotlib.use("svg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import ConfigError  # noqa: E402

# fixed hash salt keeps SVG ids stable between runs
matplotlib.rcParams["svg.hashsalt"] = "sobolsa"
matplotlib.rcParams["svg.fonttype"] = "none"


def binned_means(x, y, n_bins: int = 30):
    """Mean of ``y`` inside equal-width bins of ``x``; empty bins give NaN."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    edges = np.linspace(x.min(), x.max(), n_bins + 1)
    idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, n_bins - 1)
    sums = np.bincount(idx, weights=y, minlength=n_bins)
    counts = np.bincount(idx, minlength=n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = sums / counts
    return (edges[:-1] + edges[1:]) / 2, means


def _grid(n: int, ncols: int | None = None):
    ncols = ncols or min(n, 4)
    nrows = int(np.ceil(n / ncols))
    fig, axes = plt.subplots(nrows, ncols, figsize=(3 * ncols, 2.6 * nrows), squeeze=False)
    for ax in axes.flat[n:]:
        ax.set_visible(False)
    return fig, list(axes.flat[:n])


def plot_uncertainty(y, n_bins: int = 30):
    """Histogram of the A-block outputs."""
    y = np.asarray(y, dtype=float)
    fig, ax = plt.subplots(figsize=(4, 3))
    ax.hist(y[np.isfinite(y)], bins=n_bins, color="#8da0cb", edgecolor="white")
    ax.set_gid("panel-uncertainty")
    ax.set_xlabel("y")
    ax.set_ylabel("Count")
    fig.tight_layout()
    return fig


def plot_scatter(values, y, params, n_bins: int = 30, method: str = "point"):
    """y against each input, with the binned-mean curve on top.

    ``method="bin"`` replaces the point cloud by a hexagonal density map.
    """
    values = np.asarray(values, dtype=float)
    y = np.asarray(y, dtype=float)
    if values.shape[0] != y.shape[0] or values.shape[1] != len(params):
        raise ConfigError("scatter needs one y per row and one name per column")
    if method not in ("point", "bin"):
        raise ConfigError(f"unknown scatter method {method!r}")
    fig, axes = _grid(len(params))
    for j, (ax, name) in enumerate(zip(axes, params)):
        if method == "point":
            ax.scatter(values[:, j], y, s=2, alpha=0.3, color="grey", rasterized=False)
        else:
            ax.hexbin(values[:, j], y, gridsize=30, cmap="Greys", mincnt=1)
        centers, means = binned_means(values[:, j], y, n_bins)
        ax.plot(centers, means, color="red", lw=1.2, gid=f"binned-{name}")
        ax.set_gid(f"panel-{name}")
        ax.set_xlabel(name)
        ax.set_ylabel("y")
    fig.tight_layout()
    return fig


def plot_multiscatter(values, y, params, smpl: int | None = None, seed: int | None = None):
    """Every input pair x_i against x_j, coloured by y."""
    values = np.asarray(values, dtype=float)
    y = np.asarray(y, dtype=float)
    if smpl is not None and smpl < values.shape[0]:
        rows = np.sort(np.random.default_rng(seed).choice(values.shape[0], smpl, replace=False))
        values, y = values[rows], y[rows]
    pairs = list(itertools.combinations(range(len(params)), 2))
    if not pairs:
        raise ConfigError("multiscatter needs at least two inputs")
    fig, axes = _grid(len(pairs))
    for ax, (i, j) in zip(axes, pairs):
        sc = ax.scatter(values[:, i], values[:, j], c=y, s=3, cmap="viridis")
        ax.set_gid(f"panel-{params[i]}.{params[j]}")
        ax.set_xlabel(params[i])
        ax.set_ylabel(params[j])
    fig.colorbar(sc, ax=axes)
    return fig


def _ci_excludes_zero(frame):
    if "low.ci" not in frame.columns:
        return np.ones(len(frame), dtype=bool)
    return ((frame["low.ci"] > 0) | (frame["high.ci"] < 0)).to_numpy()


def plot_indices(table, dummy=None):
    """Si/Ti bars with CI whiskers; a second panel holds the significant Sij.

    Parameters
    ----------
    table : IndexTable
    dummy : IndexTable, optional
        Dummy-parameter estimates drawn as horizontal threshold lines.
    """
    res = table.results
    first = res[res["sensitivity"] == "Si"]
    total = res[res["sensitivity"] == "Ti"]
    second = res[res["sensitivity"] == "Sij"]
    shown = second[_ci_excludes_zero(second)]
    n_panels = 2 if len(second) else 1
    fig, axes = plt.subplots(1, n_panels, figsize=(4 + 2 * n_panels, 3.2), squeeze=False)
    ax = axes[0, 0]
    names = list(first["parameters"])
    x = np.arange(len(names))
    width = 0.38
    for offset, part, tag, colour in ((-width / 2, first, "Si", "#66c2a5"), (width / 2, total, "Ti", "#fc8d62")):
        err = None
        if "low.ci" in part.columns:
            err = np.vstack([part["original"] - part["low.ci"], part["high.ci"] - part["original"]])
            err = np.clip(err, 0, None).tolist()
        bars = ax.bar(x + offset, part["original"], width, yerr=err, color=colour, label=tag, capsize=2)
        for bar, name in zip(bars, part["parameters"]):
            bar.set_gid(f"bar-{tag}-{name}")
    if dummy is not None:
        for tag, style in (("Si", "--"), ("Ti", ":")):
            value = dummy.value(tag, dummy.results["parameters"].iloc[0])
            ax.axhline(value, color="black", ls=style, lw=0.8, gid=f"dummy-{tag}")
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=45 if len(names) > 6 else 0)
    ax.set_ylabel("Sobol' index")
    ax.set_gid("panel-indices")
    ax.legend(frameon=False)
    if n_panels == 2:
        ax2 = axes[0, 1]
        ax2.set_gid("panel-second-order")
        if len(shown):
            xs = np.arange(len(shown))
            err = None
            if "low.ci" in shown.columns:
                err = np.clip(np.vstack([shown["original"] - shown["low.ci"],
                                         shown["high.ci"] - shown["original"]]), 0, None).tolist()
            bars = ax2.bar(xs, shown["original"], 0.6, yerr=err, color="#8da0cb", capsize=2)
            for bar, name in zip(bars, shown["parameters"]):
                bar.set_gid(f"bar-Sij-{name}")
            ax2.set_xticks(xs)
            ax2.set_xticklabels(list(shown["parameters"]))
        ax2.axhline(0, color="grey", lw=0.5)
        ax2.set_ylabel("Sij")
    fig.tight_layout()
    return fig


def save_svg(fig, path) -> None:
    """Write ``fig`` to ``path`` atomically and close it."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".svg.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fig.savefig(fh, format="svg", metadata={"Date": None})
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    finally:
        plt.close(fig)
