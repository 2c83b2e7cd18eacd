"""Figures rendered from the CSV files of a finished run.

Everything here reads the run directory, so figures can be regenerated
without re-running the experiment.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.colors import LogNorm  # noqa: E402

import numpy as np  # noqa: E402

from .harness import load_csv  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.dpi": 120,
    "savefig.bbox": "tight",
}


def _vector(run, name):
    return load_csv(Path(run) / name).ravel()


def plot_hovmoller(ax, hov, title=None):
    """Time-versus-component image of the absolute analysis error (log colour scale)."""
    floor = hov[hov > 0].min() if np.any(hov > 0) else 1e-300
    im = ax.imshow(np.clip(hov, floor, None), aspect="auto", origin="lower",
                   interpolation="nearest", norm=LogNorm(),
                   extent=(0.5, hov.shape[1] + 0.5, 0, hov.shape[0]))
    ax.set_xlabel("component i")
    ax.set_ylabel("timestep k")
    if title:
        ax.set_title(title)
    return im


def plot_means(axes, run):
    i = np.arange(1, _vector(run, "mu_true.csv").size + 1)
    mu_bar = _vector(run, "mu_true.csv")
    mu = _vector(run, "mu_sampled.csv")
    mu_t = _vector(run, "mu_estimated.csv")
    ax0, ax1 = axes
    ax0.plot(i, mu_t, "o-", ms=3, label="estimated")
    ax0.plot(i, mu, "s--", ms=3, label="sampled")
    ax0.plot(i, mu_bar, "k-", lw=1, label="prescribed")
    ax0.set_xlabel("component i")
    ax0.set_title("model-error mean")
    ax0.legend()
    ax1.semilogy(i, np.abs(mu - mu_bar), label="|sampled - prescribed|")
    ax1.semilogy(i, np.abs(mu - mu_t), label="|sampled - estimated|")
    ax1.semilogy(i, np.abs(mu_bar - mu_t), label="|prescribed - estimated|")
    ax1.set_xlabel("component i")
    ax1.set_title("errors in the mean")
    ax1.legend()


def _matrix_row(fig, axes, mats, titles):
    vmin = min(m.min() for m in mats)
    vmax = max(m.max() for m in mats)
    for ax, m, t in zip(axes, mats, titles):
        im = ax.imshow(m, vmin=vmin, vmax=vmax, interpolation="nearest")
        ax.set_title(t)
    fig.colorbar(im, ax=list(axes), shrink=0.8)


def render_run(run_dir, out_dir=None, fmt="png"):
    """Render the diagnostic figures for one run; returns the written paths."""
    run = Path(run_dir)
    out = Path(out_dir) if out_dir else run / "figures"
    out.mkdir(parents=True, exist_ok=True)
    written = []
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4, 5))
        im = plot_hovmoller(ax, load_csv(run / "hovmoller.csv"), "|x_t - x_a|")
        fig.colorbar(im, ax=ax)
        written.append(_save(fig, out / f"hovmoller.{fmt}"))

        fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
        plot_means(axes, run)
        written.append(_save(fig, out / f"mean.{fmt}"))

        fig, axes = plt.subplots(1, 3, figsize=(11, 3.5))
        _matrix_row(fig, axes,
                    [load_csv(run / f"Q_{n}.csv") for n in ("true", "sampled", "estimated")],
                    ["prescribed Q", "sampled Q", "estimated Q"])
        written.append(_save(fig, out / f"covariance.{fmt}"))

        fig, axes = plt.subplots(1, 3, figsize=(11, 3.5))
        _matrix_row(fig, axes,
                    [load_csv(run / f"Q_{n}.csv")
                     for n in ("sampling_error", "estimate_error", "total_error")],
                    ["|sampled - prescribed|", "|sampled - estimated|",
                     "|prescribed - estimated|"])
        written.append(_save(fig, out / f"covariance_error.{fmt}"))
    return written


def render_comparison(dir_a, dir_b, path, labels=("a", "b")):
    """Side-by-side Hovmoller diagrams of two runs on a shared colour scale."""
    hovs = [load_csv(Path(d) / "hovmoller.csv") for d in (dir_a, dir_b)]
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, 2, figsize=(8, 5))
        lo = min(h[h > 0].min() for h in hovs)
        hi = max(h.max() for h in hovs)
        for ax, h, lab in zip(axes, hovs, labels):
            im = ax.imshow(np.clip(h, lo, None), aspect="auto", origin="lower",
                           interpolation="nearest", norm=LogNorm(vmin=lo, vmax=hi),
                           extent=(0.5, h.shape[1] + 0.5, 0, h.shape[0]))
            ax.set_title(lab)
            ax.set_xlabel("component i")
        axes[0].set_ylabel("timestep k")
        fig.colorbar(im, ax=list(axes))
        return _save(fig, Path(path))


def _save(fig, path):
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)
    return path
