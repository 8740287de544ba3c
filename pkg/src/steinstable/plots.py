"""Figure rendering for the report path.

Every CLI command that writes a CSV also renders a PNG next to it.  All
rendering is headless (Agg backend, forced before pyplot import) and the
figures carry no run-dependent decorations, so they are reproducible in
content even though PNG bytes are not part of the reproducibility
contract (that is the CSVs' job).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

__all__ = [
    "save_curves",
    "save_density",
    "save_sample_hist",
    "save_check_bars",
    "save_solution",
    "save_bound_sweep",
]

_FIGSIZE = (7.5, 5.0)
_DPI = 110


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_curves(path, curves, *, xlabel, ylabel, title,
                logx=False, logy=False):
    """Generic overlay of named curves, each with its own x-array.

    curves: iterable of (label, x-array, y-array)."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for label, x, y in curves:
        ax.plot(x, y, label=label, lw=1.4)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    return _finish(fig, path)


def save_density(path, x, p, *, title):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(x, p, lw=1.4)
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return _finish(fig, path)


def save_sample_hist(path, samples, *, title, density_xy=None):
    """Histogram of draws, clipped to the central 99% so single extreme
    heavy-tail draws do not flatten the picture; optional exact-density
    overlay on the same window."""
    s = np.asarray(samples, dtype=float)
    lo, hi = np.quantile(s, [0.005, 0.995])
    if not hi > lo:
        lo, hi = float(s.min()) - 1.0, float(s.max()) + 1.0
    inside = s[(s >= lo) & (s <= hi)]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    bins = min(120, max(24, len(inside) // 60))
    ax.hist(inside, bins=bins, range=(lo, hi), density=True,
            alpha=0.55, label=f"samples (central {len(inside)}/{len(s)})")
    if density_xy is not None:
        dx, dp = density_xy
        m = (dx >= lo) & (dx <= hi)
        ax.plot(dx[m], dp[m], "k-", lw=1.4, label="exact density")
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    return _finish(fig, path)


def save_check_bars(path, names, z_values, *, title, threshold=3.0):
    """Horizontal |mean|/SE bars with the acceptance threshold line."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ypos = np.arange(len(names))
    ax.barh(ypos, z_values, height=0.6)
    ax.axvline(threshold, color="crimson", lw=1.2, ls="--",
               label=f"|z| = {threshold:g}")
    ax.set_yticks(ypos)
    ax.set_yticklabels(names, fontsize=7)
    ax.invert_yaxis()
    ax.set_xlabel("|mean| / SE")
    ax.set_title(title)
    ax.grid(True, axis="x", alpha=0.3)
    ax.legend(fontsize=8)
    return _finish(fig, path)


def save_solution(path, sol, *, title):
    """Three stacked panels: the solution, its first two derivatives, and
    the operator-route residual."""
    fig, axes = plt.subplots(3, 1, figsize=(7.5, 8.5), sharex=True)
    axes[0].plot(sol.x, sol.f, lw=1.4)
    axes[0].set_ylabel("f")
    axes[1].plot(sol.x, sol.fp, lw=1.2, label="f'")
    axes[1].plot(sol.x, sol.fpp, lw=1.2, label="f''")
    axes[1].set_ylabel("derivatives")
    axes[1].legend(fontsize=8)
    axes[2].semilogy(sol.x, np.abs(sol.residual) + 1e-300, lw=1.2)
    axes[2].set_ylabel("|residual|")
    axes[2].set_xlabel("x")
    for ax in axes:
        ax.grid(True, alpha=0.3)
    axes[0].set_title(title)
    return _finish(fig, path)


def save_bound_sweep(path, ns, totals, empiricals, terms, *, title):
    """Log-log bound total vs empirical distance over n, with the
    per-term breakdown as thin lines."""
    ns = np.asarray(ns, dtype=float)
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.loglog(ns, totals, "o-", lw=1.8, label="bound total")
    emp = np.asarray(empiricals, dtype=float)
    if np.any(np.isfinite(emp)):
        ax.loglog(ns, emp, "s-", lw=1.8, label="empirical distance")
    for name, vals in terms.items():
        v = np.asarray(vals, dtype=float)
        if np.any(v > 0):
            ax.loglog(ns, np.maximum(v, 1e-300), lw=0.9, alpha=0.7,
                      ls="--", label=name)
    ax.set_xlabel("n")
    ax.set_ylabel("distance / bound")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    return _finish(fig, path)
