"""Log-log SVG plots of convergence curves (matplotlib, Agg backend)."""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# stable bytes across runs: no timestamp, fixed element ids
matplotlib.rcParams["svg.hashsalt"] = "spectral-invariance"
matplotlib.rcParams["svg.fonttype"] = "none"


def plot_curves(curves, path: str, title: str = "", ylabel: str = "mean divergence") -> str:
    """Write one log-log panel with a line and 2SE band per curve."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for c in curves:
        ns = np.asarray(c.ns, dtype=float)
        label = c.name if np.isnan(c.slope) else f"{c.name} (slope {c.slope:.3f})"
        ax.plot(ns, c.means, marker="o", label=label)
        lo = np.clip(c.means - 2 * c.stderrs, c.means * 1e-3, None)
        ax.fill_between(ns, lo, c.means + 2 * c.stderrs, alpha=0.2)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


__all__ = ["plot_curves"]
