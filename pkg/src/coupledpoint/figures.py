"""Figure rendering for the command-line report path.

matplotlib is imported lazily with the Agg backend so that library use
never touches a display and headless runs work unchanged.  Every function
takes explicit data and a destination path, writes one PNG, and closes the
figure; nothing here feeds back into the numerics.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


_FIGSIZE = (6.0, 4.0)
_DPI = 150


def save_trace_figure(trace: Sequence, path: str, title: str = "pairing distance") -> None:
    """Semilog plot of the per-step distances; zeros are dropped from the
    log axis rather than clipped, so a finished run shows a truncated line."""
    plt = _plt()
    ns = np.array([n for n, _ in trace], dtype=float)
    ms = np.array([m for _, m in trace], dtype=float)
    keep = ms > 0.0
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    if keep.any():
        ax.semilogy(ns[keep], ms[keep], marker="o", markersize=3, linewidth=1.0)
    else:
        ax.text(0.5, 0.5, "all distances are exactly zero",
                ha="center", va="center", transform=ax.transAxes)
    ax.set_xlabel("step")
    ax.set_ylabel("M")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_solution_figure(nodes: np.ndarray, values: np.ndarray, path: str,
                         oracle_nodes: Optional[np.ndarray] = None,
                         oracle_values: Optional[np.ndarray] = None,
                         title: str = "periodic solution") -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(nodes, values, linewidth=1.5, label="solver")
    if oracle_nodes is not None and oracle_values is not None:
        ax.plot(oracle_nodes, oracle_values, linestyle="--", linewidth=1.2,
                label="reference sweep")
        ax.legend()
    ax.set_xlabel("t")
    ax.set_ylabel("u")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_margin_figure(separations: Sequence[float], margins: Sequence[float],
                       path: str, title: str = "growth-bound margins") -> None:
    """Scatter of violation margin against probe separation, log-x.

    An empty margin list still writes a figure (with a note) so the report
    directory has a stable set of files either way.
    """
    plt = _plt()
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    seps = np.asarray(list(separations), dtype=float)
    margs = np.asarray(list(margins), dtype=float)
    if seps.size:
        ax.scatter(seps, margs, s=14)
        ax.set_xscale("log")
    else:
        ax.text(0.5, 0.5, "no violations found",
                ha="center", va="center", transform=ax.transAxes)
    ax.set_xlabel("probe separation a - b")
    ax.set_ylabel("margin")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_altering_figure(functions: dict, path: str, t_max: float = 3.0,
                         points: int = 301,
                         title: str = "altering distances") -> None:
    """Overlay the named gauge functions on [0, t_max]."""
    plt = _plt()
    ts = np.linspace(0.0, t_max, points)
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for name, fn in functions.items():
        ys = np.array([float(fn(t)) for t in ts])
        ax.plot(ts, ys, linewidth=1.3, label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("value")
    ax.set_title(title)
    if functions:
        ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
