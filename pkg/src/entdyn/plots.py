"""Figure rendering for sweep, scaling, and conditional outputs.

All functions consume rows as read back from the CSV files, so the
report path can render an artifact directory without rerunning any
sampling. Output is vector graphics.
"""
from __future__ import annotations

from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "entdyn"

import matplotlib.pyplot as plt
import numpy as np

from .errors import ConfigError
from .stats import growth_model

PLOT_FORMAT = "svg"


def _groups(rows: Sequence[Mapping], keys: tuple[str, ...]) -> dict:
    out: dict[tuple, list] = {}
    for row in rows:
        out.setdefault(tuple(row[k] for k in keys), []).append(row)
    return out


def plot_growth(
    sweep_rows: Sequence[Mapping],
    path,
    fits: Mapping[str, Mapping[str, float]] | None = None,
) -> None:
    """Mean R1 and R2 against Y per ensemble, with optional fit overlays.

    fits maps measure name (R1 or R2) to the fitted parameter dict; the
    overlay is drawn on a dense grid spanning the data.
    """
    if not sweep_rows:
        raise ConfigError("no sweep rows to plot")
    fig, axes = plt.subplots(1, 2, figsize=(9, 4), sharex=True)
    for (protocol, n, beta), rows in _groups(
        sweep_rows, ("protocol", "N", "beta")
    ).items():
        rows = sorted(rows, key=lambda r: r["Y"])
        y = np.array([r["Y"] for r in rows])
        label = f"{protocol} N={n} b={beta}"
        for ax, measure in zip(axes, ("R1", "R2")):
            v = np.array([r[measure] for r in rows])
            se = np.array([r[f"{measure}_se"] for r in rows])
            ax.errorbar(y, v, yerr=se, fmt="o-", ms=3, lw=0.8, label=label)
    if fits:
        ally = np.array([r["Y"] for r in sweep_rows])
        dense = np.linspace(ally.min(), ally.max(), 400)
        for ax, measure in zip(axes, ("R1", "R2")):
            p = fits.get(measure)
            if p is not None:
                ax.plot(
                    dense,
                    growth_model(dense, p["A"], p["b1"], p["b2"], p["d"]),
                    "k--",
                    lw=1.0,
                    label="fit",
                )
    for ax, measure in zip(axes, ("R1", "R2")):
        ax.set_xlabel("Y")
        ax.set_ylabel(f"mean {measure} (bits)")
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format=PLOT_FORMAT, metadata={"Date": None})
    plt.close(fig)


def plot_scaling(scaling_rows: Sequence[Mapping], path) -> None:
    """Deep-regime measures against n log2(n), one series per measure."""
    if not scaling_rows:
        raise ConfigError("no scaling rows to plot")
    fig, ax = plt.subplots(figsize=(5, 4))
    for (measure,), rows in _groups(scaling_rows, ("measure",)).items():
        rows = sorted(rows, key=lambda r: r["N"])
        n = np.array([r["N"] for r in rows], dtype=float)
        x = n * np.log2(n)
        v = np.array([r["value"] for r in rows])
        se = np.array([r["se"] for r in rows])
        ax.errorbar(x, v, yerr=se, fmt="o-", ms=4, lw=0.8, label=measure)
        slope = float(np.sum(x * v) / np.sum(x * x))
        ax.plot(x, slope * x, ":", lw=0.8, color="gray")
    ax.set_xlabel("N log2 N")
    ax.set_ylabel("deep-regime mean")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format=PLOT_FORMAT, metadata={"Date": None})
    plt.close(fig)


def plot_conditional(cond_rows: Sequence[Mapping], path) -> None:
    """Trace-conditioned entropy ratios against the trace."""
    if not cond_rows:
        raise ConfigError("no conditional rows to plot")
    rows = sorted(cond_rows, key=lambda r: r["s1_center"])
    s = np.array([r["s1_center"] for r in rows])
    fig, ax = plt.subplots(figsize=(5, 4))
    for key, label in (("g_R1", "R1 ratio"), ("g_R2", "R2 ratio")):
        v = np.array([r[key] for r in rows])
        ax.plot(s, v, "o-", ms=3, lw=0.8, label=label)
    ax.axhline(1.0, color="gray", lw=0.6)
    ax.axvline(1.0, color="gray", lw=0.6)
    ax.set_xlabel("trace S1")
    ax.set_ylabel("conditional mean / value at S1 = 1")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format=PLOT_FORMAT, metadata={"Date": None})
    plt.close(fig)
