"""Figure rendering for report paths; always writes files, never opens windows."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "save_mask_figure",
    "save_token_energy_figure",
    "save_distribution_figure",
    "save_landscape_figure",
    "save_benchmark_figure",
    "save_barrier_figure",
]

# suppress the version text chunk so identical runs emit identical bytes
_PNG_META = {"Software": None}
_DPI = 120


def _save(fig, path: str | Path) -> None:
    fig.savefig(Path(path), dpi=_DPI, metadata=_PNG_META, bbox_inches="tight")
    plt.close(fig)


def save_mask_figure(mask: np.ndarray, path: str | Path, title: str = "head masks") -> None:
    """Binary selection map, heads by tokens."""
    mask = np.asarray(mask)
    fig, ax = plt.subplots(figsize=(max(3.0, 0.45 * mask.shape[1]), max(2.0, 0.6 * mask.shape[0] + 1.0)))
    ax.imshow(mask, cmap="Greys", vmin=0, vmax=1, aspect="auto", interpolation="nearest")
    ax.set_xlabel("token")
    ax.set_ylabel("head")
    ax.set_xticks(range(mask.shape[1]))
    ax.set_yticks(range(mask.shape[0]))
    ax.set_title(title)
    _save(fig, path)


def save_token_energy_figure(
    e_token: np.ndarray, path: str | Path, title: str = "token energies"
) -> None:
    """Heat map of per-token energies, heads by tokens."""
    e = np.asarray(e_token)
    fig, ax = plt.subplots(figsize=(max(3.5, 0.5 * e.shape[1]), max(2.0, 0.6 * e.shape[0] + 1.0)))
    im = ax.imshow(e, cmap="coolwarm", aspect="auto", interpolation="nearest")
    fig.colorbar(im, ax=ax, label="energy")
    ax.set_xlabel("token")
    ax.set_ylabel("head")
    ax.set_xticks(range(e.shape[1]))
    ax.set_yticks(range(e.shape[0]))
    ax.set_title(title)
    _save(fig, path)


def save_distribution_figure(
    values: np.ndarray, path: str | Path, title: str = "distribution"
) -> None:
    """Histogram with mean and standard deviation in the title."""
    values = np.asarray(values).reshape(-1)
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.hist(values, bins=50, color="tab:blue", alpha=0.85)
    ax.set_xlabel("value")
    ax.set_ylabel("count")
    ax.set_title(f"{title} (mean {values.mean():.4f}, std {values.std():.4f})")
    _save(fig, path)


def save_landscape_figure(landscape, path: str | Path) -> None:
    """Single-bit mutation energies around the base energy line."""
    xs = [r.flat_index for r in landscape.rows]
    ys = [r.mutated_energy for r in landscape.rows]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.35 * len(xs)), 3.2))
    ax.axhline(landscape.base_energy, color="tab:red", lw=1.2, label="base energy")
    ax.stem(xs, ys, basefmt=" ")
    ax.set_xlabel("flipped variable")
    ax.set_ylabel("energy")
    ax.set_title("single-bit mutation landscape")
    ax.legend(loc="best")
    _save(fig, path)


def save_benchmark_figure(aggregates: dict, path: str | Path) -> None:
    """Success probability per backend."""
    names = list(aggregates)
    probs = [aggregates[b]["p_success"] for b in names]
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.bar(names, probs, color="tab:green", alpha=0.85)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("ground-state hit rate")
    ax.set_title("backend success probability")
    for i, p in enumerate(probs):
        ax.text(i, p + 0.02, f"{p:.2f}", ha="center", fontsize=8)
    _save(fig, path)


def save_barrier_figure(rows: list, path: str | Path) -> None:
    """Scatter of log success probability against -beta * b_min."""
    xs = [row[5] for row in rows if row[6] != ""]
    ys = [row[6] for row in rows if row[6] != ""]
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.scatter(xs, ys, s=18, color="tab:purple")
    ax.set_xlabel("-beta_end * b_min")
    ax.set_ylabel("log p_success")
    ax.set_title("barrier height vs annealing success")
    _save(fig, path)
