"""Figures written next to the CSV/JSON outputs of ``nssubdiv analyze``."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .localmatrix import DecayFit  # noqa: E402
from .symbols import EquivalenceEstimate  # noqa: E402


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    # fixed metadata keeps repeated runs byte-identical
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_decay(fits: Mapping[int, DecayFit], path: str | Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for n, fit in sorted(fits.items()):
        ks = [k for k, u in zip(fit.ks, fit.usable) if u]
        vs = [v for v, u in zip(fit.norms, fit.usable) if u]
        (line,) = ax.semilogy(ks, vs, "o", ms=3, label=f"n={n}, sigma={fit.sigma:.3f}")
        ax.semilogy(fit.ks, fit.fitted, "-", lw=0.8, color=line.get_color())
    ax.set_xlabel("level k")
    ax.set_ylabel("||S_k - S||_inf")
    ax.set_title(title or "local matrix decay")
    ax.legend(fontsize=7)
    return _save(fig, Path(path))


def plot_equivalence(estimates: Mapping[str, EquivalenceEstimate], path: str | Path, title: str = "") -> Path:
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 3.6))
    for label, est in estimates.items():
        ks = range(1, len(est.terms) + 1)
        pos = [(k, t) for k, t in zip(ks, est.terms) if t > 0]
        if pos:
            a1.semilogy(*zip(*pos), ".-", ms=3, lw=0.8, label=label)
        a2.plot(ks, est.partial_sums, "-", lw=1.0, label=f"{label} ({est.verdict})")
    a1.set_xlabel("level k")
    a1.set_ylabel("weighted mask distance")
    a2.set_xlabel("level K")
    a2.set_ylabel("partial sum")
    a1.legend(fontsize=7)
    a2.legend(fontsize=7)
    fig.suptitle(title or "asymptotic equivalence")
    return _save(fig, Path(path))


def plot_angles(series: Mapping[int, tuple[list[int], list[float]]], path: str | Path, title: str = "") -> Path:
    """``series`` maps valence to (levels, max angle in radians)."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for n, (ks, theta) in sorted(series.items()):
        pos = [(k, math.degrees(t)) for k, t in zip(ks, theta) if t > 0]
        if pos:
            ax.semilogy(*zip(*pos), "o-", ms=3, lw=0.8, label=f"n={n}")
    ax.axhline(1.0, color="grey", lw=0.6, ls="--")
    ax.set_xlabel("ring k")
    ax.set_ylabel("max angle to limit normal [deg]")
    ax.set_title(title or "ring normal deviation")
    ax.legend(fontsize=7)
    return _save(fig, Path(path))
