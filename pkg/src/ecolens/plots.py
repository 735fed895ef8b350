"""Static SVG figures. Output is byte-stable: fixed hash salt, no date metadata."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .users import BIN_LABELS  # noqa: E402

_RC = {"svg.hashsalt": "ecolens", "svg.fonttype": "path", "font.size": 8}


def _save(fig, path: str | Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def _thin(n: np.ndarray, max_points: int = 2000) -> np.ndarray:
    """Log-spaced sample indices for plotting long per-post series."""
    if len(n) <= max_points:
        return np.arange(len(n))
    idx = np.unique(np.geomspace(1, len(n), max_points).astype(np.int64) - 1)
    return idx


def novelty_figure(series: Mapping[str, tuple[np.ndarray, np.ndarray, np.ndarray]], path: str | Path) -> None:
    """Distinct libraries (log-log) and distinct pairs (linear) against posts."""
    with plt.rc_context(_RC):
        fig, (ax_d, ax_p) = plt.subplots(1, 2, figsize=(9, 3.6))
        for lang, (n, d, p) in sorted(series.items()):
            idx = _thin(n)
            ok = d[idx] > 0
            ax_d.loglog(n[idx][ok], d[idx][ok], label=lang, lw=1)
            ax_p.plot(n[idx], p[idx], label=lang, lw=1)
        ax_d.set_xlabel("posts")
        ax_d.set_ylabel("distinct libraries")
        ax_p.set_xlabel("posts")
        ax_p.set_ylabel("distinct library pairs")
        ax_d.legend(fontsize=6, ncol=2)
        fig.tight_layout()
        _save(fig, path)


def pareto_figure(curves: Mapping[str, tuple[np.ndarray, np.ndarray]], path: str | Path) -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.5, 4))
        ax.plot([0, 1], [0, 1], color="0.6", ls="--", lw=0.8)
        for lang, (x, y) in sorted(curves.items()):
            ax.plot(x, y, label=lang, lw=1)
        ax.set_xlabel("fraction of libraries (most imported first)")
        ax.set_ylabel("fraction of imports")
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.01)
        ax.legend(fontsize=6)
        fig.tight_layout()
        _save(fig, path)


def user_bins_figure(rows, path: str | Path, lang: str = "pooled") -> None:
    rows = [r for r in rows if r.lang == lang]
    simple = [r.simple_rate or 0.0 for r in rows]
    pair = [r.pair_rate or 0.0 for r in rows]
    x = np.arange(len(BIN_LABELS))
    with plt.rc_context(_RC):
        fig, (a1, a2) = plt.subplots(1, 2, figsize=(8, 3.2), sharex=True)
        a1.bar(x, simple, color="tab:blue")
        a2.bar(x, pair, color="tab:orange")
        a1.set_ylabel("P(post has a novel library)")
        a2.set_ylabel("P(post has a novel pair)")
        for ax in (a1, a2):
            ax.set_xticks(x, BIN_LABELS)
            ax.set_xlabel("prior posts in ecosystem")
        fig.suptitle(lang)
        fig.tight_layout()
        _save(fig, path)


def geo_figure(table, path: str | Path) -> None:
    rows = sorted(table.countries, key=lambda r: (r.simple_rate, r.country))
    y = np.arange(len(rows))
    with plt.rc_context(_RC):
        fig, (a1, a2) = plt.subplots(1, 2, figsize=(8, max(2.5, 0.18 * len(rows) + 1)), sharey=True)
        a1.plot([r.simple_rate for r in rows], y, "o", ms=3)
        a2.plot([r.pair_rate for r in rows], y, "o", ms=3, color="tab:orange")
        if table.global_simple is not None:
            a1.axvline(table.global_simple, color="red", lw=0.8)
            a2.axvline(table.global_pair, color="red", lw=0.8)
        a1.set_yticks(y, [r.country for r in rows])
        a1.set_xlabel("novel library rate")
        a2.set_xlabel("novel pair rate")
        fig.tight_layout()
        _save(fig, path)
