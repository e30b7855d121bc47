"""Static figures of grid spectra and pairing plans."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from .geometry import GridSet  # noqa: E402
from .matching import PairingPlan  # noqa: E402

COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red")


def draw_gridset(ax, g: GridSet, color: str = "tab:blue", label: str | None = None, alpha: float = 0.35) -> None:
    eps = g.resolution
    for b in g.sorted_boxes():
        x0, x1, y0, y1 = b.bounds(eps)
        ax.add_patch(Rectangle((x0, y0), x1 - x0, y1 - y0, facecolor=color, edgecolor=color, alpha=alpha, lw=0.8))
    for p in g.isolated_points:
        ax.plot(p.value.real, p.value.imag, "o", color=color, mfc="white" if p.is_cluster_point else color, ms=5)
    # proxy artist so the legend shows one entry per spectrum
    ax.plot([], [], "s", color=color, alpha=alpha + 0.2, label=label)


def _finish(ax, out: str | Path, title: str) -> Path:
    ax.set_aspect("equal")
    ax.autoscale_view()
    ax.margins(0.1)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.set_title(title)
    if ax.get_legend_handles_labels()[1]:
        ax.legend(loc="best", fontsize="small")
    out = Path(out)
    ax.figure.savefig(out, bbox_inches="tight")
    plt.close(ax.figure)
    return out


def plot_spectra(grids: Sequence[GridSet], out: str | Path, title: str = "spectra", labels: Sequence[str] | None = None) -> Path:
    fig, ax = plt.subplots(figsize=(5, 5))
    for k, g in enumerate(grids):
        draw_gridset(ax, g, COLORS[k % len(COLORS)], labels[k] if labels else f"spectrum {k + 1}")
    return _finish(ax, out, title)


def plot_plan(plan: PairingPlan, out: str | Path, grids: Sequence[GridSet] = (), title: str | None = None) -> Path:
    """Matched pairs drawn as segments; the costliest pair is highlighted."""
    fig, ax = plt.subplots(figsize=(5, 5))
    for k, g in enumerate(grids):
        draw_gridset(ax, g, COLORS[k % len(COLORS)], f"spectrum {k + 1}", alpha=0.2)
    frag = plan.fragments()
    pairs = plan.pairs()
    worst = max(pairs, key=lambda ab: abs(frag[ab[0]][1] - frag[ab[1]][1]))
    for a, b in pairs:
        za, zb = frag[a][1], frag[b][1]
        hot = (a, b) == worst
        ax.plot([za.real, zb.real], [za.imag, zb.imag], "-", color="tab:red" if hot else "0.3", lw=1.6 if hot else 0.7)
    for atoms, marker, color in ((plan.atoms1, "o", COLORS[0]), (plan.atoms2, "x", COLORS[1])):
        ax.plot([v.real for v, _ in atoms], [v.imag for v, _ in atoms], marker, color=color, ms=4, ls="none")
    return _finish(ax, out, title or f"pairing plan, cost {plan.cost:.4g}")
