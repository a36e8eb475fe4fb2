"""Figures and snapshot renderings written next to the CSV output."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import PathPatch  # noqa: E402
from matplotlib.path import Path as MplPath  # noqa: E402
import numpy as np  # noqa: E402

from .contour import Contour  # noqa: E402
from .grid import GridSpec  # noqa: E402
from .optimizer import IterationRecord  # noqa: E402

SVG_PIXELS = 480


def svg_snapshot(contour: Contour, spec: GridSpec, title: str = "") -> str:
    """The shape as one even-odd filled SVG path (y axis pointing up)."""
    xmin, xmax, ymin, ymax = spec.bounds
    w, h = xmax - xmin, ymax - ymin
    scale = SVG_PIXELS / max(w, h)
    width, height = w * scale, h * scale

    def xy(p):
        return f"{(p[0] - xmin) * scale:.3f},{(ymax - p[1]) * scale:.3f}"

    parts = []
    for k in range(contour.n_loops):
        pts = contour.loop_points(k)
        parts.append("M" + " L".join(xy(p) for p in pts) + " Z")
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.3f} {height:.3f}">',
        f'<rect width="{width:.3f}" height="{height:.3f}" fill="white" stroke="#999"/>',
        f'<path fill="#4a7ab5" fill-rule="evenodd" stroke="#1d3557" stroke-width="1" '
        f'd="{" ".join(parts)}"/>',
    ]
    if title:
        lines.append(f'<text x="6" y="16" font-family="sans-serif" font-size="13">{title}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _shape_patch(contour: Contour, **kw) -> PathPatch:
    verts, codes = [], []
    for k in range(contour.n_loops):
        pts = contour.loop_points(k)
        verts.extend(pts.tolist() + [pts[0].tolist()])
        codes.extend([MplPath.MOVETO] + [MplPath.LINETO] * (len(pts) - 1) + [MplPath.CLOSEPOLY])
    return PathPatch(MplPath(verts, codes), **kw)


def plot_history(history: Sequence[IterationRecord], path) -> None:
    it = np.array([r.iter for r in history])
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    series = [("F", [r.F for r in history]), ("H", [r.H for r in history]),
              ("F + eps H", [r.F_eps for r in history]), ("alpha", [r.alpha for r in history])]
    for ax, (label, vals) in zip(axes.ravel(), series):
        ax.plot(it, vals, lw=1.2)
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    for ax in axes[1]:
        ax.set_xlabel("iteration")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def plot_shapes(initial: Contour, final: Contour, spec: GridSpec, path) -> None:
    xmin, xmax, ymin, ymax = spec.bounds
    fig, axes = plt.subplots(1, 2, figsize=(9, 4.6))
    for ax, contour, title in ((axes[0], initial, "initial"), (axes[1], final, "final")):
        ax.add_patch(_shape_patch(contour, facecolor="#4a7ab5", edgecolor="#1d3557", lw=0.8))
        ax.set_xlim(xmin, xmax)
        ax.set_ylim(ymin, ymax)
        ax.set_aspect("equal")
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def write_figures(out_dir: Path, history: Sequence[IterationRecord], initial: Contour,
                  final: Contour, spec: GridSpec) -> list[Path]:
    out_dir = Path(out_dir)
    paths = [out_dir / "history.png", out_dir / "shapes.png"]
    plot_history(history, paths[0])
    plot_shapes(initial, final, spec, paths[1])
    return paths
