"""Static SVG figures: histogram markers with law overlays."""

from __future__ import annotations

from enum import Enum

import matplotlib
import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

from ..laws import LawCurve, law_curve

__all__ = ["PlotStyle", "emit_plot", "overlay_curves", "LOG_FLOOR"]

LOG_FLOOR = 1e-6


class PlotStyle(str, Enum):
    LINEAR = "linear"
    LOG_Y = "log_y"


def overlay_curves(dist, overlays, points=600):
    """Turn overlay records such as ``{"law": "mp"}`` into curves on the histogram support."""
    lo, hi = float(dist.bin_edges[0]), float(dist.bin_edges[-1])
    grid = np.linspace(lo, hi, points)
    curves = []
    for rec in overlays:
        params = {k: v for k, v in rec.items() if k != "law"}
        if rec["law"] == "mp":
            grid_law = np.linspace(max(lo, 1e-3), min(hi, 4.0), points)
        elif rec["law"] == "porter-thomas":
            grid_law = np.linspace(max(lo, 1e-6), hi, points)
        else:
            grid_law = grid
        curves.append(law_curve(rec["law"], grid_law, **params))
    return curves


def emit_plot(dist, overlays, style="linear", path="plot.svg", title=None, xlabel=None):
    """Write a standalone SVG of ``dist`` with ``overlays`` (LawCurve list).

    ``log_y`` drops densities below :data:`LOG_FLOOR`. The output carries no
    timestamp and uses a fixed hash salt, so equal inputs give equal bytes.
    """
    style = PlotStyle(style)
    if dist.counts.sum() == 0:
        raise ValueError("cannot plot an empty distribution")
    for curve in overlays:
        if not isinstance(curve, LawCurve):
            raise TypeError("overlays must be LawCurve instances")
    lo, hi = dist.bin_edges[0], dist.bin_edges[-1]

    fig = Figure(figsize=(6.0, 4.2))
    FigureCanvasSVG(fig)
    ax = fig.add_subplot(1, 1, 1)
    x, y = dist.centers, dist.density
    if style is PlotStyle.LOG_Y:
        keep = y >= LOG_FLOOR
        x, y = x[keep], y[keep]
        ax.set_yscale("log")
    ax.plot(x, y, "o", ms=3, mfc="none", label=f"empirical (n={dist.n})")
    for curve in overlays:
        g, d = curve.grid, curve.density
        inside = (g >= lo) & (g <= hi) & np.isfinite(d)
        if style is PlotStyle.LOG_Y:
            inside &= d >= LOG_FLOOR
        ax.plot(g[inside], d[inside], "-", lw=1.4, label=curve.label())
    ax.set_xlim(lo, hi)
    ax.set_xlabel(xlabel or "x")
    ax.set_ylabel("P(x)")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    with matplotlib.rc_context({"svg.hashsalt": "schmidt-evs", "svg.fonttype": "path"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    return path
