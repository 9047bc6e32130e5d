"""Deterministic SVG figures for sweep and coverage reports.

All figures are rendered straight to SVG with a fixed viewport, a fixed
hash salt and no timestamp metadata, so identical inputs produce
byte-identical files (the determinism contract; SVG stays diffable in
tests).  Input tables are lists of row dicts with the sweep CSV columns
(eps, ln_eps, theta_eps, lambda, family, mismatch).
"""

from __future__ import annotations

import math
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

PLOT_KINDS = ("spectrum-vs-lntheta", "spectrum-vs-lneps", "coverage")

_FIGSIZE = (8.0, 5.0)
_DPI = 100


class PlotError(Exception):
    pass


def _new_figure():
    from matplotlib.figure import Figure

    matplotlib.rcParams["svg.hashsalt"] = "robin-wander"
    fig = Figure(figsize=_FIGSIZE, dpi=_DPI)
    ax = fig.add_subplot(111)
    return fig, ax


def _save(fig, out_path) -> None:
    fig.savefig(out_path, format="svg", metadata={"Date": None})


def _empty_axes(ax, message: str) -> None:
    ax.text(0.5, 0.5, message, transform=ax.transAxes, ha="center", va="center",
            color="crimson")


_FAMILY_COLORS = {"mode0": "tab:blue"}


def _family_color(family: str) -> str:
    if family in _FAMILY_COLORS:
        return _FAMILY_COLORS[family]
    cycle = ["tab:orange", "tab:green", "tab:red", "tab:purple", "tab:brown"]
    try:
        k = int(str(family).lstrip("k"))
    except ValueError:
        k = 0
    return cycle[k % len(cycle)]


def emit_plot(rows: list[dict], kind: str, out_path, *, b0: float = 1.0,
              interval: tuple[float, float] | None = None) -> None:
    """Render one report figure to `out_path` as deterministic SVG.

    spectrum-vs-lneps: eigenvalues against ln(eps) with vertical period
    markers spaced pi/b0; spectrum-vs-lntheta: eigenvalue branches against
    the extension phase; coverage: covered points and the largest gaps on
    an interval.  An empty table produces empty axes with a warning
    annotation.
    """
    if kind not in PLOT_KINDS:
        raise PlotError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")
    fig, ax = _new_figure()
    if kind == "spectrum-vs-lneps":
        _plot_lneps(ax, rows, b0)
    elif kind == "spectrum-vs-lntheta":
        _plot_theta(ax, rows)
    else:
        _plot_coverage(ax, rows, interval)
    _save(fig, out_path)


def _plot_lneps(ax, rows, b0: float) -> None:
    ax.set_xlabel(r"$\ln\,\varepsilon$")
    ax.set_ylabel(r"eigenvalue $\lambda$")
    ax.set_title("window spectrum along the regularization sweep")
    if not rows:
        _empty_axes(ax, "empty table")
        return
    by_family = defaultdict(list)
    for r in rows:
        by_family[str(r.get("family", "?"))].append((float(r["ln_eps"]), float(r["lambda"])))
    for fam in sorted(by_family):
        pts = sorted(by_family[fam])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o",
                ms=3.5, color=_family_color(fam), label=fam)
    x_all = [float(r["ln_eps"]) for r in rows]
    x_hi, x_lo = max(x_all), min(x_all)
    period = math.pi / b0
    k = 0
    while x_hi - k * period >= x_lo - 1e-12:
        ax.axvline(x_hi - k * period, color="0.8", lw=0.8, zorder=0)
        k += 1
    ax.legend(loc="best", fontsize=8)


def _plot_theta(ax, rows) -> None:
    ax.set_xlabel(r"extension phase $\theta$")
    ax.set_ylabel(r"eigenvalue $\lambda$")
    ax.set_title("extension eigenvalue branches")
    if not rows:
        _empty_axes(ax, "empty table")
        return
    by_family = defaultdict(list)
    for r in rows:
        key = str(r.get("family", "?"))
        by_family[key].append((float(r["theta_eps"]), float(r["lambda"])))
    for fam in sorted(by_family):
        pts = sorted(by_family[fam])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], ".",
                ms=3.0, color=_family_color(fam), label=fam)
    ax.legend(loc="best", fontsize=8)


def _plot_coverage(ax, rows, interval) -> None:
    ax.set_xlabel(r"$\lambda$")
    ax.set_yticks([])
    ax.set_title("spectral coverage")
    if not rows:
        _empty_axes(ax, "empty table")
        return
    pts = sorted(float(r["lambda"]) for r in rows)
    if interval is None:
        interval = (pts[0], pts[-1])
    lo, hi = interval
    ax.plot(pts, [0.0] * len(pts), "|", ms=18, color="tab:blue")
    ax.set_xlim(lo - 0.02 * (hi - lo + 1e-12), hi + 0.02 * (hi - lo + 1e-12))
    # mark gaps wider than twice the median spacing
    inside = [p for p in pts if lo <= p <= hi]
    knots = [lo] + inside + [hi]
    gaps = [(knots[i + 1] - knots[i], knots[i], knots[i + 1]) for i in range(len(knots) - 1)]
    if inside and len(gaps) > 1:
        widths = sorted(g[0] for g in gaps)
        med = widths[len(widths) // 2]
        for width, a, b in gaps:
            if width > 2.0 * med and width > 0.0:
                ax.axvspan(a, b, color="mistyrose", zorder=0)
    ax.set_ylim(-1, 1)
