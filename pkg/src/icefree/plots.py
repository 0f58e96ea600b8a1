"""Static SVG line charts written by hand (no plotting backend).

Output is a pure function of the inputs, so identical runs produce
identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MARCH_BLUE = "#1f5fbf"
SEPT_RED = "#d62728"
GRAY = "#9a9a9a"
SCENARIO_COLORS = {"RCP8.5": "#8c510a", "RCP6.0": "#e6b800", "RCP4.5": "#2b6cb0"}


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _nice_ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    first = np.ceil(lo / step) * step
    return [float(x) for x in np.arange(first, hi + step * 1e-9, step)]


@dataclass
class Chart:
    xlim: tuple[float, float]
    ylim: tuple[float, float]
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    width: int = 900
    height: int = 520
    margin: tuple[int, int, int, int] = (50, 70, 60, 70)  # top, right, bottom, left
    _body: list[str] = field(default_factory=list)

    def px(self, x) -> np.ndarray:
        top, right, bottom, left = self.margin
        x0, x1 = self.xlim
        return left + (np.asarray(x, float) - x0) / (x1 - x0) * (self.width - left - right)

    def py(self, y, ylim: tuple[float, float] | None = None) -> np.ndarray:
        top, right, bottom, left = self.margin
        y0, y1 = ylim or self.ylim
        return top + (y1 - np.asarray(y, float)) / (y1 - y0) * (self.height - top - bottom)

    def line(self, x, y, color="black", width=1.5, dash: str | None = None, ylim=None, opacity=1.0):
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(self.px(x), self.py(y, ylim)))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        if opacity < 1:
            extra += f' stroke-opacity="{opacity}"'
        self._body.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"{extra}/>'
        )

    def band(self, x, lo, hi, color=GRAY, opacity=0.3):
        xs, lo_px, hi_px = self.px(x), self.py(lo), self.py(hi)
        pts = [f"{a:.2f},{b:.2f}" for a, b in zip(xs, hi_px)]
        pts += [f"{a:.2f},{b:.2f}" for a, b in zip(xs[::-1], lo_px[::-1])]
        self._body.append(f'<polygon points="{" ".join(pts)}" fill="{color}" fill-opacity="{opacity}" stroke="none"/>')

    def dots(self, x, y, color="black", r=2.0):
        for a, b in zip(self.px(x), self.py(y)):
            self._body.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="{r}" fill="{color}"/>')

    def bars(self, left_edges, widths, heights, color="#4c72b0", opacity=0.7):
        for x0, w, h in zip(left_edges, widths, heights):
            xa, xb = self.px(x0), self.px(x0 + w)
            ya, yb = self.py(h), self.py(0.0)
            self._body.append(
                f'<rect x="{xa:.2f}" y="{ya:.2f}" width="{xb - xa:.2f}" height="{yb - ya:.2f}" '
                f'fill="{color}" fill-opacity="{opacity}" stroke="white" stroke-width="0.5"/>'
            )

    def shade_x(self, x0: float, x1: float, color="#e6e6e6"):
        top, right, bottom, left = self.margin
        xa, xb = self.px(x0), self.px(x1)
        self._body.append(
            f'<rect x="{xa:.2f}" y="{top}" width="{xb - xa:.2f}" '
            f'height="{self.height - top - bottom}" fill="{color}"/>'
        )

    def hline(self, y: float, color="black", width=1.0, dash=None):
        self.line(self.xlim, [y, y], color=color, width=width, dash=dash)

    def vline(self, x: float, color="black", width=2.0):
        self.line([x, x], self.ylim, color=color, width=width)

    def legend(self, entries: Sequence[tuple[str, str, str | None]]):
        top, right, bottom, left = self.margin
        x, y = self.width - right - 150, top + 14
        for i, (label, color, dash) in enumerate(entries):
            yy = y + 16 * i
            d = f' stroke-dasharray="{dash}"' if dash else ""
            self._body.append(
                f'<line x1="{x}" y1="{yy}" x2="{x + 24}" y2="{yy}" stroke="{color}" stroke-width="2"{d}/>'
            )
            self._body.append(f'<text x="{x + 30}" y="{yy + 4}" font-size="11">{label}</text>')

    def _axes(self, right_axis: tuple[float, float] | None = None, right_label: str = "") -> list[str]:
        top, right, bottom, left = self.margin
        w, h = self.width, self.height
        out = [
            f'<rect x="{left}" y="{top}" width="{w - left - right}" height="{h - top - bottom}" '
            'fill="none" stroke="black" stroke-width="1"/>'
        ]
        for t in _nice_ticks(*self.xlim, n=8):
            xp = float(self.px(t))
            out.append(f'<line x1="{xp:.2f}" y1="{h - bottom}" x2="{xp:.2f}" y2="{h - bottom + 5}" stroke="black"/>')
            out.append(f'<text x="{xp:.2f}" y="{h - bottom + 18}" font-size="11" text-anchor="middle">{_fmt(t)}</text>')
        for t in _nice_ticks(*self.ylim):
            yp = float(self.py(t))
            out.append(f'<line x1="{left - 5}" y1="{yp:.2f}" x2="{left}" y2="{yp:.2f}" stroke="black"/>')
            out.append(f'<text x="{left - 8}" y="{yp + 4:.2f}" font-size="11" text-anchor="end">{_fmt(t)}</text>')
        if right_axis is not None:
            for t in _nice_ticks(*right_axis):
                yp = float(self.py(t, right_axis))
                out.append(f'<line x1="{w - right}" y1="{yp:.2f}" x2="{w - right + 5}" y2="{yp:.2f}" stroke="black"/>')
                out.append(f'<text x="{w - right + 8}" y="{yp + 4:.2f}" font-size="11">{_fmt(t)}</text>')
            out.append(
                f'<text x="{w - 15}" y="{h / 2}" font-size="12" text-anchor="middle" '
                f'transform="rotate(90 {w - 15} {h / 2})">{right_label}</text>'
            )
        out.append(f'<text x="{w / 2}" y="{h - 15}" font-size="12" text-anchor="middle">{self.xlabel}</text>')
        out.append(
            f'<text x="18" y="{h / 2}" font-size="12" text-anchor="middle" '
            f'transform="rotate(-90 18 {h / 2})">{self.ylabel}</text>'
        )
        out.append(f'<text x="{w / 2}" y="28" font-size="15" text-anchor="middle" font-weight="bold">{self.title}</text>')
        return out

    def render(self, right_axis: tuple[float, float] | None = None, right_label: str = "") -> str:
        top, right, bottom, left = self.margin
        clip = (
            f'<clipPath id="plot"><rect x="{left}" y="{top}" width="{self.width - left - right}" '
            f'height="{self.height - top - bottom}"/></clipPath>'
        )
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}" font-family="Helvetica, Arial, sans-serif">'
        )
        parts = [head, f"<defs>{clip}</defs>", '<rect width="100%" height="100%" fill="white"/>']
        parts.append('<g clip-path="url(#plot)">')
        parts += self._body
        parts.append("</g>")
        parts += self._axes(right_axis, right_label)
        parts.append("</svg>")
        return "\n".join(parts) + "\n"


def monthly_trends_svg(
    title: str,
    decimal_time: np.ndarray,
    trends: np.ndarray,
    sample_end: float,
    obs_time: np.ndarray,
    obs_values: np.ndarray,
    obs_months: np.ndarray,
    band_lo: np.ndarray | None = None,
    band_hi: np.ndarray | None = None,
) -> str:
    """Twelve monthly trend curves, shape (12, n_years), over decimal years.

    March is drawn blue, September red and the other months gray; March and
    September observations are dotted, the out-of-sample span is shaded.
    Optional ``band_*`` arrays (12, n_years) add dotted March/September bands.
    """
    ymin = min(0.0, float(np.nanmin(trends)))
    if band_lo is not None:
        ymin = min(ymin, float(np.nanmin(band_lo[[2, 8]])))
    ymax = max(float(np.nanmax(trends)), float(np.max(obs_values, initial=0.0))) + 0.5
    c = Chart((float(decimal_time.min()), float(decimal_time.max())), (ymin, ymax), title,
              "Year", "Sea ice extent (million km²)")
    c.shade_x(sample_end, float(decimal_time.max()))
    c.hline(0.0, color="black", width=0.8)
    for m in range(12):
        if m in (2, 8):
            continue
        c.line(decimal_time[m], trends[m], color=GRAY, width=1.0)
    for m, color in ((2, MARCH_BLUE), (8, SEPT_RED)):
        c.line(decimal_time[m], trends[m], color=color, width=2.0)
        if band_lo is not None:
            c.line(decimal_time[m], band_lo[m], color=color, width=1.2, dash="2,3")
            c.line(decimal_time[m], band_hi[m], color=color, width=1.2, dash="2,3")
        sel = obs_months == m + 1
        c.dots(obs_time[sel], obs_values[sel], color=color, r=2.2)
    c.legend([("March", MARCH_BLUE, None), ("September", SEPT_RED, None), ("Other months", GRAY, None)])
    return c.render()


def shadow_window_svg(title: str, t: np.ndarray, shadow: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> str:
    pad = 0.3
    c = Chart((float(t.min()), float(t.max())),
              (float(lo.min()) - pad, float(hi.max()) + pad), title, "Year", "Shadow sea ice extent (million km²)")
    c.band(t, lo, hi, color=GRAY, opacity=0.35)
    c.line(t, shadow, color="black", width=2.0)
    c.hline(0.0, color=SEPT_RED, width=1.5)
    return c.render()


def benchmark_svg(
    title: str,
    hist_years: np.ndarray,
    hist_values: np.ndarray,
    stat_years: np.ndarray,
    stat_full: np.ndarray,
    stat_lo: np.ndarray,
    stat_hi: np.ndarray,
    scenarios: Sequence[tuple[str, np.ndarray, np.ndarray]],
    stat_pre: np.ndarray | None = None,
    pre_years: np.ndarray | None = None,
) -> str:
    x0 = float(min(hist_years.min(), stat_years.min()))
    x1 = float(max(stat_years.max(), max((s[1].max() for s in scenarios), default=stat_years.max())))
    ymax = max(float(hist_values.max()), max((float(s[2].max()) for s in scenarios), default=0.0)) + 0.5
    c = Chart((x0, x1), (0.0, ymax), title, "Year", "September sea ice extent (million km²)")
    c.band(stat_years, stat_lo, stat_hi, color=SEPT_RED, opacity=0.08)
    c.line(stat_years, stat_lo, color=SEPT_RED, width=1.0, dash="2,3")
    c.line(stat_years, stat_hi, color=SEPT_RED, width=1.0, dash="2,3")
    c.line(stat_years, stat_full, color=SEPT_RED, width=2.0)
    entries = [("Observed", "black", None), ("Statistical (full)", SEPT_RED, None)]
    if stat_pre is not None:
        c.line(pre_years, stat_pre, color=SEPT_RED, width=2.0, dash="7,4")
        entries.append(("Statistical (pre-2006)", SEPT_RED, "7,4"))
    for label, yrs, vals in scenarios:
        color = SCENARIO_COLORS.get(label, "#555555")
        c.line(yrs, vals, color=color, width=2.0)
        entries.append((label, color, None))
    c.line(hist_years, hist_values, color="black", width=2.0)
    c.legend(entries)
    return c.render()


def event_distributions_svg(
    title: str,
    curves: Sequence[tuple[str, np.ndarray, np.ndarray, str, str | None]],
    marker_year: float | None = None,
    xlim: tuple[float, float] | None = None,
) -> str:
    """``curves`` holds (label, years, probability, color, dash) tuples."""
    allx = np.concatenate([cv[1] for cv in curves])
    ally = np.concatenate([cv[2] for cv in curves])
    xlim = xlim or (float(allx.min()), float(allx.max()))
    c = Chart(xlim, (0.0, float(ally.max()) * 1.1 + 1e-9), title, "Year", "Probability")
    for label, yrs, prob, color, dash in curves:
        c.line(yrs, prob, color=color, width=2.0, dash=dash)
    if marker_year is not None:
        c.vline(marker_year, color=SCENARIO_COLORS["RCP8.5"], width=2.5)
    c.legend([(cv[0], cv[3], cv[4]) for cv in curves])
    return c.render()


def residuals_svg(title: str, t: np.ndarray, actual: np.ndarray, fitted: np.ndarray, resid: np.ndarray) -> str:
    """Actual and fitted on the right axis, residuals enlarged on the left axis."""
    r = float(np.abs(resid).max()) * 1.1
    right = (0.0, float(max(actual.max(), fitted.max())) * 1.1)
    c = Chart((float(t.min()), float(t.max())), (-r, r), title, "Year", "Residual (million km²)")
    c.line(t, resid, color="#2b6cb0", width=1.0)
    c.hline(0.0, color=GRAY, width=0.8)
    c.line(t, actual, color=SEPT_RED, width=1.0, ylim=right)
    c.line(t, fitted, color="#2ca02c", width=1.0, ylim=right)
    c.legend([("Residual (left)", "#2b6cb0", None), ("Actual (right)", SEPT_RED, None), ("Fitted (right)", "#2ca02c", None)])
    return c.render(right_axis=right, right_label="Sea ice extent (million km²)")


def histogram_svg(title: str, edges: np.ndarray, density: np.ndarray, grid: np.ndarray, gauss: np.ndarray) -> str:
    """Histogram on the density scale with a Gaussian density curve."""
    top = float(max(density.max(), gauss.max())) * 1.1
    c = Chart((float(edges[0]), float(edges[-1])), (0.0, top), title, "Innovation residual", "Density")
    c.bars(edges[:-1], np.diff(edges), density)
    c.line(grid, gauss, color=SEPT_RED, width=2.0)
    return c.render()
