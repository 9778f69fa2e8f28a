"""Minimal SVG line and scatter plots.

Output is plain text with fixed float formatting so files diff cleanly and
hash identically across runs.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
WIDTH, HEIGHT = 800, 420
MARGIN = (70, 20, 40, 150)  # left, top, bottom, right (legend)


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, n)


class _Frame:
    def __init__(self, xlim, ylim):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0
        left, top, bottom, right = MARGIN
        self.pw = WIDTH - left - right
        self.ph = HEIGHT - top - bottom

    def px(self, x):
        return MARGIN[0] + (np.asarray(x, dtype=float) - self.x0) / (self.x1 - self.x0) * self.pw

    def py(self, y):
        return MARGIN[1] + self.ph - (np.asarray(y, dtype=float) - self.y0) / (self.y1 - self.y0) * self.ph


def _limits(arrays):
    vals = np.concatenate([np.asarray(a, dtype=float).ravel() for a in arrays])
    vals = vals[np.isfinite(vals)]
    if len(vals) == 0:
        return 0.0, 1.0
    lo, hi = float(vals.min()), float(vals.max())
    pad = 0.05 * (hi - lo) if hi > lo else 1.0
    return lo - pad, hi + pad


def _axes(frame, title, xlabel, ylabel, xticklabels=None):
    out = []
    left, top = MARGIN[0], MARGIN[1]
    out.append(f'<rect x="{left}" y="{top}" width="{frame.pw}" height="{frame.ph}" fill="none" stroke="#333"/>')
    for y in _ticks(frame.y0, frame.y1):
        py = frame.py(y)
        out.append(f'<line x1="{left - 4}" y1="{py:.1f}" x2="{left}" y2="{py:.1f}" stroke="#333"/>')
        out.append(f'<text x="{left - 6}" y="{py + 4:.1f}" text-anchor="end" font-size="11">{y:.4g}</text>')
    xt = xticklabels or [(x, f"{x:.4g}") for x in _ticks(frame.x0, frame.x1)]
    for x, label in xt:
        px = frame.px(x)
        out.append(f'<line x1="{px:.1f}" y1="{top + frame.ph}" x2="{px:.1f}" y2="{top + frame.ph + 4}" stroke="#333"/>')
        out.append(f'<text x="{px:.1f}" y="{top + frame.ph + 16}" text-anchor="middle" font-size="11">{escape(label)}</text>')
    out.append(f'<text x="{left + frame.pw / 2:.1f}" y="{HEIGHT - 6}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{top + frame.ph / 2:.1f}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 14 {top + frame.ph / 2:.1f})">{escape(ylabel)}</text>')
    out.append(f'<text x="{left}" y="{top - 6}" font-size="13">{escape(title)}</text>')
    return out


def _legend(names):
    x = WIDTH - MARGIN[3] + 10
    out = []
    for i, name in enumerate(names):
        y = MARGIN[1] + 14 + 16 * i
        c = PALETTE[i % len(PALETTE)]
        out.append(f'<rect x="{x}" y="{y - 9}" width="10" height="10" fill="{c}"/>')
        out.append(f'<text x="{x + 14}" y="{y}" font-size="11">{escape(name)}</text>')
    return out


def _document(body):
    head = f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">'
    return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>'] + body + ["</svg>", ""])


def line_plot(path, x, series: dict, title="", xlabel="", ylabel="", xticklabels=None) -> None:
    """``series`` maps legend name to a y array aligned with ``x`` (numeric)."""
    x = np.asarray(x, dtype=float)
    frame = _Frame(_limits([x]), _limits(list(series.values())))
    body = _axes(frame, title, xlabel, ylabel, xticklabels)
    for i, (name, y) in enumerate(series.items()):
        pts = " ".join(f"{a:.1f},{b:.1f}" for a, b in zip(frame.px(x), frame.py(y)))
        body.append(f'<polyline fill="none" stroke="{PALETTE[i % len(PALETTE)]}" stroke-width="1.5" points="{pts}"/>')
    body += _legend(list(series))
    with open(path, "w") as fh:
        fh.write(_document(body))


def scatter_plot(path, series: dict, title="", xlabel="", ylabel="") -> None:
    """``series`` maps legend name to an (x, y) pair of arrays."""
    frame = _Frame(_limits([s[0] for s in series.values()]), _limits([s[1] for s in series.values()]))
    body = _axes(frame, title, xlabel, ylabel)
    for i, (name, (x, y)) in enumerate(series.items()):
        c = PALETTE[i % len(PALETTE)]
        for a, b in zip(frame.px(x), frame.py(y)):
            body.append(f'<circle cx="{a:.1f}" cy="{b:.1f}" r="2" fill="{c}" fill-opacity="0.6"/>')
    body += _legend(list(series))
    with open(path, "w") as fh:
        fh.write(_document(body))
