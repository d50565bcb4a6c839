"""Hand-rolled, dependency-free SVG emission for heatmaps and line charts.

Figures are aids; the CSV files remain the data contract. Everything here
builds plain SVG strings (rect grids and polylines) so no renderer is
needed.
"""
from __future__ import annotations

from xml.sax.saxutils import escape


def _color(v: float, lo: float, hi: float) -> str:
    """Blue -> white -> red ramp."""
    if hi <= lo:
        t = 0.5
    else:
        t = min(1.0, max(0.0, (v - lo) / (hi - lo)))
    if t < 0.5:
        s = t / 0.5
        r, g, b = int(40 + 215 * s), int(60 + 195 * s), 255
    else:
        s = (t - 0.5) / 0.5
        r, g, b = 255, int(255 - 195 * s), int(255 - 215 * s)
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap_svg(values, x_label: str, y_label: str, title: str = "",
                vmin: float = None, vmax: float = None) -> str:
    """values[i][j]: row i = y_label axis, column j = x_label axis."""
    rows = len(values)
    cols = len(values[0])
    lo = vmin if vmin is not None else min(min(r) for r in values)
    hi = vmax if vmax is not None else max(max(r) for r in values)
    cell = 16
    mx, my = 70, 50
    w, h = mx + cols * cell + 90, my + rows * cell + 60
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<text x="{mx}" y="24" font-family="sans-serif" font-size="15">'
        f'{escape(title)}</text>',
    ]
    for i, row in enumerate(values):
        for j, v in enumerate(row):
            parts.append(
                f'<rect x="{mx + j * cell}" y="{my + i * cell}" width="{cell}" '
                f'height="{cell}" fill="{_color(float(v), lo, hi)}"/>')
    parts.append(
        f'<text x="{mx + cols * cell / 2:.0f}" y="{my + rows * cell + 36}" '
        f'font-family="sans-serif" font-size="12" text-anchor="middle">'
        f'{escape(x_label)}</text>')
    parts.append(
        f'<text x="20" y="{my + rows * cell / 2:.0f}" font-family="sans-serif" '
        f'font-size="12" transform="rotate(-90 20 {my + rows * cell / 2:.0f})" '
        f'text-anchor="middle">{escape(y_label)}</text>')
    # color-scale legend
    lx = mx + cols * cell + 20
    for k in range(20):
        v = hi - (hi - lo) * k / 19.0
        parts.append(f'<rect x="{lx}" y="{my + k * 8}" width="14" height="8" '
                     f'fill="{_color(v, lo, hi)}"/>')
    parts.append(f'<text x="{lx + 18}" y="{my + 8}" font-family="sans-serif" '
                 f'font-size="10">{hi:.3g}</text>')
    parts.append(f'<text x="{lx + 18}" y="{my + 160}" font-family="sans-serif" '
                 f'font-size="10">{lo:.3g}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def line_chart_svg(series: dict, x_label: str, y_label: str,
                   title: str = "") -> str:
    """series: {name: (xs, ys)}; one polyline per entry."""
    w, h = 640, 420
    mx0, mx1, my0, my1 = 70, 30, 50, 50
    pw, ph = w - mx0 - mx1, h - my0 - my1
    xs_all = [x for xs, _ in series.values() for x in xs]
    ys_all = [y for _, ys in series.values() for y in ys]
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def px(x):
        return mx0 + pw * (x - x_lo) / (x_hi - x_lo)

    def py(y):
        return my0 + ph * (1.0 - (y - y_lo) / (y_hi - y_lo))

    colors = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<rect x="{mx0}" y="{my0}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#888"/>',
        f'<text x="{mx0}" y="24" font-family="sans-serif" font-size="15">'
        f'{escape(title)}</text>',
        f'<text x="{mx0 + pw / 2:.0f}" y="{h - 12}" font-family="sans-serif" '
        f'font-size="12" text-anchor="middle">{escape(x_label)}</text>',
        f'<text x="20" y="{my0 + ph / 2:.0f}" font-family="sans-serif" '
        f'font-size="12" transform="rotate(-90 20 {my0 + ph / 2:.0f})" '
        f'text-anchor="middle">{escape(y_label)}</text>',
        f'<text x="{mx0 - 6}" y="{py(y_lo) + 4:.1f}" font-family="sans-serif" '
        f'font-size="10" text-anchor="end">{y_lo:.4g}</text>',
        f'<text x="{mx0 - 6}" y="{py(y_hi) + 4:.1f}" font-family="sans-serif" '
        f'font-size="10" text-anchor="end">{y_hi:.4g}</text>',
        f'<text x="{px(x_lo):.1f}" y="{my0 + ph + 14}" font-family="sans-serif" '
        f'font-size="10">{x_lo:.4g}</text>',
        f'<text x="{px(x_hi):.1f}" y="{my0 + ph + 14}" font-family="sans-serif" '
        f'font-size="10" text-anchor="end">{x_hi:.4g}</text>',
    ]
    for idx, (name, (xs, ys)) in enumerate(series.items()):
        color = colors[idx % len(colors)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.6"/>')
        parts.append(f'<text x="{w - mx1 - 150}" y="{my0 + 16 + 16 * idx}" '
                     f'font-family="sans-serif" font-size="11" fill="{color}">'
                     f'{escape(str(name))}</text>')
    parts.append("</svg>")
    return "\n".join(parts)
