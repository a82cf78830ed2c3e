"""Self-contained SVG line plots for sweep curves and function profiles.

One data polyline per plot, axes and tick labels inlined, no external
assets; the output is deterministic for fixed input.
"""

from __future__ import annotations

from .csvio import read_csv
from .errors import SchemaMismatch

WIDTH, HEIGHT = 640, 480
MARGIN = 60

LINE = "line"        # first column vs second column, e.g. rate vs radius
PROFILE = "profile"  # 1D function profile: x vs value


def _ticks(lo, hi, count=5):
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (count - 1)
    return [lo + k * step for k in range(count)]


def render_line_plot(points, x_label, y_label, title) -> str:
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(x):
        return MARGIN + (x - x_lo) / (x_hi - x_lo) * (WIDTH - 2 * MARGIN)

    def sy(y):
        return HEIGHT - MARGIN - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - 2 * MARGIN)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="monospace" font-size="14">{title}</text>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" stroke="black"/>',
    ]
    for tx in _ticks(x_lo, x_hi):
        parts.append(
            f'<text x="{sx(tx):.1f}" y="{HEIGHT - MARGIN + 18}" '
            f'text-anchor="middle" font-family="monospace" font-size="10">'
            f"{tx:.6g}</text>")
    for ty in _ticks(y_lo, y_hi):
        parts.append(
            f'<text x="{MARGIN - 6}" y="{sy(ty) + 3:.1f}" text-anchor="end" '
            f'font-family="monospace" font-size="10">{ty:.6g}</text>')
    parts.append(
        f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle" '
        f'font-family="monospace" font-size="12">{x_label}</text>')
    parts.append(
        f'<text x="16" y="{HEIGHT / 2:.1f}" text-anchor="middle" '
        f'font-family="monospace" font-size="12" '
        f'transform="rotate(-90 16 {HEIGHT / 2:.1f})">{y_label}</text>')
    coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in points)
    parts.append(
        f'<polyline points="{coords}" fill="none" stroke="#1f77b4" '
        'stroke-width="1.5"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def plot_csv(csv_path, out_path, kind) -> None:
    """Plot the first two numeric columns of a CSV as one polyline."""
    if kind not in (LINE, PROFILE):
        raise SchemaMismatch(f"unknown plot kind {kind!r}")
    header, rows = read_csv(csv_path)
    if len(header) < 2 or not rows:
        raise SchemaMismatch(
            f"{csv_path}: need at least two columns and one data row")
    try:
        points = [(float(r[0]), float(r[1])) for r in rows]
    except (ValueError, IndexError) as exc:
        raise SchemaMismatch(f"{csv_path}: non-numeric data: {exc}") from exc
    if kind == PROFILE:
        xs = [p[0] for p in points]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise SchemaMismatch(
                f"{csv_path}: profile plots need a strictly increasing "
                "first column")
        if not all(abs(p[1]) < float("inf") for p in points):
            raise SchemaMismatch(f"{csv_path}: non-finite profile values")
    text = render_line_plot(points, header[0], header[1],
                            f"{kind}: {header[1]} vs {header[0]}")
    with open(out_path, "w", encoding="ascii") as fh:
        fh.write(text)
