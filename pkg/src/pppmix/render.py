"""Standalone SVG rendering of density grids.

Presentation only: the CSV grids are the testable artifact. Output is
byte-deterministic (no timestamps, no generated ids).
"""

from __future__ import annotations

from .analysis import DensityGrid

_W, _H, _PAD = 640, 400, 48

# 10-step light-to-dark blue ramp for the filled contour levels
_RAMP = [
    "#f7fbff", "#deebf7", "#c6dbef", "#9ecae1", "#6baed6",
    "#4292c6", "#2171b5", "#08519c", "#08306b", "#041f47",
]


def render_svg(grid: DensityGrid, path, title: str = "") -> None:
    """Write a line plot (1-D) or 10-level filled contour (2-D)."""
    if grid.dim == 1:
        _render_line(grid, path, title)
    else:
        _render_filled(grid, path, title)


def _header(title: str) -> list[str]:
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
    ]
    if title:
        lines.append(
            f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>'
        )
    return lines


def _axis_labels(x_lo: float, x_hi: float) -> list[str]:
    return [
        f'<text x="{_PAD}" y="{_H - 8}" font-family="sans-serif" font-size="11">{x_lo:.4g}</text>',
        f'<text x="{_W - _PAD}" y="{_H - 8}" text-anchor="end" '
        f'font-family="sans-serif" font-size="11">{x_hi:.4g}</text>',
    ]


def _render_line(grid: DensityGrid, path, title: str) -> None:
    axis = grid.axes[0]
    masses = grid.masses
    top = float(masses.max()) or 1.0
    plot_w = _W - 2 * _PAD
    plot_h = _H - 2 * _PAD
    points = []
    for i, m in enumerate(masses):
        x = _PAD + plot_w * (axis.centers[i] - axis.lo) / (axis.hi - axis.lo)
        y = _H - _PAD - plot_h * (m / top)
        points.append(f"{x:.2f},{y:.2f}")
    lines = _header(title)
    lines.append(
        f'<rect x="{_PAD}" y="{_PAD}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#888" stroke-width="1"/>'
    )
    lines.append(
        f'<polyline points="{" ".join(points)}" fill="none" stroke="#2171b5" stroke-width="1.5"/>'
    )
    lines += _axis_labels(axis.lo, axis.hi)
    lines.append("</svg>")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _render_filled(grid: DensityGrid, path, title: str) -> None:
    ax, ay = grid.axes
    masses = grid.masses
    top = float(masses.max()) or 1.0
    plot_w = _W - 2 * _PAD
    plot_h = _H - 2 * _PAD
    cell_w = plot_w / ax.bins
    cell_h = plot_h / ay.bins
    lines = _header(title)
    for i in range(ax.bins):
        for j in range(ay.bins):
            level = int(10.0 * masses[i, j] / top)
            if level <= 0:
                continue
            color = _RAMP[min(level, 10) - 1]
            x = _PAD + i * cell_w
            y = _H - _PAD - (j + 1) * cell_h
            lines.append(
                f'<rect x="{x:.2f}" y="{y:.2f}" width="{cell_w:.2f}" '
                f'height="{cell_h:.2f}" fill="{color}"/>'
            )
    lines.append(
        f'<rect x="{_PAD}" y="{_PAD}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#888" stroke-width="1"/>'
    )
    lines += _axis_labels(ax.lo, ax.hi)
    lines.append("</svg>")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
