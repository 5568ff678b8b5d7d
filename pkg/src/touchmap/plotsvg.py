"""Dependency-free SVG scatter plots for 2-D manifold coordinates.

Draws axes, ticks, optionally label-colored points, a legend, and an
optional shaded error square (side = 2 x mean error, centered on the mean
predicted point) summarizing regression error on top of the layout.
Output is a deterministic standalone SVG string.
"""

from __future__ import annotations

import numpy as np

_PALETTE = (
    "#4477aa", "#ee6677", "#228833", "#ccbb44",
    "#66ccee", "#aa3377", "#bbbbbb", "#000000",
)
_MARGIN = 60
_TICKS = 5


def _fmt(value: float) -> str:
    return f"{value:.4g}"


class _Mapper:
    """Affine data->pixel mapping with equal margins and a flipped y."""

    def __init__(self, points: np.ndarray, width: int, height: int):
        lo = points.min(axis=0)
        hi = points.max(axis=0)
        span = np.where(hi - lo == 0, 1.0, hi - lo)
        pad = 0.05 * span
        self.lo = lo - pad
        self.hi = hi + pad
        self.width = width
        self.height = height

    def x(self, v: float) -> float:
        frac = (v - self.lo[0]) / (self.hi[0] - self.lo[0])
        return _MARGIN + frac * (self.width - 2 * _MARGIN)

    def y(self, v: float) -> float:
        frac = (v - self.lo[1]) / (self.hi[1] - self.lo[1])
        return self.height - _MARGIN - frac * (self.height - 2 * _MARGIN)

    def x_scale(self) -> float:
        return (self.width - 2 * _MARGIN) / (self.hi[0] - self.lo[0])

    def y_scale(self) -> float:
        return (self.height - 2 * _MARGIN) / (self.hi[1] - self.lo[1])


def scatter_svg(
    points: np.ndarray,
    labels: list[str] | None = None,
    title: str = "",
    width: int = 720,
    height: int = 540,
    error_square: tuple[tuple[float, float], float] | None = None,
    point_radius: float = 3.0,
) -> str:
    """Render an SVG scatter of (N, 2) points.

    `labels` colors points by distinct label and adds a legend.
    `error_square` is ((cx, cy), half_side) in data units.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2 or points.shape[0] == 0:
        raise ValueError(f"points must be a non-empty N x 2 array, got {points.shape}")
    if labels is not None and len(labels) != len(points):
        raise ValueError(f"{len(labels)} labels for {len(points)} points")

    m = _Mapper(points, width, height)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    # frame
    x0, y0 = _MARGIN, _MARGIN
    x1, y1 = width - _MARGIN, height - _MARGIN
    parts.append(
        f'<rect x="{x0}" y="{y0}" width="{x1 - x0}" height="{y1 - y0}" '
        f'fill="none" stroke="#333" stroke-width="1"/>'
    )
    # ticks and grid labels
    for i in range(_TICKS + 1):
        fx = m.lo[0] + (m.hi[0] - m.lo[0]) * i / _TICKS
        px = m.x(fx)
        parts.append(f'<line x1="{px:.1f}" y1="{y1}" x2="{px:.1f}" y2="{y1 + 5}" stroke="#333"/>')
        parts.append(
            f'<text x="{px:.1f}" y="{y1 + 18}" font-size="11" text-anchor="middle" '
            f'font-family="sans-serif">{_fmt(fx)}</text>'
        )
        fy = m.lo[1] + (m.hi[1] - m.lo[1]) * i / _TICKS
        py = m.y(fy)
        parts.append(f'<line x1="{x0 - 5}" y1="{py:.1f}" x2="{x0}" y2="{py:.1f}" stroke="#333"/>')
        parts.append(
            f'<text x="{x0 - 8}" y="{py + 4:.1f}" font-size="11" text-anchor="end" '
            f'font-family="sans-serif">{_fmt(fy)}</text>'
        )
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="{_MARGIN / 2:.1f}" font-size="15" '
            f'text-anchor="middle" font-family="sans-serif">{title}</text>'
        )

    if error_square is not None:
        (cx, cy), half = error_square
        px, py = m.x(cx), m.y(cy)
        w = 2 * half * m.x_scale()
        h = 2 * half * m.y_scale()
        parts.append(
            f'<rect x="{px - w / 2:.1f}" y="{py - h / 2:.1f}" width="{w:.1f}" '
            f'height="{h:.1f}" fill="#cc3311" fill-opacity="0.25" '
            f'stroke="#cc3311" stroke-dasharray="4 3"/>'
        )

    if labels is None:
        color_of = {None: _PALETTE[0]}
        keys = [None] * len(points)
    else:
        distinct = sorted(set(labels))
        color_of = {lab: _PALETTE[i % len(_PALETTE)] for i, lab in enumerate(distinct)}
        keys = labels
        for i, lab in enumerate(distinct):
            ly = _MARGIN + 16 * i
            parts.append(
                f'<circle cx="{x1 + 14}" cy="{ly}" r="4" fill="{color_of[lab]}"/>'
            )
            parts.append(
                f'<text x="{x1 + 22}" y="{ly + 4}" font-size="11" '
                f'font-family="sans-serif">{lab}</text>'
            )

    for (px, py), key in zip(points, keys):
        parts.append(
            f'<circle cx="{m.x(px):.2f}" cy="{m.y(py):.2f}" r="{point_radius}" '
            f'fill="{color_of[key]}" fill-opacity="0.75"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts)
