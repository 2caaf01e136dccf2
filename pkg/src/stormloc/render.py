"""Deterministic SVG rendering: quiver wind field, markers, probability map.

One arrow per grid cell, length scaled to the scene's strongest wind. The
optional probability underlay shades cells from white (low) to dark blue
(high), normalized to the map maximum. Marker styles:

    neutral-plus / neutral-x   color-neutral, used during blinded rating
    label-orange               the unblinded label cross

Output bytes depend only on the inputs (floats are fixed to 2 decimals), so
rendered documents can be compared byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, OutOfBasinError
from .grid import GeoPoint, GridSpec
from .synth import WindField

CELL_PX = 16
MARGIN_PX = 8
PROB_DARK = (8, 48, 107)  # dark blue endpoint of the colormap

MARKER_STYLES = ("neutral-plus", "neutral-x", "label-orange")


@dataclass(frozen=True)
class Marker:
    point: GeoPoint
    style: str

    def __post_init__(self) -> None:
        if self.style not in MARKER_STYLES:
            raise ConfigError(f"unknown marker style {self.style!r}")


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _to_px(p: GeoPoint, grid: GridSpec) -> tuple[float, float]:
    """Continuous grid coords -> pixel center, north up."""
    rx = (p.lat - grid.lat0) / grid.dlat
    cx = (p.lon - grid.lon0) / grid.dlon
    if not (-0.5 <= rx <= grid.height - 0.5 and -0.5 <= cx <= grid.width - 0.5):
        raise OutOfBasinError(f"marker {p} outside the rendered grid")
    x = MARGIN_PX + (cx + 0.5) * CELL_PX
    y = MARGIN_PX + (grid.height - 1 - rx + 0.5) * CELL_PX
    return x, y


def _prob_color(v: float) -> str:
    r = round(255 + (PROB_DARK[0] - 255) * v)
    g = round(255 + (PROB_DARK[1] - 255) * v)
    b = round(255 + (PROB_DARK[2] - 255) * v)
    return f"rgb({r},{g},{b})"


def render_quiver(
    field: WindField,
    markers: Sequence[Marker] = (),
    prob_map: np.ndarray | None = None,
) -> str:
    """Render the scene as an SVG document string."""
    grid = field.grid
    w_px = 2 * MARGIN_PX + grid.width * CELL_PX
    h_px = 2 * MARGIN_PX + grid.height * CELL_PX
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w_px}" height="{h_px}" '
        f'viewBox="0 0 {w_px} {h_px}">',
        f"<title>wind field {field.timestamp.isoformat()}</title>",
        "<defs><marker id=\"ah\" markerWidth=\"4\" markerHeight=\"4\" refX=\"2\" refY=\"2\" "
        "orient=\"auto\"><path d=\"M0,0 L4,2 L0,4 z\" fill=\"#555\"/></marker></defs>",
        f'<rect width="{w_px}" height="{h_px}" fill="white"/>',
    ]
    if prob_map is not None:
        if prob_map.shape != (grid.height, grid.width):
            raise ConfigError(f"probability map must be {grid.height}x{grid.width}")
        peak = float(prob_map.max())
        scale = 1.0 / peak if peak > 0 else 0.0
        for row in range(grid.height):
            y = MARGIN_PX + (grid.height - 1 - row) * CELL_PX
            for col in range(grid.width):
                v = float(prob_map[row, col]) * scale
                if v <= 0:
                    continue
                x = MARGIN_PX + col * CELL_PX
                out.append(
                    f'<rect class="cell" x="{x}" y="{y}" width="{CELL_PX}" '
                    f'height="{CELL_PX}" fill="{_prob_color(v)}"/>'
                )
    speed = np.hypot(field.u, field.v)
    peak = float(speed.max())
    arrow_scale = 0.45 * CELL_PX / peak if peak > 0 else 0.0
    for row in range(grid.height):
        cy = MARGIN_PX + (grid.height - 1 - row + 0.5) * CELL_PX
        for col in range(grid.width):
            cx = MARGIN_PX + (col + 0.5) * CELL_PX
            dx = field.u[row, col] * arrow_scale
            dy = -field.v[row, col] * arrow_scale  # svg y grows downward
            out.append(
                f'<line class="arrow" x1="{_fmt(cx - dx)}" y1="{_fmt(cy - dy)}" '
                f'x2="{_fmt(cx + dx)}" y2="{_fmt(cy + dy)}" stroke="#555" '
                f'stroke-width="1" marker-end="url(#ah)"/>'
            )
    for m in markers:
        x, y = _to_px(m.point, grid)
        r = 0.9 * CELL_PX
        if m.style == "neutral-plus":
            color, arms = "#222", ((x - r, y, x + r, y), (x, y - r, x, y + r))
        elif m.style == "neutral-x":
            d = r * 0.7071
            color, arms = "#222", ((x - d, y - d, x + d, y + d), (x - d, y + d, x + d, y - d))
        else:  # label-orange
            color, arms = "#ff8c00", ((x - r, y, x + r, y), (x, y - r, x, y + r))
        for (x1, y1, x2, y2) in arms:
            out.append(
                f'<line class="marker {m.style}" x1="{_fmt(x1)}" y1="{_fmt(y1)}" '
                f'x2="{_fmt(x2)}" y2="{_fmt(y2)}" stroke="{color}" stroke-width="2.5"/>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"
