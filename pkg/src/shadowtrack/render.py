"""Static SVG rendering of trajectories, optionally over a video frame.

One polyline per trajectory through its box centers; the stroke color is
a deterministic function of the trajectory id, so re-rendering identical
inputs produces byte-identical files.
"""

from __future__ import annotations

import base64
import colorsys
import io
import math

import numpy as np
from PIL import Image

from .core import FrameStack, Trajectory


def trajectory_color(ident: int) -> str:
    """Stable, well-separated color for a trajectory id."""
    hue = (ident * 0.618033988749895) % 1.0
    r, g, b = colorsys.hls_to_rgb(hue, 0.45, 0.95)
    return f"#{round(r * 255):02x}{round(g * 255):02x}{round(b * 255):02x}"


def _png_data_uri(frame: np.ndarray) -> str:
    img = Image.fromarray(np.round(frame * 255.0).astype(np.uint8), mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return "data:image/png;base64," + base64.b64encode(buf.getvalue()).decode("ascii")


def render_svg(trajectories: list[Trajectory], path,
               background: FrameStack | None = None,
               size: tuple[int, int] | None = None) -> None:
    """Write an SVG with one polyline per trajectory.

    The canvas size comes from `size` (w, h), else from the background
    stack, else from the extent of the trajectories. When a background is
    given, its first frame is embedded as a raster under the polylines.
    """
    if size is not None:
        width, height = size
    elif background is not None:
        width, height = background.w, background.h
    else:
        width = height = 1
        for traj in trajectories:
            for _, box in traj.samples:
                width = max(width, math.ceil(box.x + box.w))
                height = max(height, math.ceil(box.y + box.h))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
    ]
    if background is not None:
        parts.append(
            f'<image href="{_png_data_uri(background.frame(0))}" x="0" y="0" '
            f'width="{background.w}" height="{background.h}" '
            'image-rendering="pixelated"/>'
        )
    else:
        parts.append(f'<rect width="{width}" height="{height}" fill="#202020"/>')
    for traj in sorted(trajectories, key=lambda t: t.id):
        points = " ".join(
            f"{box.x + box.w / 2:.2f},{box.y + box.h / 2:.2f}" for _, box in traj.samples
        )
        parts.append(
            f'<polyline id="track-{traj.id}" points="{points}" fill="none" '
            f'stroke="{trajectory_color(traj.id)}" stroke-width="1"/>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(parts) + "\n")
