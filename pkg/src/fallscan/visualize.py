"""Rendering of analysis results: scaled residual arrows over a brightened
reference frame, and max-normalized absolute-difference images.

Rasterization is integer Bresenham with no antialiasing so byte-identical
output is reproducible across runs and platforms. Arrow geometry (the float
endpoints) is exposed separately from the raster so scale behavior can be
checked exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .image import ImageGray, ImageRGB, adjust_brightness, box_sum
from .motion import MotionField

RED = (230, 30, 30)


@dataclass(frozen=True)
class ArrowStyle:
    """How residual vectors render: unified length scale, color, head size."""

    scale: float = 10.0
    color: tuple[int, int, int] = RED
    head_length: float = 4.0
    line_width: int = 1

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"arrow scale must be > 0, got {self.scale}")
        if self.line_width < 1:
            raise ValueError(f"line_width must be >= 1, got {self.line_width}")

    def to_json(self) -> dict:
        return {
            "scale": self.scale,
            "color": list(self.color),
            "head_length": self.head_length,
            "line_width": self.line_width,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ArrowStyle":
        color = obj.get("color", list(RED))
        return cls(
            scale=float(obj.get("scale", 10.0)),
            color=(int(color[0]), int(color[1]), int(color[2])),
            head_length=float(obj.get("head_length", 4.0)),
            line_width=int(obj.get("line_width", 1)),
        )


@dataclass(frozen=True)
class OverlayImage:
    image: ImageRGB
    provenance: dict


def arrow_endpoints(field: MotionField, style: ArrowStyle) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    """Float (start, tip) per vector: tip = origin + scale * residual."""
    out = []
    for v in field.vectors:
        tip = (
            v.origin[0] + style.scale * v.residual_delta[0],
            v.origin[1] + style.scale * v.residual_delta[1],
        )
        out.append((v.origin, tip))
    return out


def _plot(px: np.ndarray, x: int, y: int, color: np.ndarray, half_width: int) -> None:
    h, w = px.shape[:2]
    y0, y1 = max(0, y - half_width), min(h, y + half_width + 1)
    x0, x1 = max(0, x - half_width), min(w, x + half_width + 1)
    if y0 < y1 and x0 < x1:
        px[y0:y1, x0:x1] = color


def _draw_segment(px: np.ndarray, p0: tuple[float, float], p1: tuple[float, float],
                  color: np.ndarray, half_width: int) -> None:
    """Bresenham segment with per-pixel clipping to the raster bounds."""
    x0, y0 = int(round(p0[0])), int(round(p0[1]))
    x1, y1 = int(round(p1[0])), int(round(p1[1]))
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        _plot(px, x0, y0, color, half_width)
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def render_arrows(
    base: ImageGray,
    field: MotionField,
    style: ArrowStyle | None = None,
    brightness_gain: float = 1.8,
) -> OverlayImage:
    """Draw one scaled residual arrow per vector over the brightened base.

    Arrows run from each feature's frame-A position toward where the scaled
    residual points; the head is two short segments swept back 30 degrees
    from the shaft. Segments extending past the frame are clipped, never
    written out of bounds. Zero-length residuals render as a single dot.
    """
    st = style or ArrowStyle()
    bright = adjust_brightness(base, brightness_gain)
    gray_u8 = np.clip(np.rint(bright.pixels * 255.0), 0, 255).astype(np.uint8)
    px = np.repeat(gray_u8[:, :, None], 3, axis=2).copy()
    color = np.asarray(st.color, dtype=np.uint8)
    half_width = (st.line_width - 1) // 2

    for start, tip in arrow_endpoints(field, st):
        _draw_segment(px, start, tip, color, half_width)
        vx, vy = tip[0] - start[0], tip[1] - start[1]
        length = math.hypot(vx, vy)
        if length < 0.5:
            continue
        ux, uy = vx / length, vy / length
        head = min(st.head_length, length)
        for side in (math.radians(150.0), math.radians(-150.0)):
            c, s = math.cos(side), math.sin(side)
            hx = tip[0] + head * (ux * c - uy * s)
            hy = tip[1] + head * (ux * s + uy * c)
            _draw_segment(px, tip, (hx, hy), color, half_width)

    return OverlayImage(
        image=ImageRGB(px),
        provenance={
            "frame_a": field.frame_a_index,
            "frame_b": field.frame_b_index,
            "ts": field.ts_applied,
            "scale": st.scale,
            "brightness_gain": brightness_gain,
            "vector_count": len(field),
        },
    )


def render_difference(a: ImageGray, b_adjusted: ImageGray) -> ImageGray:
    """Absolute intensity difference stretched to the full display range.

    Identical inputs give an all-black image; otherwise the maximum
    difference maps to full white (max normalization).
    """
    if a.width != b_adjusted.width or a.height != b_adjusted.height:
        raise DimensionMismatch(
            f"difference needs equal dims, got {a.width}x{a.height} vs "
            f"{b_adjusted.width}x{b_adjusted.height}"
        )
    d = np.abs(a.pixels - b_adjusted.pixels)
    peak = float(d.max())
    if peak > 0.0:
        d = d / peak
    return ImageGray(d)


def spatial_agreement(
    field: MotionField,
    diff: ImageGray,
    quantile: float = 0.05,
    dilate_radius: int = 7,
) -> float | None:
    """Fraction of field origins landing on the brightest part of the diff.

    The brightest `quantile` fraction of diff pixels is dilated by the
    tracking window radius; the score is the fraction of origins inside
    that mask. None for an empty field (score undefined).
    """
    if not 0.0 < quantile <= 1.0:
        raise ValueError(f"quantile must be in (0, 1], got {quantile}")
    if len(field) == 0:
        return None
    d = diff.pixels
    thresh = float(np.quantile(d, 1.0 - quantile))
    # exactly-matched (zero) pixels are never "bright", even when the
    # quantile threshold degenerates to 0 on a mostly-black diff
    mask = ((d >= thresh) & (d > 0.0)).astype(np.float64)
    if dilate_radius > 0:
        mask = box_sum(mask, 2 * dilate_radius + 1) > 0.0
    else:
        mask = mask > 0.0
    hits = 0
    for v in field.vectors:
        x = min(max(int(round(v.origin[0])), 0), diff.width - 1)
        y = min(max(int(round(v.origin[1])), 0), diff.height - 1)
        if mask[y, x]:
            hits += 1
    return hits / len(field)
