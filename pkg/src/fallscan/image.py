"""Raster substrate: grayscale/RGB images, ROI cropping, pyramids, gradients,
sub-pixel sampling, difference images, and PNG I/O.

Intensities live as float64 in [0, 1] everywhere inside the toolkit; 8-bit
values appear only at the PNG boundary. All image values are immutable after
construction (the backing arrays are marked read-only), so they are safe to
share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import (
    DimensionMismatch,
    ImageTooSmall,
    InvalidGain,
    OutOfBounds,
    RoiOutOfBounds,
    TooManyLevels,
)

_EPS = 1e-9


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    if out is arr and arr.flags.writeable:
        out = arr.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ImageGray:
    """Single-channel raster, row-major float64 intensities in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise DimensionMismatch(f"grayscale image must be 2-D and non-empty, got shape {px.shape}")
        lo, hi = float(px.min()), float(px.max())
        if lo < -_EPS or hi > 1.0 + _EPS:
            raise DimensionMismatch(f"intensities must lie in [0, 1], got range [{lo}, {hi}]")
        object.__setattr__(self, "pixels", _freeze(np.clip(px, 0.0, 1.0)))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class ImageRGB:
    """Three-channel raster, row-major uint8 (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] < 1 or px.shape[1] < 1:
            raise DimensionMismatch(f"RGB image must have shape (h, w, 3), got {px.shape}")
        if px.dtype != np.uint8:
            if np.issubdtype(px.dtype, np.integer) and px.min() >= 0 and px.max() <= 255:
                px = px.astype(np.uint8)
            else:
                raise DimensionMismatch(f"RGB channels must be 8-bit, got dtype {px.dtype}")
        object.__setattr__(self, "pixels", _freeze(px))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class Roi:
    """Axis-aligned crop rectangle: top-left corner plus extent, in pixels."""

    x0: int
    y0: int
    width: int
    height: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise RoiOutOfBounds(f"roi extent must be positive, got {self.width}x{self.height}")

    def contained_in(self, width: int, height: int) -> bool:
        return (
            self.x0 >= 0
            and self.y0 >= 0
            and self.x0 + self.width <= width
            and self.y0 + self.height <= height
        )

    def to_json(self) -> dict:
        return {"x0": self.x0, "y0": self.y0, "width": self.width, "height": self.height}

    @classmethod
    def from_json(cls, obj: dict) -> "Roi":
        return cls(int(obj["x0"]), int(obj["y0"]), int(obj["width"]), int(obj["height"]))


@dataclass(frozen=True)
class Pyramid:
    """Coarse-to-fine image stack; level 0 is full resolution, each level after
    is low-pass filtered and decimated to floor-half dimensions."""

    levels: tuple[ImageGray, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if len(self.levels) < 1:
            raise TooManyLevels("pyramid needs at least one level")
        for k in range(1, len(self.levels)):
            prev, cur = self.levels[k - 1], self.levels[k]
            if cur.width != prev.width // 2 or cur.height != prev.height // 2:
                raise DimensionMismatch(
                    f"level {k} is {cur.width}x{cur.height}, expected "
                    f"{prev.width // 2}x{prev.height // 2}"
                )

    @property
    def base(self) -> ImageGray:
        return self.levels[0]


# --- conversions -------------------------------------------------------------

# Rec.601 luma weights; the usual convention for surveillance-style footage.
GRAY_WEIGHTS = (0.299, 0.587, 0.114)


def to_grayscale(img: ImageRGB) -> ImageGray:
    """Convert 8-bit RGB to [0, 1] grayscale using Rec.601 luma weights."""
    w = np.asarray(GRAY_WEIGHTS, dtype=np.float64)
    luma = img.pixels.astype(np.float64) @ w / 255.0
    return ImageGray(np.clip(luma, 0.0, 1.0))


def crop_roi(img: ImageGray | ImageRGB, roi: Roi) -> ImageGray | ImageRGB:
    """Crop a rectangle out of an image; the ROI must be fully contained."""
    if not roi.contained_in(img.width, img.height):
        raise RoiOutOfBounds(
            f"roi {roi.x0},{roi.y0} {roi.width}x{roi.height} exceeds image {img.width}x{img.height}"
        )
    view = img.pixels[roi.y0 : roi.y0 + roi.height, roi.x0 : roi.x0 + roi.width]
    return type(img)(view.copy())


# --- pyramids ----------------------------------------------------------------

_BINOMIAL5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


def _blur_binomial5(px: np.ndarray) -> np.ndarray:
    """Separable 5-tap binomial low-pass with replicated borders."""
    pad = np.pad(px, ((2, 2), (0, 0)), mode="edge")
    tmp = sum(w * pad[i : i + px.shape[0], :] for i, w in enumerate(_BINOMIAL5))
    pad = np.pad(tmp, ((0, 0), (2, 2)), mode="edge")
    out = sum(w * pad[:, i : i + px.shape[1]] for i, w in enumerate(_BINOMIAL5))
    return out


def build_pyramid(img: ImageGray, levels: int) -> Pyramid:
    """Build a coarse-to-fine pyramid by binomial blur + 2x decimation.

    The coarsest level must keep min(width, height) >= 16, i.e.
    min(w, h) / 2**(levels-1) >= 16, otherwise TooManyLevels is raised.
    """
    if levels < 1:
        raise TooManyLevels(f"levels must be >= 1, got {levels}")
    if min(img.width, img.height) / 2 ** (levels - 1) < 16:
        raise TooManyLevels(
            f"{img.width}x{img.height} image cannot support {levels} levels "
            f"(coarsest side would drop below 16 px)"
        )
    out = [img]
    for _ in range(levels - 1):
        prev = out[-1].pixels
        blurred = _blur_binomial5(prev)
        # keep the 2i <-> i coordinate mapping; truncate to floor-half extent
        h2, w2 = prev.shape[0] // 2, prev.shape[1] // 2
        out.append(ImageGray(np.clip(blurred[0 : 2 * h2 : 2, 0 : 2 * w2 : 2], 0.0, 1.0)))
    return Pyramid(tuple(out))


# --- gradients ---------------------------------------------------------------

def gradient(img: ImageGray) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel gradients normalized by 1/8 (unit ramp -> unit gradient).

    Borders are handled by edge replication. Returns (gx, gy) as float64
    arrays of the image shape; values may be negative.
    """
    if img.width < 3 or img.height < 3:
        raise ImageTooSmall(f"gradient needs at least 3x3, got {img.width}x{img.height}")
    p = np.pad(img.pixels, 1, mode="edge")
    # separable Sobel: smooth [1,2,1] one axis, difference [-1,0,1] the other
    sm_y = p[:-2, :] + 2.0 * p[1:-1, :] + p[2:, :]
    gx = (sm_y[:, 2:] - sm_y[:, :-2]) / 8.0
    sm_x = p[:, :-2] + 2.0 * p[:, 1:-1] + p[:, 2:]
    gy = (sm_x[2:, :] - sm_x[:-2, :]) / 8.0
    return gx, gy


# --- sampling ----------------------------------------------------------------

def sample_bilinear(img: ImageGray, x: float, y: float) -> float:
    """Bilinear interpolation at real-valued (x, y); bounds are strict."""
    if not (0.0 <= x <= img.width - 1 and 0.0 <= y <= img.height - 1):
        raise OutOfBounds(f"sample at ({x}, {y}) outside [0, {img.width - 1}]x[0, {img.height - 1}]")
    return float(bilinear_batch(img.pixels, np.asarray([x]), np.asarray([y]))[0])


def bilinear_batch(px: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorized bilinear sampling; callers guarantee in-bounds coordinates.

    Exact at integer coordinates (interpolation weights collapse to 1/0).
    """
    h, w = px.shape
    ix = np.clip(np.floor(xs), 0, w - 2).astype(np.intp)
    iy = np.clip(np.floor(ys), 0, h - 2).astype(np.intp)
    fx = xs - ix
    fy = ys - iy
    v00 = px[iy, ix]
    v01 = px[iy, ix + 1]
    v10 = px[iy + 1, ix]
    v11 = px[iy + 1, ix + 1]
    # four-weight form: exact at every integer node, including the last
    # row/column where the clip forces fx or fy to 1
    return (
        (1.0 - fx) * (1.0 - fy) * v00
        + fx * (1.0 - fy) * v01
        + (1.0 - fx) * fy * v10
        + fx * fy * v11
    )


# --- pixelwise ops -------------------------------------------------------------

def absolute_difference(a: ImageGray, b: ImageGray) -> ImageGray:
    """Per-pixel |a - b|; identical pixels map to 0."""
    if a.width != b.width or a.height != b.height:
        raise DimensionMismatch(
            f"cannot difference {a.width}x{a.height} against {b.width}x{b.height}"
        )
    return ImageGray(np.abs(a.pixels - b.pixels))


def adjust_brightness(img: ImageGray | ImageRGB, gain: float) -> ImageGray | ImageRGB:
    """Multiply intensities by gain (> 0), clamping to the valid range."""
    if not gain > 0:
        raise InvalidGain(f"gain must be > 0, got {gain}")
    if isinstance(img, ImageGray):
        return ImageGray(np.clip(img.pixels * gain, 0.0, 1.0))
    scaled = np.clip(np.rint(img.pixels.astype(np.float64) * gain), 0, 255).astype(np.uint8)
    return ImageRGB(scaled)


def box_sum(field_: np.ndarray, size: int) -> np.ndarray:
    """Sum over a size x size window centered at each pixel (odd size).

    Out-of-image contributions count as zero, so border windows are
    effectively truncated.
    """
    if size < 1 or size % 2 == 0:
        raise ValueError(f"box size must be odd and positive, got {size}")
    r = size // 2
    padded = np.pad(field_, ((r + 1, r), (r + 1, r)), mode="constant")
    s = padded.cumsum(axis=0).cumsum(axis=1)
    h, w = field_.shape
    return (
        s[size : size + h, size : size + w]
        - s[0:h, size : size + w]
        - s[size : size + h, 0:w]
        + s[0:h, 0:w]
    )


# --- PNG I/O -------------------------------------------------------------------

def gray_to_u8(img: ImageGray) -> np.ndarray:
    return np.clip(np.rint(img.pixels * 255.0), 0, 255).astype(np.uint8)


def u8_to_gray(arr: np.ndarray) -> ImageGray:
    return ImageGray(arr.astype(np.float64) / 255.0)


def read_png(path: str | Path) -> ImageGray | ImageRGB:
    """Decode an 8-bit PNG: mode L -> ImageGray, anything colorful -> ImageRGB."""
    with PILImage.open(path) as im:
        if im.mode == "L":
            return u8_to_gray(np.asarray(im))
        return ImageRGB(np.asarray(im.convert("RGB")))


def write_png(path: str | Path, img: ImageGray | ImageRGB) -> None:
    """Encode to 8-bit PNG (gray or RGB depending on the image kind)."""
    if isinstance(img, ImageGray):
        pil = PILImage.fromarray(gray_to_u8(img), mode="L")
    else:
        pil = PILImage.fromarray(img.pixels, mode="RGB")
    pil.save(Path(path), format="PNG")
