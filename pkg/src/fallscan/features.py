"""Min-eigenvalue ("good features to track") corner detection.

The detector scores each pixel by the smaller eigenvalue of the local
structure tensor, thresholds against a fraction of the strongest response,
and greedily keeps the best corners subject to a minimum separation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ImageTooSmall, PatchOutOfBounds
from .image import ImageGray, box_sum, gradient


@dataclass(frozen=True)
class Feature:
    """A detected corner: sub-pixel capable coordinates plus its response."""

    x: float
    y: float
    score: float

    def to_json(self) -> dict:
        return {"x": self.x, "y": self.y, "score": self.score}

    @classmethod
    def from_json(cls, obj: dict) -> "Feature":
        return cls(float(obj["x"]), float(obj["y"]), float(obj["score"]))


@dataclass(frozen=True)
class DetectorParams:
    max_features: int = 2000
    quality_level: float = 0.01
    min_distance: float = 3.0
    block_size: int = 5

    def __post_init__(self):
        if self.max_features < 1:
            raise ValueError(f"max_features must be >= 1, got {self.max_features}")
        if not 0.0 < self.quality_level <= 1.0:
            raise ValueError(f"quality_level must be in (0, 1], got {self.quality_level}")
        if self.min_distance < 0:
            raise ValueError(f"min_distance must be >= 0, got {self.min_distance}")
        if self.block_size < 3 or self.block_size % 2 == 0:
            raise ValueError(f"block_size must be odd and >= 3, got {self.block_size}")

    def to_json(self) -> dict:
        return {
            "max_features": self.max_features,
            "quality_level": self.quality_level,
            "min_distance": self.min_distance,
            "block_size": self.block_size,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DetectorParams":
        return cls(
            max_features=int(obj.get("max_features", 2000)),
            quality_level=float(obj.get("quality_level", 0.01)),
            min_distance=float(obj.get("min_distance", 3.0)),
            block_size=int(obj.get("block_size", 5)),
        )


def corner_response(img: ImageGray, block_size: int = 5) -> np.ndarray:
    """Per-pixel min-eigenvalue of the structure tensor.

    The tensor is the unweighted sum of gradient outer products over a
    block_size x block_size window (truncated at image borders). The
    closed-form 2x2 eigenvalue formula keeps this a handful of array ops.
    """
    if img.width < block_size or img.height < block_size:
        raise ImageTooSmall(
            f"image {img.width}x{img.height} smaller than block_size {block_size}"
        )
    gx, gy = gradient(img)
    mxx = box_sum(gx * gx, block_size)
    mxy = box_sum(gx * gy, block_size)
    myy = box_sum(gy * gy, block_size)
    half_trace = 0.5 * (mxx + myy)
    disc = np.sqrt(np.maximum(0.25 * (mxx - myy) ** 2 + mxy * mxy, 0.0))
    return np.maximum(half_trace - disc, 0.0)


def detect_features(img: ImageGray, params: DetectorParams | None = None) -> list[Feature]:
    """Detect corners: quality threshold, score ordering, greedy separation.

    Candidates with response >= quality_level * max(response) are sorted by
    descending score (ties broken by (y, x) order) and accepted greedily
    when at least min_distance away from every already-accepted feature,
    stopping at max_features. A zero-response image yields no features.
    """
    p = params or DetectorParams()
    resp = corner_response(img, p.block_size)
    peak = float(resp.max())
    if peak <= 0.0:
        return []
    ys, xs = np.nonzero(resp >= p.quality_level * peak)
    scores = resp[ys, xs]
    # np.lexsort sorts by the last key first: score desc, then y, then x asc
    order = np.lexsort((xs, ys, -scores))
    keep = _greedy_min_distance(xs[order], ys[order], p.min_distance, p.max_features)
    sel = order[keep]
    return [Feature(float(xs[i]), float(ys[i]), float(scores[i])) for i in sel]


def _greedy_min_distance(xs: np.ndarray, ys: np.ndarray, min_distance: float, max_features: int) -> list[int]:
    """Indices (into the ordered candidate arrays) that survive suppression.

    Accepted features are bucketed on a grid of cell size min_distance, so
    each candidate only checks the 3x3 neighborhood of cells around it.
    """
    if min_distance <= 0:
        return list(range(min(max_features, len(xs))))
    cell = float(min_distance)
    d2 = cell * cell
    buckets: dict[tuple[int, int], list[int]] = {}
    kept: list[int] = []
    for i in range(len(xs)):
        x, y = float(xs[i]), float(ys[i])
        cx, cy = int(x // cell), int(y // cell)
        ok = True
        for nx in (cx - 1, cx, cx + 1):
            for ny in (cy - 1, cy, cy + 1):
                for j in buckets.get((nx, ny), ()):
                    if (x - xs[j]) ** 2 + (y - ys[j]) ** 2 < d2:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            kept.append(i)
            buckets.setdefault((cx, cy), []).append(i)
            if len(kept) >= max_features:
                break
    return kept


def extract_patch(img: ImageGray, f: Feature, side: int) -> ImageGray:
    """Copy the side x side patch centered at the feature's nearest pixel."""
    if side < 1 or side % 2 == 0:
        raise ValueError(f"patch side must be odd and positive, got {side}")
    cx, cy = int(round(f.x)), int(round(f.y))
    r = side // 2
    if cx - r < 0 or cy - r < 0 or cx + r >= img.width or cy + r >= img.height:
        raise PatchOutOfBounds(
            f"{side}x{side} patch at ({cx}, {cy}) exceeds image {img.width}x{img.height}"
        )
    return ImageGray(img.pixels[cy - r : cy + r + 1, cx - r : cx + r + 1].copy())
