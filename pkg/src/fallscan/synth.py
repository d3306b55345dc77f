"""Synthetic frame-pair generator with exact ground truth.

Scenes are seeded band-limited value-noise textures. Moving blocks carry
their own texture layer so their content is unambiguous under tracking;
each block translates by a known delta, then the whole scene is observed
through a known camera homography, then (optionally) noise is added. The
generator is the measurement-free oracle behind the pipeline's accuracy
claims: every quantity the pipeline estimates is known here by
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BlockOutOfBounds, SceneMismatch
from .image import ImageGray, Roi, bilinear_batch
from .motion import MotionField, MotionVector
from .stabilize import Homography, apply_homography, warp_image


@dataclass(frozen=True)
class MovingBlock:
    rect: Roi
    delta: tuple[float, float]

    def to_json(self) -> dict:
        return {"rect": self.rect.to_json(), "delta": [self.delta[0], self.delta[1]]}

    @classmethod
    def from_json(cls, obj: dict) -> "MovingBlock":
        d = obj["delta"]
        return cls(rect=Roi.from_json(obj["rect"]), delta=(float(d[0]), float(d[1])))


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    texture_seed: int = 0
    camera_h: Homography = field(default_factory=Homography.identity)
    blocks: tuple[MovingBlock, ...] = ()
    noise_sigma: float = 0.0
    jitter_sigma: float = 0.0

    def __post_init__(self):
        if self.width < 32 or self.height < 32:
            raise ValueError(f"scene must be at least 32x32, got {self.width}x{self.height}")
        if self.noise_sigma < 0 or self.jitter_sigma < 0:
            raise ValueError("noise_sigma and jitter_sigma must be >= 0")
        for b in self.blocks:
            r = b.rect
            if not r.contained_in(self.width, self.height):
                raise BlockOutOfBounds(f"block rect {r} outside {self.width}x{self.height} scene")
            x0, y0 = r.x0 + b.delta[0], r.y0 + b.delta[1]
            if (
                x0 < 0
                or y0 < 0
                or x0 + r.width > self.width
                or y0 + r.height > self.height
            ):
                raise BlockOutOfBounds(
                    f"block rect {r} displaced by {b.delta} leaves the {self.width}x{self.height} scene"
                )

    def to_json(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "texture_seed": self.texture_seed,
            "camera_h": self.camera_h.to_json(),
            "blocks": [b.to_json() for b in self.blocks],
            "noise_sigma": self.noise_sigma,
            "jitter_sigma": self.jitter_sigma,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SceneSpec":
        return cls(
            width=int(obj["width"]),
            height=int(obj["height"]),
            texture_seed=int(obj.get("texture_seed", 0)),
            camera_h=Homography.from_json(obj["camera_h"]) if "camera_h" in obj else Homography.identity(),
            blocks=tuple(MovingBlock.from_json(b) for b in obj.get("blocks", [])),
            noise_sigma=float(obj.get("noise_sigma", 0.0)),
            jitter_sigma=float(obj.get("jitter_sigma", 0.0)),
        )


@dataclass(frozen=True)
class GroundTruth:
    """Everything the generator knows: per-pixel block membership in frame-A
    coordinates (-1 = background), per-block deltas, and the camera motion."""

    mask: np.ndarray
    block_deltas: tuple[tuple[float, float], ...]
    camera_h: Homography

    def __post_init__(self):
        m = np.ascontiguousarray(np.asarray(self.mask, dtype=np.int16))
        m.flags.writeable = False
        object.__setattr__(self, "mask", m)

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    def block_of(self, x: float, y: float) -> int:
        """Block id at a frame-A position, or -1 for background."""
        xi = min(max(int(round(x)), 0), self.width - 1)
        yi = min(max(int(round(y)), 0), self.height - 1)
        return int(self.mask[yi, xi])

    def expected_residual(self, x: float, y: float) -> tuple[float, float]:
        """Residual an ideal tracker + stabilizer reports at (x, y).

        Background points have zero residual. A block point at p with scene
        delta d appears at H(p + d) in frame B while the camera model
        predicts H(p), so the observable residual is H(p + d) - H(p).
        """
        k = self.block_of(x, y)
        if k < 0:
            return (0.0, 0.0)
        dx, dy = self.block_deltas[k]
        moved = apply_homography(self.camera_h, (x + dx, y + dy))
        still = apply_homography(self.camera_h, (x, y))
        return (moved[0] - still[0], moved[1] - still[1])


# --- texture -------------------------------------------------------------------

def _smooth_noise(width: int, height: int, rng: np.random.Generator, cell: float) -> np.ndarray:
    """One octave of value noise: a random lattice smoothstep-interpolated,
    so gradients are continuous (kind to the tracker's linearization)."""
    gw = int(math.ceil(width / cell)) + 2
    gh = int(math.ceil(height / cell)) + 2
    lattice = rng.random((gh, gw))
    xs = np.arange(width, dtype=np.float64) / cell
    ys = np.arange(height, dtype=np.float64) / cell
    ix = np.floor(xs).astype(np.intp)
    iy = np.floor(ys).astype(np.intp)
    fx = xs - ix
    fy = ys - iy
    fx = fx * fx * (3.0 - 2.0 * fx)
    fy = fy * fy * (3.0 - 2.0 * fy)
    v00 = lattice[np.ix_(iy, ix)]
    v01 = lattice[np.ix_(iy, ix + 1)]
    v10 = lattice[np.ix_(iy + 1, ix)]
    v11 = lattice[np.ix_(iy + 1, ix + 1)]
    top = v00 + fx[None, :] * (v01 - v00)
    bot = v10 + fx[None, :] * (v11 - v10)
    return top + fy[:, None] * (bot - top)


def _texture(width: int, height: int, rng: np.random.Generator) -> np.ndarray:
    """Three octaves of value noise mapped into [0.05, 0.95]."""
    acc = np.zeros((height, width))
    for cell, amp in ((24.0, 1.0), (12.0, 0.5), (6.0, 0.25)):
        acc += amp * _smooth_noise(width, height, rng, cell)
    lo, hi = float(acc.min()), float(acc.max())
    if hi - lo < 1e-12:
        return np.full((height, width), 0.5)
    return 0.05 + 0.9 * (acc - lo) / (hi - lo)


def _paste_shifted(canvas: np.ndarray, tex: np.ndarray, x0: float, y0: float) -> None:
    """Paste tex with its top-left corner at real-valued (x0, y0).

    Integer corners copy exactly; fractional corners resample bilinearly
    onto the covered integer pixels.
    """
    th, tw = tex.shape
    xs0, ys0 = int(math.ceil(x0)), int(math.ceil(y0))
    xs1, ys1 = int(math.floor(x0 + tw - 1)), int(math.floor(y0 + th - 1))
    if xs1 < xs0 or ys1 < ys0:
        return
    xs = np.arange(xs0, xs1 + 1, dtype=np.float64)
    ys = np.arange(ys0, ys1 + 1, dtype=np.float64)
    gx, gy = np.meshgrid(xs - x0, ys - y0)
    canvas[ys0 : ys1 + 1, xs0 : xs1 + 1] = bilinear_batch(tex, gx, gy)


def generate_pair(spec: SceneSpec) -> tuple[ImageGray, ImageGray, GroundTruth]:
    """Render the frame pair and its ground truth.

    Frame A is the scene at rest. Frame B applies, in order: block motion
    (each block carries frame A's content at its rect to rect + delta, and
    the vacated area reveals fresh texture, the way a moving component
    exposes what was behind it), the camera homography (camera observes),
    then Gaussian intensity noise. With an identity camera, no blocks, and
    zero noise the two frames are bit-identical.
    """
    rng = np.random.default_rng(spec.texture_seed)
    bg = _texture(spec.width, spec.height, rng)
    revealed_tex = [_texture(b.rect.width, b.rect.height, rng) for b in spec.blocks]

    scene_a = bg
    mask = np.full((spec.height, spec.width), -1, dtype=np.int16)
    for k, b in enumerate(spec.blocks):
        r = b.rect
        mask[r.y0 : r.y0 + r.height, r.x0 : r.x0 + r.width] = k

    scene_b = bg.copy()
    contents = []
    for b in spec.blocks:
        r = b.rect
        contents.append(scene_a[r.y0 : r.y0 + r.height, r.x0 : r.x0 + r.width].copy())
    for b, tex in zip(spec.blocks, revealed_tex):
        r = b.rect
        scene_b[r.y0 : r.y0 + r.height, r.x0 : r.x0 + r.width] = tex
    for b, content in zip(spec.blocks, contents):
        _paste_shifted(scene_b, content, b.rect.x0 + b.delta[0], b.rect.y0 + b.delta[1])

    if spec.jitter_sigma > 0:
        scene_b = _apply_jitter(scene_b, rng, spec.jitter_sigma)

    cam = spec.camera_h.matrix
    if np.array_equal(cam, np.eye(3)):
        frame_b_px = scene_b
    else:
        frame_b_px = warp_image(ImageGray(scene_b), spec.camera_h.inverse(), fill=0.0).pixels

    if spec.noise_sigma > 0:
        frame_b_px = np.clip(
            frame_b_px + rng.normal(0.0, spec.noise_sigma, frame_b_px.shape), 0.0, 1.0
        )

    truth = GroundTruth(
        mask=mask,
        block_deltas=tuple(b.delta for b in spec.blocks),
        camera_h=spec.camera_h,
    )
    return ImageGray(scene_a), ImageGray(frame_b_px), truth


def _apply_jitter(px: np.ndarray, rng: np.random.Generator, sigma: float) -> np.ndarray:
    """Resample through a smooth random displacement field of std sigma px."""
    h, w = px.shape
    dx = _smooth_noise(w, h, rng, 48.0)
    dy = _smooth_noise(w, h, rng, 48.0)
    for d in (dx, dy):
        d -= d.mean()
        std = float(d.std())
        d *= sigma / max(std, 1e-12)
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    sx = np.clip(xs + dx, 0.0, w - 1.0)
    sy = np.clip(ys + dy, 0.0, h - 1.0)
    return bilinear_batch(px, sx, sy)


# --- scoring -------------------------------------------------------------------

@dataclass(frozen=True)
class ScoreReport:
    """Detection quality of a filtered field against scene ground truth."""

    precision: float | None
    recall: float | None
    true_positives: int
    false_positives: int
    block_resident_tracked: int
    per_block_error: tuple[float | None, ...]

    def to_json(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "block_resident_tracked": self.block_resident_tracked,
            "per_block_error": list(self.per_block_error),
        }


def _boundary_band(mask: np.ndarray, band: int) -> np.ndarray:
    """Pixels within Chebyshev distance `band` of a block/background
    transition. The pyramidal tracker's window straddles two motions there,
    so no single ground-truth label applies."""
    from .image import box_sum

    in_block = (mask >= 0).astype(np.float64)
    size = 2 * band + 1
    cnt = box_sum(in_block, size)
    area = box_sum(np.ones_like(in_block), size)
    deep_inside = cnt == area
    deep_outside = cnt == 0.0
    return ~(deep_inside | deep_outside)


def score_against_truth(
    field: MotionField,
    truth: GroundTruth,
    tol: float,
    tracked: MotionField | None = None,
    boundary_px: int = 0,
) -> ScoreReport:
    """Precision/recall of the surviving vectors against the scene truth.

    A survivor is a true positive when its origin lies in a block and its
    residual matches the block's observable residual within tol. Recall is
    measured against the block-resident vectors of `tracked` (the
    unfiltered field); pass it explicitly when `field` has been
    threshold-filtered, otherwise the filtered field doubles as the
    population and recall degenerates to TP / block-resident survivors.

    boundary_px > 0 excludes vectors whose origin sits within that distance
    of a block boundary from every count (the usual benchmark treatment of
    occlusion bands, where a tracking window necessarily sees two motions).
    """
    if tol < 0:
        raise ValueError(f"tol must be >= 0, got {tol}")
    population = tracked if tracked is not None else field
    for f in (field, population):
        for v in f.vectors:
            x, y = v.origin
            if not (-0.5 <= x < truth.width + 0.5 and -0.5 <= y < truth.height + 0.5):
                raise SceneMismatch(
                    f"vector origin ({x}, {y}) outside the {truth.width}x{truth.height} scene"
                )

    if boundary_px > 0:
        band = _boundary_band(truth.mask, boundary_px)

        def ignored(v: MotionVector) -> bool:
            xi = min(max(int(round(v.origin[0])), 0), truth.width - 1)
            yi = min(max(int(round(v.origin[1])), 0), truth.height - 1)
            return bool(band[yi, xi])

    else:

        def ignored(v: MotionVector) -> bool:
            return False

    tp = 0
    fp = 0
    n_blocks = len(truth.block_deltas)
    block_err_sum = [0.0] * n_blocks
    block_err_n = [0] * n_blocks
    for v in field.vectors:
        if ignored(v):
            continue
        k = truth.block_of(*v.origin)
        if k < 0:
            fp += 1
            continue
        exp = truth.expected_residual(*v.origin)
        err = math.hypot(v.residual_delta[0] - exp[0], v.residual_delta[1] - exp[1])
        block_err_sum[k] += err
        block_err_n[k] += 1
        if err <= tol:
            tp += 1
        else:
            fp += 1

    resident = sum(
        1 for v in population.vectors if not ignored(v) and truth.block_of(*v.origin) >= 0
    )
    considered = tp + fp
    precision = tp / considered if considered > 0 else None
    recall = tp / resident if resident > 0 else (None if n_blocks == 0 else 0.0)
    per_block = tuple(
        (block_err_sum[k] / block_err_n[k]) if block_err_n[k] > 0 else None
        for k in range(n_blocks)
    )
    return ScoreReport(
        precision=precision,
        recall=recall,
        true_positives=tp,
        false_positives=fp,
        block_resident_tracked=resident,
        per_block_error=per_block,
    )
