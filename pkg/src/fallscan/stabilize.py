"""Projective stabilization: estimate the frame-to-frame homography from
matched pairs with a RANSAC + normalized-DLT fit, then warp the second frame
back into the first frame's coordinate system so residual motion reflects
scene motion rather than camera motion.

Convention: points are column vectors, [x2, y2, 1]^T = H [x1, y1, 1]^T with
H = [[a, b, c], [d, e, f], [g, h, 1]]. Every stored matrix uses this layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateConfiguration,
    DegeneratePoint,
    InsufficientPairs,
    InvalidHomography,
    NoConsensus,
)
from .image import ImageGray, bilinear_batch
from .tracking import MatchedPair, TrackStatus

_W_EPS = 1e-12

HOMOGRAPHY_CONVENTION = "column-vector"

# Example transform recorded from a hand-held re-film stabilization run,
# kept verbatim for regression use. Its large terms sit in the bottom-row
# slots, which under our column-vector layout are perspective terms; read as
# a transposed (row-vector) matrix it is a plain 0.99x scaling with a small
# translation. The tag records the apparent convention without asserting how
# the original software defined it.
REFERENCE_REFILM_H = {
    "matrix": [[0.99, 0.0, 0.0], [0.0, 0.99, 0.0], [1.85, -0.24, 1.0]],
    "convention": "row-vector (apparent)",
}


@dataclass(frozen=True)
class Homography:
    """3x3 projective transform, normalized so the (3,3) entry is 1."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise InvalidHomography(f"homography must be 3x3, got shape {m.shape}")
        if abs(m[2, 2]) < _W_EPS:
            raise InvalidHomography("cannot normalize: (3,3) entry is ~0")
        m = m / m[2, 2]
        if abs(np.linalg.det(m)) <= _W_EPS:
            raise InvalidHomography("homography is singular")
        m = np.ascontiguousarray(m)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    @classmethod
    def translation(cls, dx: float, dy: float) -> "Homography":
        m = np.eye(3)
        m[0, 2] = dx
        m[1, 2] = dy
        return cls(m)

    @classmethod
    def similarity(cls, scale: float = 1.0, angle: float = 0.0, dx: float = 0.0, dy: float = 0.0) -> "Homography":
        c, s = scale * np.cos(angle), scale * np.sin(angle)
        return cls(np.array([[c, -s, dx], [s, c, dy], [0.0, 0.0, 1.0]]))

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.matrix))

    def compose(self, other: "Homography") -> "Homography":
        """self after other: (self.compose(other))(p) == self(other(p))."""
        return Homography(self.matrix @ other.matrix)

    def to_json(self) -> dict:
        return {
            "matrix": [float(v) for v in self.matrix.ravel()],
            "convention": HOMOGRAPHY_CONVENTION,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Homography":
        return cls(np.asarray(obj["matrix"], dtype=np.float64).reshape(3, 3))


@dataclass(frozen=True)
class RobustFitParams:
    inlier_threshold: float = 1.0
    max_iterations: int = 2000
    confidence: float = 0.995
    min_inliers: int = 10

    def __post_init__(self):
        if not self.inlier_threshold > 0:
            raise ValueError(f"inlier_threshold must be > 0, got {self.inlier_threshold}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError(f"confidence must be in (0, 1), got {self.confidence}")
        if self.min_inliers < 4:
            raise ValueError(f"min_inliers must be >= 4, got {self.min_inliers}")

    def to_json(self) -> dict:
        return {
            "inlier_threshold": self.inlier_threshold,
            "max_iterations": self.max_iterations,
            "confidence": self.confidence,
            "min_inliers": self.min_inliers,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RobustFitParams":
        return cls(
            inlier_threshold=float(obj.get("inlier_threshold", 1.0)),
            max_iterations=int(obj.get("max_iterations", 2000)),
            confidence=float(obj.get("confidence", 0.995)),
            min_inliers=int(obj.get("min_inliers", 10)),
        )


@dataclass(frozen=True)
class StabilizedPair:
    reference: ImageGray
    adjusted: ImageGray
    h: Homography
    inlier_mask: tuple[bool, ...]


def apply_homography(h: Homography, p: tuple[float, float]) -> tuple[float, float]:
    """Map a single point through H; raises DegeneratePoint when the
    projective denominator vanishes."""
    m = h.matrix
    x, y = p
    w = m[2, 0] * x + m[2, 1] * y + m[2, 2]
    if abs(w) <= _W_EPS:
        raise DegeneratePoint(f"point ({x}, {y}) maps to infinity")
    return (
        (m[0, 0] * x + m[0, 1] * y + m[0, 2]) / w,
        (m[1, 0] * x + m[1, 1] * y + m[1, 2]) / w,
    )


def project_points(m: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Map an (n, 2) point array through a 3x3 matrix (vectorized)."""
    w = m[2, 0] * pts[:, 0] + m[2, 1] * pts[:, 1] + m[2, 2]
    w = np.where(np.abs(w) <= _W_EPS, np.nan, w)
    x = (m[0, 0] * pts[:, 0] + m[0, 1] * pts[:, 1] + m[0, 2]) / w
    y = (m[1, 0] * pts[:, 0] + m[1, 1] * pts[:, 1] + m[1, 2]) / w
    return np.column_stack([x, y])


# --- estimation ----------------------------------------------------------------

def _hartley_normalization(pts: np.ndarray) -> np.ndarray:
    """Similarity transform taking the points to centroid 0, mean radius sqrt(2)."""
    c = pts.mean(axis=0)
    mean_dist = np.sqrt(((pts - c) ** 2).sum(axis=1)).mean()
    s = np.sqrt(2.0) / max(mean_dist, _W_EPS)
    return np.array([[s, 0.0, -s * c[0]], [0.0, s, -s * c[1]], [0.0, 0.0, 1.0]])


def _apply_affine3(t: np.ndarray, pts: np.ndarray) -> np.ndarray:
    return pts @ t[:2, :2].T + t[:2, 2]


def _dlt(p1n: np.ndarray, p2n: np.ndarray) -> np.ndarray | None:
    """Direct linear transform on pre-normalized correspondences; returns the
    3x3 solution or None when the system is rank-deficient."""
    n = p1n.shape[0]
    x, y = p1n[:, 0], p1n[:, 1]
    u, v = p2n[:, 0], p2n[:, 1]
    zeros = np.zeros(n)
    ones = np.ones(n)
    a = np.empty((2 * n, 9))
    a[0::2] = np.column_stack([x, y, ones, zeros, zeros, zeros, -u * x, -u * y, -u])
    a[1::2] = np.column_stack([zeros, zeros, zeros, x, y, ones, -v * x, -v * y, -v])
    _, sv, vt = np.linalg.svd(a)
    if n == 4 and sv[-2] < 1e-9:
        return None  # more than one null direction: degenerate sample
    hm = vt[-1].reshape(3, 3)
    if abs(hm[2, 2]) < _W_EPS:
        return None
    return hm / hm[2, 2]


def _no_collinear_triple(pts: np.ndarray, eps: float = 1e-3) -> bool:
    """True when no 3 of the 4 points are (nearly) collinear.

    Areas are evaluated after Hartley normalization, so eps is scale-free.
    """
    t = _hartley_normalization(pts)
    q = _apply_affine3(t, pts)
    for i in range(4):
        tri = np.delete(q, i, axis=0)
        u = tri[1] - tri[0]
        v = tri[2] - tri[0]
        area = 0.5 * abs(float(u[0] * v[1] - u[1] * v[0]))
        if area <= eps:
            return False
    return True


def symmetric_transfer_error(h: Homography, p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    """Per-pair sqrt(forward^2 + backward^2) transfer distance in pixels."""
    m = h.matrix
    m_inv = np.linalg.inv(m)
    fwd = project_points(m, p1) - p2
    bwd = project_points(m_inv, p2) - p1
    err = np.sqrt((fwd**2).sum(axis=1) + (bwd**2).sum(axis=1))
    return np.where(np.isnan(err), np.inf, err)


def _fit_dlt(p1: np.ndarray, p2: np.ndarray) -> np.ndarray | None:
    t1 = _hartley_normalization(p1)
    t2 = _hartley_normalization(p2)
    hn = _dlt(_apply_affine3(t1, p1), _apply_affine3(t2, p2))
    if hn is None:
        return None
    return np.linalg.inv(t2) @ hn @ t1


def estimate_homography(
    pairs: list[MatchedPair],
    params: RobustFitParams | None = None,
    seed: int = 0,
) -> tuple[Homography, tuple[bool, ...]]:
    """Robustly fit the A->B homography from tracked pairs.

    RANSAC over minimal 4-point samples (normalized DLT), scoring by
    symmetric transfer error, with an adaptive iteration budget at the
    requested confidence; the winner is refit by least squares over all of
    its inliers. Sampling is driven by a seeded generator so results are
    reproducible. The returned mask covers the full input list; entries for
    non-tracked pairs are always False.
    """
    p = params or RobustFitParams()
    tracked = [(i, pr) for i, pr in enumerate(pairs) if pr.status == TrackStatus.TRACKED]
    if len(tracked) < 4:
        raise InsufficientPairs(f"homography needs >= 4 tracked pairs, got {len(tracked)}")
    pts1 = np.asarray([pr.p1 for _, pr in tracked])
    pts2 = np.asarray([pr.p2 for _, pr in tracked])
    n = len(tracked)

    rng = np.random.default_rng(seed)
    best_count = 0
    best_inliers: np.ndarray | None = None
    needed = p.max_iterations
    found_sample = False

    for it in range(p.max_iterations):
        if it >= needed:
            break
        sample = rng.choice(n, size=4, replace=False)
        if not (_no_collinear_triple(pts1[sample]) and _no_collinear_triple(pts2[sample])):
            continue
        found_sample = True
        m = _fit_dlt(pts1[sample], pts2[sample])
        if m is None:
            continue
        try:
            cand = Homography(m)
        except InvalidHomography:
            continue
        err = symmetric_transfer_error(cand, pts1, pts2)
        inliers = err < p.inlier_threshold
        count = int(inliers.sum())
        if count > best_count:
            best_count = count
            best_inliers = inliers
            ratio = count / n
            if 0.0 < ratio < 1.0:
                denom = np.log(max(1.0 - ratio**4, 1e-12))
                needed = min(p.max_iterations, int(np.ceil(np.log(1.0 - p.confidence) / denom)))
            elif ratio >= 1.0:
                needed = 0

    if best_inliers is None:
        if not found_sample:
            raise DegenerateConfiguration("no non-collinear minimal sample found")
        raise NoConsensus(f"best consensus 0 inliers (< min_inliers {p.min_inliers})")
    if best_count < p.min_inliers:
        raise NoConsensus(f"best consensus {best_count} inliers (< min_inliers {p.min_inliers})")

    refit = _fit_dlt(pts1[best_inliers], pts2[best_inliers])
    if refit is None:
        raise DegenerateConfiguration("inlier refit is rank-deficient")
    h = Homography(refit)
    final_inliers = symmetric_transfer_error(h, pts1, pts2) < p.inlier_threshold

    mask = [False] * len(pairs)
    for k, (i, _) in enumerate(tracked):
        mask[i] = bool(final_inliers[k])
    return h, tuple(mask)


# --- warping ----------------------------------------------------------------------

def warp_image(img: ImageGray, h: Homography, fill: float = 0.0) -> ImageGray:
    """Inverse-map warp: output pixel (u, v) samples img at H(u, v).

    When H is the A->B transform and img is frame B, the output lives in
    frame A's coordinate system. Pixels that map outside the source take
    the fill intensity.
    """
    height, width = img.pixels.shape
    us, vs = np.meshgrid(np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64))
    src = project_points(h.matrix, np.column_stack([us.ravel(), vs.ravel()]))
    sx, sy = src[:, 0], src[:, 1]
    valid = (
        np.isfinite(sx)
        & np.isfinite(sy)
        & (sx >= 0.0)
        & (sx <= width - 1.0)
        & (sy >= 0.0)
        & (sy <= height - 1.0)
    )
    out = np.full(width * height, float(np.clip(fill, 0.0, 1.0)))
    out[valid] = bilinear_batch(img.pixels, sx[valid], sy[valid])
    return ImageGray(out.reshape(height, width))


def stabilize_pair(
    a: ImageGray,
    b: ImageGray,
    pairs: list[MatchedPair],
    params: RobustFitParams | None = None,
    seed: int = 0,
) -> StabilizedPair:
    """Estimate the A->B homography and recover frame B in A's coordinates."""
    h, mask = estimate_homography(pairs, params, seed=seed)
    adjusted = warp_image(b, h, fill=0.0)
    return StabilizedPair(reference=a, adjusted=adjusted, h=h, inlier_mask=mask)
