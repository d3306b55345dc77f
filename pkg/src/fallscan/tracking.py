"""Pyramidal Kanade-Lucas-Tomasi sparse feature tracking.

Features detected in frame A are matched into frame B by iterative
least-squares alignment of a small window, run coarse-to-fine over image
pyramids. A forward-backward pass re-tracks matches from B to A and rejects
pairs whose round trip does not land back on the starting point.

The solver per feature and level uses the classic constant-gradient
formulation: the 2x2 normal matrix G comes from frame-A gradients sampled
once per level, and each iteration solves G d = e with
e = sum over the window of grad(A) * (A - B(shifted)).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import PyramidMismatch
from .features import Feature
from .image import Pyramid, bilinear_batch, gradient


class TrackStatus(str, Enum):
    TRACKED = "tracked"
    LOST = "lost"
    REJECTED_FB = "rejected_fb"


@dataclass(frozen=True)
class TrackParams:
    window: int = 15
    pyramid_levels: int = 3
    max_iterations: int = 30
    epsilon: float = 0.01
    fb_threshold: float = 1.0
    min_eig_threshold: float = 1e-4

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError(f"window must be odd and >= 3, got {self.window}")
        if self.pyramid_levels < 1:
            raise ValueError(f"pyramid_levels must be >= 1, got {self.pyramid_levels}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not self.fb_threshold > 0:
            raise ValueError(f"fb_threshold must be > 0, got {self.fb_threshold}")

    def to_json(self) -> dict:
        return {
            "window": self.window,
            "pyramid_levels": self.pyramid_levels,
            "max_iterations": self.max_iterations,
            "epsilon": self.epsilon,
            "fb_threshold": self.fb_threshold,
            "min_eig_threshold": self.min_eig_threshold,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TrackParams":
        return cls(
            window=int(obj.get("window", 15)),
            pyramid_levels=int(obj.get("pyramid_levels", 3)),
            max_iterations=int(obj.get("max_iterations", 30)),
            epsilon=float(obj.get("epsilon", 0.01)),
            fb_threshold=float(obj.get("fb_threshold", 1.0)),
            min_eig_threshold=float(obj.get("min_eig_threshold", 1e-4)),
        )


@dataclass(frozen=True)
class MatchedPair:
    """A feature's position in frame A and its tracked position in frame B.

    fb_error is None until the forward-backward pass measures it; a tracked
    pair that has been through that pass satisfies fb_error <= fb_threshold.
    """

    p1: tuple[float, float]
    p2: tuple[float, float]
    fb_error: float | None
    status: TrackStatus

    def to_json(self) -> dict:
        return {
            "p1": {"x": self.p1[0], "y": self.p1[1]},
            "p2": {"x": self.p2[0], "y": self.p2[1]},
            "fb_error": self.fb_error,
            "status": self.status.value,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MatchedPair":
        fb = obj.get("fb_error")
        return cls(
            p1=(float(obj["p1"]["x"]), float(obj["p1"]["y"])),
            p2=(float(obj["p2"]["x"]), float(obj["p2"]["y"])),
            fb_error=None if fb is None else float(fb),
            status=TrackStatus(obj["status"]),
        )


def _check_pyramids(a: Pyramid, b: Pyramid, params: TrackParams) -> None:
    if len(a.levels) < params.pyramid_levels or len(b.levels) < params.pyramid_levels:
        raise PyramidMismatch(
            f"need {params.pyramid_levels} levels, got {len(a.levels)} and {len(b.levels)}"
        )
    for k in range(params.pyramid_levels):
        la, lb = a.levels[k], b.levels[k]
        if la.width != lb.width or la.height != lb.height:
            raise PyramidMismatch(
                f"level {k} dims differ: {la.width}x{la.height} vs {lb.width}x{lb.height}"
            )


def _track_points(
    a: Pyramid, b: Pyramid, pts: np.ndarray, params: TrackParams
) -> tuple[np.ndarray, np.ndarray]:
    """Track an (n, 2) array of frame-A points into frame B.

    Returns (p2, ok): tracked positions and a boolean success mask. A point
    fails when its window leaves either image at any processed level or the
    normal matrix is too close to singular to trust a step.
    """
    n = pts.shape[0]
    d = np.zeros((n, 2))
    ok = np.ones(n, dtype=bool)
    if n == 0:
        return pts.copy(), ok

    r = params.window // 2
    offs = np.arange(-r, r + 1, dtype=np.float64)
    off_x = np.tile(offs, params.window)
    off_y = np.repeat(offs, params.window)
    win_area = float(params.window * params.window)
    eps2 = params.epsilon * params.epsilon
    coarsest = params.pyramid_levels - 1

    for lev in range(coarsest, -1, -1):
        img_a = a.levels[lev].pixels
        img_b = b.levels[lev].pixels
        gx, gy = gradient(a.levels[lev])
        h, w = img_a.shape
        if lev != coarsest:
            d *= 2.0

        base = pts / float(2**lev)
        in_a = (
            (base[:, 0] - r >= 0.0)
            & (base[:, 0] + r <= w - 1.0)
            & (base[:, 1] - r >= 0.0)
            & (base[:, 1] + r <= h - 1.0)
        )
        ok &= in_a
        idx = np.flatnonzero(ok)
        if idx.size == 0:
            break

        ax = base[idx, 0, None] + off_x
        ay = base[idx, 1, None] + off_y
        ia = bilinear_batch(img_a, ax, ay)
        gxw = bilinear_batch(gx, ax, ay)
        gyw = bilinear_batch(gy, ax, ay)
        gxx = np.einsum("ij,ij->i", gxw, gxw)
        gxy = np.einsum("ij,ij->i", gxw, gyw)
        gyy = np.einsum("ij,ij->i", gyw, gyw)
        disc = np.sqrt(np.maximum(0.25 * (gxx - gyy) ** 2 + gxy * gxy, 0.0))
        lam_min = 0.5 * (gxx + gyy) - disc
        det = gxx * gyy - gxy * gxy
        conditioned = (lam_min / win_area >= params.min_eig_threshold) & (det > 0.0)
        ok[idx[~conditioned]] = False
        idx = idx[conditioned]
        if idx.size == 0:
            continue
        ax, ay, ia = ax[conditioned], ay[conditioned], ia[conditioned]
        gxw, gyw = gxw[conditioned], gyw[conditioned]
        gxx, gxy, gyy, det = gxx[conditioned], gxy[conditioned], gyy[conditioned], det[conditioned]
        ctr = base[idx]
        dl = d[idx].copy()

        active = np.ones(idx.size, dtype=bool)
        for _ in range(params.max_iterations):
            act = np.flatnonzero(active)
            if act.size == 0:
                break
            cx = ctr[act, 0] + dl[act, 0]
            cy = ctr[act, 1] + dl[act, 1]
            in_b = (cx - r >= 0.0) & (cx + r <= w - 1.0) & (cy - r >= 0.0) & (cy + r <= h - 1.0)
            if not in_b.all():
                left = act[~in_b]
                ok[idx[left]] = False
                active[left] = False
                act = act[in_b]
                if act.size == 0:
                    break
            ib = bilinear_batch(img_b, ax[act] + dl[act, 0, None], ay[act] + dl[act, 1, None])
            resid = ia[act] - ib
            ex = np.einsum("ij,ij->i", gxw[act], resid)
            ey = np.einsum("ij,ij->i", gyw[act], resid)
            step_x = (gyy[act] * ex - gxy[act] * ey) / det[act]
            step_y = (gxx[act] * ey - gxy[act] * ex) / det[act]
            dl[act, 0] += step_x
            dl[act, 1] += step_y
            converged = step_x * step_x + step_y * step_y < eps2
            active[act[converged]] = False

        d[idx] = dl

    return pts + d, ok


def track_features(
    a: Pyramid, b: Pyramid, feats: list[Feature], params: TrackParams | None = None
) -> list[MatchedPair]:
    """Track detected features from frame A into frame B.

    Output order equals input order; untrackable features come back with
    status LOST and p2 at the last displacement estimate.
    """
    p = params or TrackParams()
    _check_pyramids(a, b, p)
    pts = np.asarray([[f.x, f.y] for f in feats], dtype=np.float64).reshape(len(feats), 2)
    p2, ok = _track_points(a, b, pts, p)
    return [
        MatchedPair(
            p1=(float(pts[i, 0]), float(pts[i, 1])),
            p2=(float(p2[i, 0]), float(p2[i, 1])),
            fb_error=None,
            status=TrackStatus.TRACKED if ok[i] else TrackStatus.LOST,
        )
        for i in range(len(feats))
    ]


def forward_backward_filter(
    a: Pyramid, b: Pyramid, pairs: list[MatchedPair], params: TrackParams | None = None
) -> list[MatchedPair]:
    """Re-track each match from B back to A and reject inconsistent pairs.

    fb_error is the distance between the original p1 and the backtracked
    point; pairs above fb_threshold (or whose backtrack is itself lost)
    become REJECTED_FB. Non-tracked input pairs pass through unchanged.
    """
    p = params or TrackParams()
    _check_pyramids(a, b, p)
    tracked_idx = [i for i, pr in enumerate(pairs) if pr.status == TrackStatus.TRACKED]
    if not tracked_idx:
        return list(pairs)
    pts2 = np.asarray([pairs[i].p2 for i in tracked_idx], dtype=np.float64)
    back, ok = _track_points(b, a, pts2, p)

    out = list(pairs)
    for k, i in enumerate(tracked_idx):
        pr = pairs[i]
        if not ok[k]:
            out[i] = replace(pr, fb_error=None, status=TrackStatus.REJECTED_FB)
            continue
        fb = float(np.hypot(pr.p1[0] - back[k, 0], pr.p1[1] - back[k, 1]))
        status = TrackStatus.TRACKED if fb <= p.fb_threshold else TrackStatus.REJECTED_FB
        out[i] = replace(pr, fb_error=fb, status=status)
    return out


def tracked_only(pairs: list[MatchedPair]) -> list[MatchedPair]:
    return [p for p in pairs if p.status == TrackStatus.TRACKED]
