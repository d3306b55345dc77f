"""Residual motion after camera-motion removal.

Each tracked pair's raw displacement decomposes into the part predicted by
the frame-to-frame homography (camera motion) and a residual; residual
magnitudes above the cutoff threshold mark image regions that genuinely
moved. The decomposition is computed analytically from the homography
rather than by re-tracking against the warped frame, which is equivalent
for the same correspondences and avoids compounding resampling blur.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import DegeneratePoint, NegativeThreshold, UnsortedThresholds
from .stabilize import Homography, apply_homography
from .tracking import MatchedPair, TrackStatus


@dataclass(frozen=True)
class MotionVector:
    """Displacement decomposition for one tracked feature (all px).

    raw_delta = camera_delta + residual_delta, exactly: the raw frame-A to
    frame-B motion splits into what the homography predicts and what is
    left over. Magnitude is the Euclidean norm of the residual.
    """

    origin: tuple[float, float]
    raw_delta: tuple[float, float]
    camera_delta: tuple[float, float]
    residual_delta: tuple[float, float]
    magnitude: float

    def to_json(self) -> dict:
        return {
            "origin": {"x": self.origin[0], "y": self.origin[1]},
            "raw": {"x": self.raw_delta[0], "y": self.raw_delta[1]},
            "camera": {"x": self.camera_delta[0], "y": self.camera_delta[1]},
            "residual": {"x": self.residual_delta[0], "y": self.residual_delta[1]},
            "magnitude": self.magnitude,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MotionVector":
        return cls(
            origin=(float(obj["origin"]["x"]), float(obj["origin"]["y"])),
            raw_delta=(float(obj["raw"]["x"]), float(obj["raw"]["y"])),
            camera_delta=(float(obj["camera"]["x"]), float(obj["camera"]["y"])),
            residual_delta=(float(obj["residual"]["x"]), float(obj["residual"]["y"])),
            magnitude=float(obj["magnitude"]),
        )


@dataclass(frozen=True)
class MotionField:
    """A set of motion vectors for one frame pair, optionally filtered."""

    vectors: tuple[MotionVector, ...]
    frame_a_index: int | None = None
    frame_b_index: int | None = None
    ts_applied: float | None = None

    def __post_init__(self):
        if self.ts_applied is not None and any(
            v.magnitude < self.ts_applied for v in self.vectors
        ):
            raise ValueError(f"field claims cutoff {self.ts_applied} but holds smaller vectors")

    def __len__(self) -> int:
        return len(self.vectors)

    def to_json(self) -> dict:
        return {
            "frame_a": self.frame_a_index,
            "frame_b": self.frame_b_index,
            "ts": self.ts_applied,
            "vectors": [v.to_json() for v in self.vectors],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MotionField":
        ts = obj.get("ts")
        fa, fb = obj.get("frame_a"), obj.get("frame_b")
        return cls(
            vectors=tuple(MotionVector.from_json(v) for v in obj["vectors"]),
            frame_a_index=None if fa is None else int(fa),
            frame_b_index=None if fb is None else int(fb),
            ts_applied=None if ts is None else float(ts),
        )


@dataclass(frozen=True)
class SweepEntry:
    ts: float
    surviving_count: int
    field: MotionField


@dataclass(frozen=True)
class ThresholdSweepResult:
    entries: tuple[SweepEntry, ...]

    def __post_init__(self):
        ts = [e.ts for e in self.entries]
        if ts != sorted(ts):
            raise UnsortedThresholds("sweep entries must be sorted ascending by ts")
        counts = [e.surviving_count for e in self.entries]
        if any(counts[i] < counts[i + 1] for i in range(len(counts) - 1)):
            raise ValueError("survivor counts must be non-increasing in ts")

    def to_json(self) -> dict:
        return {
            "entries": [
                {"ts": e.ts, "count": e.surviving_count, "field": e.field.to_json()}
                for e in self.entries
            ]
        }


def residual_displacements(
    pairs: Sequence[MatchedPair], h: Homography
) -> tuple[list[MotionVector], int]:
    """Decompose tracked pair displacements into camera motion + residual.

    Only pairs with status TRACKED contribute; input order is preserved.
    Returns the vectors plus the number of pairs dropped because the
    homography sent their origin to infinity.
    """
    vectors: list[MotionVector] = []
    dropped = 0
    for pr in pairs:
        if pr.status != TrackStatus.TRACKED:
            continue
        try:
            mapped = apply_homography(h, pr.p1)
        except DegeneratePoint:
            dropped += 1
            continue
        raw = (pr.p2[0] - pr.p1[0], pr.p2[1] - pr.p1[1])
        cam = (mapped[0] - pr.p1[0], mapped[1] - pr.p1[1])
        res = (raw[0] - cam[0], raw[1] - cam[1])
        vectors.append(
            MotionVector(
                origin=pr.p1,
                raw_delta=raw,
                camera_delta=cam,
                residual_delta=res,
                magnitude=math.hypot(res[0], res[1]),
            )
        )
    return vectors, dropped


def filter_by_threshold(
    vectors: Sequence[MotionVector],
    ts: float,
    frame_a_index: int | None = None,
    frame_b_index: int | None = None,
) -> MotionField:
    """Keep exactly the vectors with magnitude >= ts."""
    if ts < 0:
        raise NegativeThreshold(f"cutoff threshold must be >= 0, got {ts}")
    kept = tuple(v for v in vectors if v.magnitude >= ts)
    return MotionField(
        vectors=kept,
        frame_a_index=frame_a_index,
        frame_b_index=frame_b_index,
        ts_applied=float(ts),
    )


def threshold_sweep(
    vectors: Sequence[MotionVector],
    ts_values: Sequence[float],
    frame_a_index: int | None = None,
    frame_b_index: int | None = None,
) -> ThresholdSweepResult:
    """Filter at each cutoff of an ascending grid; counts are non-increasing."""
    if any(t < 0 for t in ts_values):
        raise NegativeThreshold("all sweep thresholds must be >= 0")
    if list(ts_values) != sorted(ts_values):
        raise UnsortedThresholds("sweep thresholds must be ascending")
    entries = []
    for t in ts_values:
        f = filter_by_threshold(vectors, t, frame_a_index, frame_b_index)
        entries.append(SweepEntry(ts=float(t), surviving_count=len(f), field=f))
    return ThresholdSweepResult(entries=tuple(entries))


DEFAULT_SWEEP_GRID = [round(0.5 * k, 1) for k in range(21)]  # 0.0 .. 10.0 in 0.5 steps


@dataclass(frozen=True)
class FieldStats:
    """Summary of a motion field; statistics are None for an empty field."""

    count: int
    mean_magnitude: float | None
    median_magnitude: float | None
    max_magnitude: float | None
    mean_direction_deg: float | None

    def to_json(self) -> dict:
        return {
            "count": self.count,
            "mean_magnitude": self.mean_magnitude,
            "median_magnitude": self.median_magnitude,
            "max_magnitude": self.max_magnitude,
            "mean_direction_deg": self.mean_direction_deg,
        }


def field_statistics(field: MotionField) -> FieldStats:
    """Count, magnitude summary, and resultant direction of the residuals.

    Direction is the angle of the summed residual vectors, degrees in
    (-180, 180], measured from +x toward +y; undefined (None) when the
    resultant is zero or the field is empty.
    """
    if not field.vectors:
        return FieldStats(0, None, None, None, None)
    mags = sorted(v.magnitude for v in field.vectors)
    n = len(mags)
    mean = sum(mags) / n
    median = mags[n // 2] if n % 2 == 1 else 0.5 * (mags[n // 2 - 1] + mags[n // 2])
    sum_x = sum(v.residual_delta[0] for v in field.vectors)
    sum_y = sum(v.residual_delta[1] for v in field.vectors)
    if sum_x == 0.0 and sum_y == 0.0:
        direction = None
    else:
        direction = math.degrees(math.atan2(sum_y, sum_x))
    return FieldStats(
        count=n,
        mean_magnitude=mean,
        median_magnitude=median,
        max_magnitude=mags[-1],
        mean_direction_deg=direction,
    )
