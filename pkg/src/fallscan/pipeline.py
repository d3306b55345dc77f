"""End-to-end frame-pair analysis: frame-sequence ingestion, parameter
bundling, the detect/track/stabilize/threshold/render chain, and persistence
of results as an auditable run directory.

A run directory is named by a content hash of (parameters, frame indices),
so re-running the same analysis lands in the same place and concurrent
identical runs deduplicate. Everything inside result.json is deterministic
given the inputs and seed; wall-clock and absolute paths live in meta.json.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import os
import re
import shutil
import subprocess
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from PIL import Image as PILImage

from .errors import (
    BadFrameStore,
    DecoderUnavailable,
    DegenerateConfiguration,
    InconsistentDimensions,
    InsufficientPairs,
    InvalidIndex,
    InvalidPair,
    NoConsensus,
    StabilizationFailed,
)
from .features import DetectorParams, detect_features
from .image import ImageGray, ImageRGB, Roi, build_pyramid, crop_roi, read_png, to_grayscale, write_png
from .motion import (
    FieldStats,
    MotionField,
    MotionVector,
    ThresholdSweepResult,
    field_statistics,
    filter_by_threshold,
    residual_displacements,
    threshold_sweep,
)
from .stabilize import Homography, RobustFitParams, StabilizedPair, stabilize_pair
from .tracking import MatchedPair, TrackParams, TrackStatus, forward_backward_filter, track_features
from .visualize import ArrowStyle, render_arrows, render_difference, spatial_agreement

DEFAULT_FPS = 29.97
_FRAME_RE = re.compile(r"^frame_(\d{6})\.png$")


def frame_filename(index: int) -> str:
    return f"frame_{index:06d}.png"


def frame_timestamp(index: int, fps: float = DEFAULT_FPS) -> float:
    """Seconds on the advisory timeline: frame index / fps (1-indexed)."""
    if index < 1:
        raise InvalidIndex(f"frame index must be >= 1, got {index}")
    if not fps > 0:
        raise InvalidIndex(f"fps must be > 0, got {fps}")
    return index / fps


@dataclass(frozen=True)
class FrameStore:
    """A directory of contiguous 1-indexed PNG frames with uniform size."""

    directory: Path
    frame_count: int
    width: int
    height: int
    fps: float = DEFAULT_FPS

    @classmethod
    def open(cls, directory: str | Path, fps: float = DEFAULT_FPS) -> "FrameStore":
        d = Path(directory)
        if not d.is_dir():
            raise BadFrameStore(f"not a directory: {d}")
        indices = []
        for name in os.listdir(d):
            m = _FRAME_RE.match(name)
            if m:
                indices.append(int(m.group(1)))
        if not indices:
            raise BadFrameStore(f"no frame_NNNNNN.png files in {d}")
        indices.sort()
        if indices[0] != 1 or indices[-1] != len(indices):
            raise BadFrameStore(
                f"frames must be contiguous from 1; found {len(indices)} files "
                f"spanning {indices[0]}..{indices[-1]}"
            )
        dims = None
        for i in indices:
            with PILImage.open(d / frame_filename(i)) as im:
                if dims is None:
                    dims = im.size
                elif im.size != dims:
                    raise BadFrameStore(
                        f"frame {i} is {im.size[0]}x{im.size[1]}, expected {dims[0]}x{dims[1]}"
                    )
        return cls(directory=d, frame_count=len(indices), width=dims[0], height=dims[1], fps=fps)

    def frame_path(self, index: int) -> Path:
        self._check_index(index)
        return self.directory / frame_filename(index)

    def load(self, index: int) -> ImageGray | ImageRGB:
        return read_png(self.frame_path(index))

    def load_gray(self, index: int, roi: Roi | None = None) -> ImageGray:
        img = self.load(index)
        if roi is not None:
            img = crop_roi(img, roi)
        if isinstance(img, ImageRGB):
            img = to_grayscale(img)
        return img

    def _check_index(self, index: int) -> None:
        if not 1 <= index <= self.frame_count:
            raise InvalidIndex(f"frame {index} outside 1..{self.frame_count}")


@dataclass(frozen=True)
class AnalysisParams:
    """Everything one analysis run depends on (all stages + rendering)."""

    roi: Roi | None = None
    detector: DetectorParams = field(default_factory=DetectorParams)
    tracker: TrackParams = field(default_factory=TrackParams)
    robust_fit: RobustFitParams = field(default_factory=RobustFitParams)
    ts: float = 3.5
    arrow: ArrowStyle = field(default_factory=ArrowStyle)
    seed: int = 0
    fb_filter: bool = True
    brightness_gain: float = 1.8

    def __post_init__(self):
        if self.ts < 0:
            raise ValueError(f"ts must be >= 0, got {self.ts}")
        if not self.brightness_gain > 0:
            raise ValueError(f"brightness_gain must be > 0, got {self.brightness_gain}")

    def to_json(self) -> dict:
        return {
            "roi": None if self.roi is None else self.roi.to_json(),
            "detector": self.detector.to_json(),
            "tracker": self.tracker.to_json(),
            "robust_fit": self.robust_fit.to_json(),
            "ts": self.ts,
            "arrow": self.arrow.to_json(),
            "seed": self.seed,
            "fb_filter": self.fb_filter,
            "brightness_gain": self.brightness_gain,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AnalysisParams":
        roi = obj.get("roi")
        return cls(
            roi=None if roi is None else Roi.from_json(roi),
            detector=DetectorParams.from_json(obj.get("detector", {})),
            tracker=TrackParams.from_json(obj.get("tracker", {})),
            robust_fit=RobustFitParams.from_json(obj.get("robust_fit", {})),
            ts=float(obj.get("ts", 3.5)),
            arrow=ArrowStyle.from_json(obj.get("arrow", {})),
            seed=int(obj.get("seed", 0)),
            fb_filter=bool(obj.get("fb_filter", True)),
            brightness_gain=float(obj.get("brightness_gain", 1.8)),
        )


def params_hash(params: AnalysisParams, frame_a: int, frame_b: int, extra: dict | None = None) -> str:
    """16-hex content hash naming the run directory."""
    payload = {"params": params.to_json(), "frame_a": frame_a, "frame_b": frame_b}
    if extra:
        payload["extra"] = extra
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class PairAnalysis:
    """Intermediate state upstream of the cutoff threshold (cacheable)."""

    n_detected: int
    pairs: tuple[MatchedPair, ...]
    stabilized: StabilizedPair
    vectors: tuple[MotionVector, ...]
    dropped: int

    @property
    def n_tracked(self) -> int:
        return sum(1 for p in self.pairs if p.status == TrackStatus.TRACKED)

    @property
    def n_lost(self) -> int:
        return sum(1 for p in self.pairs if p.status == TrackStatus.LOST)

    @property
    def n_rejected_fb(self) -> int:
        return sum(1 for p in self.pairs if p.status == TrackStatus.REJECTED_FB)

    @property
    def n_inliers(self) -> int:
        return sum(1 for m in self.stabilized.inlier_mask if m)


def compute_pair_analysis(gray_a: ImageGray, gray_b: ImageGray, params: AnalysisParams) -> PairAnalysis:
    """Run detection, tracking, fb validation, stabilization, decomposition."""
    feats = detect_features(gray_a, params.detector)
    pyr_a = build_pyramid(gray_a, params.tracker.pyramid_levels)
    pyr_b = build_pyramid(gray_b, params.tracker.pyramid_levels)
    pairs = track_features(pyr_a, pyr_b, feats, params.tracker)
    if params.fb_filter:
        pairs = forward_backward_filter(pyr_a, pyr_b, pairs, params.tracker)
    n_tracked = sum(1 for p in pairs if p.status == TrackStatus.TRACKED)
    try:
        stab = stabilize_pair(gray_a, gray_b, pairs, params.robust_fit, seed=params.seed)
    except (InsufficientPairs, DegenerateConfiguration, NoConsensus) as e:
        raise StabilizationFailed(
            f"{type(e).__name__}: {e} (detected {len(feats)}, tracked {n_tracked})",
            detected=len(feats),
            tracked=n_tracked,
        ) from e
    vectors, dropped = residual_displacements(pairs, stab.h)
    return PairAnalysis(
        n_detected=len(feats),
        pairs=tuple(pairs),
        stabilized=stab,
        vectors=tuple(vectors),
        dropped=dropped,
    )


def retrack_residuals(
    gray_a: ImageGray,
    adjusted: ImageGray,
    pairs: tuple[MatchedPair, ...] | list[MatchedPair],
    tracker: TrackParams,
) -> list[MotionVector]:
    """Optional validation mode: measure residual motion by re-tracking.

    The adjusted frame already lives in frame A's coordinate system, so
    tracking A -> adjusted yields the residual displacement directly. This
    is the resampling-based counterpart of the analytic decomposition in
    residual_displacements; the two agree up to interpolation blur and make
    a useful cross-check, but the analytic form is the canonical output.
    """
    from .features import Feature

    pyr_a = build_pyramid(gray_a, tracker.pyramid_levels)
    pyr_adj = build_pyramid(adjusted, tracker.pyramid_levels)
    tracked = [p for p in pairs if p.status == TrackStatus.TRACKED]
    feats = [Feature(p.p1[0], p.p1[1], 0.0) for p in tracked]
    repairs = forward_backward_filter(
        pyr_a, pyr_adj, track_features(pyr_a, pyr_adj, feats, tracker), tracker
    )
    out: list[MotionVector] = []
    for p in repairs:
        if p.status != TrackStatus.TRACKED:
            continue
        res = (p.p2[0] - p.p1[0], p.p2[1] - p.p1[1])
        out.append(
            MotionVector(
                origin=p.p1,
                raw_delta=res,
                camera_delta=(0.0, 0.0),
                residual_delta=res,
                magnitude=(res[0] ** 2 + res[1] ** 2) ** 0.5,
            )
        )
    return out


@dataclass(frozen=True)
class AnalysisResult:
    """Full record of one frame-pair analysis."""

    params: AnalysisParams
    frame_a: int
    frame_b: int
    timestamp_a: float
    timestamp_b: float
    fps: float
    n_detected: int
    n_tracked: int
    n_lost: int
    n_rejected_fb: int
    n_inliers: int
    dropped: int
    h: Homography
    field: MotionField
    filtered: MotionField
    stats: FieldStats
    agreement: float | None
    artifacts: dict[str, str]
    run_dir: Path | None
    duration_s: float

    def to_json(self) -> dict:
        """Deterministic payload: no wall-clock, no absolute paths."""
        return {
            "params": self.params.to_json(),
            "frames": {
                "a": self.frame_a,
                "b": self.frame_b,
                "timestamp_a": self.timestamp_a,
                "timestamp_b": self.timestamp_b,
                "fps": self.fps,
            },
            "counts": {
                "detected": self.n_detected,
                "tracked": self.n_tracked,
                "lost": self.n_lost,
                "rejected_fb": self.n_rejected_fb,
                "inliers": self.n_inliers,
                "dropped": self.dropped,
            },
            "homography": self.h.to_json(),
            "field": self.field.to_json(),
            "filtered_field": self.filtered.to_json(),
            "stats": self.stats.to_json(),
            "agreement": self.agreement,
            "artifacts": self.artifacts,
        }


def _dump_json(obj: dict, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_vectors_csv(vectors: tuple[MotionVector, ...], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            [
                "origin_x", "origin_y",
                "raw_dx", "raw_dy",
                "camera_dx", "camera_dy",
                "residual_dx", "residual_dy",
                "magnitude",
            ]
        )
        for v in vectors:
            w.writerow(
                [
                    repr(v.origin[0]), repr(v.origin[1]),
                    repr(v.raw_delta[0]), repr(v.raw_delta[1]),
                    repr(v.camera_delta[0]), repr(v.camera_delta[1]),
                    repr(v.residual_delta[0]), repr(v.residual_delta[1]),
                    repr(v.magnitude),
                ]
            )


def _publish_run_dir(out_root: Path, name: str, stage: Path) -> Path:
    """Atomically move a staged run directory into place; identical
    concurrent runs deduplicate on the existing directory."""
    target = out_root / name
    if target.exists():
        shutil.rmtree(stage)
        return target
    try:
        os.rename(stage, target)
    except OSError:
        if target.exists():
            shutil.rmtree(stage)
            return target
        raise
    return target


def analyze_pair(
    store: FrameStore,
    frame_a: int,
    frame_b: int,
    params: AnalysisParams | None = None,
    out_root: str | Path | None = None,
    precomputed: PairAnalysis | None = None,
) -> AnalysisResult:
    """Analyze one frame pair end to end.

    Detection runs on frame_a (the reference), tracking goes a -> b, the
    homography maps a-coordinates to b-coordinates, and all outputs live in
    frame_a's coordinate system. With out_root set, artifacts and the
    deterministic result.json are persisted under a content-hash run
    directory and artifact names are recorded in the result.

    `precomputed` short-circuits the heavy stages with an existing
    PairAnalysis; the caller guarantees it was produced from the same
    frames and the same upstream parameters (the service's session cache).
    """
    p = params or AnalysisParams()
    if frame_a == frame_b:
        raise InvalidPair(f"frame pair must be distinct, got ({frame_a}, {frame_b})")
    store._check_index(frame_a)
    store._check_index(frame_b)

    t0 = time.perf_counter()
    gray_a = store.load_gray(frame_a, p.roi)
    gray_b = store.load_gray(frame_b, p.roi)
    pa = precomputed if precomputed is not None else compute_pair_analysis(gray_a, gray_b, p)

    unfiltered = MotionField(vectors=pa.vectors, frame_a_index=frame_a, frame_b_index=frame_b)
    filtered = filter_by_threshold(pa.vectors, p.ts, frame_a, frame_b)
    diff = render_difference(gray_a, pa.stabilized.adjusted)
    overlay = render_arrows(gray_a, filtered, p.arrow, p.brightness_gain)
    agreement = spatial_agreement(
        filtered, diff, quantile=0.05, dilate_radius=p.tracker.window // 2
    )
    stats = field_statistics(filtered)

    artifacts = {
        "overlay": "overlay.png",
        "overlay_provenance": "overlay_provenance.json",
        "diff": "diff.png",
        "vectors_csv": "vectors.csv",
        "magnitude_hist": "magnitude_hist.png",
        "quiver": "quiver.png",
    }
    result = AnalysisResult(
        params=p,
        frame_a=frame_a,
        frame_b=frame_b,
        timestamp_a=frame_timestamp(frame_a, store.fps),
        timestamp_b=frame_timestamp(frame_b, store.fps),
        fps=store.fps,
        n_detected=pa.n_detected,
        n_tracked=pa.n_tracked,
        n_lost=pa.n_lost,
        n_rejected_fb=pa.n_rejected_fb,
        n_inliers=pa.n_inliers,
        dropped=pa.dropped,
        h=pa.stabilized.h,
        field=unfiltered,
        filtered=filtered,
        stats=stats,
        agreement=agreement,
        artifacts=artifacts if out_root is not None else {},
        run_dir=None,
        duration_s=0.0,
    )

    run_dir: Path | None = None
    if out_root is not None:
        root = Path(out_root)
        root.mkdir(parents=True, exist_ok=True)
        name = params_hash(p, frame_a, frame_b)
        stage = root / f".stage-{name}-{os.getpid()}"
        stage.mkdir(parents=True, exist_ok=True)
        write_png(stage / artifacts["overlay"], overlay.image)
        _dump_json(overlay.provenance, stage / artifacts["overlay_provenance"])
        write_png(stage / artifacts["diff"], diff)
        _write_vectors_csv(pa.vectors, stage / artifacts["vectors_csv"])
        from . import report  # deferred: pulls in matplotlib

        report.save_magnitude_histogram(unfiltered, p.ts, stage / artifacts["magnitude_hist"])
        report.save_quiver(gray_a, filtered, p.arrow.scale, stage / artifacts["quiver"])
        _dump_json(result.to_json(), stage / "result.json")
        duration = time.perf_counter() - t0
        _dump_json(
            {
                "duration_s": duration,
                "created_utc": datetime.now(timezone.utc).isoformat(),
                "frames_dir": str(store.directory.resolve()),
            },
            stage / "meta.json",
        )
        run_dir = _publish_run_dir(root, name, stage)

    return dataclasses.replace(result, run_dir=run_dir, duration_s=time.perf_counter() - t0)


@dataclass(frozen=True)
class Plateau:
    """A maximal run of consecutive sweep thresholds with an identical
    survivor set; a long plateau is a hint (not a decision) that the set is
    stable against the cutoff choice."""

    ts_min: float
    ts_max: float
    count: int

    def to_json(self) -> dict:
        return {"ts_min": self.ts_min, "ts_max": self.ts_max, "count": self.count}


def find_plateaus(sweep: ThresholdSweepResult) -> list[Plateau]:
    plateaus: list[Plateau] = []
    prev_key = None
    for e in sweep.entries:
        key = tuple(v.origin for v in e.field.vectors)
        if key == prev_key:
            last = plateaus[-1]
            plateaus[-1] = Plateau(ts_min=last.ts_min, ts_max=e.ts, count=last.count)
        else:
            plateaus.append(Plateau(ts_min=e.ts, ts_max=e.ts, count=e.surviving_count))
            prev_key = key
    return plateaus


def recommend_plateau(plateaus: list[Plateau]) -> Plateau | None:
    """Longest non-empty plateau (first wins on ties), or None."""
    best = None
    for p in plateaus:
        if p.count == 0:
            continue
        span = p.ts_max - p.ts_min
        if best is None or span > (best.ts_max - best.ts_min):
            best = p
    return best


@dataclass(frozen=True)
class SweepRunResult:
    sweep: ThresholdSweepResult
    plateaus: list[Plateau]
    recommended: Plateau | None
    analysis: AnalysisResult
    run_dir: Path | None

    def to_json(self) -> dict:
        return {
            "sweep": self.sweep.to_json(),
            "plateaus": [p.to_json() for p in self.plateaus],
            "recommended": None if self.recommended is None else self.recommended.to_json(),
            "analysis": self.analysis.to_json(),
        }


def run_sweep(
    store: FrameStore,
    frame_a: int,
    frame_b: int,
    params: AnalysisParams | None = None,
    ts_values: list[float] | None = None,
    out_root: str | Path | None = None,
) -> SweepRunResult:
    """Sweep the cutoff threshold over a grid, reusing one detection /
    tracking / stabilization pass; writes per-ts overlays, the survivor
    curve, and sweep.csv when out_root is given."""
    from .motion import DEFAULT_SWEEP_GRID

    p = params or AnalysisParams()
    grid = list(ts_values) if ts_values is not None else list(DEFAULT_SWEEP_GRID)
    result = analyze_pair(store, frame_a, frame_b, p)
    sweep = threshold_sweep(result.field.vectors, grid, frame_a, frame_b)
    plateaus = find_plateaus(sweep)
    recommended = recommend_plateau(plateaus)

    run_dir: Path | None = None
    if out_root is not None:
        root = Path(out_root)
        root.mkdir(parents=True, exist_ok=True)
        name = params_hash(p, frame_a, frame_b, extra={"sweep": grid})
        stage = root / f".stage-{name}-{os.getpid()}"
        stage.mkdir(parents=True, exist_ok=True)
        gray_a = store.load_gray(frame_a, p.roi)
        for e in sweep.entries:
            ov = render_arrows(gray_a, e.field, p.arrow, p.brightness_gain)
            write_png(stage / f"overlay_ts_{e.ts:g}.png", ov.image)
        with open(stage / "sweep.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["ts", "surviving_count"])
            for e in sweep.entries:
                w.writerow([repr(e.ts), e.surviving_count])
        from . import report

        report.save_sweep_curve(sweep, stage / "sweep_counts.png")
        out = SweepRunResult(sweep, plateaus, recommended, result, None)
        _dump_json(out.to_json(), stage / "sweep.json")
        run_dir = _publish_run_dir(root, name, stage)

    return SweepRunResult(sweep, plateaus, recommended, result, run_dir)


def ingest_frames(source: str | Path, out: str | Path, fps: float = DEFAULT_FPS) -> FrameStore:
    """Normalize a frame source into a FrameStore directory.

    A directory source must contain PNGs (any names); they are copied over
    in sorted-name order as frame_000001.png onward after a uniform-size
    check. A video file is handed to the external decoder named by the
    VIDEO_DECODER environment variable, invoked as
    `$VIDEO_DECODER <in> <outdir> <pattern>`.
    """
    src = Path(source)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if src.is_dir():
        names = sorted(n for n in os.listdir(src) if n.lower().endswith(".png"))
        if not names:
            raise BadFrameStore(f"no PNG files in {src}")
        dims = None
        for n in names:
            with PILImage.open(src / n) as im:
                if dims is None:
                    dims = im.size
                elif im.size != dims:
                    raise InconsistentDimensions(
                        f"{n} is {im.size[0]}x{im.size[1]}, expected {dims[0]}x{dims[1]}"
                    )
        for k, n in enumerate(names, start=1):
            target = out_dir / frame_filename(k)
            if (src / n).resolve() != target.resolve():
                shutil.copyfile(src / n, target)
        return FrameStore.open(out_dir, fps=fps)

    if not src.is_file():
        raise BadFrameStore(f"source {src} is neither a directory nor a file")
    decoder = os.environ.get("VIDEO_DECODER")
    if not decoder:
        raise DecoderUnavailable("set VIDEO_DECODER to an external frame extractor")
    if shutil.which(decoder) is None and not Path(decoder).exists():
        raise DecoderUnavailable(f"decoder {decoder!r} not found")
    proc = subprocess.run(
        [decoder, str(src), str(out_dir), "frame_%06d.png"],
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise DecoderUnavailable(
            f"decoder exited {proc.returncode}: {proc.stderr.strip()[:500]}"
        )
    try:
        return FrameStore.open(out_dir, fps=fps)
    except BadFrameStore as e:
        raise InconsistentDimensions(f"decoder output invalid: {e}") from e
