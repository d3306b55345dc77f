"""fallscan: forensic motion analysis for shaky incident video.

Takes pairs of frames, removes hand-held camera motion via robust
projective stabilization, and identifies, quantifies, and visualizes the
image regions that genuinely moved.
"""

from .errors import FallscanError
from .features import DetectorParams, Feature, corner_response, detect_features, extract_patch
from .image import (
    ImageGray,
    ImageRGB,
    Pyramid,
    Roi,
    absolute_difference,
    adjust_brightness,
    build_pyramid,
    crop_roi,
    gradient,
    read_png,
    sample_bilinear,
    to_grayscale,
    write_png,
)
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
from .pipeline import (
    AnalysisParams,
    AnalysisResult,
    FrameStore,
    analyze_pair,
    frame_timestamp,
    ingest_frames,
    run_sweep,
)
from .stabilize import (
    Homography,
    RobustFitParams,
    StabilizedPair,
    apply_homography,
    estimate_homography,
    stabilize_pair,
    warp_image,
)
from .synth import GroundTruth, MovingBlock, SceneSpec, generate_pair, score_against_truth
from .tracking import (
    MatchedPair,
    TrackParams,
    TrackStatus,
    forward_backward_filter,
    track_features,
)
from .visualize import ArrowStyle, OverlayImage, render_arrows, render_difference, spatial_agreement

__version__ = "0.1.0"

__all__ = [
    "AnalysisParams",
    "AnalysisResult",
    "ArrowStyle",
    "DetectorParams",
    "FallscanError",
    "Feature",
    "FieldStats",
    "FrameStore",
    "GroundTruth",
    "Homography",
    "ImageGray",
    "ImageRGB",
    "MatchedPair",
    "MotionField",
    "MotionVector",
    "MovingBlock",
    "OverlayImage",
    "Pyramid",
    "RobustFitParams",
    "Roi",
    "SceneSpec",
    "StabilizedPair",
    "ThresholdSweepResult",
    "TrackParams",
    "TrackStatus",
    "absolute_difference",
    "adjust_brightness",
    "analyze_pair",
    "apply_homography",
    "build_pyramid",
    "corner_response",
    "crop_roi",
    "detect_features",
    "estimate_homography",
    "extract_patch",
    "field_statistics",
    "filter_by_threshold",
    "forward_backward_filter",
    "frame_timestamp",
    "generate_pair",
    "gradient",
    "ingest_frames",
    "read_png",
    "render_arrows",
    "render_difference",
    "residual_displacements",
    "run_sweep",
    "sample_bilinear",
    "score_against_truth",
    "spatial_agreement",
    "stabilize_pair",
    "threshold_sweep",
    "to_grayscale",
    "track_features",
    "warp_image",
    "write_png",
]
