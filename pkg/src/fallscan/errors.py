"""Exception hierarchy for the fallscan toolkit.

Every error raised by library code derives from FallscanError so callers
(CLI, HTTP service) can map failures to exit codes / status codes in one
place. Subclasses are grouped by pipeline stage.
"""

from __future__ import annotations


class FallscanError(Exception):
    """Base class for all fallscan errors."""

    code = "error"


# --- raster / image errors -------------------------------------------------

class ImageError(FallscanError):
    code = "image_error"


class RoiOutOfBounds(ImageError):
    code = "roi_out_of_bounds"


class TooManyLevels(ImageError):
    code = "too_many_levels"


class ImageTooSmall(ImageError):
    code = "image_too_small"


class OutOfBounds(ImageError):
    code = "out_of_bounds"


class DimensionMismatch(ImageError):
    code = "dimension_mismatch"


class InvalidGain(ImageError):
    code = "invalid_gain"


class PatchOutOfBounds(ImageError):
    code = "patch_out_of_bounds"


# --- tracking errors --------------------------------------------------------

class TrackingError(FallscanError):
    code = "tracking_error"


class PyramidMismatch(TrackingError):
    code = "pyramid_mismatch"


# --- stabilization errors ----------------------------------------------------

class StabilizationError(FallscanError):
    code = "stabilization_error"


class DegeneratePoint(StabilizationError):
    code = "degenerate_point"


class InsufficientPairs(StabilizationError):
    code = "insufficient_pairs"


class DegenerateConfiguration(StabilizationError):
    code = "degenerate_configuration"


class NoConsensus(StabilizationError):
    code = "no_consensus"


class InvalidHomography(StabilizationError):
    code = "invalid_homography"


# --- motion analysis errors ---------------------------------------------------

class MotionError(FallscanError):
    code = "motion_error"


class NegativeThreshold(MotionError):
    code = "negative_threshold"


class UnsortedThresholds(MotionError):
    code = "unsorted_thresholds"


# --- synthetic scene errors ----------------------------------------------------

class SceneError(FallscanError):
    code = "scene_error"


class BlockOutOfBounds(SceneError):
    code = "block_out_of_bounds"


class SceneMismatch(SceneError):
    code = "scene_mismatch"


# --- pipeline / store errors -----------------------------------------------------

class PipelineError(FallscanError):
    code = "pipeline_error"


class BadFrameStore(PipelineError):
    code = "bad_frame_store"


class InvalidIndex(PipelineError):
    code = "invalid_index"


class InvalidPair(PipelineError):
    code = "invalid_pair"


class DecoderUnavailable(PipelineError):
    code = "decoder_unavailable"


class InconsistentDimensions(PipelineError):
    code = "inconsistent_dimensions"


class StabilizationFailed(PipelineError):
    """Wraps NoConsensus/DegenerateConfiguration with pair-count diagnostics."""

    code = "stabilization_failed"

    def __init__(self, message: str, detected: int = 0, tracked: int = 0):
        super().__init__(message)
        self.detected = detected
        self.tracked = tracked


# --- service errors -----------------------------------------------------------

class ServiceError(FallscanError):
    code = "service_error"


class UnknownSession(ServiceError):
    code = "unknown_session"
