"""Shared synthetic inputs for the test suite.

The textured-image helper deliberately avoids the package's own scene
generator (scipy smoothing over raw noise instead), so tracker and detector
tests do not lean on the code they exercise.
"""

from __future__ import annotations

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from fallscan.image import ImageGray
from fallscan.stabilize import Homography


def textured_array(width: int, height: int, seed: int = 0, sigma: float = 2.0) -> np.ndarray:
    """Band-limited random texture in [0.05, 0.95] as a plain array."""
    rng = np.random.default_rng(seed)
    raw = gaussian_filter(rng.random((height, width)), sigma=sigma, mode="nearest")
    lo, hi = raw.min(), raw.max()
    return 0.05 + 0.9 * (raw - lo) / (hi - lo)


def textured_image(width: int, height: int, seed: int = 0, sigma: float = 2.0) -> ImageGray:
    return ImageGray(textured_array(width, height, seed, sigma))


def handheld_camera(seed: int) -> Homography:
    """A mild projective transform of hand-held re-film magnitude: ~1% scale,
    fraction-of-a-degree rotation, a couple px translation, tiny perspective."""
    rng = np.random.default_rng(seed)
    scale = 1.0 + rng.uniform(-0.01, 0.01)
    angle = rng.uniform(-0.006, 0.006)
    dx, dy = rng.uniform(-2.5, 2.5, size=2)
    g, h = rng.uniform(-5e-6, 5e-6, size=2)
    m = np.array(
        [
            [scale * np.cos(angle), -scale * np.sin(angle), dx],
            [scale * np.sin(angle), scale * np.cos(angle), dy],
            [g, h, 1.0],
        ]
    )
    return Homography(m)


@pytest.fixture
def texture_128x96() -> ImageGray:
    return textured_image(128, 96, seed=7)
