"""Unit tests for arrow overlays, difference images, and the placement
agreement score."""

from __future__ import annotations

import math

import numpy as np
import pytest

from fallscan.errors import DimensionMismatch
from fallscan.image import ImageGray, Roi, adjust_brightness
from fallscan.motion import MotionField, MotionVector
from fallscan.synth import MovingBlock, SceneSpec, generate_pair
from fallscan.stabilize import warp_image
from fallscan.visualize import (
    ArrowStyle,
    arrow_endpoints,
    render_arrows,
    render_difference,
    spatial_agreement,
)

from conftest import textured_image


def vec(origin, res):
    return MotionVector(
        origin=origin,
        raw_delta=res,
        camera_delta=(0.0, 0.0),
        residual_delta=res,
        magnitude=math.hypot(*res),
    )


def field_of(*vectors):
    return MotionField(vectors=tuple(vectors), frame_a_index=4, frame_b_index=5)


class TestArrows:
    def test_empty_field_is_brightened_base(self, texture_128x96):
        overlay = render_arrows(texture_128x96, field_of(), brightness_gain=1.8)
        exp_gray = adjust_brightness(texture_128x96, 1.8)
        exp_u8 = np.clip(np.rint(exp_gray.pixels * 255.0), 0, 255).astype(np.uint8)
        assert overlay.image.width == 128 and overlay.image.height == 96
        for c in range(3):
            assert np.array_equal(overlay.image.pixels[:, :, c], exp_u8)

    def test_tip_offset_follows_scale(self):
        style = ArrowStyle(scale=10.0)
        f = field_of(vec((20.0, 30.0), (1.0, 2.0)))
        (start, tip), = arrow_endpoints(f, style)
        assert start == (20.0, 30.0)
        assert tip == (30.0, 50.0)

    def test_doubling_scale_doubles_tip_displacement(self):
        f = field_of(vec((10.0, 10.0), (0.7, -1.3)), vec((40.0, 50.0), (2.0, 0.5)))
        e1 = arrow_endpoints(f, ArrowStyle(scale=7.0))
        e2 = arrow_endpoints(f, ArrowStyle(scale=14.0))
        for (s1, t1), (s2, t2) in zip(e1, e2):
            assert s1 == s2
            assert t2[0] - s2[0] == pytest.approx(2 * (t1[0] - s1[0]), abs=1e-12)
            assert t2[1] - s2[1] == pytest.approx(2 * (t1[1] - s1[1]), abs=1e-12)

    def test_border_clipping_stays_in_bounds(self, texture_128x96):
        f = field_of(vec((126.0, 94.0), (50.0, 80.0)), vec((1.0, 1.0), (-30.0, -30.0)))
        overlay = render_arrows(texture_128x96, f, ArrowStyle(scale=100.0, line_width=3))
        assert overlay.image.pixels.shape == (96, 128, 3)

    def test_arrow_pixels_are_red(self, texture_128x96):
        f = field_of(vec((40.0, 40.0), (2.0, 0.0)))
        style = ArrowStyle(scale=10.0, color=(230, 30, 30))
        overlay = render_arrows(texture_128x96, f, style)
        assert tuple(overlay.image.pixels[40, 50]) == (230, 30, 30)  # shaft midpoint/tip row
        assert tuple(overlay.image.pixels[40, 40]) == (230, 30, 30)  # origin

    def test_zero_residual_draws_dot(self, texture_128x96):
        f = field_of(vec((64.0, 48.0), (0.0, 0.0)))
        overlay = render_arrows(texture_128x96, f, ArrowStyle(color=(255, 0, 0)))
        assert tuple(overlay.image.pixels[48, 64]) == (255, 0, 0)

    def test_provenance(self, texture_128x96):
        f = MotionField(vectors=(), frame_a_index=4, frame_b_index=5, ts_applied=3.5)
        overlay = render_arrows(texture_128x96, f, ArrowStyle(scale=12.0), brightness_gain=2.0)
        prov = overlay.provenance
        assert prov["frame_a"] == 4 and prov["frame_b"] == 5
        assert prov["ts"] == 3.5
        assert prov["scale"] == 12.0
        assert prov["brightness_gain"] == 2.0


class TestDifference:
    def test_identical_black(self, texture_128x96):
        d = render_difference(texture_128x96, texture_128x96)
        assert np.all(d.pixels == 0.0)

    def test_single_pixel_max_normalized(self):
        a = np.full((8, 8), 0.2)
        b = a.copy()
        b[3, 4] = 0.7
        d = render_difference(ImageGray(a), ImageGray(b))
        assert d.pixels[3, 4] == 1.0
        assert d.pixels.sum() == 1.0

    def test_dim_mismatch(self, texture_128x96):
        with pytest.raises(DimensionMismatch):
            render_difference(texture_128x96, ImageGray(np.zeros((10, 10))))

    def test_zero_iff_equal(self, texture_128x96):
        other = ImageGray(np.clip(texture_128x96.pixels + 1e-6, 0, 1))
        assert render_difference(texture_128x96, other).pixels.max() == 1.0

    def test_block_footprint_iou(self):
        spec = SceneSpec(
            width=200,
            height=150,
            texture_seed=4,
            blocks=(MovingBlock(Roi(60, 40, 50, 40), (0.0, 8.0)),),
        )
        a, b, _ = generate_pair(spec)
        d = render_difference(a, b)
        bright = d.pixels > 1e-6
        footprint = np.zeros_like(bright)
        footprint[40:88, 60:110] = True  # old plus displaced extent
        inter = np.logical_and(bright, footprint).sum()
        union = np.logical_or(bright, footprint).sum()
        assert inter / union >= 0.8


class TestAgreement:
    def test_origins_on_brightest(self):
        d = np.zeros((50, 50))
        d[10, 10] = d[20, 30] = d[40, 5] = 1.0
        diff = ImageGray(d)
        f = field_of(vec((10.0, 10.0), (1, 1)), vec((30.0, 20.0), (1, 1)), vec((5.0, 40.0), (1, 1)))
        assert spatial_agreement(f, diff, quantile=0.01, dilate_radius=0) == 1.0

    def test_empty_field_undefined(self, texture_128x96):
        assert spatial_agreement(field_of(), texture_128x96) is None

    def test_far_origin_misses(self):
        d = np.zeros((50, 50))
        d[10, 10] = 1.0
        f = field_of(vec((45.0, 45.0), (1, 1)))
        assert spatial_agreement(f, ImageGray(d), quantile=0.01, dilate_radius=2) == 0.0

    def test_synthetic_block_scene(self):
        from fallscan.pipeline import AnalysisParams, compute_pair_analysis
        from fallscan.motion import filter_by_threshold

        spec = SceneSpec(
            width=320,
            height=240,
            texture_seed=6,
            blocks=(MovingBlock(Roi(100, 80, 80, 60), (0.0, 8.0)),),
        )
        a, b, _ = generate_pair(spec)
        pa = compute_pair_analysis(a, b, AnalysisParams())
        filtered = filter_by_threshold(pa.vectors, 3.5)
        diff = render_difference(a, pa.stabilized.adjusted)
        score = spatial_agreement(filtered, diff, quantile=0.05, dilate_radius=7)
        assert score is not None and score >= 0.9
