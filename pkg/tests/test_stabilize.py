"""Unit tests for homography estimation and warping."""

from __future__ import annotations

import numpy as np
import pytest

from fallscan.errors import DegeneratePoint, InsufficientPairs, InvalidHomography, NoConsensus
from fallscan.stabilize import (
    HOMOGRAPHY_CONVENTION,
    REFERENCE_REFILM_H,
    Homography,
    RobustFitParams,
    apply_homography,
    estimate_homography,
    stabilize_pair,
    symmetric_transfer_error,
    warp_image,
)
from fallscan.tracking import MatchedPair, TrackStatus

from conftest import handheld_camera, textured_image


def pairs_from_h(h: Homography, pts: np.ndarray, noise=0.0, seed=0) -> list[MatchedPair]:
    rng = np.random.default_rng(seed)
    out = []
    for x, y in pts:
        u, v = apply_homography(h, (float(x), float(y)))
        if noise > 0:
            u += rng.normal(0, noise)
            v += rng.normal(0, noise)
        out.append(MatchedPair((float(x), float(y)), (u, v), 0.0, TrackStatus.TRACKED))
    return out


def grid_points(n_side=5, w=600, h=340) -> np.ndarray:
    xs = np.linspace(20, w, n_side)
    ys = np.linspace(20, h, n_side)
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def rel_frob(h1: Homography, h2: Homography) -> float:
    return float(np.linalg.norm(h1.matrix - h2.matrix) / np.linalg.norm(h2.matrix))


class TestApply:
    def test_identity(self):
        assert apply_homography(Homography.identity(), (10.0, 20.0)) == (10.0, 20.0)

    def test_pure_translation(self):
        h = Homography.translation(2.0, -3.0)
        assert apply_homography(h, (0.0, 0.0)) == (2.0, -3.0)

    def test_perspective_division(self):
        m = np.eye(3)
        m[2, 0] = 0.001
        h = Homography(m)
        x, y = apply_homography(h, (100.0, 0.0))
        assert x == pytest.approx(100.0 / 1.1, abs=1e-12)
        assert y == 0.0

    def test_degenerate_point(self):
        m = np.eye(3)
        m[2, 0] = -1.0
        h = Homography(m)
        with pytest.raises(DegeneratePoint):
            apply_homography(h, (1.0, 0.0))

    def test_inverse_roundtrip(self):
        for seed in range(5):
            h = handheld_camera(seed)
            inv = h.inverse()
            for p in [(10.0, 5.0), (300.0, 200.0), (640.0, 360.0)]:
                q = apply_homography(h, p)
                back = apply_homography(inv, q)
                assert np.hypot(back[0] - p[0], back[1] - p[1]) < 1e-9

    def test_normalization_and_validation(self):
        h = Homography(2.0 * np.eye(3))
        assert h.matrix[2, 2] == 1.0
        with pytest.raises(InvalidHomography):
            Homography(np.zeros((3, 3)))


class TestEstimate:
    def test_exact_recovery(self):
        h_true = handheld_camera(3)
        pairs = pairs_from_h(h_true, grid_points())
        h_est, mask = estimate_homography(pairs, seed=1)
        assert rel_frob(h_est, h_true) < 1e-6
        assert all(mask)

    def test_identity_correspondences(self):
        pts = grid_points(4)[:10]
        pairs = [
            MatchedPair((float(x), float(y)), (float(x), float(y)), 0.0, TrackStatus.TRACKED)
            for x, y in pts
        ]
        h_est, _ = estimate_homography(pairs, RobustFitParams(min_inliers=4), seed=0)
        assert rel_frob(h_est, Homography.identity()) < 1e-9

    def test_insufficient_pairs(self):
        pts = grid_points()[:3]
        pairs = pairs_from_h(Homography.identity(), pts)
        with pytest.raises(InsufficientPairs):
            estimate_homography(pairs)

    def test_non_tracked_pairs_ignored(self):
        h_true = handheld_camera(4)
        pairs = pairs_from_h(h_true, grid_points())
        for i in range(3):
            pairs[i] = MatchedPair(pairs[i].p1, pairs[i].p2, None, TrackStatus.LOST)
        h_est, mask = estimate_homography(pairs, seed=2)
        assert rel_frob(h_est, h_true) < 1e-6
        assert not any(mask[:3])

    def test_outlier_rejection(self):
        h_true = handheld_camera(7)
        pts = grid_points(7)
        pairs = pairs_from_h(h_true, pts)
        rng = np.random.default_rng(5)
        n_out = int(0.3 * len(pairs))
        out_idx = rng.choice(len(pairs), size=n_out, replace=False)
        for i in out_idx:
            p = pairs[i]
            # offsets at least 10x the inlier threshold
            off = rng.uniform(10.0, 40.0, size=2) * rng.choice([-1.0, 1.0], size=2)
            pairs[i] = MatchedPair(p.p1, (p.p2[0] + off[0], p.p2[1] + off[1]), 0.0, p.status)
        h_est, mask = estimate_homography(pairs, RobustFitParams(inlier_threshold=1.0), seed=11)
        inl = np.array([i not in set(out_idx) for i in range(len(pairs))])
        pts1 = np.array([p.p1 for p in pairs])
        pts2_true = np.array(
            [apply_homography(h_true, tuple(p)) for p in pts1]
        )
        err = symmetric_transfer_error(h_est, pts1[inl], pts2_true[inl])
        assert err.max() <= 1.0
        assert rel_frob(h_est, h_true) < 1e-2
        # every injected outlier excluded from the consensus
        assert not any(mask[i] for i in out_idx)

    def test_scale_invariance(self):
        h_true = handheld_camera(9)
        pts = grid_points()
        pairs = pairs_from_h(h_true, pts)
        scaled = [
            MatchedPair(
                (10 * p.p1[0], 10 * p.p1[1]), (10 * p.p2[0], 10 * p.p2[1]), 0.0, p.status
            )
            for p in pairs
        ]
        h1, _ = estimate_homography(pairs, seed=3)
        h10, _ = estimate_homography(scaled, RobustFitParams(inlier_threshold=10.0), seed=3)
        s = np.diag([10.0, 10.0, 1.0])
        unscaled = Homography(np.linalg.inv(s) @ h10.matrix @ s)
        assert rel_frob(unscaled, h1) < 1e-6

    def test_similarity_recovers_zero_perspective(self):
        h_true = Homography.similarity(scale=1.01, angle=0.004, dx=1.5, dy=-0.8)
        assert h_true.matrix[2, 0] == 0.0 and h_true.matrix[2, 1] == 0.0
        pairs = pairs_from_h(h_true, grid_points(6))
        h_est, _ = estimate_homography(pairs, seed=4)
        assert abs(h_est.matrix[2, 0]) < 1e-6
        assert abs(h_est.matrix[2, 1]) < 1e-6

    def test_no_consensus(self):
        rng = np.random.default_rng(0)
        pts1 = rng.uniform(0, 500, size=(40, 2))
        pts2 = rng.uniform(0, 500, size=(40, 2))
        pairs = [
            MatchedPair(tuple(a), tuple(b), 0.0, TrackStatus.TRACKED)
            for a, b in zip(pts1, pts2)
        ]
        with pytest.raises(NoConsensus):
            estimate_homography(pairs, RobustFitParams(min_inliers=20), seed=0)

    def test_deterministic_given_seed(self):
        h_true = handheld_camera(12)
        pairs = pairs_from_h(h_true, grid_points(), noise=0.3, seed=2)
        a1 = estimate_homography(pairs, seed=42)
        a2 = estimate_homography(pairs, seed=42)
        assert np.array_equal(a1[0].matrix, a2[0].matrix)
        assert a1[1] == a2[1]


class TestWarp:
    def test_identity_bit_exact(self, texture_128x96):
        out = warp_image(texture_128x96, Homography.identity())
        assert np.array_equal(out.pixels, texture_128x96.pixels)

    def test_integer_translation_matches_slice(self, texture_128x96):
        # H maps output coords to source coords offset by (+5, +3)
        out = warp_image(texture_128x96, Homography.translation(5.0, 3.0), fill=0.0)
        exp = np.zeros_like(texture_128x96.pixels)
        exp[: 96 - 3, : 128 - 5] = texture_128x96.pixels[3:, 5:]
        assert np.array_equal(out.pixels, exp)

    def test_roundtrip_on_smooth_content(self):
        img = textured_image(160, 120, seed=3, sigma=3.0)
        h = handheld_camera(2)
        once = warp_image(img, h, fill=0.0)
        back = warp_image(once, h.inverse(), fill=0.0)
        interior = np.s_[12:108, 12:148]
        assert np.abs(back.pixels[interior] - img.pixels[interior]).max() < 0.02


class TestReferenceFixture:
    def test_recorded_verbatim(self):
        assert REFERENCE_REFILM_H["matrix"] == [
            [0.99, 0.0, 0.0],
            [0.0, 0.99, 0.0],
            [1.85, -0.24, 1.0],
        ]
        assert "convention" in REFERENCE_REFILM_H
        assert HOMOGRAPHY_CONVENTION == "column-vector"

    def test_transposed_reading_is_near_similarity(self):
        """Read row-vector style (transposed), the fixture is a 0.99x scale
        plus a ~2 px translation with no perspective terms."""
        m = np.array(REFERENCE_REFILM_H["matrix"]).T
        assert m[2, 0] == 0.0 and m[2, 1] == 0.0
        assert m[0, 0] == m[1, 1] == 0.99
        assert (m[0, 2], m[1, 2]) == (1.85, -0.24)
        h = Homography(m)
        # as a stabilizing transform it is invertible and benign
        p = apply_homography(h, (320.0, 180.0))
        assert np.hypot(p[0] - 320.0, p[1] - 180.0) < 5.0


class TestStabilizePair:
    def test_camera_only_residuals_small(self):
        from fallscan.features import DetectorParams, detect_features
        from fallscan.image import build_pyramid
        from fallscan.synth import SceneSpec, generate_pair
        from fallscan.tracking import forward_backward_filter, track_features

        spec = SceneSpec(width=320, height=240, texture_seed=5, camera_h=handheld_camera(1))
        a, b, _ = generate_pair(spec)
        feats = detect_features(a, DetectorParams(max_features=300))
        pa, pb = build_pyramid(a, 3), build_pyramid(b, 3)
        pairs = forward_backward_filter(pa, pb, track_features(pa, pb, feats))
        stab = stabilize_pair(a, b, pairs, seed=0)
        # re-check: tracked points mapped through H land on their matches
        resid = []
        for pr in pairs:
            if pr.status != TrackStatus.TRACKED:
                continue
            pred = apply_homography(stab.h, pr.p1)
            resid.append(np.hypot(pred[0] - pr.p2[0], pred[1] - pr.p2[1]))
        assert np.median(resid) <= 0.2

    def test_identity_frames(self, texture_128x96):
        pts = grid_points(4, w=100, h=80)
        pairs = [
            MatchedPair((float(x), float(y)), (float(x), float(y)), 0.0, TrackStatus.TRACKED)
            for x, y in pts
        ]
        stab = stabilize_pair(
            texture_128x96, texture_128x96, pairs, RobustFitParams(min_inliers=4), seed=0
        )
        assert rel_frob(stab.h, Homography.identity()) < 1e-6
        # H is identity only to ~1e-6: border pixels can fall to fill and
        # resampling moves interior intensities a hair
        assert np.allclose(
            stab.adjusted.pixels[1:-1, 1:-1], texture_128x96.pixels[1:-1, 1:-1], atol=1e-4
        )

    def test_json_roundtrip(self):
        h = handheld_camera(6)
        doc = h.to_json()
        assert doc["convention"] == "column-vector"
        assert len(doc["matrix"]) == 9
        back = Homography.from_json(doc)
        assert np.allclose(back.matrix, h.matrix, atol=1e-15)
