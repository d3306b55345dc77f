"""Unit tests for the synthetic scene generator and truth scoring."""

from __future__ import annotations

import math

import numpy as np
import pytest

from fallscan.errors import BlockOutOfBounds, SceneMismatch
from fallscan.features import DetectorParams, detect_features
from fallscan.image import Roi
from fallscan.motion import MotionField, MotionVector
from fallscan.stabilize import Homography, apply_homography
from fallscan.synth import MovingBlock, SceneSpec, generate_pair, score_against_truth

from conftest import handheld_camera


def static_spec(seed=0, w=160, h=120):
    return SceneSpec(width=w, height=h, texture_seed=seed)


def block_spec(seed=0, delta=(0.0, 5.0)):
    return SceneSpec(
        width=200,
        height=150,
        texture_seed=seed,
        blocks=(MovingBlock(rect=Roi(60, 40, 50, 40), delta=delta),),
    )


def truth_vector(truth, x, y):
    exp = truth.expected_residual(x, y)
    return MotionVector(
        origin=(x, y),
        raw_delta=exp,
        camera_delta=(0.0, 0.0),
        residual_delta=exp,
        magnitude=math.hypot(*exp),
    )


class TestGenerate:
    def test_trivial_identity_no_blocks_no_noise(self):
        a, b, truth = generate_pair(static_spec())
        assert np.array_equal(a.pixels, b.pixels)
        assert np.all(truth.mask == -1)

    def test_block_band_only_changes(self):
        a, b, truth = generate_pair(block_spec(delta=(0, 5)))
        changed = np.abs(a.pixels - b.pixels) > 1e-12
        ys, xs = np.nonzero(changed)
        # every change confined to the union of old and new block footprints
        assert xs.min() >= 60 and xs.max() < 110
        assert ys.min() >= 40 and ys.max() < 85
        # outside that band the frames are bit-identical
        assert not changed[:40, :].any()
        assert not changed[85:, :].any()

    def test_same_seed_bit_identical(self):
        spec = SceneSpec(
            width=128,
            height=96,
            texture_seed=3,
            camera_h=handheld_camera(4),
            blocks=(MovingBlock(Roi(30, 30, 40, 30), (3.0, 7.0)),),
            noise_sigma=0.01,
            jitter_sigma=0.2,
        )
        a1, b1, _ = generate_pair(spec)
        a2, b2, _ = generate_pair(spec)
        assert np.array_equal(a1.pixels, a2.pixels)
        assert np.array_equal(b1.pixels, b2.pixels)

    def test_texture_is_feature_rich(self):
        a, _, _ = generate_pair(static_spec(seed=8))
        p = DetectorParams(max_features=400, quality_level=0.01, min_distance=3.0)
        feats = detect_features(a, p)
        assert len(feats) >= p.max_features / 2

    def test_block_out_of_bounds(self):
        with pytest.raises(BlockOutOfBounds):
            SceneSpec(
                width=100,
                height=100,
                blocks=(MovingBlock(Roi(80, 80, 30, 10), (0.0, 0.0)),),
            )
        with pytest.raises(BlockOutOfBounds):
            SceneSpec(
                width=100,
                height=100,
                blocks=(MovingBlock(Roi(60, 60, 30, 30), (15.0, 0.0)),),
            )

    def test_camera_only_loop_closure(self):
        """generate -> detect/track/stabilize recovers the camera matrix."""
        from fallscan.features import detect_features
        from fallscan.image import build_pyramid
        from fallscan.tracking import forward_backward_filter, track_features
        from fallscan.stabilize import stabilize_pair

        cam = handheld_camera(11)
        spec = SceneSpec(width=320, height=240, texture_seed=9, camera_h=cam)
        a, b, _ = generate_pair(spec)
        # dense features: the H entries are fit to ~1/sqrt(n) tracking noise
        feats = detect_features(a, DetectorParams(max_features=800))
        pa, pb = build_pyramid(a, 3), build_pyramid(b, 3)
        pairs = forward_backward_filter(pa, pb, track_features(pa, pb, feats))
        stab = stabilize_pair(a, b, pairs, seed=1)
        rel = np.linalg.norm(stab.h.matrix - cam.matrix) / np.linalg.norm(cam.matrix)
        assert rel < 1e-3

    def test_jitter_magnitude(self):
        spec = SceneSpec(width=160, height=120, texture_seed=2, jitter_sigma=0.5)
        a, b, _ = generate_pair(spec)
        # jitter must actually perturb the image, but gently
        d = np.abs(a.pixels - b.pixels)
        assert d.max() > 0.0
        assert d.mean() < 0.05

    def test_noise_sigma_applied(self):
        spec = SceneSpec(width=96, height=96, texture_seed=2, noise_sigma=0.02)
        a, b, _ = generate_pair(spec)
        resid = b.pixels - a.pixels
        assert 0.015 < resid.std() < 0.025

    def test_json_roundtrip(self):
        spec = SceneSpec(
            width=128,
            height=96,
            texture_seed=3,
            camera_h=handheld_camera(4),
            blocks=(MovingBlock(Roi(30, 30, 40, 30), (3.0, 7.5)),),
            noise_sigma=0.01,
            jitter_sigma=0.2,
        )
        back = SceneSpec.from_json(spec.to_json())
        assert back.width == spec.width and back.height == spec.height
        assert back.blocks == spec.blocks
        assert np.allclose(back.camera_h.matrix, spec.camera_h.matrix, atol=1e-15)
        a1, b1, _ = generate_pair(spec)
        a2, b2, _ = generate_pair(back)
        assert np.array_equal(a1.pixels, a2.pixels)
        assert np.array_equal(b1.pixels, b2.pixels)


class TestScore:
    def test_perfect_field(self):
        _, _, truth = generate_pair(block_spec())
        vectors = tuple(
            truth_vector(truth, x, y)
            for x, y in [(70.0, 50.0), (80.0, 60.0), (100.0, 70.0)]
        )
        field = MotionField(vectors=vectors)
        report = score_against_truth(field, truth, tol=0.5)
        assert report.precision == 1.0
        assert report.recall == 1.0
        assert report.per_block_error[0] == pytest.approx(0.0, abs=1e-12)

    def test_empty_field_zero_recall(self):
        _, _, truth = generate_pair(block_spec())
        tracked = MotionField(vectors=(truth_vector(truth, 70.0, 50.0),))
        report = score_against_truth(MotionField(vectors=()), truth, 0.5, tracked=tracked)
        assert report.recall == 0.0
        assert report.precision is None

    def test_background_survivor_is_false_positive(self):
        _, _, truth = generate_pair(block_spec())
        bg = truth_vector(truth, 10.0, 10.0)  # background: zero residual
        field = MotionField(vectors=(bg,))
        report = score_against_truth(field, truth, 0.5)
        assert report.false_positives == 1
        assert report.precision == 0.0

    def test_wrong_delta_outside_tol(self):
        _, _, truth = generate_pair(block_spec(delta=(0.0, 5.0)))
        v = truth_vector(truth, 70.0, 50.0)
        off = MotionVector(
            origin=v.origin,
            raw_delta=(0.0, 6.0),
            camera_delta=(0.0, 0.0),
            residual_delta=(0.0, 6.0),
            magnitude=6.0,
        )
        report = score_against_truth(MotionField(vectors=(off,)), truth, tol=0.5)
        assert report.true_positives == 0
        assert report.false_positives == 1

    def test_scene_mismatch(self):
        _, _, truth = generate_pair(block_spec())
        far = truth_vector(truth, 70.0, 50.0)
        far = MotionVector((900.0, 50.0), far.raw_delta, far.camera_delta, far.residual_delta, far.magnitude)
        with pytest.raises(SceneMismatch):
            score_against_truth(MotionField(vectors=(far,)), truth, 0.5)

    def test_expected_residual_accounts_for_camera(self):
        cam = handheld_camera(3)
        spec = SceneSpec(
            width=200,
            height=150,
            texture_seed=0,
            camera_h=cam,
            blocks=(MovingBlock(Roi(60, 40, 50, 40), (4.0, 9.0)),),
        )
        _, _, truth = generate_pair(spec)
        exp = truth.expected_residual(70.0, 50.0)
        moved = apply_homography(cam, (74.0, 59.0))
        still = apply_homography(cam, (70.0, 50.0))
        assert exp[0] == pytest.approx(moved[0] - still[0], abs=1e-12)
        assert exp[1] == pytest.approx(moved[1] - still[1], abs=1e-12)
        # close to the raw scene delta for a mild camera
        assert np.hypot(exp[0] - 4.0, exp[1] - 9.0) < 0.3
