"""Unit tests for the displacement decomposition and cutoff filtering."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fallscan.errors import NegativeThreshold, UnsortedThresholds
from fallscan.motion import (
    MotionField,
    MotionVector,
    field_statistics,
    filter_by_threshold,
    residual_displacements,
    threshold_sweep,
)
from fallscan.stabilize import Homography, apply_homography
from fallscan.tracking import MatchedPair, TrackStatus

from conftest import handheld_camera


def make_pairs(h: Homography, pts, extra_delta=(0.0, 0.0)):
    out = []
    for x, y in pts:
        u, v = apply_homography(h, (float(x), float(y)))
        out.append(
            MatchedPair(
                (float(x), float(y)),
                (u + extra_delta[0], v + extra_delta[1]),
                0.0,
                TrackStatus.TRACKED,
            )
        )
    return out


def vec(res, origin=(0.0, 0.0)):
    return MotionVector(
        origin=origin,
        raw_delta=res,
        camera_delta=(0.0, 0.0),
        residual_delta=res,
        magnitude=math.hypot(*res),
    )


PTS = [(10.0, 10.0), (50.0, 30.0), (200.0, 120.0), (320.0, 200.0)]


class TestResiduals:
    def test_identity_and_zero_motion(self):
        pairs = make_pairs(Homography.identity(), PTS)
        vectors, dropped = residual_displacements(pairs, Homography.identity())
        assert dropped == 0
        assert all(v.magnitude == 0.0 for v in vectors)

    def test_identity_h_reduces_to_raw(self):
        pairs = [
            MatchedPair((1.0, 2.0), (4.0, 6.0), 0.0, TrackStatus.TRACKED),
            MatchedPair((5.0, 5.0), (5.0, 3.5), 0.0, TrackStatus.TRACKED),
        ]
        vectors, _ = residual_displacements(pairs, Homography.identity())
        assert vectors[0].residual_delta == (3.0, 4.0)
        assert vectors[0].magnitude == 5.0
        assert vectors[1].residual_delta == (0.0, -1.5)

    def test_camera_motion_fully_explained(self):
        h = handheld_camera(5)
        pairs = make_pairs(h, PTS)
        vectors, _ = residual_displacements(pairs, h)
        assert all(v.magnitude < 1e-9 for v in vectors)

    def test_extra_scene_motion_survives(self):
        h = handheld_camera(6)
        pairs = make_pairs(h, PTS, extra_delta=(0.0, 5.0))
        vectors, _ = residual_displacements(pairs, h)
        for v in vectors:
            assert v.residual_delta[0] == pytest.approx(0.0, abs=1e-9)
            assert v.residual_delta[1] == pytest.approx(5.0, abs=1e-9)

    def test_decomposition_identity(self):
        h = handheld_camera(7)
        pairs = make_pairs(h, PTS, extra_delta=(1.0, -2.0))
        vectors, _ = residual_displacements(pairs, h)
        for v in vectors:
            assert v.raw_delta[0] == pytest.approx(v.camera_delta[0] + v.residual_delta[0], abs=1e-9)
            assert v.raw_delta[1] == pytest.approx(v.camera_delta[1] + v.residual_delta[1], abs=1e-9)

    def test_non_tracked_ignored_and_order_kept(self):
        pairs = [
            MatchedPair((1.0, 1.0), (2.0, 1.0), 0.0, TrackStatus.TRACKED),
            MatchedPair((2.0, 2.0), (2.0, 2.0), None, TrackStatus.LOST),
            MatchedPair((3.0, 3.0), (5.0, 3.0), 0.0, TrackStatus.TRACKED),
        ]
        vectors, _ = residual_displacements(pairs, Homography.identity())
        assert [v.origin for v in vectors] == [(1.0, 1.0), (3.0, 3.0)]

    def test_degenerate_pair_dropped_and_counted(self):
        m = np.eye(3)
        m[2, 0] = -0.01
        h = Homography(m)  # w vanishes at x = 100
        pairs = [
            MatchedPair((100.0, 0.0), (1.0, 1.0), 0.0, TrackStatus.TRACKED),
            MatchedPair((10.0, 0.0), (10.0, 0.0), 0.0, TrackStatus.TRACKED),
        ]
        vectors, dropped = residual_displacements(pairs, h)
        assert dropped == 1
        assert len(vectors) == 1


class TestFilter:
    def test_default_cutoff_keeps_only_movers(self):
        slow = [vec((0.1, 0.2)), vec((1.0, 1.0)), vec((0.0, 3.0))]
        fast = [vec((0.0, 5.0)), vec((4.0, 3.0))]
        field = filter_by_threshold(slow + fast, 3.5)
        assert len(field) == 2
        assert field.ts_applied == 3.5
        assert all(v.magnitude >= 3.5 for v in field.vectors)

    def test_zero_keeps_all(self):
        vs = [vec((0.0, 0.0)), vec((1.0, 0.0))]
        assert len(filter_by_threshold(vs, 0.0)) == 2

    def test_above_max_empties(self):
        vs = [vec((1.0, 0.0)), vec((0.0, 2.0))]
        assert len(filter_by_threshold(vs, 99.0)) == 0

    def test_negative_threshold(self):
        with pytest.raises(NegativeThreshold):
            filter_by_threshold([], -1.0)

    @settings(deadline=None, max_examples=40)
    @given(
        mags=st.lists(st.floats(min_value=0, max_value=20, allow_nan=False), max_size=30),
        t1=st.floats(min_value=0, max_value=10),
        t2=st.floats(min_value=0, max_value=10),
    )
    def test_containment(self, mags, t1, t2):
        lo, hi = min(t1, t2), max(t1, t2)
        vs = [vec((m, 0.0), origin=(float(i), 0.0)) for i, m in enumerate(mags)]
        kept_hi = {v.origin for v in filter_by_threshold(vs, hi).vectors}
        kept_lo = {v.origin for v in filter_by_threshold(vs, lo).vectors}
        assert kept_hi <= kept_lo


class TestSweep:
    def test_single_zero_entry(self):
        vs = [vec((1.0, 0.0)), vec((0.5, 0.0))]
        sweep = threshold_sweep(vs, [0.0])
        assert len(sweep.entries) == 1
        assert sweep.entries[0].surviving_count == 2

    def test_counts_non_increasing_and_bruteforce(self):
        rng = np.random.default_rng(1)
        mags = rng.uniform(0, 9, size=60)
        vs = [vec((m, 0.0), origin=(float(i), 0.0)) for i, m in enumerate(mags)]
        grid = [0.0, 1.0, 2.0, 3.5, 5.0, 8.0]
        sweep = threshold_sweep(vs, grid)
        counts = [e.surviving_count for e in sweep.entries]
        assert counts == sorted(counts, reverse=True)
        # brute-force count per threshold
        for e in sweep.entries:
            assert e.surviving_count == int(sum(1 for m in mags if m >= e.ts))

    def test_unsorted_rejected(self):
        with pytest.raises(UnsortedThresholds):
            threshold_sweep([], [1.0, 0.5])

    def test_negative_rejected(self):
        with pytest.raises(NegativeThreshold):
            threshold_sweep([], [-0.5, 1.0])


class TestStats:
    def test_empty_field_undefined(self):
        stats = field_statistics(MotionField(vectors=()))
        assert stats.count == 0
        assert stats.mean_magnitude is None
        assert stats.median_magnitude is None
        assert stats.max_magnitude is None
        assert stats.mean_direction_deg is None

    def test_two_vector_arithmetic(self):
        field = MotionField(vectors=(vec((0.0, 3.0)), vec((0.0, 5.0))))
        stats = field_statistics(field)
        assert stats.count == 2
        assert stats.mean_magnitude == 4.0
        assert stats.median_magnitude == 4.0
        assert stats.max_magnitude == 5.0
        assert stats.mean_direction_deg == pytest.approx(90.0)

    def test_json_roundtrip(self):
        field = MotionField(
            vectors=(vec((1.0, 2.0), origin=(3.0, 4.0)),),
            frame_a_index=4,
            frame_b_index=5,
            ts_applied=1.0,
        )
        back = MotionField.from_json(field.to_json())
        assert back == field
