"""Scoring protocol tests: matching accuracy, fidelity, compression."""
from __future__ import annotations

import numpy as np
import pytest

from prism import (
    color_histogram,
    compression,
    cosine_similarity,
    fidelity,
    fidelity_from_histograms,
    match_count,
    matching_threshold,
    measure_throughput,
    score_matching,
    synthetic_frames,
)
from prism.color import Frame
from prism.errors import PrismError


def uniform(rgb, h=4, w=4, index=0):
    pixels = np.empty((h, w, 3), dtype=np.uint8)
    pixels[:] = rgb
    return Frame(index, pixels)


class TestMatchingThreshold:
    def test_standard_case(self):
        # fps 30: scaling 7.5, raw 225, bounds [30, 300].
        assert matching_threshold(30, 10000) == 225

    def test_crossed_bounds_upper_wins(self):
        # Raw 225 but 3% of 500 is 15: the cap takes precedence.
        assert matching_threshold(30, 500) == 15

    def test_high_fps_truncation(self):
        # fps 60: scaling 60/7, raw trunc(514.29) = 514.
        assert matching_threshold(60, 100000) == 514

    def test_lower_bound_engages(self):
        # fps 1: scaling 10/11, raw 0, lifted to 30, capped by 3% of 10000.
        assert matching_threshold(1, 10000) == 30

    def test_truncation_not_rounding(self):
        # fps 25: scaling 50/7, raw 178.57... -> 178, capped at 90.
        assert matching_threshold(25, 3000) == 90

    def test_rejects_guard_domain(self):
        with pytest.raises(PrismError):
            matching_threshold(0, 100)
        with pytest.raises(PrismError):
            matching_threshold(30, 0)

    def test_window_at_least_one_for_normal_videos(self):
        rng = np.random.default_rng(67)
        for _ in range(300):
            fps = rng.uniform(0.5, 120.0)
            frame_count = int(rng.integers(34, 200000))
            assert matching_threshold(fps, frame_count) >= 1


class TestScoreMatching:
    def test_empty_predictions_score_zero(self):
        report = score_matching(30, 10000, [200], [])
        assert report.accuracy_pct == 0.0
        assert report.threshold_frames == 0
        assert report.matched == 0

    def test_zero_fps_guard(self):
        assert score_matching(0, 10000, [200], [100]).accuracy_pct == 0.0

    def test_zero_frame_count_guard(self):
        assert score_matching(30, 0, [200], [100]).accuracy_pct == 0.0

    def test_match_within_window(self):
        report = score_matching(30, 10000, [200], [100])
        assert report.threshold_frames == 225
        assert report.matched == 1
        assert report.accuracy_pct == 100.0

    def test_partial_match(self):
        report = score_matching(30, 10000, [200], [100, 9000])
        assert report.matched == 1
        assert report.accuracy_pct == 50.0

    def test_boundary_distance_matches(self):
        # |115 - 100| equals the window of 15 exactly: inclusive.
        assert score_matching(30, 500, [100], [115]).accuracy_pct == 100.0
        assert score_matching(30, 500, [100], [116]).accuracy_pct == 0.0

    def test_empty_actual_matches_nothing(self):
        report = score_matching(30, 10000, [], [100])
        assert report.accuracy_pct == 0.0
        assert report.threshold_frames == 225

    def test_two_decimal_half_away_rounding(self):
        # 1 of 32 matched is 3.125%, which must round up to 3.13.
        predicted = [100] + [50000 + 1000 * i for i in range(31)]
        report = score_matching(24, 100000, [100], predicted)
        assert report.matched == 1
        assert report.accuracy_pct == 3.13

    def test_match_count_is_per_prediction(self):
        # Two predictions near one actual index both count.
        assert match_count([100], [95, 105], 10) == 2
        assert match_count([100, 101], [100], 10) == 1


class TestColorHistogram:
    def test_uniform_black_mass(self):
        hist = color_histogram(uniform((0, 0, 0)))
        assert hist.shape == (96,)
        for block in range(3):
            assert hist[block * 32] == pytest.approx(1 / 3)
        assert hist.sum() == pytest.approx(1.0, abs=1e-9)

    def test_uniform_white_mass(self):
        hist = color_histogram(uniform((255, 255, 255)))
        for block in range(3):
            assert hist[block * 32 + 31] == pytest.approx(1 / 3)

    def test_bin_width_is_eight(self):
        hist_lo = color_histogram(uniform((7, 0, 0)))
        hist_hi = color_histogram(uniform((8, 0, 0)))
        assert hist_lo[0] == pytest.approx(1 / 3)  # 7 stays in bin 0
        assert hist_hi[1] == pytest.approx(1 / 3)  # 8 moves to bin 1

    def test_mass_is_conserved(self):
        rng = np.random.default_rng(71)
        for _ in range(20):
            pixels = rng.integers(0, 256, size=(9, 13, 3), dtype=np.uint8)
            assert color_histogram(pixels).sum() == pytest.approx(1.0, abs=1e-9)

    def test_accepts_frame_or_array(self):
        frame = uniform((10, 20, 30))
        assert np.array_equal(color_histogram(frame), color_histogram(frame.pixels))

    def test_rejects_wrong_shape(self):
        with pytest.raises(PrismError):
            color_histogram(np.zeros((4, 4), dtype=np.uint8))


class TestCosineSimilarity:
    def test_self_similarity(self):
        hist = color_histogram(uniform((50, 100, 150)))
        assert cosine_similarity(hist, hist) == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_supports_are_orthogonal(self):
        black = color_histogram(uniform((0, 0, 0)))
        white = color_histogram(uniform((255, 255, 255)))
        assert cosine_similarity(black, white) == 0.0

    def test_matches_naive_reference(self):
        rng = np.random.default_rng(73)
        for _ in range(50):
            a = rng.uniform(0, 1, size=96)
            b = rng.uniform(0, 1, size=96)
            naive = sum(x * y for x, y in zip(a, b)) / (
                sum(x * x for x in a) ** 0.5 * sum(y * y for y in b) ** 0.5
            )
            assert cosine_similarity(a, b) == pytest.approx(naive, abs=1e-12)

    def test_zero_vector_is_error(self):
        with pytest.raises(PrismError, match="zero vector"):
            cosine_similarity(np.zeros(96), np.ones(96))

    def test_length_mismatch_is_error(self):
        with pytest.raises(PrismError, match="mismatch"):
            cosine_similarity(np.ones(96), np.ones(95))


class TestFidelity:
    def test_identical_sets_score_one(self):
        frames = [uniform((5, 5, 5))]
        assert fidelity(frames, frames) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_sets_score_zero(self):
        black = [uniform((0, 0, 0))]
        white = [uniform((255, 255, 255))]
        assert fidelity(black, white) == pytest.approx(0.0, abs=1e-12)

    def test_literal_mode_inverts_perfect_match(self):
        frames = [uniform((5, 5, 5))]
        assert fidelity(frames, frames, mode="literal") == pytest.approx(0.0, abs=1e-12)

    def test_subset_of_truth_scores_one(self):
        truth = [uniform((0, 0, 0)), uniform((100, 50, 0)), uniform((255, 255, 255))]
        predicted = [truth[1]]
        assert fidelity(predicted, truth) == pytest.approx(1.0, abs=1e-12)

    def test_worst_prediction_dominates(self):
        truth = [uniform((0, 0, 0))]
        predicted = [uniform((0, 0, 0)), uniform((255, 255, 255))]
        # One perfect and one orthogonal prediction: the orthogonal one
        # sets the score.
        assert fidelity(predicted, truth) == pytest.approx(0.0, abs=1e-12)

    def test_empty_sets_are_errors(self):
        frames = [uniform((1, 1, 1))]
        with pytest.raises(PrismError, match="fidelity undefined"):
            fidelity([], frames)
        with pytest.raises(PrismError, match="fidelity undefined"):
            fidelity(frames, [])

    def test_unknown_mode_rejected(self):
        hist = [color_histogram(uniform((1, 1, 1)))]
        with pytest.raises(PrismError, match="fidelity mode"):
            fidelity_from_histograms(hist, hist, mode="softmax")

    def test_score_is_within_unit_interval(self):
        rng = np.random.default_rng(79)
        for _ in range(30):
            pred = [rng.integers(0, 256, size=(3, 3, 3), dtype=np.uint8) for _ in range(3)]
            truth = [rng.integers(0, 256, size=(3, 3, 3), dtype=np.uint8) for _ in range(2)]
            score = fidelity_from_histograms(
                [color_histogram(p) for p in pred],
                [color_histogram(t) for t in truth],
            )
            assert 0.0 <= score <= 1.0


class TestCompression:
    def test_plain_arithmetic(self):
        stats = compression(100, 4)
        assert stats.ratio == 25.0
        assert stats.pct == 96.0
        assert not stats.undefined

    def test_zero_keyframes_flagged_infinite(self):
        stats = compression(100, 0)
        assert stats.ratio == float("inf")
        assert stats.pct == 100.0
        assert stats.undefined

    def test_zero_total_is_error(self):
        with pytest.raises(PrismError, match="zero total"):
            compression(0, 0)

    def test_more_keyframes_than_frames_is_error(self):
        with pytest.raises(PrismError):
            compression(10, 11)

    def test_identity(self):
        for total, k in [(100, 4), (9, 3), (7, 7), (1000, 1)]:
            stats = compression(total, k)
            assert stats.ratio * k == pytest.approx(total, rel=1e-12)


class TestMeasureThroughput:
    def test_report_shape(self):
        report = measure_throughput(synthetic_frames(100, 64, 64))
        assert report.frames == 100
        assert report.width == 64
        assert report.height == 64
        assert report.fps > 0
        assert report.elapsed_s > 0

    def test_keyframe_count_is_deterministic(self):
        first = measure_throughput(synthetic_frames(120, 32, 32))
        second = measure_throughput(synthetic_frames(120, 32, 32))
        assert first.n_keyframes == second.n_keyframes
        assert first.n_keyframes == 5  # 6 segments of 20 frames

    def test_too_few_frames_is_error(self):
        with pytest.raises(PrismError, match="2 frames"):
            measure_throughput(synthetic_frames(1, 16, 16))
