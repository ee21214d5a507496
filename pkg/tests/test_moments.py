"""Tests for zero-shot moment localization."""

import numpy as np
import pytest

from vrt_engine.core import EmbeddingVector, MomentWindow, interval_iou
from vrt_engine.errors import DimMismatch, EmptyInput, IndexOutOfRange, InvalidConfig
from vrt_engine.evaluation import mean_iou, moment_recall
from vrt_engine.fixtures import SegmentSpec, gen_moment_fixture
from vrt_engine.localization import (
    MomentConfig,
    TemporalSignal,
    detect_peaks,
    expand_window,
    frame_similarities,
    gaussian_kernel,
    gaussian_smooth,
    localize,
    localize_signal,
    temporal_nms,
)


def signal(values):
    return TemporalSignal.uniform(values)


def localize_fixture(fixture, cfg=None):
    return {
        qid: localize(fixture.queries[qid], fixture.frames[qid], fixture.frame_hop_s, fixture.duration_s, cfg)
        for qid in fixture.queries
    }


class TestTemporalSignal:
    """Test signal validation."""

    def test_uniform_defaults_to_one_second_hops(self):
        s = signal([0.1, 0.2, 0.3])
        assert s.frame_hop_s == 1.0
        assert s.duration_s == 3.0

    def test_validation(self):
        with pytest.raises(EmptyInput):
            signal([])
        with pytest.raises(ValueError):
            signal([0.1, np.nan])
        with pytest.raises(InvalidConfig):
            TemporalSignal(np.zeros(10), 1.0, 20.0)

    def test_config_validation(self):
        with pytest.raises(InvalidConfig):
            MomentConfig(alpha=0.0)
        with pytest.raises(InvalidConfig):
            MomentConfig(smooth_sigma=-1.0)
        with pytest.raises(InvalidConfig):
            MomentConfig.from_dict({"sigma": 2.0})


class TestFrameSimilarities:
    """Test the per-frame cosine signal."""

    def test_values_and_timing(self):
        query = EmbeddingVector([1.0, 0.0])
        frames = [EmbeddingVector([2.0, 0.0]), EmbeddingVector([0.0, 3.0]), EmbeddingVector([-1.0, 0.0])]

        result = frame_similarities(query, frames, frame_hop_s=0.5)

        np.testing.assert_allclose(result.values, [1.0, 0.0, -1.0])
        assert result.duration_s == 1.5

    def test_errors(self):
        with pytest.raises(EmptyInput):
            frame_similarities(EmbeddingVector([1.0]), [])
        with pytest.raises(DimMismatch):
            frame_similarities(EmbeddingVector([1.0]), [EmbeddingVector([1.0, 0.0])])


class TestSmoothing:
    """Test Gaussian smoothing."""

    def test_kernel(self):
        kernel = gaussian_kernel(2.0)
        assert kernel.size == 13
        assert kernel.sum() == pytest.approx(1.0)
        np.testing.assert_allclose(kernel, kernel[::-1])

    def test_zero_sigma_is_identity(self):
        s = signal([0.0, 1.0, 0.0])
        assert gaussian_smooth(s, 0.0) is s

    def test_constant_signal_unchanged(self):
        smoothed = gaussian_smooth(signal([0.4] * 20), 2.0)
        np.testing.assert_allclose(smoothed.values, 0.4)

    def test_unit_impulse_becomes_a_symmetric_bell(self):
        values = np.zeros(21)
        values[10] = 1.0

        smoothed = gaussian_smooth(signal(values), 1.0).values

        taps = np.exp(-(np.arange(-3, 4) ** 2) / 2.0)
        assert smoothed[10] == pytest.approx(1.0 / taps.sum())
        assert smoothed[10] == pytest.approx(0.399, abs=1e-3)
        np.testing.assert_allclose(smoothed[:10], smoothed[11:][::-1])
        assert np.count_nonzero(smoothed) == 7

    def test_reduces_variance(self):
        noisy = signal(np.random.default_rng(0).standard_normal(200))
        assert np.std(gaussian_smooth(noisy, 2.0).values) < np.std(noisy.values)


class TestPeaks:
    """Test peak detection and window expansion."""

    def test_single_peak(self):
        assert detect_peaks(signal([0, 0, 1, 0, 0]), 0.5) == [2]

    def test_plateau_center_is_left_biased(self):
        assert detect_peaks(signal([0, 2, 2, 2, 2, 0]), 0.0) == [2]
        assert detect_peaks(signal([0, 1, 1, 1, 0]), 0.0) == [2]

    def test_threshold_filters_small_peaks(self):
        values = [0, 1.0, 0, 0, 0.1, 0, 0, 0]
        assert detect_peaks(signal(values), 0.5) == [1]

    def test_constant_signal_has_no_peak(self):
        assert detect_peaks(signal([0.3] * 10), 0.0) == []

    def test_expand_constant_signal_covers_everything(self):
        assert expand_window(signal([0.5] * 8), 3, 0.7) == (0, 7)

    def test_expand_stops_below_level(self):
        values = signal([0.0, 0.2, 0.8, 1.0, 0.9, 0.1, 0.0])
        mu = float(np.mean(values.values))
        level = 1.0 - 0.3 * (1.0 - mu)

        left, right = expand_window(values, 3, 0.7)

        assert values.values[left] >= level and values.values[left - 1] < level
        assert (left, right) == (3, 4)

    def test_triangular_bump(self):
        """Test a 0-1-0 ramp over frames 0..20 of 40 expands to [8, 12] at alpha 0.7."""
        values = np.zeros(40)
        values[:21] = 1.0 - np.abs(np.arange(21) - 10) / 10.0
        bump = signal(values)

        assert detect_peaks(bump, 0.5) == [10]
        assert expand_window(bump, 10, 0.7) == (8, 12)

    def test_expand_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            expand_window(signal([0.1, 0.2]), 5, 0.7)

    @pytest.mark.parametrize("seed", range(100))
    def test_expansion_is_monotone_in_alpha(self, seed):
        """Test a larger alpha never widens the window."""
        rng = np.random.default_rng(seed)
        smoothed = gaussian_smooth(signal(rng.random(60)), 1.5)
        t_p = int(np.argmax(smoothed.values))
        low, high = sorted(rng.uniform(0.01, 1.0, 2))

        wide = expand_window(smoothed, t_p, low)
        narrow = expand_window(smoothed, t_p, high)

        assert wide[0] <= narrow[0] <= t_p <= narrow[1] <= wide[1]


class TestNms:
    """Test temporal non-maximum suppression."""

    def test_keeps_best_and_drops_overlaps(self):
        windows = [MomentWindow(0, 10, 0.9), MomentWindow(1, 11, 0.8), MomentWindow(20, 30, 0.7)]
        kept = temporal_nms(windows, 0.5, 5)

        assert kept == [windows[0], windows[2]]

    def test_max_keep(self):
        windows = [MomentWindow(i * 10, i * 10 + 5, 1.0 - i * 0.1) for i in range(6)]
        assert len(temporal_nms(windows, 0.5, 3)) == 3

    @pytest.mark.parametrize("seed", range(100))
    def test_outputs_are_pairwise_separated(self, seed):
        rng = np.random.default_rng(seed)
        starts = rng.uniform(0, 90, 20)
        windows = [MomentWindow(s, s + rng.uniform(1, 20), rng.random()) for s in starts]
        threshold = float(rng.uniform(0.1, 0.9))

        kept = temporal_nms(windows, threshold, 20)

        for i, a in enumerate(kept):
            for b in kept[i + 1 :]:
                assert interval_iou(a, b) <= threshold
        assert [w.score for w in kept] == sorted((w.score for w in kept), reverse=True)


class TestLocalize:
    """Test the end-to-end localization pipeline."""

    def test_planted_block(self):
        """Test frames 10..19 of 50 matching the query yield one window over them."""
        values = np.zeros(50)
        values[10:20] = 1.0

        windows = localize_signal(signal(values), MomentConfig())

        assert len(windows) == 1
        assert interval_iou(windows[0], MomentWindow(10.0, 20.0)) >= 0.5

    def test_two_segments_in_order(self):
        fixture = gen_moment_fixture(seed=0, n_queries=1, num_frames=50, segment_spec=[(5, 15), (30, 40)])
        qid = next(iter(fixture.queries))

        windows = localize(fixture.queries[qid], fixture.frames[qid], cfg=MomentConfig())
        ordered = sorted(windows, key=lambda w: w.start_s)

        assert len(windows) == 2
        assert interval_iou(ordered[0], MomentWindow(5.0, 15.0)) >= 0.5
        assert interval_iou(ordered[1], MomentWindow(30.0, 40.0)) >= 0.5

    def test_min_window_frames(self):
        values = np.zeros(30)
        values[15] = 1.0

        assert localize_signal(signal(values), MomentConfig(smooth_sigma=0.0, min_window_frames=3)) == []

    def test_end_is_clamped_to_duration(self):
        values = np.zeros(10)
        values[7:] = 1.0

        windows = localize_signal(TemporalSignal(values, 1.0, 9.5), MomentConfig(smooth_sigma=0.0))

        assert windows[0].end_s == 9.5

    def test_window_past_the_clamped_end_is_dropped(self):
        """Test a last-frame peak whose clamped end equals its start yields no window."""
        values = np.zeros(10)
        values[9] = 1.0

        assert localize_signal(TemporalSignal(values, 1.0, 9.0), MomentConfig(smooth_sigma=0.0)) == []

    def test_noiseless_boundaries_within_one_frame(self):
        """Test noiseless planted segments are recovered to within one frame."""
        fixture = gen_moment_fixture(seed=11, n_queries=200, num_frames=100, segment_spec=SegmentSpec(10, 30))
        predictions = localize_fixture(fixture)

        for qid, windows in predictions.items():
            truth = fixture.gt.window(qid)
            assert abs(windows[0].start_s - truth.start_s) <= 1.0
            assert abs(windows[0].end_s - truth.end_s) <= 1.0

    def test_noisy_suite(self):
        """Test the default config on 200 noisy planted signals."""
        fixture = gen_moment_fixture(seed=2024, n_queries=200, num_frames=100, snr=3.0)
        predictions = localize_fixture(fixture)

        assert moment_recall(predictions, fixture.gt, 0.5, 1) >= 0.90
        assert mean_iou(predictions, fixture.gt) >= 0.70
