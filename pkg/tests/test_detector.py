"""Sigma statistics, t interval, selection, merging, and the full pipeline."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from staccato.audio import AudioSignal, Frame
from staccato.detector import (
    CandidateStats,
    PipelineConfig,
    TimeInterval,
    analyze,
    detect,
    frame_std,
    laughter_threshold,
    merge_intervals,
    select_laughter_frames,
    t_confidence,
)
from staccato.errors import AnalysisError, ConfigError


def _frame(samples, fs=16000):
    return Frame(index=0, start_time_s=0.0, samples=np.asarray(samples, dtype=float), sample_rate_hz=fs)


class TestPipelineConfig:
    def test_defaults(self):
        cfg = PipelineConfig()
        assert cfg.sample_rate_hz == 16000
        assert cfg.frame_size_s == 2.5
        assert cfg.overlap == 0.5
        assert cfg.frame_shift_s == 1.25
        assert cfg.confidence_level == 0.95
        assert cfg.threshold_mode == "otsu"

    def test_fixed_mode_requires_threshold(self):
        with pytest.raises(ConfigError):
            PipelineConfig(threshold_mode="fixed")

    def test_rejects_unknown_mode(self):
        with pytest.raises(ConfigError):
            PipelineConfig(threshold_mode="manual")

    def test_rejects_bad_overlap(self):
        with pytest.raises(ConfigError):
            PipelineConfig(overlap=1.5)

    def test_rejects_bad_confidence(self):
        with pytest.raises(ConfigError):
            PipelineConfig(confidence_level=1.0)

    def test_rejects_non_power_of_two_segment(self):
        with pytest.raises(ConfigError):
            PipelineConfig(segment_len=500)


class TestTimeInterval:
    def test_rejects_degenerate(self):
        with pytest.raises(AnalysisError):
            TimeInterval(start_s=5.0, end_s=5.0)

    def test_rejects_reversed(self):
        with pytest.raises(AnalysisError):
            TimeInterval(start_s=7.0, end_s=4.0)


class TestFrameStd:
    def test_constant_frame(self):
        assert frame_std(_frame(np.full(1000, 0.7))) == 0.0

    def test_alternating_matches_two_pass_oracle(self):
        n = 2_000_000
        x = np.tile([-1.0, 1.0], n // 2)
        got = frame_std(_frame(x))
        mean = x.sum() / n
        oracle = np.sqrt(np.sum((x - mean) ** 2) / (n - 1))
        assert got == pytest.approx(oracle, rel=1e-12)
        assert got == pytest.approx(np.sqrt(n / (n - 1)), rel=1e-12)
        assert abs(got - 1.0) < 1e-6

    def test_scaling_homogeneity(self):
        x = np.random.default_rng(13).standard_normal(4096)
        assert frame_std(_frame(2.0 * x)) == 2.0 * frame_std(_frame(x))

    def test_single_sample_is_zero(self):
        assert frame_std(_frame([0.25])) == 0.0

    def test_empty_frame_rejected(self):
        with pytest.raises(AnalysisError):
            frame_std(_frame([]))


class TestTConfidence:
    def test_zero_variance(self):
        b = t_confidence([2.0, 2.0, 2.0, 2.0])
        assert b.sample_mean == 2.0
        assert b.sample_sd == 0.0
        assert (b.lower, b.upper) == (2.0, 2.0)

    def test_five_values(self):
        b = t_confidence([1.0, 2.0, 3.0, 4.0, 5.0])
        assert b.sample_mean == pytest.approx(3.0)
        assert b.sample_sd == pytest.approx(1.5811, abs=1e-4)
        assert b.lower == pytest.approx(1.0368, abs=1e-3)
        assert b.upper == pytest.approx(4.9632, abs=1e-3)

    def test_two_values(self):
        b = t_confidence([1.0, 3.0])
        assert b.sample_mean == pytest.approx(2.0)
        assert b.lower == pytest.approx(-10.706, abs=1e-3)
        assert b.upper == pytest.approx(14.706, abs=1e-3)

    def test_critical_values_match_tables(self):
        # t_crit(0.95, n-1), recovered from the half-width
        table = {2: 12.706, 5: 2.7764, 10: 2.2622, 30: 2.0452}
        for n, expected in table.items():
            x = np.arange(n, dtype=float)
            b = t_confidence(x)
            crit = (b.upper - b.sample_mean) * np.sqrt(n) / b.sample_sd
            assert crit == pytest.approx(expected, abs=1e-3)

    def test_rejects_single_value(self):
        with pytest.raises(AnalysisError):
            t_confidence([1.0])

    def test_rejects_bad_level(self):
        with pytest.raises(AnalysisError):
            t_confidence([1.0, 2.0], level=1.0)

    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(
            st.floats(min_value=0.0, max_value=10.0, allow_nan=False),
            min_size=2,
            max_size=40,
        )
    )
    def test_interval_brackets_mean(self, values):
        b = t_confidence(values)
        assert b.lower <= b.sample_mean <= b.upper


class TestThresholdAndSelection:
    def test_threshold_zero_variance(self):
        assert laughter_threshold(t_confidence([2.0, 2.0, 2.0, 2.0])) == 2.0

    def test_threshold_five_values(self):
        thr = laughter_threshold(t_confidence([1.0, 2.0, 3.0, 4.0, 5.0]))
        assert thr == pytest.approx(3.3821, abs=1e-3)

    def test_threshold_two_values_conservative(self):
        # tiny samples push the threshold above every observed sigma,
        # so nothing gets selected
        sigmas = [1.0, 3.0]
        thr = laughter_threshold(t_confidence(sigmas))
        assert thr == pytest.approx(13.292, abs=1e-3)
        assert all(s < thr for s in sigmas)

    def test_selection_above_threshold(self):
        stats = CandidateStats(
            sigmas=np.array([1.0, 2.0, 3.0, 4.0, 5.0]),
            frame_indices=(10, 11, 12, 13, 14),
        )
        assert select_laughter_frames(stats, 3.3821) == [13, 14]

    def test_selection_threshold_inclusive(self):
        stats = CandidateStats(sigmas=np.array([2.0, 3.0]), frame_indices=(0, 1))
        assert select_laughter_frames(stats, 3.0) == [1]

    def test_zero_threshold_selects_all(self):
        stats = CandidateStats(sigmas=np.array([0.5, 1.5]), frame_indices=(4, 2))
        assert select_laughter_frames(stats, 0.0) == [2, 4]

    def test_empty_stats(self):
        stats = CandidateStats(sigmas=np.array([]), frame_indices=())
        assert select_laughter_frames(stats, 1.0) == []


class TestMergeIntervals:
    def test_adjacent_frames_merge(self):
        out = merge_intervals([0, 1], PipelineConfig())
        assert out == [TimeInterval(0.0, 3.75)]

    def test_disjoint_frames_stay_apart(self):
        out = merge_intervals([0, 4], PipelineConfig())
        assert out == [TimeInterval(0.0, 2.5), TimeInterval(5.0, 7.5)]

    def test_empty(self):
        assert merge_intervals([], PipelineConfig()) == []

    def test_touching_intervals_merge(self):
        # frames 0 and 2 touch exactly at 2.5 s
        out = merge_intervals([0, 2], PipelineConfig())
        assert out == [TimeInterval(0.0, 5.0)]

    @settings(max_examples=50, deadline=None)
    @given(st.sets(st.integers(min_value=0, max_value=60), max_size=25))
    def test_output_sorted_disjoint_and_covering(self, indices):
        cfg = PipelineConfig()
        out = merge_intervals(sorted(indices), cfg)
        for a, b in zip(out, out[1:]):
            assert a.end_s < b.start_s
        for i in indices:
            start = i * cfg.frame_shift_s
            assert any(
                iv.start_s <= start and start + cfg.frame_size_s <= iv.end_s
                for iv in out
            )


class TestPipeline:
    def test_silence_yields_nothing(self, silence_signal):
        assert detect(silence_signal) == []

    def test_short_signal_yields_nothing(self):
        sig = AudioSignal(samples=np.zeros(100), sample_rate_hz=16000)
        report = analyze(sig)
        assert report.frame_count == 0
        assert report.intervals == ()

    def test_white_noise_yields_nothing(self):
        rng = np.random.default_rng(14)
        sig = AudioSignal(samples=rng.standard_normal(160000), sample_rate_hz=16000)
        assert detect(sig) == []

    def test_staccato_bout_in_babble_found(self, example_clip):
        intervals = detect(example_clip.signal)
        assert len(intervals) == 1
        got = intervals[0]
        lo = max(got.start_s, 4.0)
        hi = min(got.end_s, 7.0)
        union = max(got.end_s, 7.0) - min(got.start_s, 4.0)
        assert (hi - lo) / union >= 0.5

    def test_report_trace_is_consistent(self, example_clip):
        report = analyze(example_clip.signal)
        assert report.frame_count == 7
        assert len(report.powers_db) == 7
        assert set(report.rhythmic_indices) <= set(report.candidate_indices)
        assert set(report.selected_indices) <= set(report.rhythmic_indices)
        expected = tuple(
            i for i, p in enumerate(report.powers_db) if p >= report.power_threshold_db
        )
        assert report.candidate_indices == expected

    def test_threshold_identity_on_selected(self, example_clip):
        report = analyze(example_clip.signal)
        assert report.sigma_threshold is not None
        picked = dict(zip(report.stats.frame_indices, report.stats.sigmas))
        for idx in report.selected_indices:
            assert picked[idx] >= report.sigma_threshold

    def test_intervals_sorted_disjoint_within_clip(self, example_clip):
        report = analyze(example_clip.signal)
        duration = 10.0
        for a, b in zip(report.intervals, report.intervals[1:]):
            assert a.end_s < b.start_s
        for iv in report.intervals:
            assert 0.0 <= iv.start_s < iv.end_s <= duration + 1e-9

    def test_amplitude_scale_invariance(self, example_clip):
        base = detect(example_clip.signal)
        for g in (0.5, 2.0):
            scaled = AudioSignal(
                samples=g * example_clip.signal.samples,
                sample_rate_hz=example_clip.signal.sample_rate_hz,
            )
            assert detect(scaled) == base

    def test_thread_count_does_not_change_output(self, example_clip):
        assert detect(example_clip.signal, threads=4) == detect(example_clip.signal)

    def test_rejects_bad_thread_count(self, example_clip):
        with pytest.raises(ConfigError):
            analyze(example_clip.signal, threads=0)

    def test_fixed_threshold_mode(self, example_clip):
        cfg = PipelineConfig(threshold_mode="fixed", fixed_threshold_db=-200.0)
        report = analyze(example_clip.signal, cfg)
        assert report.power_threshold_db == -200.0
        assert report.candidate_indices == tuple(range(report.frame_count))

    def test_fixed_gate_monotonicity(self, example_clip):
        # raising the fixed power threshold never admits more candidates
        counts = []
        for thr in (-80.0, -40.0, -10.0, 20.0):
            cfg = PipelineConfig(threshold_mode="fixed", fixed_threshold_db=thr)
            counts.append(len(analyze(example_clip.signal, cfg).candidate_indices))
        assert counts == sorted(counts, reverse=True)

    def test_resamples_foreign_rate(self, example_clip):
        from staccato.audio import resample

        sig48 = resample(example_clip.signal, 48000)
        intervals = detect(sig48)
        assert len(intervals) == 1

    def test_two_rhythmic_frames_never_select(self):
        # with two candidates the t interval is so wide that
        # ub - sd exceeds max(sigma): provable dead zone
        sigmas = np.array([0.4, 0.6])
        thr = laughter_threshold(t_confidence(sigmas))
        assert thr > sigmas.max()
