"""End-to-end laughter detection pipeline.

Stages: frame the recording, gate frames by Welch power (automatic
Otsu split or a fixed dB threshold), gate survivors by envelope
rhythmicity, collect per-frame sample standard deviations, derive a
final threshold from the upper confidence bound of their mean, and
merge the selected frames into time intervals.

Fewer than two candidate frames is a no-detection state, not an
error: the confidence interval needs a sample standard deviation.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.stats import t as student_t

from staccato.audio import (
    DEFAULT_FRAME_SIZE_S,
    DEFAULT_OVERLAP,
    DEFAULT_SAMPLE_RATE_HZ,
    AudioSignal,
    Frame,
    frame_signal,
    resample,
)
from staccato.errors import AnalysisError, ConfigError
from staccato.rhythm import (
    DEFAULT_BASE_PITCH_HZ,
    DEFAULT_MIN_REL_PROMINENCE,
    DEFAULT_SUBWINDOW_OVERLAP,
    DEFAULT_SUBWINDOW_S,
    RhythmMatrix,
    band_median_envelope,
    band_plan,
    fm_rhythm,
)
from staccato.spectral import (
    DEFAULT_SEGMENT_LEN,
    DEFAULT_SEGMENT_OVERLAP,
    frame_power,
    otsu_threshold,
    welch_psd,
)

THRESHOLD_MODE_OTSU = "otsu"
THRESHOLD_MODE_FIXED = "fixed"


@dataclass(frozen=True)
class PipelineConfig:
    """All pipeline knobs. Defaults reproduce the reference protocol:
    2.5 s frames, 50% overlap, 200 Hz base pitch, 95% confidence,
    automatic power gating."""

    sample_rate_hz: int = DEFAULT_SAMPLE_RATE_HZ
    frame_size_s: float = DEFAULT_FRAME_SIZE_S
    overlap: float = DEFAULT_OVERLAP
    segment_len: int = DEFAULT_SEGMENT_LEN
    segment_overlap: float = DEFAULT_SEGMENT_OVERLAP
    base_pitch_hz: float = DEFAULT_BASE_PITCH_HZ
    subwindow_s: float = DEFAULT_SUBWINDOW_S
    subwindow_overlap: float = DEFAULT_SUBWINDOW_OVERLAP
    confidence_level: float = 0.95
    rhythm_min_rel_prominence: float = DEFAULT_MIN_REL_PROMINENCE
    threshold_mode: str = THRESHOLD_MODE_OTSU
    fixed_threshold_db: Optional[float] = None

    def __post_init__(self) -> None:
        if self.sample_rate_hz <= 0:
            raise ConfigError("sample_rate_hz must be positive")
        for name in ("frame_size_s", "subwindow_s", "base_pitch_hz"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("overlap", "segment_overlap", "subwindow_overlap"):
            if not 0 <= getattr(self, name) < 1:
                raise ConfigError(f"{name} must lie in [0, 1)")
        if not 0 < self.confidence_level < 1:
            raise ConfigError("confidence_level must lie in (0, 1)")
        if self.segment_len < 2 or self.segment_len & (self.segment_len - 1):
            raise ConfigError("segment_len must be a power of two, at least 2")
        if self.rhythm_min_rel_prominence < 0:
            raise ConfigError("rhythm_min_rel_prominence must be non-negative")
        if self.threshold_mode not in (THRESHOLD_MODE_OTSU, THRESHOLD_MODE_FIXED):
            raise ConfigError(f"unknown threshold_mode {self.threshold_mode!r}")
        if self.threshold_mode == THRESHOLD_MODE_FIXED:
            if self.fixed_threshold_db is None or not np.isfinite(self.fixed_threshold_db):
                raise ConfigError("fixed threshold mode needs a finite fixed_threshold_db")

    @property
    def frame_shift_s(self) -> float:
        return self.frame_size_s * (1.0 - self.overlap)


@dataclass(frozen=True)
class TimeInterval:
    start_s: float
    end_s: float

    def __post_init__(self) -> None:
        if not 0 <= self.start_s < self.end_s:
            raise AnalysisError(f"degenerate interval [{self.start_s}, {self.end_s}]")


@dataclass(frozen=True)
class CandidateStats:
    """Per-frame sample standard deviations of the candidate frames."""

    sigmas: np.ndarray
    frame_indices: tuple[int, ...]


@dataclass(frozen=True)
class ConfidenceBounds:
    """Student-t confidence interval for the mean of a sigma population."""

    lower: float
    upper: float
    sample_mean: float
    sample_sd: float
    n: int
    level: float


@dataclass(frozen=True)
class DetectionReport:
    """Full trace of one detect run, for debugging and the service layer."""

    intervals: tuple[TimeInterval, ...]
    frame_count: int
    frame_size_s: float
    frame_shift_s: float
    powers_db: tuple[float, ...]
    power_threshold_db: Optional[float]
    candidate_indices: tuple[int, ...]
    rhythmic_indices: tuple[int, ...]
    selected_indices: tuple[int, ...]
    bounds: Optional[ConfidenceBounds]
    sigma_threshold: Optional[float]
    stats: Optional[CandidateStats] = None
    rhythm_matrices: dict[int, RhythmMatrix] = field(default_factory=dict)


def frame_std(frame: Frame) -> float:
    """Sample standard deviation (n-1 denominator) of the raw samples."""
    if frame.samples.size < 1:
        raise AnalysisError("empty frame")
    if frame.samples.size == 1:
        return 0.0
    if np.ptp(frame.samples) == 0.0:  # exact zero for constant input
        return 0.0
    return float(np.std(frame.samples, ddof=1))


def t_confidence(sigmas: Sequence[float], level: float = 0.95) -> ConfidenceBounds:
    """One-sample t confidence interval for the mean of the sigma vector."""
    x = np.asarray(sigmas, dtype=np.float64)
    if x.size < 2:
        raise AnalysisError("t interval needs at least two values")
    if not 0 < level < 1:
        raise AnalysisError("confidence level must lie in (0, 1)")
    n = x.size
    mean = float(np.mean(x))
    sd = float(np.std(x, ddof=1))
    crit = float(student_t.ppf(0.5 * (1.0 + level), n - 1))
    half = crit * sd / np.sqrt(n)
    return ConfidenceBounds(
        lower=mean - half,
        upper=mean + half,
        sample_mean=mean,
        sample_sd=sd,
        n=n,
        level=level,
    )


def laughter_threshold(bounds: ConfidenceBounds) -> float:
    """Selection threshold: upper confidence bound minus the sample sd."""
    return bounds.upper - bounds.sample_sd


def select_laughter_frames(stats: CandidateStats, threshold: float) -> list[int]:
    """Frames whose sigma meets the threshold, ascending frame order."""
    picked = [
        idx
        for idx, sigma in zip(stats.frame_indices, stats.sigmas)
        if sigma >= threshold
    ]
    return sorted(picked)


def merge_intervals(
    frame_indices: Iterable[int], cfg: PipelineConfig
) -> list[TimeInterval]:
    """Map frame indices to time spans and merge overlapping/adjacent ones."""
    shift = cfg.frame_shift_s
    spans = sorted(
        (i * shift, i * shift + cfg.frame_size_s) for i in frame_indices
    )
    merged: list[list[float]] = []
    for start, end in spans:
        if merged and start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    return [TimeInterval(start_s=s, end_s=e) for s, e in merged]


def _map_ordered(fn: Callable, items: Sequence, threads: int) -> list:
    # ordered collection keeps results bit-identical across pool sizes
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _empty_report(cfg: PipelineConfig, **overrides) -> DetectionReport:
    base = DetectionReport(
        intervals=(),
        frame_count=0,
        frame_size_s=cfg.frame_size_s,
        frame_shift_s=cfg.frame_shift_s,
        powers_db=(),
        power_threshold_db=None,
        candidate_indices=(),
        rhythmic_indices=(),
        selected_indices=(),
        bounds=None,
        sigma_threshold=None,
    )
    return replace(base, **overrides) if overrides else base


def frame_powers(
    signal: AudioSignal, cfg: PipelineConfig, threads: int = 1
) -> tuple:
    """Frame the signal (resampling first if needed) and compute per-frame
    Welch power in dB. Returns (FrameSequence, list of powers)."""
    work = resample(signal, cfg.sample_rate_hz)
    seq = frame_signal(work, cfg.frame_size_s, cfg.overlap)

    def power_of(frame: Frame) -> float:
        return frame_power(
            welch_psd(frame, cfg.segment_len, cfg.segment_overlap)
        ).power_db

    return seq, _map_ordered(power_of, list(seq), threads)


def analyze(
    signal: AudioSignal,
    cfg: PipelineConfig | None = None,
    threads: int = 1,
    keep_rhythm: bool = False,
) -> DetectionReport:
    """Run the full pipeline and return the complete decision trace."""
    cfg = cfg or PipelineConfig()
    if threads < 1:
        raise ConfigError("threads must be at least 1")
    seq, powers = frame_powers(signal, cfg, threads)
    if seq.count == 0:
        return _empty_report(cfg)
    frames = list(seq)
    if cfg.threshold_mode == THRESHOLD_MODE_FIXED:
        power_thr = float(cfg.fixed_threshold_db)
    else:
        power_thr = otsu_threshold(np.array(powers)).threshold_db
    candidates = [i for i, p in enumerate(powers) if p >= power_thr]

    plan = band_plan(cfg.base_pitch_hz, cfg.sample_rate_hz)

    def rhythm_of(index: int) -> tuple[int, bool, RhythmMatrix]:
        matrix = fm_rhythm(
            frames[index], plan, cfg.subwindow_s, cfg.subwindow_overlap
        )
        env = band_median_envelope(matrix, cfg.rhythm_min_rel_prominence)
        return index, env.rhythmic, matrix

    rhythm_results = _map_ordered(rhythm_of, candidates, threads)
    rhythmic = [idx for idx, ok, _ in rhythm_results if ok]
    matrices = (
        {idx: m for idx, _, m in rhythm_results} if keep_rhythm else {}
    )

    partial = _empty_report(
        cfg,
        frame_count=seq.count,
        powers_db=tuple(powers),
        power_threshold_db=power_thr,
        candidate_indices=tuple(candidates),
        rhythmic_indices=tuple(rhythmic),
        rhythm_matrices=matrices,
    )
    if len(rhythmic) < 2:
        return partial

    stats = CandidateStats(
        sigmas=np.array([frame_std(frames[i]) for i in rhythmic]),
        frame_indices=tuple(rhythmic),
    )
    bounds = t_confidence(stats.sigmas, cfg.confidence_level)
    sigma_thr = laughter_threshold(bounds)
    selected = select_laughter_frames(stats, sigma_thr)
    return replace(
        partial,
        intervals=tuple(merge_intervals(selected, cfg)),
        selected_indices=tuple(selected),
        bounds=bounds,
        sigma_threshold=sigma_thr,
        stats=stats,
    )


def detect(
    signal: AudioSignal, cfg: PipelineConfig | None = None, threads: int = 1
) -> list[TimeInterval]:
    """Detected laughter intervals, sorted and pairwise disjoint."""
    return list(analyze(signal, cfg, threads=threads).intervals)
