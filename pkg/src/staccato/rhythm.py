"""Filterbank rhythm analysis of short audio frames.

A frame is cut into 50 ms subwindows (50% overlap), each tapered,
transformed, split into six octave-spaced bands, and per band reduced
to a smoothed rectified envelope level. The row-wise median across
bands gives one envelope value per subwindow; frames whose median
envelope shows a prominent local maximum are called rhythmic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from staccato.audio import Frame
from staccato.errors import AnalysisError

DEFAULT_BASE_PITCH_HZ = 200.0
DEFAULT_SUBWINDOW_S = 0.05
DEFAULT_SUBWINDOW_OVERLAP = 0.5
DEFAULT_MIN_REL_PROMINENCE = 0.5
OSCILLATOR_POINTS = 6


@dataclass(frozen=True)
class OscillatorWindow:
    """Six-point raised-cosine oscillator sampled from a length-l period."""

    length: int
    coefficients: np.ndarray


@dataclass(frozen=True)
class BandPlan:
    """Six frequency bands: [0, base), then octave doublings up to Nyquist.

    Stored as (low_hz, high_hz) pairs; the twelve edge values they
    carry are shared at interior boundaries. The final band is closed
    above (includes Nyquist) so the bands partition the spectrum.
    """

    base_pitch_hz: float
    sample_rate_hz: int
    bands: tuple[tuple[float, float], ...]

    @property
    def edges_hz(self) -> tuple[float, ...]:
        return tuple(e for band in self.bands for e in band)


@dataclass(frozen=True)
class RhythmMatrix:
    """Per-subwindow, per-band smoothed envelope levels (rows x 6)."""

    values: np.ndarray
    subwindow_hop_s: float

    @property
    def rows(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class MedianEnvelope:
    """Row-wise band median of a RhythmMatrix, plus the rhythmicity flag."""

    values: np.ndarray
    rhythmic: bool


def hanning_oscillator(length: int) -> OscillatorWindow:
    """Six-point oscillator s_i = cos^2(2*i*pi/length), i = 1..6."""
    if length < 1:
        raise AnalysisError("oscillator length must be a positive integer")
    i = np.arange(1, OSCILLATOR_POINTS + 1, dtype=np.float64)
    return OscillatorWindow(
        length=length, coefficients=np.cos(2.0 * i * np.pi / length) ** 2
    )


def band_plan(
    base_pitch_hz: float = DEFAULT_BASE_PITCH_HZ, sample_rate_hz: int = 16000
) -> BandPlan:
    """Build the six-band plan {0, b, 2b, 4b, 8b, 16b, Nyquist}."""
    if base_pitch_hz <= 0:
        raise AnalysisError("base pitch must be positive")
    nyquist = sample_rate_hz / 2.0
    interior = [base_pitch_hz * m for m in (1, 2, 4, 8, 16)]
    if interior[-1] >= nyquist:
        raise AnalysisError(
            f"top band edge {interior[-1]:g} Hz reaches Nyquist {nyquist:g} Hz"
        )
    lows = [0.0] + interior
    highs = interior + [nyquist]
    return BandPlan(
        base_pitch_hz=base_pitch_hz,
        sample_rate_hz=sample_rate_hz,
        bands=tuple(zip(lows, highs)),
    )


def _half_hanning_kernel(length: int) -> np.ndarray:
    # decaying half of a raised cosine, unit sum so smoothing preserves level
    k = np.hanning(2 * length + 1)[length : 2 * length]
    return k / np.sum(k)


def fm_rhythm(
    frame: Frame,
    plan: BandPlan,
    subwindow_s: float = DEFAULT_SUBWINDOW_S,
    subwindow_overlap: float = DEFAULT_SUBWINDOW_OVERLAP,
) -> RhythmMatrix:
    """Band-split envelope matrix of one frame.

    Each subwindow row: taper, FFT, brick-wall split into the plan's six
    bands, inverse FFT per band, rectify, then smooth by multiplying the
    envelope spectrum with the transformed half-hanning kernel (circular
    convolution). A cell is the RMS level of that smoothed envelope, so
    scaling the frame by g scales every cell by g.
    """
    if plan.sample_rate_hz != frame.sample_rate_hz:
        raise AnalysisError("band plan sample rate does not match frame")
    if not 0 <= subwindow_overlap < 1:
        raise AnalysisError("subwindow_overlap must lie in [0, 1)")
    sub_len = int(round(subwindow_s * frame.sample_rate_hz))
    if sub_len < 2 or sub_len > frame.samples.size:
        raise AnalysisError(
            f"subwindow of {sub_len} samples invalid for frame of {frame.samples.size}"
        )
    hop = int(round(sub_len * (1.0 - subwindow_overlap)))
    hop = max(hop, 1)
    rows = (frame.samples.size - sub_len) // hop + 1

    starts = np.arange(rows) * hop
    windows = np.stack([frame.samples[s : s + sub_len] for s in starts])
    windows = windows * np.hanning(sub_len)

    spectra = np.fft.rfft(windows, axis=1)
    freqs = np.fft.rfftfreq(sub_len, d=1.0 / frame.sample_rate_hz)
    kernel_spectrum = np.fft.rfft(_half_hanning_kernel(sub_len))

    cells = np.empty((rows, len(plan.bands)))
    for b, (lo, hi) in enumerate(plan.bands):
        if b == len(plan.bands) - 1:
            mask = (freqs >= lo) & (freqs <= hi)  # close the top band at Nyquist
        else:
            mask = (freqs >= lo) & (freqs < hi)
        band_sig = np.fft.irfft(spectra * mask, n=sub_len, axis=1)
        env = np.abs(band_sig)
        smoothed = np.fft.irfft(np.fft.rfft(env, axis=1) * kernel_spectrum, n=sub_len, axis=1)
        cells[:, b] = np.sqrt(np.mean(smoothed**2, axis=1))

    return RhythmMatrix(values=cells, subwindow_hop_s=hop / frame.sample_rate_hz)


def band_median_envelope(
    matrix: RhythmMatrix,
    min_rel_prominence: float = DEFAULT_MIN_REL_PROMINENCE,
) -> MedianEnvelope:
    """Row-wise median across bands and the local-maximum rhythmicity test.

    A frame counts as rhythmic when the median envelope has at least one
    local maximum whose prominence reaches min_rel_prominence times the
    mean cell level of the whole matrix. The prominence floor keeps
    stationary textures (noise, steady tones, silence) out: their
    envelopes wobble but never develop peaks of commensurate size,
    while pulsed vocalization swings the envelope through its full
    range every cycle.
    """
    if matrix.values.size == 0:
        raise AnalysisError("empty rhythm matrix")
    c = np.median(matrix.values, axis=1)
    scale = float(np.mean(matrix.values))
    if scale <= 0.0:
        return MedianEnvelope(values=c, rhythmic=False)
    peaks, _ = find_peaks(c, prominence=min_rel_prominence * scale)
    return MedianEnvelope(values=c, rhythmic=peaks.size > 0)
