"""Deterministic synthetic signals with exact ground truth.

Laughter-like bouts are harmonic tones gated by a raised-cosine pulse
train and shaped by onset/apex/offset ramps. Scenes mix bouts into a
background (silence, white noise, or speech-shaped babble) at a stated
power gain and carry their bout intervals as annotations, so detector
tests have construction-exact references instead of human labels.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from scipy.io import wavfile

from staccato.audio import DEFAULT_SAMPLE_RATE_HZ, AudioSignal
from staccato.detector import TimeInterval
from staccato.errors import AnalysisError
from staccato.evalkit import ReferenceAnnotation, merge_interval_list

BOUT_DURATION_RANGE_S = (2.0, 8.0)
PULSE_RATE_RANGE_HZ = (4.0, 12.0)


@dataclass(frozen=True)
class LaughSpec:
    """Parameters of one synthetic laugh bout."""

    bout_duration_s: float = 6.0
    pulse_rate_hz: float = 5.0
    f0_hz: float = 200.0
    n_harmonics: int = 5
    onset_fraction: float = 0.15
    apex_fraction: float = 0.7
    offset_fraction: float = 0.15
    gain_db_over_background: float = 6.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.bout_duration_s <= 0:
            raise AnalysisError("bout duration must be positive")
        if self.pulse_rate_hz <= 0 or self.f0_hz <= 0 or self.n_harmonics < 1:
            raise AnalysisError("pulse rate, f0 and harmonic count must be positive")
        total = self.onset_fraction + self.apex_fraction + self.offset_fraction
        if abs(total - 1.0) > 1e-9:
            raise AnalysisError(f"onset/apex/offset fractions sum to {total}, not 1")
        if min(self.onset_fraction, self.apex_fraction, self.offset_fraction) < 0:
            raise AnalysisError("phase fractions must be non-negative")
        lo, hi = BOUT_DURATION_RANGE_S
        if not lo <= self.bout_duration_s <= hi:
            warnings.warn(
                f"bout duration {self.bout_duration_s} s outside typical [{lo}, {hi}] s",
                stacklevel=3,
            )
        lo, hi = PULSE_RATE_RANGE_HZ
        if not lo <= self.pulse_rate_hz <= hi:
            warnings.warn(
                f"pulse rate {self.pulse_rate_hz} Hz outside typical [{lo}, {hi}] Hz",
                stacklevel=3,
            )


@dataclass(frozen=True)
class Silence:
    pass


@dataclass(frozen=True)
class WhiteNoise:
    variance: float = 1.0
    seed: int = 0


@dataclass(frozen=True)
class Babble:
    """Speech-shaped noise chorus: flat below 500 Hz, -6 dB/octave above."""

    seed: int = 0
    streams: int = 8


Background = Union[Silence, WhiteNoise, Babble]


@dataclass(frozen=True)
class SyntheticClip:
    signal: AudioSignal
    truth: ReferenceAnnotation
    fingerprint: str


@dataclass(frozen=True)
class CorpusItem:
    clip: SyntheticClip
    kind: str  # laugh | white_noise | tone | silence


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x**2))) if x.size else 0.0


def _phase_envelope(n: int, spec: LaughSpec) -> np.ndarray:
    n_on = int(round(n * spec.onset_fraction))
    n_off = int(round(n * spec.offset_fraction))
    env = np.ones(n)
    if n_on:
        u = np.arange(n_on) / n_on
        env[:n_on] = 0.5 * (1.0 - np.cos(np.pi * u))
    if n_off:
        u = np.arange(1, n_off + 1) / n_off
        env[n - n_off :] = 0.5 * (1.0 + np.cos(np.pi * u))
    return env


def synth_laugh_bout(
    spec: LaughSpec, sample_rate_hz: int = DEFAULT_SAMPLE_RATE_HZ
) -> AudioSignal:
    """One laugh bout: harmonic stack, pulse-train gating, phase ramps.

    The pulse gate (0.5*(1 - cos(2*pi*rate*t)))^2 reaches zero between
    pulses, so every pulse survives as a local envelope maximum even
    under the onset and offset ramps. Output is normalized to unit RMS.
    """
    nyquist = sample_rate_hz / 2.0
    if spec.f0_hz * spec.n_harmonics >= nyquist:
        raise AnalysisError(
            f"harmonic {spec.f0_hz * spec.n_harmonics:g} Hz reaches Nyquist {nyquist:g} Hz"
        )
    n = int(round(spec.bout_duration_s * sample_rate_hz))
    t = np.arange(n) / sample_rate_hz
    rng = np.random.default_rng(spec.seed)
    phases = rng.uniform(0.0, 2.0 * np.pi, spec.n_harmonics)
    voiced = np.zeros(n)
    for h in range(1, spec.n_harmonics + 1):
        voiced += np.sin(2.0 * np.pi * h * spec.f0_hz * t + phases[h - 1]) / h
    pulses = (0.5 * (1.0 - np.cos(2.0 * np.pi * spec.pulse_rate_hz * t))) ** 2
    x = voiced * pulses * _phase_envelope(n, spec)
    level = _rms(x)
    if level > 0.0:
        x = x / level
    return AudioSignal(samples=x, sample_rate_hz=sample_rate_hz)


def synth_tone(
    freq_hz: float,
    duration_s: float,
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE_HZ,
    amplitude: float = 0.5,
) -> AudioSignal:
    """Steady sinusoid, a non-rhythmic control signal."""
    if freq_hz <= 0 or freq_hz >= sample_rate_hz / 2:
        raise AnalysisError("tone frequency must lie below Nyquist")
    t = np.arange(int(round(duration_s * sample_rate_hz))) / sample_rate_hz
    return AudioSignal(
        samples=amplitude * np.sin(2.0 * np.pi * freq_hz * t),
        sample_rate_hz=sample_rate_hz,
    )


def _speech_shaped_noise(n: int, sample_rate_hz: int, rng: np.random.Generator) -> np.ndarray:
    white = rng.standard_normal(n)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate_hz)
    gain = np.ones_like(freqs)
    above = freqs > 500.0
    gain[above] = 500.0 / freqs[above]  # -6 dB per octave
    shaped = np.fft.irfft(spectrum * gain, n=n)
    level = _rms(shaped)
    return shaped / level if level > 0 else shaped


def _background_samples(background: Background, n: int, sample_rate_hz: int) -> np.ndarray:
    if isinstance(background, Silence):
        return np.zeros(n)
    if isinstance(background, WhiteNoise):
        if background.variance < 0:
            raise AnalysisError("noise variance must be non-negative")
        rng = np.random.default_rng(background.seed)
        return rng.standard_normal(n) * np.sqrt(background.variance)
    if isinstance(background, Babble):
        if background.streams < 1:
            raise AnalysisError("babble needs at least one stream")
        seeds = np.random.SeedSequence(background.seed).spawn(background.streams)
        mix = np.zeros(n)
        for seed in seeds:
            mix += _speech_shaped_noise(n, sample_rate_hz, np.random.default_rng(seed))
        return mix / _rms(mix)
    raise AnalysisError(f"unknown background {background!r}")


def _fingerprint(parts: tuple) -> str:
    return hashlib.sha1(repr(parts).encode()).hexdigest()[:12]


def synth_scene(
    bouts: Sequence[tuple[float, LaughSpec]],
    total_s: float,
    background: Background = Babble(),
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE_HZ,
) -> SyntheticClip:
    """Background plus laugh bouts at stated power gains, with exact truth.

    Each bout is scaled so the mixture power in its region sits
    gain_db_over_background above the background power there:
    scale = bg_rms * sqrt(10^(g/10) - 1) (bouts are unit RMS). Over a
    silent background the bout keeps unit RMS.
    """
    if total_s <= 0:
        raise AnalysisError("scene duration must be positive")
    n = int(round(total_s * sample_rate_hz))
    placed = sorted(bouts, key=lambda b: b[0])
    prev_end = 0.0
    for start, spec in placed:
        end = start + spec.bout_duration_s
        if start < 0 or end > total_s:
            raise AnalysisError(f"bout [{start:g}, {end:g}] falls outside the clip")
        if start < prev_end:
            raise AnalysisError(f"bout at {start:g} s overlaps the previous one")
        prev_end = end

    mix = _background_samples(background, n, sample_rate_hz)
    intervals = []
    for start, spec in placed:
        bout = synth_laugh_bout(spec, sample_rate_hz).samples
        i0 = int(round(start * sample_rate_hz))
        i1 = i0 + bout.size
        bg_rms = _rms(mix[i0:i1])
        gain_lin = 10.0 ** (spec.gain_db_over_background / 10.0)
        scale = bg_rms * np.sqrt(gain_lin - 1.0) if bg_rms > 1e-12 else 1.0
        mix[i0:i1] += scale * bout
        intervals.append(
            TimeInterval(start_s=start, end_s=start + spec.bout_duration_s)
        )

    fingerprint = _fingerprint(
        (round(total_s, 9), sample_rate_hz, background, tuple(placed))
    )
    return SyntheticClip(
        signal=AudioSignal(samples=mix, sample_rate_hz=sample_rate_hz),
        truth=ReferenceAnnotation(
            intervals=merge_interval_list(intervals), source_id=fingerprint
        ),
        fingerprint=fingerprint,
    )


def default_corpus(
    n_laugh: int = 30,
    n_controls: int = 20,
    clip_s: float = 12.0,
    base_seed: int = 101,
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE_HZ,
) -> list[CorpusItem]:
    """Seeded clip collection: laugh bouts in babble plus stationary controls.

    Laugh clips hold one default-parameter bout at a seeded position in
    babble. Controls cycle through white noise, a steady tone, and
    silence, none of which should yield detections.
    """
    items: list[CorpusItem] = []
    for k in range(n_laugh):
        rng = np.random.default_rng(base_seed + k)
        spec = LaughSpec(seed=base_seed + 1000 + k)
        latest = clip_s - spec.bout_duration_s - 1.0
        if latest <= 1.0:
            raise AnalysisError(
                f"clip_s {clip_s:g} too short for a {spec.bout_duration_s:g} s bout with margins"
            )
        start = float(rng.uniform(1.0, latest))
        clip = synth_scene(
            [(start, spec)],
            total_s=clip_s,
            background=Babble(seed=base_seed + 2000 + k),
            sample_rate_hz=sample_rate_hz,
        )
        items.append(CorpusItem(clip=clip, kind="laugh"))

    empty = ReferenceAnnotation(intervals=())
    control_kinds = ["white_noise", "tone", "silence"]
    for k in range(n_controls):
        kind = control_kinds[k % len(control_kinds)]
        if kind == "white_noise":
            sig = AudioSignal(
                samples=np.random.default_rng(base_seed + 3000 + k).standard_normal(
                    int(round(clip_s * sample_rate_hz))
                ),
                sample_rate_hz=sample_rate_hz,
            )
        elif kind == "tone":
            sig = synth_tone(220.0, clip_s, sample_rate_hz)
        else:
            sig = AudioSignal(
                samples=np.zeros(int(round(clip_s * sample_rate_hz))),
                sample_rate_hz=sample_rate_hz,
            )
        fp = _fingerprint((kind, base_seed + k, round(clip_s, 9), sample_rate_hz))
        items.append(
            CorpusItem(
                clip=SyntheticClip(signal=sig, truth=empty, fingerprint=fp),
                kind=kind,
            )
        )
    return items


def write_wav(path: str | Path, signal: AudioSignal) -> None:
    """Write a signal as 32-bit float WAV."""
    wavfile.write(str(path), signal.sample_rate_hz, signal.samples.astype(np.float32))


def write_truth_csv(path: str | Path, truth: ReferenceAnnotation) -> None:
    """Write annotation intervals as `start_s,end_s` CSV."""
    with open(path, "w") as fh:
        fh.write("start_s,end_s\n")
        for iv in truth.intervals:
            fh.write(f"{iv.start_s},{iv.end_s}\n")
