"""Audio ingestion, normalization, and short-time framing.

Analysis frames are 2.5 s with 50% overlap by default; a trailing
partial frame is dropped rather than zero-padded so that per-frame
statistics are computed over identical sample counts.
"""

from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from staccato.errors import CorruptHeaderError, UnsupportedEncodingError

DEFAULT_SAMPLE_RATE_HZ = 16000
DEFAULT_FRAME_SIZE_S = 2.5
DEFAULT_OVERLAP = 0.5

# fmt-chunk codec tags we accept (plus WAVE_FORMAT_EXTENSIBLE wrapping them)
_TAG_PCM = 0x0001
_TAG_FLOAT = 0x0003
_TAG_EXTENSIBLE = 0xFFFE
_PCM_BITS = {16, 24, 32}
_FLOAT_BITS = {32, 64}


@dataclass(frozen=True)
class AudioSignal:
    """Mono sample sequence with its sample rate.

    Samples are dimensionless amplitudes, nominally in [-1, 1].
    """

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples", samples)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass(frozen=True)
class Frame:
    """One analysis window: a contiguous slice of an AudioSignal."""

    index: int
    start_time_s: float
    samples: np.ndarray
    sample_rate_hz: int

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass(frozen=True)
class FrameSequence:
    """Ordered, gap-free analysis frames over one recording."""

    frames: tuple[Frame, ...]
    frame_size_s: float
    frame_shift_s: float
    sample_rate_hz: int

    @property
    def count(self) -> int:
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __len__(self) -> int:
        return len(self.frames)


def _read_fmt_chunk(raw: bytes, path: str) -> tuple[int, int]:
    """Return (format_tag, bits_per_sample) from the fmt chunk, validating the container."""
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise CorruptHeaderError(f"{path}: not a RIFF/WAVE file")
    pos = 12
    while pos + 8 <= len(raw):
        cid = raw[pos : pos + 4]
        (size,) = struct.unpack("<I", raw[pos + 4 : pos + 8])
        if cid == b"fmt ":
            if size < 16 or pos + 8 + 16 > len(raw):
                raise CorruptHeaderError(f"{path}: truncated fmt chunk")
            tag, _ch, _rate = struct.unpack("<HHI", raw[pos + 8 : pos + 16])
            (bits,) = struct.unpack("<H", raw[pos + 22 : pos + 24])
            if tag == _TAG_EXTENSIBLE and size >= 40:
                (tag,) = struct.unpack("<H", raw[pos + 32 : pos + 34])
            return tag, bits
        pos += 8 + size + (size & 1)
    raise CorruptHeaderError(f"{path}: no fmt chunk found")


def decode_wav(data: bytes, origin: str = "<bytes>") -> AudioSignal:
    """Decode RIFF/WAVE bytes into a normalized mono AudioSignal.

    Accepts PCM 16/24/32-bit and IEEE float 32/64-bit. Multi-channel
    input is downmixed by the arithmetic mean of the channels; integer
    samples are scaled to [-1, 1] by the full-scale value of their width.

    Raises CorruptHeaderError or UnsupportedEncodingError, each naming
    the origin of the bytes.
    """
    tag, bits = _read_fmt_chunk(data[:65536], origin)
    if tag == _TAG_PCM:
        if bits not in _PCM_BITS:
            raise UnsupportedEncodingError(f"{origin}: {bits}-bit PCM is not supported")
    elif tag == _TAG_FLOAT:
        if bits not in _FLOAT_BITS:
            raise UnsupportedEncodingError(f"{origin}: {bits}-bit float is not supported")
    else:
        raise UnsupportedEncodingError(
            f"{origin}: codec tag 0x{tag:04X} is not PCM or IEEE float"
        )

    try:
        rate, raw = wavfile.read(io.BytesIO(data))
    except Exception as exc:
        raise CorruptHeaderError(f"{origin}: {exc}") from exc

    samples = np.asarray(raw)
    if samples.ndim == 2:
        samples = samples.mean(axis=1, dtype=np.float64)
    else:
        samples = samples.astype(np.float64)

    if raw.dtype == np.int16:
        samples /= 32768.0
    elif raw.dtype == np.int32:
        # scipy maps 24-bit PCM into the top bytes of int32, so one scale fits both
        samples /= 2147483648.0
    if not np.all(np.isfinite(samples)):
        raise CorruptHeaderError(f"{origin}: non-finite samples in data chunk")
    return AudioSignal(samples=samples, sample_rate_hz=int(rate))


def load_audio(path: str) -> AudioSignal:
    """Read a RIFF/WAVE file via decode_wav, with the path in diagnostics."""
    with open(path, "rb") as fh:
        data = fh.read()
    return decode_wav(data, origin=str(path))


def resample(signal: AudioSignal, target_hz: int) -> AudioSignal:
    """Band-limited resampling to target_hz; identity rate returns the input unchanged."""
    if target_hz <= 0:
        raise ValueError("target_hz must be positive")
    if target_hz == signal.sample_rate_hz:
        return signal
    g = math.gcd(signal.sample_rate_hz, target_hz)
    up, down = target_hz // g, signal.sample_rate_hz // g
    out = resample_poly(signal.samples, up, down)
    return AudioSignal(samples=out, sample_rate_hz=target_hz)


def frame_signal(
    signal: AudioSignal,
    frame_size_s: float = DEFAULT_FRAME_SIZE_S,
    overlap_fraction: float = DEFAULT_OVERLAP,
) -> FrameSequence:
    """Slice a signal into fixed-size overlapping frames, dropping any trailing partial.

    Frame boundaries depend only on duration, frame_size_s, and
    overlap_fraction, never on content. A signal shorter than one frame
    yields an empty sequence.
    """
    if frame_size_s <= 0:
        raise ValueError("frame_size_s must be positive")
    if not 0 <= overlap_fraction < 1:
        raise ValueError("overlap_fraction must lie in [0, 1)")

    fs = signal.sample_rate_hz
    frame_len = int(round(frame_size_s * fs))
    hop = int(round(frame_len * (1.0 - overlap_fraction)))
    if hop < 1:
        raise ValueError("overlap too high: frame shift collapses to zero samples")
    shift_s = hop / fs

    n = signal.samples.size
    count = (n - frame_len) // hop + 1 if n >= frame_len else 0
    frames = tuple(
        Frame(
            index=i,
            start_time_s=i * shift_s,
            samples=signal.samples[i * hop : i * hop + frame_len],
            sample_rate_hz=fs,
        )
        for i in range(count)
    )
    return FrameSequence(
        frames=frames,
        frame_size_s=frame_len / fs,
        frame_shift_s=shift_s,
        sample_rate_hz=fs,
    )
