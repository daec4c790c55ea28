"""Rhythm-based laughter detection for speech recordings.

The pipeline gates analysis frames by Welch-PSD power with an automatic
Otsu threshold, classifies the surviving frames as rhythmic with a
six-band envelope filterbank, and keeps the frames whose amplitude
standard deviation clears a Student-t confidence threshold.
"""

__version__ = "0.1.0"

from staccato.audio import (
    AudioSignal,
    Frame,
    FrameSequence,
    decode_wav,
    frame_signal,
    load_audio,
    resample,
)
from staccato.detector import PipelineConfig, TimeInterval, analyze, detect

__all__ = [
    "AudioSignal",
    "Frame",
    "FrameSequence",
    "PipelineConfig",
    "TimeInterval",
    "analyze",
    "decode_wav",
    "detect",
    "frame_signal",
    "load_audio",
    "resample",
    "__version__",
]
