"""Shared fixtures: synthetic clips and a seeded corpus built once per session."""

import numpy as np
import pytest

from staccato.audio import AudioSignal
from staccato.detector import detect
from staccato.synthlab import Babble, LaughSpec, default_corpus, synth_scene, write_wav

# Collected by the acceptance tests, printed after the run so each
# criterion shows up as one explicit pass/fail line.
acceptance_lines: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)


# One 3 s bout with short ramps: long enough apex that the bout spans
# several analysis frames at full swing.
EXAMPLE_BOUT = LaughSpec(
    bout_duration_s=3.0,
    onset_fraction=0.1,
    apex_fraction=0.8,
    offset_fraction=0.1,
    seed=0,
)


@pytest.fixture(scope="session")
def example_clip():
    """10 s of babble with the 3 s bout at 4 s, +6 dB over background."""
    return synth_scene([(4.0, EXAMPLE_BOUT)], total_s=10.0, background=Babble(seed=1000))


@pytest.fixture(scope="session")
def corpus():
    return default_corpus()


@pytest.fixture(scope="session")
def corpus_detections(corpus):
    return [detect(item.clip.signal) for item in corpus]


@pytest.fixture
def wav_writer(tmp_path):
    """Write an AudioSignal to a temp WAV file and return the path."""

    def _write(signal: AudioSignal, name: str = "clip.wav"):
        path = tmp_path / name
        write_wav(path, signal)
        return path

    return _write


@pytest.fixture
def silence_signal():
    return AudioSignal(samples=np.zeros(16000 * 10), sample_rate_hz=16000)
