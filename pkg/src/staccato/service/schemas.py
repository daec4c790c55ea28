"""Request/response models for the HTTP service.

WAV payloads travel as base64 strings so every endpoint speaks plain
JSON. ROC thresholds may be +infinity (the all-negative operating
point); JSON has no infinity, so those serialize as null.
"""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field


class IntervalModel(BaseModel):
    start_s: float
    end_s: float


class HealthResponse(BaseModel):
    status: str
    version: str


class DetectRequest(BaseModel):
    wav_base64: str
    config: dict[str, Any] = Field(default_factory=dict)
    include_rhythm: bool = False


class RhythmDump(BaseModel):
    frame_index: int
    frame_start_s: float
    subwindow_hop_s: float
    rows: list[list[float]]


class DetectResponse(BaseModel):
    intervals: list[IntervalModel]
    frame_count: int
    power_threshold_db: Optional[float]
    sigma_threshold: Optional[float]
    candidate_indices: list[int]
    rhythmic_indices: list[int]
    selected_indices: list[int]
    rhythm: list[RhythmDump] = Field(default_factory=list)


class TuneRequest(BaseModel):
    wav_base64: str
    truth_csv: str
    config: dict[str, Any] = Field(default_factory=dict)


class RocPointModel(BaseModel):
    threshold: Optional[float]  # null = +infinity (nothing classified positive)
    tpr: float
    fpr: float


class TuneResponse(BaseModel):
    optimal_threshold_db: float
    optimal_f1: float
    otsu_threshold_db: float
    otsu_f1: float
    frame_count: int
    positive_frames: int
    roc_opt: list[RocPointModel]
    roc_otsu: list[RocPointModel]


class ScoreRequest(BaseModel):
    detected: list[IntervalModel]
    reference: list[IntervalModel]
    duration_s: float
    eval_hop_s: float = 0.01


class ScoreResponse(BaseModel):
    true_positive: int
    false_positive: int
    false_negative: int
    precision: float
    recall: float
    f1: float
    frame_hop_s: float


class BoutModel(BaseModel):
    start_s: float
    bout_duration_s: float = 6.0
    pulse_rate_hz: float = 5.0
    f0_hz: float = 200.0
    n_harmonics: int = 5
    onset_fraction: float = 0.15
    apex_fraction: float = 0.7
    offset_fraction: float = 0.15
    gain_db_over_background: float = 6.0
    seed: int = 0


class SynthRequest(BaseModel):
    total_s: float
    sample_rate_hz: int = 16000
    background: Literal["silence", "white_noise", "babble"] = "babble"
    background_variance: float = 1.0
    background_seed: int = 0
    bouts: list[BoutModel] = Field(default_factory=list)


class SynthResponse(BaseModel):
    wav_base64: str
    sample_rate_hz: int
    truth: list[IntervalModel]
    fingerprint: str
