"""FastAPI application exposing detect, tune, score, and synth.

Every domain error carries a machine-readable kind (usage, io,
analysis) in the response detail so clients can map failures to exit
codes without parsing prose.
"""

from __future__ import annotations

import base64
import binascii
import io as _io
import math

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from scipy.io import wavfile

from staccato import __version__
from staccato.audio import decode_wav
from staccato.config import build_config
from staccato.detector import TimeInterval, analyze
from staccato.errors import AnalysisError, AudioReadError, ConfigError, StaccatoError
from staccato.evalkit import (
    ReferenceAnnotation,
    merge_interval_list,
    parse_annotations,
    score,
    tune,
)
from staccato.service import schemas
from staccato.spectral import RocCurve
from staccato.synthlab import Babble, LaughSpec, Silence, SyntheticClip, WhiteNoise, synth_scene

_ERROR_KINDS = (
    (AudioReadError, "io", 400),
    (ConfigError, "usage", 400),
    (AnalysisError, "analysis", 422),
)


def _decode_payload(wav_base64: str) -> bytes:
    try:
        return base64.b64decode(wav_base64, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise ConfigError(f"invalid base64 WAV payload: {exc}") from None


def _interval_models(intervals) -> list[schemas.IntervalModel]:
    return [
        schemas.IntervalModel(start_s=iv.start_s, end_s=iv.end_s) for iv in intervals
    ]


def _roc_models(curve: RocCurve) -> list[schemas.RocPointModel]:
    return [
        schemas.RocPointModel(
            threshold=None if math.isinf(pt.threshold) else pt.threshold,
            tpr=pt.tpr,
            fpr=pt.fpr,
        )
        for pt in curve.points
    ]


def create_app() -> FastAPI:
    app = FastAPI(title="staccato", version=__version__)

    @app.exception_handler(StaccatoError)
    async def _domain_error(request: Request, exc: StaccatoError) -> JSONResponse:
        for klass, kind, status in _ERROR_KINDS:
            if isinstance(exc, klass):
                return JSONResponse(
                    status_code=status,
                    content={"detail": {"kind": kind, "message": str(exc)}},
                )
        return JSONResponse(
            status_code=500,
            content={"detail": {"kind": "analysis", "message": str(exc)}},
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/detect", response_model=schemas.DetectResponse)
    def detect_endpoint(req: schemas.DetectRequest) -> schemas.DetectResponse:
        signal = decode_wav(_decode_payload(req.wav_base64), origin="<upload>")
        cfg, threads = build_config(overrides=req.config)
        report = analyze(signal, cfg, threads=threads, keep_rhythm=req.include_rhythm)
        rhythm = [
            schemas.RhythmDump(
                frame_index=idx,
                frame_start_s=idx * report.frame_shift_s,
                subwindow_hop_s=matrix.subwindow_hop_s,
                rows=matrix.values.tolist(),
            )
            for idx, matrix in sorted(report.rhythm_matrices.items())
        ]
        return schemas.DetectResponse(
            intervals=_interval_models(report.intervals),
            frame_count=report.frame_count,
            power_threshold_db=report.power_threshold_db,
            sigma_threshold=report.sigma_threshold,
            candidate_indices=list(report.candidate_indices),
            rhythmic_indices=list(report.rhythmic_indices),
            selected_indices=list(report.selected_indices),
            rhythm=rhythm,
        )

    @app.post("/tune", response_model=schemas.TuneResponse)
    def tune_endpoint(req: schemas.TuneRequest) -> schemas.TuneResponse:
        signal = decode_wav(_decode_payload(req.wav_base64), origin="<upload>")
        reference = parse_annotations(req.truth_csv, source_id="<upload>")
        cfg, threads = build_config(overrides=req.config)
        result = tune(signal, reference, cfg, threads=threads)
        return schemas.TuneResponse(
            optimal_threshold_db=result.optimal_threshold_db,
            optimal_f1=result.optimal_f1,
            otsu_threshold_db=result.otsu_threshold_db,
            otsu_f1=result.otsu_f1,
            frame_count=result.frame_count,
            positive_frames=result.positive_frames,
            roc_opt=_roc_models(result.roc_opt),
            roc_otsu=_roc_models(result.roc_otsu),
        )

    @app.post("/score", response_model=schemas.ScoreResponse)
    def score_endpoint(req: schemas.ScoreRequest) -> schemas.ScoreResponse:
        detected = [
            TimeInterval(start_s=iv.start_s, end_s=iv.end_s) for iv in req.detected
        ]
        reference = ReferenceAnnotation(
            intervals=merge_interval_list(
                [TimeInterval(start_s=iv.start_s, end_s=iv.end_s) for iv in req.reference]
            )
        )
        report = score(detected, reference, req.duration_s, req.eval_hop_s)
        return schemas.ScoreResponse(
            true_positive=report.true_positive,
            false_positive=report.false_positive,
            false_negative=report.false_negative,
            precision=report.precision,
            recall=report.recall,
            f1=report.f1,
            frame_hop_s=report.frame_hop_s,
        )

    @app.post("/synth", response_model=schemas.SynthResponse)
    def synth_endpoint(req: schemas.SynthRequest) -> schemas.SynthResponse:
        if req.background == "silence":
            background = Silence()
        elif req.background == "white_noise":
            background = WhiteNoise(variance=req.background_variance, seed=req.background_seed)
        else:
            background = Babble(seed=req.background_seed)
        bouts = [
            (
                b.start_s,
                LaughSpec(
                    bout_duration_s=b.bout_duration_s,
                    pulse_rate_hz=b.pulse_rate_hz,
                    f0_hz=b.f0_hz,
                    n_harmonics=b.n_harmonics,
                    onset_fraction=b.onset_fraction,
                    apex_fraction=b.apex_fraction,
                    offset_fraction=b.offset_fraction,
                    gain_db_over_background=b.gain_db_over_background,
                    seed=b.seed,
                ),
            )
            for b in req.bouts
        ]
        clip: SyntheticClip = synth_scene(
            bouts, total_s=req.total_s, background=background,
            sample_rate_hz=req.sample_rate_hz,
        )
        buf = _io.BytesIO()
        wavfile.write(buf, clip.signal.sample_rate_hz, clip.signal.samples.astype(np.float32))
        return schemas.SynthResponse(
            wav_base64=base64.b64encode(buf.getvalue()).decode("ascii"),
            sample_rate_hz=clip.signal.sample_rate_hz,
            truth=_interval_models(clip.truth.intervals),
            fingerprint=clip.fingerprint,
        )

    return app
