"""Scoring and threshold tuning against reference annotations.

Scoring discretizes the time axis into small ticks (default 10 ms) and
counts agreement between hypothesis and reference interval sets. The
tuning harness labels the frames of a development recording from its
annotation, sweeps the power threshold for the F1 optimum, and emits
ROC curves for both the swept thresholds and the histogram splits the
automatic gate can choose from.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from staccato.audio import AudioSignal
from staccato.detector import PipelineConfig, TimeInterval, frame_powers
from staccato.errors import AnalysisError
from staccato.spectral import (
    RocCurve,
    f1_at_threshold,
    optimize_threshold,
    otsu_threshold,
    roc_from_thresholds,
    write_roc_csv,
)

DEFAULT_EVAL_HOP_S = 0.01
# boundary tolerance in tick units; absorbs float division error
_TICK_EPS = 1e-6


@dataclass(frozen=True)
class ReferenceAnnotation:
    """Sorted, disjoint laugh intervals for one recording."""

    intervals: tuple[TimeInterval, ...]
    source_id: str = ""


@dataclass(frozen=True)
class ScoreReport:
    true_positive: int
    false_positive: int
    false_negative: int
    precision: float
    recall: float
    f1: float
    frame_hop_s: float


@dataclass(frozen=True)
class TuneResult:
    optimal_threshold_db: float
    optimal_f1: float
    otsu_threshold_db: float
    otsu_f1: float
    roc_opt: RocCurve
    roc_otsu: RocCurve
    frame_count: int
    positive_frames: int


def merge_interval_list(intervals: Sequence[TimeInterval]) -> tuple[TimeInterval, ...]:
    """Sort and merge overlapping or touching intervals."""
    spans = sorted((iv.start_s, iv.end_s) for iv in intervals)
    merged: list[list[float]] = []
    for start, end in spans:
        if merged and start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    return tuple(TimeInterval(start_s=s, end_s=e) for s, e in merged)


def parse_annotations(text: str, source_id: str = "") -> ReferenceAnnotation:
    """Parse `start_s,end_s` CSV rows into a merged annotation."""
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        raise AnalysisError("annotation CSV is empty")
    header = [cell.strip() for cell in rows[0]]
    if header != ["start_s", "end_s"]:
        raise AnalysisError(
            f"annotation header must be start_s,end_s, got {','.join(header)!r}"
        )
    intervals = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise AnalysisError(f"annotation row {lineno}: expected 2 fields")
        try:
            start, end = float(row[0]), float(row[1])
        except ValueError as exc:
            raise AnalysisError(f"annotation row {lineno}: {exc}") from None
        if not np.isfinite(start) or not np.isfinite(end):
            raise AnalysisError(f"annotation row {lineno}: non-finite bound")
        if end <= start or start < 0:
            raise AnalysisError(
                f"annotation row {lineno}: degenerate interval [{start}, {end}]"
            )
        intervals.append(TimeInterval(start_s=start, end_s=end))
    return ReferenceAnnotation(
        intervals=merge_interval_list(intervals), source_id=source_id
    )


def load_annotations(path: str | Path) -> ReferenceAnnotation:
    """Read a `start_s,end_s` CSV file of laugh intervals."""
    p = Path(path)
    return parse_annotations(p.read_text(), source_id=p.stem)


def _tick_mask(
    intervals: Sequence[TimeInterval], n_ticks: int, hop_s: float
) -> np.ndarray:
    mask = np.zeros(n_ticks, dtype=bool)
    for iv in intervals:
        lo = int(np.ceil(iv.start_s / hop_s - _TICK_EPS))
        hi = int(np.ceil(iv.end_s / hop_s - _TICK_EPS))
        mask[max(lo, 0) : min(hi, n_ticks)] = True
    return mask


def score(
    detected: Sequence[TimeInterval],
    reference: ReferenceAnnotation,
    duration_s: float,
    eval_hop_s: float = DEFAULT_EVAL_HOP_S,
) -> ScoreReport:
    """Tick-level precision, recall, and F1 of detected vs reference.

    A tick at time t counts as laugh for an interval set when some
    interval satisfies start <= t < end.
    """
    if duration_s <= 0:
        raise AnalysisError("duration must be positive")
    if eval_hop_s <= 0:
        raise AnalysisError("eval hop must be positive")
    n_ticks = int(np.ceil(duration_s / eval_hop_s - _TICK_EPS))
    det = _tick_mask(detected, n_ticks, eval_hop_s)
    ref = _tick_mask(reference.intervals, n_ticks, eval_hop_s)
    tp = int(np.sum(det & ref))
    fp = int(np.sum(det & ~ref))
    fn = int(np.sum(~det & ref))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0
    return ScoreReport(
        true_positive=tp,
        false_positive=fp,
        false_negative=fn,
        precision=precision,
        recall=recall,
        f1=f1,
        frame_hop_s=eval_hop_s,
    )


def roc_points(frame_scores: Sequence[float], frame_labels: Sequence[bool]) -> RocCurve:
    """ROC over every distinct score threshold, endpoints included."""
    scores = np.asarray(frame_scores, dtype=np.float64)
    labels = np.asarray(frame_labels, dtype=bool)
    if scores.size != labels.size:
        raise AnalysisError("scores and labels must have equal length")
    if labels.all() or not labels.any():
        raise AnalysisError("labels must contain both classes")
    return roc_from_thresholds(scores, labels, np.unique(scores))


def label_frames(
    frame_count: int, cfg: PipelineConfig, reference: ReferenceAnnotation
) -> np.ndarray:
    """Frame-level labels: positive when at least half the frame is laugh."""
    labels = np.zeros(frame_count, dtype=bool)
    shift, size = cfg.frame_shift_s, cfg.frame_size_s
    for i in range(frame_count):
        start, end = i * shift, i * shift + size
        covered = sum(
            max(0.0, min(end, iv.end_s) - max(start, iv.start_s))
            for iv in reference.intervals
        )
        labels[i] = covered >= 0.5 * size
    return labels


def tune(
    signal: AudioSignal,
    reference: ReferenceAnnotation,
    cfg: PipelineConfig | None = None,
    threads: int = 1,
) -> TuneResult:
    """Sweep the power threshold on a labeled recording.

    Returns the F1-optimal threshold next to the automatic one, with an
    ROC per strategy: the optimizer's exhaustive value sweep, and the
    255 histogram split points available to the automatic gate.
    """
    cfg = cfg or PipelineConfig()
    seq, powers = frame_powers(signal, cfg, threads=threads)
    if seq.count == 0:
        raise AnalysisError("recording shorter than one frame")
    labels = label_frames(seq.count, cfg, reference)
    if labels.all() or not labels.any():
        raise AnalysisError(
            "tuning needs both laugh and non-laugh frames in the reference"
        )
    p = np.asarray(powers)
    best_threshold, roc_opt = optimize_threshold(p, labels)
    otsu = otsu_threshold(p)
    roc_otsu = roc_from_thresholds(p, labels, otsu.bin_edges[1:-1])
    return TuneResult(
        optimal_threshold_db=best_threshold,
        optimal_f1=f1_at_threshold(p, labels, best_threshold),
        otsu_threshold_db=otsu.threshold_db,
        otsu_f1=f1_at_threshold(p, labels, otsu.threshold_db),
        roc_opt=roc_opt,
        roc_otsu=roc_otsu,
        frame_count=seq.count,
        positive_frames=int(labels.sum()),
    )


def write_tune_csvs(result: TuneResult, out_prefix: str = "") -> tuple[str, str]:
    """Write roc_otsu.csv and roc_opt.csv, returning their paths."""
    otsu_path = f"{out_prefix}roc_otsu.csv"
    opt_path = f"{out_prefix}roc_opt.csv"
    write_roc_csv(result.roc_otsu, otsu_path)
    write_roc_csv(result.roc_opt, opt_path)
    return otsu_path, opt_path
