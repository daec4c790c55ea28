"""Welch PSD estimation, Otsu power thresholding, and brute-force tuning.

The power gate works on one scalar per frame: the mean of the one-sided
Welch PSD in dB. Otsu's method then splits the per-recording population
of frame powers at the histogram split that maximizes between-class
variance. A labeled development recording can instead be swept
exhaustively for the F1-optimal threshold, which also yields an ROC.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import welch

from staccato.audio import Frame
from staccato.errors import AnalysisError

DEFAULT_SEGMENT_LEN = 512
DEFAULT_SEGMENT_OVERLAP = 0.5
POWER_FLOOR_DB = -120.0
OTSU_BINS = 256


@dataclass(frozen=True)
class PsdEstimate:
    """One-sided power spectral density of a single frame."""

    values: np.ndarray
    bin_width_hz: float
    frame_index: int


@dataclass(frozen=True)
class FramePower:
    """Scalar power summary of one frame: 10*log10(mean PSD), floored."""

    frame_index: int
    power_db: float


@dataclass(frozen=True)
class OtsuComputation:
    """Full working state of one Otsu threshold computation.

    Split k partitions histogram bins into [0..k] and [k+1..255];
    between_class_variance[k] is (mu_total*omega_k - mu_k)^2 /
    (omega_k*(1 - omega_k)) with bin-index means, -inf where a class
    is empty. threshold_db is the bin edge above the winning split.
    """

    sorted_powers: np.ndarray
    histogram: np.ndarray
    bin_edges: np.ndarray
    bin_probabilities: np.ndarray
    class_probabilities: np.ndarray
    class_means: np.ndarray
    total_mean: float
    between_class_variance: np.ndarray
    split_index: int
    threshold_db: float


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    tpr: float
    fpr: float


@dataclass(frozen=True)
class RocCurve:
    """Operating points sorted by threshold, with trapezoidal AUC."""

    points: tuple[RocPoint, ...]
    auc: float


def welch_psd(
    frame: Frame,
    segment_len: int = DEFAULT_SEGMENT_LEN,
    segment_overlap: float = DEFAULT_SEGMENT_OVERLAP,
) -> PsdEstimate:
    """Averaged modified periodogram of one frame (hanning segments, one-sided).

    Density scaling: the PSD integrated over frequency approximates the
    mean-square amplitude of the frame, so detrending is disabled.
    """
    if segment_len > frame.samples.size:
        raise AnalysisError(
            f"segment_len {segment_len} exceeds frame length {frame.samples.size}"
        )
    if segment_len < 2 or segment_len & (segment_len - 1):
        raise AnalysisError("segment_len must be a power of two")
    if not 0 <= segment_overlap < 1:
        raise AnalysisError("segment_overlap must lie in [0, 1)")
    _, pxx = welch(
        frame.samples,
        fs=frame.sample_rate_hz,
        window="hann",
        nperseg=segment_len,
        noverlap=int(segment_len * segment_overlap),
        detrend=False,
        scaling="density",
        return_onesided=True,
    )
    return PsdEstimate(
        values=pxx,
        bin_width_hz=frame.sample_rate_hz / segment_len,
        frame_index=frame.index,
    )


def frame_power(psd: PsdEstimate, floor_db: float = POWER_FLOOR_DB) -> FramePower:
    """Reduce a PSD to mean power in dB, clamped below at floor_db."""
    mean = float(np.mean(psd.values))
    if mean <= 0.0:
        return FramePower(frame_index=psd.frame_index, power_db=floor_db)
    return FramePower(
        frame_index=psd.frame_index,
        power_db=max(10.0 * np.log10(mean), floor_db),
    )


def otsu_threshold(powers: np.ndarray) -> OtsuComputation:
    """Automatic threshold over a power population by Otsu's method.

    The powers are histogrammed into 256 bins over [min, max]; the
    returned threshold maximizes between-class variance over all 255
    interior splits, ties broken toward the lower split. An all-equal
    population degenerates to the common value so that every frame
    passes a (power >= threshold) gate.
    """
    p = np.asarray(powers, dtype=np.float64)
    if p.size == 0:
        raise AnalysisError("otsu_threshold needs a non-empty power vector")
    if not np.all(np.isfinite(p)):
        raise AnalysisError("otsu_threshold needs finite powers")

    sorted_powers = np.sort(p)
    lo, hi = float(sorted_powers[0]), float(sorted_powers[-1])
    # a span under 256 ulps cannot form distinct bin edges; such a
    # population is indistinguishable, so every frame passes the gate
    if hi - lo <= np.spacing(max(abs(lo), abs(hi), 1.0)) * OTSU_BINS:
        edges = np.linspace(lo, hi, OTSU_BINS + 1)
        counts = np.zeros(OTSU_BINS, dtype=np.int64)
        counts[0] = p.size
        prob = counts / p.size
        nan = np.full(OTSU_BINS - 1, -np.inf)
        return OtsuComputation(
            sorted_powers=sorted_powers,
            histogram=counts,
            bin_edges=edges,
            bin_probabilities=prob,
            class_probabilities=np.zeros(OTSU_BINS - 1),
            class_means=np.zeros(OTSU_BINS - 1),
            total_mean=1.0,
            between_class_variance=nan,
            split_index=0,
            threshold_db=lo,
        )

    counts, edges = np.histogram(p, bins=OTSU_BINS, range=(lo, hi))
    prob = counts / p.size
    idx = np.arange(1, OTSU_BINS + 1, dtype=np.float64)  # 1-based bin index
    omega = np.cumsum(prob)
    mu = np.cumsum(idx * prob)
    mu_total = float(mu[-1])

    w = omega[: OTSU_BINS - 1]
    m = mu[: OTSU_BINS - 1]
    sigma_b = np.full(OTSU_BINS - 1, -np.inf)
    valid = (w > 0.0) & (w < 1.0)
    num = (mu_total * w[valid] - m[valid]) ** 2
    sigma_b[valid] = num / (w[valid] * (1.0 - w[valid]))

    split = int(np.argmax(sigma_b))  # argmax returns the first (lowest) maximizer
    return OtsuComputation(
        sorted_powers=sorted_powers,
        histogram=counts,
        bin_edges=edges,
        bin_probabilities=prob,
        class_probabilities=w,
        class_means=m,
        total_mean=mu_total,
        between_class_variance=sigma_b,
        split_index=split,
        threshold_db=float(edges[split + 1]),
    )


def _rates_at(scores: np.ndarray, labels: np.ndarray, threshold: float) -> tuple[float, float]:
    pred = scores >= threshold
    tp = int(np.sum(pred & labels))
    fp = int(np.sum(pred & ~labels))
    pos = int(np.sum(labels))
    neg = labels.size - pos
    return tp / pos, fp / neg


def f1_at_threshold(scores: np.ndarray, labels: np.ndarray, threshold: float) -> float:
    """F1 of the classifier (score >= threshold) against boolean labels."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    pred = scores >= threshold
    tp = int(np.sum(pred & labels))
    fp = int(np.sum(pred & ~labels))
    fn = int(np.sum(~pred & labels))
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def roc_from_thresholds(
    scores: np.ndarray, labels: np.ndarray, thresholds: np.ndarray
) -> RocCurve:
    """Build an ROC from explicit candidate thresholds for (score >= t) classifiers.

    A +inf threshold is appended so the curve always reaches (0, 0);
    the lowest candidate threshold supplies (1, 1) when it sits at or
    below the minimum score. AUC is the trapezoidal area under TPR as
    a function of FPR.
    """
    ts = np.unique(np.asarray(thresholds, dtype=np.float64))
    ts = np.append(ts, np.inf)
    points = tuple(RocPoint(float(t), *_rates_at(scores, labels, t)) for t in ts)
    fpr = np.array([pt.fpr for pt in points])
    tpr = np.array([pt.tpr for pt in points])
    order = np.lexsort((tpr, fpr))
    x, y = fpr[order], tpr[order]
    auc = float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) * 0.5))
    return RocCurve(points=points, auc=auc)


def optimize_threshold(
    powers: np.ndarray, labels: np.ndarray
) -> tuple[float, RocCurve]:
    """Brute-force sweep for the F1-optimal power threshold on labeled frames.

    Candidate thresholds are every midpoint between consecutive distinct
    sorted powers plus the two extreme values themselves; ties break
    toward the lower threshold. Returns the winning threshold and the
    ROC over the same sweep.
    """
    scores = np.asarray(powers, dtype=np.float64)
    y = np.asarray(labels, dtype=bool)
    if scores.size != y.size:
        raise AnalysisError("powers and labels must have equal length")
    if y.all() or not y.any():
        raise AnalysisError("labels must contain both classes")

    distinct = np.unique(scores)
    mids = (distinct[:-1] + distinct[1:]) / 2.0
    sweep = np.concatenate(([distinct[0]], mids, [distinct[-1]]))
    f1s = np.array([f1_at_threshold(scores, y, t) for t in sweep])
    best = int(np.argmax(f1s))
    return float(sweep[best]), roc_from_thresholds(scores, y, sweep)


def write_roc_csv(curve: RocCurve, path: str) -> None:
    """Write an ROC as `threshold,tpr,fpr` rows."""
    with open(path, "w") as fh:
        fh.write("threshold,tpr,fpr\n")
        for pt in curve.points:
            fh.write(f"{pt.threshold},{pt.tpr},{pt.fpr}\n")
