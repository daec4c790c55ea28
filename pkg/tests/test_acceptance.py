"""Release gate: every shipping criterion asserted at its stated tolerance.

Each test prints (and appends to the terminal summary) one PASS/FAIL
line so the gate reads as a checklist.
"""

import time

import numpy as np
from conftest import acceptance_lines
from test_spectral import oracle_between_class_variance

from staccato.audio import AudioSignal, Frame
from staccato.detector import detect, t_confidence
from staccato.evalkit import score, tune, write_tune_csvs
from staccato.rhythm import hanning_oscillator
from staccato.spectral import otsu_threshold, welch_psd
from staccato.synthlab import Babble, LaughSpec, default_corpus, synth_scene


def _record(name, ok, detail=""):
    suffix = f" ({detail})" if detail else ""
    line = f"{'PASS' if ok else 'FAIL'}: {name}{suffix}"
    acceptance_lines.append(line)
    print(line)
    assert ok, line


def test_01_otsu_matches_exhaustive_scan():
    rng = np.random.default_rng(2024)
    mismatches = 0
    start = time.perf_counter()
    for i in range(1000):
        family = i % 5
        if family in (0, 1):  # two-component mixture
            n1, n2 = rng.integers(10, 150, size=2)
            mu1, mu2 = rng.uniform(-90, -10, size=2)
            powers = np.concatenate(
                [rng.normal(mu1, rng.uniform(0.5, 5), n1), rng.normal(mu2, rng.uniform(0.5, 5), n2)]
            )
        elif family in (2, 3):  # uniform spread
            n = int(rng.integers(8, 300))
            lo = rng.uniform(-100, -20)
            powers = rng.uniform(lo, lo + rng.uniform(1, 60), n)
        else:  # degenerate: a single repeated value
            powers = np.full(int(rng.integers(2, 40)), rng.uniform(-80, -10))

        result = otsu_threshold(powers)
        if family == 4:
            if not np.all(powers >= result.threshold_db):
                mismatches += 1
            continue
        sigma, _ = oracle_between_class_variance(powers)
        best = sigma.max()
        if sigma[result.split_index] < best - abs(best) * 1e-9:
            mismatches += 1
    elapsed = time.perf_counter() - start
    _record(
        "otsu split equals exhaustive-scan maximizer on 1000 vectors",
        mismatches == 0 and elapsed < 5.0,
        f"mismatches={mismatches}, {elapsed:.2f}s",
    )


def test_02_welch_psd_integrates_to_mean_square():
    rng = np.random.default_rng(7)
    worst = 0.0
    for i in range(100):
        x = rng.standard_normal(40000) * 10.0 ** rng.uniform(-3, 1)
        if i % 2:
            t = np.arange(40000) / 16000
            x = x + rng.uniform(0.1, 2.0) * np.sin(
                2 * np.pi * rng.uniform(50, 7000) * t + rng.uniform(0, 2 * np.pi)
            )
        frame = Frame(index=i, start_time_s=0.0, samples=x, sample_rate_hz=16000)
        psd = welch_psd(frame)
        integral = float(np.sum(psd.values)) * psd.bin_width_hz
        ms = float(np.mean(x**2))
        worst = max(worst, abs(integral - ms) / ms)
    _record(
        "welch psd integral within 10% of mean square on 100 frames",
        worst < 0.1,
        f"worst relative error {worst:.4f}",
    )


def test_03_t_critical_values():
    table = {2: 12.706, 5: 2.7764, 10: 2.2622, 30: 2.0452}
    worst = 0.0
    for n, expected in table.items():
        b = t_confidence(np.arange(n, dtype=float))
        crit = (b.upper - b.sample_mean) * np.sqrt(n) / b.sample_sd
        worst = max(worst, abs(crit - expected))
    _record(
        "t criticals for n in {2,5,10,30} within 1e-3 of tables",
        worst < 1e-3,
        f"worst deviation {worst:.2e}",
    )


def test_04_oscillator_analytic_values():
    got = hanning_oscillator(8).coefficients
    expected = np.array([0.5, 0.0, 0.5, 1.0, 0.5, 0.0])
    worst = float(np.max(np.abs(got - expected)))
    _record(
        "hanning_oscillator(8) = [0.5,0,0.5,1,0.5,0] to 1e-12",
        worst <= 1e-12,
        f"worst deviation {worst:.2e}",
    )


def test_05_synthetic_corpus_detection():
    start = time.perf_counter()
    items = default_corpus()
    tp = fp = fn = 0
    silence_hits = 0
    noise_intervals = 0
    for item in items:
        found = detect(item.clip.signal)
        report = score(found, item.clip.truth, duration_s=12.0)
        tp += report.true_positive
        fp += report.false_positive
        fn += report.false_negative
        if item.kind == "silence" and found:
            silence_hits += len(found)
        if item.kind == "white_noise":
            noise_intervals += len(found)
    elapsed = time.perf_counter() - start
    f1 = 2 * tp / (2 * tp + fp + fn)
    ok = f1 >= 0.80 and silence_hits == 0 and noise_intervals <= 1 and elapsed < 60.0
    _record(
        "corpus F1 >= 0.80, clean silence, <= 1 noise interval, < 60 s",
        ok,
        f"F1={f1:.4f}, silence={silence_hits}, noise={noise_intervals}, {elapsed:.1f}s",
    )


def test_06_amplitude_scale_invariance(corpus, corpus_detections):
    indices = list(range(5)) + list(range(30, 35))
    violations = 0
    for i in indices:
        signal = corpus[i].clip.signal
        base = corpus_detections[i]
        for g in (0.5, 2.0):
            scaled = AudioSignal(
                samples=g * signal.samples, sample_rate_hz=signal.sample_rate_hz
            )
            if detect(scaled) != base:
                violations += 1
    _record(
        "detect(g*x) = detect(x) for g in {0.5, 2.0} on 10 clips",
        violations == 0,
        f"violations={violations}",
    )


def test_07_roc_dominance(tmp_path):
    bouts = [(10.0, LaughSpec(seed=1)), (30.0, LaughSpec(seed=2)), (45.0, LaughSpec(seed=3))]
    clip = synth_scene(bouts, total_s=60.0, background=Babble(seed=500))
    result = tune(clip.signal, clip.truth)
    otsu_path, opt_path = write_tune_csvs(result, out_prefix=str(tmp_path) + "/")
    files_ok = True
    for path in (otsu_path, opt_path):
        lines = open(path).read().splitlines()
        files_ok = files_ok and lines[0] == "threshold,tpr,fpr" and len(lines) >= 3
    ok = result.optimal_f1 >= result.otsu_f1 and files_ok
    _record(
        "optimized threshold F1 >= automatic F1, both ROC CSVs written",
        ok,
        f"opt={result.optimal_f1:.4f}, otsu={result.otsu_f1:.4f}",
    )


def test_08_thread_determinism(corpus, corpus_detections):
    parallel = [detect(item.clip.signal, threads=8) for item in corpus]
    identical = parallel == corpus_detections
    _record(
        "threads=1 and threads=8 give identical intervals on 50 clips",
        identical,
    )


def test_09_throughput():
    bouts = [(20.0 + 60.0 * k, LaughSpec(seed=k)) for k in range(10)]
    clip = synth_scene(bouts, total_s=600.0, background=Babble(seed=77))
    start = time.perf_counter()
    detect(clip.signal)
    elapsed = time.perf_counter() - start
    rtf = elapsed / 600.0
    _record(
        "real-time factor < 0.25 on a 10-minute file",
        rtf < 0.25,
        f"RTF={rtf:.4f} ({elapsed:.1f}s)",
    )
