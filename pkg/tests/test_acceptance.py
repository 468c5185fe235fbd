"""Acceptance suite: every release gate in one module, one line printed each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
PASS lines. The detection-quality experiment (criteria 8 and 9) builds two
seeded corpora on disk and scores them end to end, so this module takes a
couple of minutes; everything else is fast.
"""

import contextlib
import hashlib
import itertools
import math
import time
from pathlib import Path

import numpy as np
import pytest

from vadpipe import dsp
from vadpipe.audio_io import AudioBuffer, ensure_rate, read_wav
from vadpipe.evaluate import (class_accuracy, clip_statistic, fpr_at_tpr,
                              roc_sweep, run_eval)
from vadpipe.pipeline import PipelineConfig, run_pipeline
from vadpipe.postprocess import VoteConfig, final_decision, vote_windows, vote_with_fallback
from vadpipe.preprocess import NoiseProfile, PreprocessConfig, energy_gate, \
    rms_normalize, spectral_subtract, subtract_magnitude
from vadpipe.synth import generate_corpus, measured_snr_db, mix_at_snr_with_stems

SR = 16000


@contextlib.contextmanager
def criterion(number, description):
    try:
        yield
    except Exception:
        print(f"criterion {number:2d}: FAIL - {description}")
        raise
    print(f"criterion {number:2d}: PASS - {description}")


# ---------------------------------------------------------------------------
# 1. voting equals an independent sliding-sum + OR oracle, exhaustively

def oracle_decide(labels, w, quorum):
    if len(labels) < w:
        scaled = max(1, math.ceil(quorum * len(labels) / w))
        windows = [1 if sum(labels) >= scaled else 0]
    else:
        windows = []
        for t in range(len(labels) - w + 1):
            windows.append(1 if sum(labels[t:t + w]) >= quorum else 0)
    speech = 0
    for m in windows:
        if m == 1:
            speech = 1
    return windows, speech


def test_acceptance_1_vote_oracle_exhaustive():
    with criterion(1, "vote/final match exhaustive oracle for W in 1..6, T in W..12"):
        start = time.time()
        for w in range(1, 7):
            cfg = VoteConfig(w)
            q = cfg.effective_quorum
            for t in range(w, 13):
                for labels in itertools.product([0, 1], repeat=t):
                    got_windows = vote_windows(list(labels), cfg)
                    want_windows, want_final = oracle_decide(list(labels), w, q)
                    assert got_windows == want_windows
                    assert final_decision(got_windows) == want_final
        assert time.time() - start < 10.0


# ---------------------------------------------------------------------------
# 2. per-bin spectral subtraction arithmetic

def test_acceptance_2_subtraction_arithmetic():
    with criterion(2, "per-bin subtraction hand values exact; zero-noise identity"):
        assert subtract_magnitude(5.0, 1.0, 2.0, 0.1) == 3.0
        assert subtract_magnitude(1.0, 2.0, 1.0, 0.5) == 0.5
        rng = np.random.default_rng(42)
        samples = rng.standard_normal(6400) * 0.2
        out = spectral_subtract(AudioBuffer(samples, SR), PreprocessConfig(),
                                noise=NoiseProfile(np.zeros(257)))
        err = np.abs(out.samples - samples)[512:-512]
        assert err.max() <= 1e-6


# ---------------------------------------------------------------------------
# 3. energy gate identities and idempotence

def test_acceptance_3_energy_gate():
    with criterion(3, "gate: theta=0 identity, theta>total zeros, idempotent"):
        rng = np.random.default_rng(43)
        samples = rng.standard_normal(6400) * 0.3
        buf = AudioBuffer(samples, SR)

        out = energy_gate(buf, PreprocessConfig(theta=0.0, theta_relative=False))
        assert np.abs(out.samples - samples)[400:-400].max() <= 1e-9

        total = float(np.sum(samples ** 2))
        out = energy_gate(buf, PreprocessConfig(theta=total + 1.0, theta_relative=False))
        assert np.all(out.samples == 0.0)

        fixtures = [
            (AudioBuffer(samples, SR), PreprocessConfig()),
            (AudioBuffer(np.concatenate([np.zeros(2000), samples[:2000], np.zeros(2000)]), SR),
             PreprocessConfig(theta=1e-6, theta_relative=False)),
            (buf, PreprocessConfig(theta=1e9, theta_relative=False)),
        ]
        for fixture, cfg in fixtures:
            once = energy_gate(fixture, cfg)
            twice = energy_gate(once, cfg)
            assert np.max(np.abs(twice.samples - once.samples)) <= 1e-9


# ---------------------------------------------------------------------------
# 4. RMS normalization

def test_acceptance_4_rms_normalization():
    with criterion(4, "rms_normalize hits target within 1e-6; scale-invariant"):
        rng = np.random.default_rng(44)
        for _ in range(25):
            x = rng.standard_normal(3000) * rng.uniform(0.005, 0.4)
            out = rms_normalize(AudioBuffer(x, SR), 0.05)  # target low: no clipping
            assert np.sqrt(np.mean(out.samples ** 2)) == pytest.approx(0.05, abs=1e-6)
            a = rms_normalize(AudioBuffer(x, SR), 0.05)
            b = rms_normalize(AudioBuffer(x * rng.uniform(0.1, 10.0), SR), 0.05)
            assert np.max(np.abs(a.samples - b.samples)) <= 1e-9


# ---------------------------------------------------------------------------
# 5. STFT/ISTFT and overlap-add round trips

def test_acceptance_5_reconstruction_round_trips():
    with criterion(5, "stft/istft and overlap-add reconstruct 100 random buffers"):
        rng = np.random.default_rng(45)
        for _ in range(100):
            n = int(rng.integers(2000, 8000))
            samples = rng.standard_normal(n) * rng.uniform(0.05, 0.8)
            buf = AudioBuffer(samples, SR)

            back = dsp.istft(dsp.stft(buf), n)
            assert np.abs(back.samples - samples)[512:-512].max() <= 1e-9

            grid = dsp.frame_signal(buf, 400, 160)
            ola = dsp.overlap_add(grid.frames, 160, n)
            assert np.abs(ola.samples - samples)[400:-400].max() <= 1e-9


# ---------------------------------------------------------------------------
# 6. SNR mixing accuracy and generation determinism

def test_acceptance_6_snr_mixer(tmp_path):
    with criterion(6, "mixer within 0.01 dB at 0/5/10/15/20 dB; byte-exact reruns"):
        rng = np.random.default_rng(46)
        targets = (0.0, 5.0, 10.0, 15.0, 20.0)
        for i in range(50):
            clean = AudioBuffer(rng.standard_normal(4000) * rng.uniform(0.02, 0.3), SR)
            noise = AudioBuffer(rng.standard_normal(4000) * rng.uniform(0.02, 0.3), SR)
            mix = mix_at_snr_with_stems(clean, noise, targets[i % 5])
            assert measured_snr_db(mix.clean, mix.noise) == \
                pytest.approx(targets[i % 5], abs=0.01)

        def digest(root):
            return {p.name: hashlib.sha256(p.read_bytes()).hexdigest()
                    for p in sorted(Path(root).rglob("*")) if p.is_file()}

        generate_corpus(tmp_path / "a", (2, 2, 2), seed=19, duration_s=1.0)
        generate_corpus(tmp_path / "b", (2, 2, 2), seed=19, duration_s=1.0)
        assert digest(tmp_path / "a") == digest(tmp_path / "b")


# ---------------------------------------------------------------------------
# 7. trapezoid AUC equals the pairwise Mann-Whitney statistic

def test_acceptance_7_auc_oracle():
    with criterion(7, "trapezoid AUC == Mann-Whitney (ties as 1/2) on 100 sets"):
        rng = np.random.default_rng(47)
        done = 0
        while done < 100:
            n = int(rng.integers(4, 201))
            if rng.uniform() < 0.5:
                raw = rng.integers(0, 12, size=n) / 3.0  # heavy ties
            else:
                raw = rng.uniform(0, 1, size=n)
            truths = rng.integers(0, 2, size=n)
            if truths.sum() in (0, n):
                continue
            scores = list(zip(raw.tolist(), truths.tolist()))
            pos = [s for s, t in scores if t]
            neg = [s for s, t in scores if not t]
            mw = sum((p > q) + 0.5 * (p == q) for p in pos for q in neg) / (len(pos) * len(neg))
            assert roc_sweep(scores).auc == pytest.approx(mw, abs=1e-9)
            done += 1


# ---------------------------------------------------------------------------
# 8 & 9. directional reproduction of the reported accuracy and ROC orderings

EXPERIMENT_MODES = ("baseline", "vad1", "vad2")


def _clip_rows(manifest, cfg):
    rows = []
    for entry in manifest.entries:
        buf = ensure_rate(read_wav(manifest.resolve(entry)))
        result = run_pipeline(buf, cfg)
        rows.append((result.segment_values, entry.label))
    return rows


def _tune_thresh(rows):
    """Smallest threshold maximizing baseline balanced accuracy."""
    scores = [(values[0], label) for values, label in rows]
    n_pos = sum(1 for _, lab in scores if lab != "non_speech")
    n_neg = len(scores) - n_pos
    best_th, best_bal = None, -1.0
    for th in sorted({s for s, _ in scores}):
        tp = sum(1 for s, lab in scores if lab != "non_speech" and s >= th)
        tn = sum(1 for s, lab in scores if lab == "non_speech" and s < th)
        bal = (tp / n_pos + tn / n_neg) / 2
        if bal > best_bal:
            best_bal, best_th = bal, th
    return best_th


def _accuracies(rows, thresh, cfg):
    decisions = []
    for values, label in rows:
        if not cfg.vote_enabled:
            final = int(values[0] >= thresh)
        else:
            labels = [int(v >= thresh) for v in values]
            final = final_decision(vote_with_fallback(labels, cfg.vote))
        decisions.append((final, label))
    return class_accuracy(decisions)


@pytest.fixture(scope="module")
def detection_experiment(tmp_path_factory):
    """Seeded 300-clip corpus + disjoint 100-clip tuning split, all modes scored."""
    start = time.time()
    root = tmp_path_factory.mktemp("acceptance")
    eval_manifest = generate_corpus(root / "eval", (100, 100, 100),
                                    snr_list=(0.0, 5.0, 10.0), seed=7,
                                    duration_s=8.0, write_stems=False)
    tune_manifest = generate_corpus(root / "tune", (34, 33, 33),
                                    snr_list=(0.0, 5.0, 10.0), seed=8,
                                    duration_s=8.0, write_stems=False)
    configs = {m: PipelineConfig(mode=m) for m in EXPERIMENT_MODES}
    thresh = _tune_thresh(_clip_rows(tune_manifest, configs["baseline"]))
    rows = {m: _clip_rows(eval_manifest, cfg) for m, cfg in configs.items()}
    return {
        "thresh": thresh,
        "configs": configs,
        "rows": rows,
        "elapsed_s": time.time() - start,
    }


def test_acceptance_8_accuracy_ordering(detection_experiment):
    with criterion(8, "noisy-speech accuracy vad2 > vad1 > baseline by >= 5pp each"):
        exp = detection_experiment
        acc = {m: _accuracies(exp["rows"][m], exp["thresh"], exp["configs"][m])
               for m in EXPERIMENT_MODES}
        for m in EXPERIMENT_MODES:
            a = acc[m]
            print(f"    {m:8s} noisy={a['noisy_speech']:.3f} "
                  f"clean={a['clean_speech']:.3f} non-speech={a['non_speech']:.3f}")
        assert acc["vad2"]["noisy_speech"] >= acc["vad1"]["noisy_speech"] + 0.05
        assert acc["vad1"]["noisy_speech"] >= acc["baseline"]["noisy_speech"] + 0.05
        for m in EXPERIMENT_MODES:
            assert acc[m]["non_speech"] >= 0.70
        assert exp["elapsed_s"] < 120.0, f"experiment took {exp['elapsed_s']:.0f}s"


def test_acceptance_9_fpr_at_99_tpr_ordering(detection_experiment):
    with criterion(9, "FPR at 99% TPR: vad2 <= vad1 <= baseline, vad2 lower by >= 5pp"):
        exp = detection_experiment
        fpr = {}
        for m in EXPERIMENT_MODES:
            stats = [(clip_statistic(values, exp["configs"][m]),
                      1 if label != "non_speech" else 0)
                     for values, label in exp["rows"][m]]
            fpr[m] = fpr_at_tpr(roc_sweep(stats), 0.99)
            print(f"    {m:8s} fpr@99%tpr={fpr[m]:.3f}")
        assert fpr["vad2"] <= fpr["vad1"] <= fpr["baseline"]
        assert fpr["vad2"] <= fpr["baseline"] - 0.05


# ---------------------------------------------------------------------------
# 10. evaluation reports are byte-identical regardless of worker count

def test_acceptance_10_eval_determinism(tmp_path):
    with criterion(10, "eval reports byte-identical across --jobs settings"):
        manifest = generate_corpus(tmp_path / "corpus", (4, 4, 4),
                                   snr_list=(0.0, 10.0), seed=21, duration_s=2.0)
        configs = [PipelineConfig(mode=m, thresh=45.0) for m in EXPERIMENT_MODES]
        run_eval(manifest, configs, out_dir=tmp_path / "jobs1", jobs=1)
        run_eval(manifest, configs, out_dir=tmp_path / "jobs2", jobs=2)
        files = sorted(p.name for p in (tmp_path / "jobs1").iterdir())
        assert files == sorted(p.name for p in (tmp_path / "jobs2").iterdir())
        for name in files:
            assert (tmp_path / "jobs1" / name).read_bytes() == \
                (tmp_path / "jobs2" / name).read_bytes(), name
