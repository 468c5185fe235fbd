"""Desk-scale noisy-speech corpus synthesis.

Clips come in three classes: clean "speech surrogate" (a modulated harmonic
stack with silence gaps), noisy speech (surrogate mixed with noise at an
exact SNR), and non-speech (noise alone). Generation is fully seeded: the
same seed always produces byte-identical files and manifest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import AudioBuffer, write_wav

LABELS = ("clean_speech", "noisy_speech", "non_speech")
NOISE_KINDS = ("white", "pink", "babble")
DEFAULT_SNRS_DB = (0.0, 5.0, 10.0, 15.0, 20.0)

_SILENT_POWER = 1e-16


@dataclass(frozen=True)
class MixResult:
    """A finished mix plus the exact stems that went into it."""

    mixed: AudioBuffer
    clean: AudioBuffer
    noise: AudioBuffer
    snr_db: float


@dataclass(frozen=True)
class ManifestEntry:
    path: str  # relative to the manifest's directory
    label: str
    snr_db: float | None
    duration_s: float


@dataclass(frozen=True)
class Manifest:
    entries: tuple[ManifestEntry, ...]
    root: Path

    def resolve(self, entry: ManifestEntry) -> Path:
        return self.root / entry.path


def _power(x: np.ndarray) -> float:
    return float(np.mean(x ** 2))


def _fit_length(noise: np.ndarray, n: int) -> np.ndarray:
    if len(noise) >= n:
        return noise[:n]
    reps = math.ceil(n / len(noise))
    return np.tile(noise, reps)[:n]


def mix_at_snr(clean: AudioBuffer, noise: AudioBuffer, snr_db: float) -> AudioBuffer:
    return mix_at_snr_with_stems(clean, noise, snr_db).mixed


def mix_at_snr_with_stems(clean: AudioBuffer, noise: AudioBuffer,
                          snr_db: float) -> MixResult:
    """Mix noise into clean speech so the measured SNR equals snr_db exactly.

    The noise gain comes from the actual sample powers, g = sqrt(P_clean /
    (P_noise * 10^(snr/10))). If the mix would clip, clean and noise are
    rescaled jointly, which leaves the SNR untouched.
    """
    if not math.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite, got {snr_db}")
    if clean.sample_rate_hz != noise.sample_rate_hz:
        raise ValueError("clean and noise must share a sample rate")
    noise_fit = _fit_length(noise.samples, len(clean))
    p_clean = _power(clean.samples)
    p_noise = _power(noise_fit)
    if p_clean <= _SILENT_POWER or p_noise <= _SILENT_POWER:
        raise ValueError("cannot mix silent clean or noise material")

    gain = math.sqrt(p_clean / (p_noise * 10.0 ** (snr_db / 10.0)))
    clean_part = clean.samples.copy()
    noise_part = gain * noise_fit
    mixed = clean_part + noise_part
    peak = float(np.max(np.abs(mixed)))
    if peak > 1.0:
        clean_part /= peak
        noise_part /= peak
        mixed /= peak
    sr = clean.sample_rate_hz
    return MixResult(AudioBuffer(mixed, sr), AudioBuffer(clean_part, sr),
                     AudioBuffer(noise_part, sr), snr_db)


def measured_snr_db(clean: AudioBuffer, noise: AudioBuffer) -> float:
    return 10.0 * math.log10(_power(clean.samples) / _power(noise.samples))


# ---------------------------------------------------------------------------
# built-in source generators

def speech_surrogate(rng: np.random.Generator, duration_s: float = 3.0,
                     sample_rate_hz: int = 16000) -> AudioBuffer:
    """Harmonic stack with 4 Hz amplitude modulation and silence gaps.

    The activity pattern mimics a short spoken command: one burst of about
    a second (long enough to span several 200 ms segments), sometimes
    followed by a brief afterthought, and silence elsewhere. Most of the
    clip is pause, which is what makes whole-clip averaging miss it.
    """
    n = int(round(duration_s * sample_rate_hz))
    t = np.arange(n) / sample_rate_hz
    f0 = rng.uniform(120.0, 220.0)
    tone = np.zeros(n)
    for k in range(1, 6):
        # gentle rolloff keeps energy in the upper harmonics, where
        # low-frequency-heavy backgrounds mask least
        tone += (1.0 / math.sqrt(k)) * np.sin(2.0 * np.pi * k * f0 * t + rng.uniform(0, 2 * np.pi))
    am = 0.85 + 0.15 * np.sin(2.0 * np.pi * 4.0 * t + rng.uniform(0, 2 * np.pi))

    mask = np.zeros(n)
    edge = int(0.01 * sample_rate_hz)

    def add_burst(start_s: float, length_s: float) -> None:
        start = int(start_s * sample_rate_hz)
        stop = min(int((start_s + length_s) * sample_rate_hz), n)
        mask[start:stop] = 1.0
        if stop - start > 2 * edge:  # raised-cosine edges, no clicks
            fade = 0.5 - 0.5 * np.cos(np.pi * np.arange(edge) / edge)
            mask[start:start + edge] *= fade
            mask[stop - edge:stop] *= fade[::-1]

    main_len = rng.uniform(1.0, 1.3)
    main_pos = rng.uniform(0.25, max(duration_s - main_len - 0.2, 0.3))
    add_burst(main_pos, main_len)
    tail_pos = main_pos + main_len + rng.uniform(0.5, 0.9)
    if rng.uniform() < 0.5 and tail_pos + 0.5 < duration_s:
        add_burst(tail_pos, rng.uniform(0.25, 0.45))

    # syllabic notches inside bursts: ~60 ms of near-silence every ~170 ms,
    # so any 200 ms span of voiced material still touches its own pauses
    syl_period = rng.uniform(0.14, 0.19)
    syl = np.sin(2 * np.pi * t / syl_period + rng.uniform(0, 2 * np.pi))
    syl = np.clip((syl + 0.45) / 0.6, 0.0, 1.0)

    x = tone * am * mask * syl
    rms = math.sqrt(_power(x))
    level = rng.uniform(0.08, 0.2)
    x *= level / max(rms, 1e-12)
    return AudioBuffer(np.clip(x, -1.0, 1.0), sample_rate_hz)


def _unsteady_envelope(rng: np.random.Generator, n: int,
                       sample_rate_hz: int) -> np.ndarray:
    """Slow level drift plus a few short swells (door slams, passing cars).

    Environmental noise is not statistically flat; these transients are what
    give whole-clip statistics trouble while staying too brief to win a
    multi-segment vote.
    """
    t = np.arange(n) / sample_rate_hz
    depth_db = rng.uniform(0.5, 2.5)
    drift_db = depth_db * np.sin(2 * np.pi * rng.uniform(0.08, 0.3) * t + rng.uniform(0, 2 * np.pi))
    env = 10.0 ** (drift_db / 20.0)
    duration = n / sample_rate_hz
    # event density varies a lot clip to clip; individual events stay brief
    for _ in range(int(rng.integers(1, max(2, int(1.6 * duration))))):
        center = rng.uniform(0.0, duration)
        width = rng.uniform(0.05, 0.2)  # gaussian sigma, seconds
        gain = 10.0 ** (rng.uniform(6.0, 13.0) / 20.0) - 1.0
        env += gain * np.exp(-0.5 * ((t - center) / width) ** 2)
    return env


def white_noise(rng: np.random.Generator, duration_s: float = 3.0,
                sample_rate_hz: int = 16000, rms: float = 0.05) -> AudioBuffer:
    n = int(round(duration_s * sample_rate_hz))
    x = rng.standard_normal(n) * _unsteady_envelope(rng, n, sample_rate_hz)
    x *= rms / math.sqrt(_power(x))
    return AudioBuffer(np.clip(x, -1.0, 1.0), sample_rate_hz)


def pink_noise(rng: np.random.Generator, duration_s: float = 3.0,
               sample_rate_hz: int = 16000, rms: float = 0.05) -> AudioBuffer:
    n = int(round(duration_s * sample_rate_hz))
    spectrum = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate_hz)
    freqs[0] = freqs[1]
    x = np.fft.irfft(spectrum / np.sqrt(freqs), n=n)
    x *= _unsteady_envelope(rng, n, sample_rate_hz)
    x *= rms / math.sqrt(_power(x))
    return AudioBuffer(np.clip(x, -1.0, 1.0), sample_rate_hz)


def babble_noise(rng: np.random.Generator, duration_s: float = 3.0,
                 sample_rate_hz: int = 16000, rms: float = 0.05,
                 voices: int = 8) -> AudioBuffer:
    """Sum of detuned continuous harmonic voices: speech-like spectrum,
    but no single voice dominates and the aggregate envelope stays steady."""
    n = int(round(duration_s * sample_rate_hz))
    t = np.arange(n) / sample_rate_hz
    x = np.zeros(n)
    for _ in range(voices):
        f0 = rng.uniform(90.0, 280.0)
        voice = np.zeros(n)
        for k in range(1, 6):
            voice += (1.0 / k) * np.sin(2 * np.pi * k * f0 * t + rng.uniform(0, 2 * np.pi))
        am = 0.88 + 0.12 * np.sin(2 * np.pi * rng.uniform(2.5, 6.5) * t + rng.uniform(0, 2 * np.pi))
        x += voice * am
    x *= _unsteady_envelope(rng, n, sample_rate_hz)
    x *= rms / math.sqrt(_power(x))
    return AudioBuffer(np.clip(x, -1.0, 1.0), sample_rate_hz)


def make_noise(kind: str, rng: np.random.Generator, duration_s: float,
               sample_rate_hz: int, rms: float) -> AudioBuffer:
    if kind == "white":
        return white_noise(rng, duration_s, sample_rate_hz, rms)
    if kind == "pink":
        return pink_noise(rng, duration_s, sample_rate_hz, rms)
    if kind == "babble":
        return babble_noise(rng, duration_s, sample_rate_hz, rms)
    raise ValueError(f"unknown noise kind {kind!r}")


# ---------------------------------------------------------------------------
# corpus assembly

def generate_corpus(out_dir: str | Path, counts: tuple[int, int, int],
                    snr_list: tuple[float, ...] = DEFAULT_SNRS_DB, seed: int = 0,
                    duration_s: float = 8.0, sample_rate_hz: int = 16000,
                    write_stems: bool = True) -> Manifest:
    """Write WAVs and a manifest for (clean, noisy, non-speech) counts.

    Each clip gets its own rng seeded from (seed, class, index), so output
    is reproducible clip-by-clip no matter how generation is ordered.
    """
    n_clean, n_noisy, n_nonspeech = counts
    if min(counts) < 0 or sum(counts) == 0:
        raise ValueError(f"counts must be nonnegative and sum > 0, got {counts}")
    if not snr_list:
        raise ValueError("snr_list must not be empty")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stems_dir = out / "stems"
    if write_stems and n_noisy:
        stems_dir.mkdir(exist_ok=True)

    entries = []
    for i in range(n_clean):
        rng = np.random.default_rng([seed, 0, i])
        clip = speech_surrogate(rng, duration_s, sample_rate_hz)
        name = f"clean_{i:04d}.wav"
        write_wav(clip, out / name)
        entries.append(ManifestEntry(name, "clean_speech", None, clip.duration_s))

    for i in range(n_noisy):
        rng = np.random.default_rng([seed, 1, i])
        clean = speech_surrogate(rng, duration_s, sample_rate_hz)
        # stride the kinds so noise type and SNR level decorrelate
        kind = NOISE_KINDS[i % len(NOISE_KINDS)]
        noise = make_noise(kind, rng, duration_s, sample_rate_hz, rms=0.05)
        snr = float(snr_list[(i // len(NOISE_KINDS)) % len(snr_list)])
        mix = mix_at_snr_with_stems(clean, noise, snr)
        name = f"noisy_{i:04d}.wav"
        write_wav(mix.mixed, out / name)
        if write_stems:
            write_wav(mix.clean, stems_dir / f"noisy_{i:04d}.clean.wav")
            write_wav(mix.noise, stems_dir / f"noisy_{i:04d}.noise.wav")
        entries.append(ManifestEntry(name, "noisy_speech", snr, mix.mixed.duration_s))

    for i in range(n_nonspeech):
        rng = np.random.default_rng([seed, 2, i])
        kind = NOISE_KINDS[i % len(NOISE_KINDS)]
        clip = make_noise(kind, rng, duration_s, sample_rate_hz,
                          rms=float(rng.uniform(0.02, 0.12)))
        name = f"nonspeech_{i:04d}.wav"
        write_wav(clip, out / name)
        entries.append(ManifestEntry(name, "non_speech", None, clip.duration_s))

    manifest = Manifest(tuple(entries), out)
    write_manifest(manifest, out / "manifest.tsv")
    return manifest


def write_manifest(manifest: Manifest, path: str | Path) -> None:
    lines = []
    for e in manifest.entries:
        snr = "NA" if e.snr_db is None else f"{e.snr_db:.1f}"
        lines.append(f"{e.path}\t{e.label}\t{snr}\t{e.duration_s:.3f}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    entries = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ValueError(f"{path}: line {lineno} has {len(parts)} fields, expected 4")
        rel, label, snr, duration = parts
        if label not in LABELS:
            raise ValueError(f"{path}: line {lineno} has unknown label {label!r}")
        entries.append(ManifestEntry(rel, label,
                                     None if snr == "NA" else float(snr),
                                     float(duration)))
    return Manifest(tuple(entries), path.parent)
