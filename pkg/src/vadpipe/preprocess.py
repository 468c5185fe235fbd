"""Noise-removal chain: spectral subtraction, energy gating, RMS normalization.

Each stage is value-in/value-out, preserves buffer length, and maps silence
to silence, so stages compose in any order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer
from . import dsp

SILENCE_RMS_FLOOR = 1e-8

STAGE_NAMES = ("spectral_subtract", "energy_gate", "rms_normalize")


@dataclass(frozen=True)
class PreprocessConfig:
    """Tunables for the noise-removal stages.

    theta is an energy threshold in squared-amplitude units per frame when
    theta_relative is False; otherwise it is a fraction of the segment's
    mean frame energy, so one setting works across recording levels.
    """

    alpha: float = 1.5            # over-subtraction factor, >= 1
    beta: float = 0.3             # spectral floor, in [0, 1]
    theta: float = 0.1            # energy-gate threshold (see theta_relative)
    theta_relative: bool = True
    target_rms: float = 0.1
    noise_frames: int = 6         # leading frames used for the noise estimate
    stages: tuple[str, ...] = STAGE_NAMES
    gate_frame_ms: float = 25.0
    gate_hop_ms: float = 10.0
    fft_len: int = 512
    fft_hop: int = 128

    def __post_init__(self):
        if self.alpha < 1.0:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must be in [0, 1], got {self.beta}")
        if self.theta < 0.0:
            raise ValueError(f"theta must be >= 0, got {self.theta}")
        if self.target_rms <= 0.0:
            raise ValueError(f"target_rms must be positive, got {self.target_rms}")
        if self.noise_frames < 1:
            raise ValueError(f"noise_frames must be >= 1, got {self.noise_frames}")
        unknown = set(self.stages) - set(STAGE_NAMES)
        if unknown:
            raise ValueError(f"unknown stages: {sorted(unknown)}")


@dataclass(frozen=True)
class NoiseProfile:
    """Estimated noise magnitude per STFT bin."""

    magnitude_spectrum: np.ndarray

    def __post_init__(self):
        mags = np.asarray(self.magnitude_spectrum, dtype=np.float64)
        if mags.ndim != 1 or np.any(mags < 0):
            raise ValueError("noise magnitudes must be a 1-D nonnegative array")
        object.__setattr__(self, "magnitude_spectrum", mags)


def estimate_noise(spec: dsp.Stft, k: int) -> NoiseProfile:
    """Mean magnitude over the k leading frames, per bin."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > spec.num_frames:
        raise ValueError(f"k={k} exceeds available frames ({spec.num_frames})")
    return NoiseProfile(np.abs(spec.frames[:k]).mean(axis=0))


def subtract_magnitude(x_mag, alpha: float, noise_mag, beta: float):
    """Per-bin magnitude subtraction: max(|X| - alpha*|N|, beta*|N|)."""
    x_mag = np.asarray(x_mag, dtype=np.float64)
    noise_mag = np.asarray(noise_mag, dtype=np.float64)
    return np.maximum(x_mag - alpha * noise_mag, beta * noise_mag)


def spectral_subtract(buf: AudioBuffer, cfg: PreprocessConfig,
                      noise: NoiseProfile | None = None) -> AudioBuffer:
    """Subtract an estimated noise magnitude spectrum, keeping the noisy phase.

    When no profile is supplied, the noise is estimated from the leading
    frames of the buffer itself (clamped to however many frames exist).
    The signal is reflect-padded around the STFT so every original sample
    has full analysis-window coverage; otherwise modified edge frames get
    amplified by the tiny overlap-add weights there.
    """
    if noise is None:
        spec = dsp.stft(buf, cfg.fft_len, cfg.fft_hop)
        noise = estimate_noise(spec, min(cfg.noise_frames, spec.num_frames))

    pad = min(cfg.fft_len, len(buf) - 1)
    samples = np.pad(buf.samples, pad, mode="reflect") if pad else buf.samples
    spec = dsp.stft(AudioBuffer(samples, buf.sample_rate_hz), cfg.fft_len, cfg.fft_hop)
    clean_mag = subtract_magnitude(spec.magnitudes(), cfg.alpha,
                                   noise.magnitude_spectrum, cfg.beta)
    rebuilt = clean_mag * np.exp(1j * spec.phases())
    out = dsp.istft(dsp.Stft(rebuilt, cfg.fft_len, cfg.fft_hop, spec.window),
                    len(samples), buf.sample_rate_hz)
    return AudioBuffer(out.samples[pad:pad + len(buf)], buf.sample_rate_hz)


def effective_theta(cfg: PreprocessConfig, frame_energies: np.ndarray) -> float:
    if cfg.theta_relative:
        return cfg.theta * float(frame_energies.mean())
    return cfg.theta


def energy_gate(buf: AudioBuffer, cfg: PreprocessConfig,
                frame_len: int | None = None, hop: int | None = None) -> AudioBuffer:
    """Zero frames whose energy falls below the threshold, then overlap-add."""
    if frame_len is None:
        frame_len = int(round(buf.sample_rate_hz * cfg.gate_frame_ms / 1000.0))
    if hop is None:
        hop = int(round(buf.sample_rate_hz * cfg.gate_hop_ms / 1000.0))
    grid = dsp.frame_signal(buf, frame_len, hop)
    energies = np.sum(grid.frames ** 2, axis=1)
    theta = effective_theta(cfg, energies)
    gated = np.where((energies >= theta)[:, None], grid.frames, 0.0)
    return dsp.overlap_add(gated, hop, len(buf), buf.sample_rate_hz)


def rms_normalize(buf: AudioBuffer, target: float) -> AudioBuffer:
    """Scale the signal so its RMS equals target, then clamp to [-1, 1].

    Buffers below the silence floor pass through unchanged; there is nothing
    meaningful to scale and the division would blow up.
    """
    if target <= 0.0:
        raise ValueError(f"target must be positive, got {target}")
    rms = float(np.sqrt(np.mean(buf.samples ** 2)))
    if rms < SILENCE_RMS_FLOOR:
        return AudioBuffer(buf.samples.copy(), buf.sample_rate_hz)
    scaled = np.clip(buf.samples * (target / rms), -1.0, 1.0)
    return AudioBuffer(scaled, buf.sample_rate_hz)


def clip_noise_profile(buf: AudioBuffer, cfg: PreprocessConfig) -> NoiseProfile:
    """Noise estimate from the leading frames of a whole clip.

    Estimating once per clip keeps segments that are entirely speech from
    subtracting their own content; the clip lead-in is the best stand-in
    for the background the paper's method assumes.
    """
    spec = dsp.stft(buf, cfg.fft_len, cfg.fft_hop)
    return estimate_noise(spec, min(cfg.noise_frames, spec.num_frames))


def preprocess_segment(seg: AudioBuffer, cfg: PreprocessConfig,
                       noise: NoiseProfile | None = None) -> AudioBuffer:
    """Run the configured stages in order over one segment.

    `noise` feeds the spectral-subtraction stage; when omitted, each segment
    estimates from its own leading frames.
    """
    if len(seg) == 0:
        raise ValueError("cannot preprocess an empty segment")
    out = seg
    for stage in cfg.stages:
        if stage == "spectral_subtract":
            out = spectral_subtract(out, cfg, noise=noise)
        elif stage == "energy_gate":
            out = energy_gate(out, cfg)
        elif stage == "rms_normalize":
            out = rms_normalize(out, cfg.target_rms)
    return out
