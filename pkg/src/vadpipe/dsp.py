"""Framing, windowing, and STFT/overlap-add primitives.

Reconstruction paths normalize by the accumulated synthesis-window energy
per sample, so any analysis/synthesis pair used here gives exact
pass-through when frames are left untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer

_DENOM_FLOOR = 1e-12


@dataclass(frozen=True)
class FrameGrid:
    """Overlapping frames of a signal, last frame zero-padded to full length."""

    frames: np.ndarray  # (num_frames, frame_len)
    hop: int

    def __post_init__(self):
        if self.frames.ndim != 2:
            raise ValueError("frames must be a 2-D array")
        if not 0 < self.hop <= self.frame_len:
            raise ValueError(f"need 0 < hop <= frame_len, got hop={self.hop}")

    @property
    def frame_len(self) -> int:
        return self.frames.shape[1]

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]


@dataclass(frozen=True)
class Stft:
    """One-sided complex spectra per frame: (num_frames, fft_len//2 + 1)."""

    frames: np.ndarray
    fft_len: int
    hop: int
    window: str  # "hann" or "rect"

    def __post_init__(self):
        if self.frames.ndim != 2 or self.frames.shape[1] != self.fft_len // 2 + 1:
            raise ValueError(
                f"expected {self.fft_len // 2 + 1} bins, got shape {self.frames.shape}"
            )

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    def magnitudes(self) -> np.ndarray:
        return np.abs(self.frames)

    def phases(self) -> np.ndarray:
        return np.angle(self.frames)


def num_frames_for(length: int, frame_len: int, hop: int) -> int:
    """Frame count with zero-padding: 1 + ceil((length - frame_len)/hop)."""
    if length <= frame_len:
        return 1
    return 1 + math.ceil((length - frame_len) / hop)


def frame_signal(buf: AudioBuffer, frame_len: int, hop: int) -> FrameGrid:
    """Slice a buffer into overlapping frames, zero-padding the tail."""
    if len(buf) == 0:
        raise ValueError("cannot frame an empty buffer")
    if not 0 < hop <= frame_len:
        raise ValueError(f"need 0 < hop <= frame_len, got hop={hop}, frame_len={frame_len}")
    n = num_frames_for(len(buf), frame_len, hop)
    padded = np.zeros((n - 1) * hop + frame_len)
    padded[: len(buf)] = buf.samples
    strided = np.lib.stride_tricks.sliding_window_view(padded, frame_len)[::hop]
    return FrameGrid(np.ascontiguousarray(strided), hop)


def _analysis_window(name: str, length: int) -> np.ndarray:
    if name == "hann":
        # periodic form, the right one for overlap-add at hop = length/4
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(length) / length)
    if name == "rect":
        return np.ones(length)
    raise ValueError(f"unknown window {name!r}")


def _crossfade_window(length: int) -> np.ndarray:
    # triangular but strictly positive, so normalized overlap-add is defined
    # at every sample a frame covers
    ramp = np.minimum(np.arange(1, length + 1), np.arange(length, 0, -1))
    return ramp / ramp.max()


def stft(buf: AudioBuffer, fft_len: int = 512, hop: int = 128,
         window: str = "hann") -> Stft:
    """Forward STFT over zero-padded frames of the input."""
    if fft_len <= 0 or fft_len & (fft_len - 1):
        raise ValueError(f"fft_len must be a power of two, got {fft_len}")
    if fft_len % hop:
        raise ValueError(f"hop {hop} must divide fft_len {fft_len}")
    grid = frame_signal(buf, fft_len, hop)
    win = _analysis_window(window, fft_len)
    spectra = np.fft.rfft(grid.frames * win, n=fft_len, axis=1)
    return Stft(spectra, fft_len, hop, window)


def istft(spec: Stft, out_len: int, sample_rate_hz: int = 16000) -> AudioBuffer:
    """Invert an STFT by weighted overlap-add with per-sample normalization."""
    frames = np.fft.irfft(spec.frames, n=spec.fft_len, axis=1)
    win = _analysis_window(spec.window, spec.fft_len)
    total = (spec.num_frames - 1) * spec.hop + spec.fft_len
    acc = np.zeros(total)
    den = np.zeros(total)
    for m in range(spec.num_frames):
        sl = slice(m * spec.hop, m * spec.hop + spec.fft_len)
        acc[sl] += frames[m] * win
        den[sl] += win * win
    out = np.where(den > _DENOM_FLOOR, acc / np.maximum(den, _DENOM_FLOOR), 0.0)
    result = np.zeros(out_len)
    keep = min(out_len, total)
    result[:keep] = out[:keep]
    return AudioBuffer(result, sample_rate_hz)


def overlap_add(frames: np.ndarray, hop: int, out_len: int,
                sample_rate_hz: int = 16000) -> AudioBuffer:
    """Rebuild a signal from (possibly modified) frames.

    Frames are weighted by a strictly positive triangular window and the sum
    is normalized by the accumulated weights of the full grid, which makes
    unmodified frames reconstruct the input exactly and zeroed frames
    cross-fade against their neighbors.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2:
        raise ValueError("frames must be a 2-D array")
    n, frame_len = frames.shape
    win = _crossfade_window(frame_len)
    total = (n - 1) * hop + frame_len
    acc = np.zeros(total)
    den = np.zeros(total)
    for m in range(n):
        sl = slice(m * hop, m * hop + frame_len)
        acc[sl] += frames[m] * win
        den[sl] += win
    out = acc / np.maximum(den, _DENOM_FLOOR)
    result = np.zeros(out_len)
    keep = min(out_len, total)
    result[:keep] = out[:keep]
    return AudioBuffer(result, sample_rate_hz)
