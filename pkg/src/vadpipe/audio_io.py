"""WAV file ingestion/emission and sample-rate conversion.

All pipeline audio is mono float64 in [-1, 1]. Files are plain RIFF/WAVE,
PCM 16-bit or IEEE float 32-bit, one or two channels; anything else is
rejected rather than guessed at.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import resample_poly

PIPELINE_RATE_HZ = 16000

# 16-bit scaling: divide by 32768 on read, clamp to [-32768, 32767] on write.
_PCM16_FULL_SCALE = 32768.0


class WavFormatError(ValueError):
    """Raised when a file is not a well-formed RIFF/WAVE container."""


class UnsupportedCodecError(ValueError):
    """Raised when a WAV file uses an encoding this reader does not handle."""


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio: a 1-D float sample array plus its sample rate in Hz."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


def read_wav(path: str | Path) -> AudioBuffer:
    """Read a RIFF/WAVE file into a mono AudioBuffer.

    Stereo input is downmixed by channel mean. PCM16 samples are scaled by
    1/32768; float32 samples are clamped to [-1, 1].
    """
    data = Path(path).read_bytes()
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8:pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise WavFormatError(f"{path}: truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            if len(body) < chunk_size:
                raise WavFormatError(f"{path}: data chunk shorter than declared")
            payload = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None or payload is None:
        raise WavFormatError(f"{path}: missing fmt or data chunk")

    audio_format, channels, rate, _byte_rate, _block_align, bits = fmt
    if channels not in (1, 2):
        raise UnsupportedCodecError(f"{path}: {channels} channels not supported")
    if audio_format == 1 and bits == 16:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % 2], dtype="<i2")
        samples = raw.astype(np.float64) / _PCM16_FULL_SCALE
    elif audio_format == 3 and bits == 32:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % 4], dtype="<f4")
        samples = np.clip(raw.astype(np.float64), -1.0, 1.0)
    else:
        raise UnsupportedCodecError(
            f"{path}: format tag {audio_format} at {bits} bits not supported"
        )

    if channels == 2:
        samples = samples[: len(samples) - len(samples) % 2].reshape(-1, 2).mean(axis=1)
    return AudioBuffer(samples, rate)


def write_wav(buf: AudioBuffer, path: str | Path) -> None:
    """Write a buffer as mono 16-bit PCM. Samples are clamped, not wrapped."""
    quantized = np.clip(np.rint(buf.samples * _PCM16_FULL_SCALE), -32768, 32767)
    payload = quantized.astype("<i2").tobytes()
    rate = buf.sample_rate_hz
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, rate, rate * 2, 2, 16)
    header += b"data" + struct.pack("<I", len(payload))
    Path(path).write_bytes(header + payload)


def _design_resample_filter(up: int, down: int, taps_per_phase: int = 64) -> np.ndarray:
    """Kaiser windowed-sinc lowpass for polyphase resampling.

    Each of the `up` polyphase branches gets `taps_per_phase` taps and is
    normalized to unit DC gain so constant signals pass through exactly.
    """
    n = taps_per_phase * up + 1  # odd length => symmetric, integer group delay
    cutoff = min(1.0 / up, 1.0 / down)  # fraction of the upsampled Nyquist
    m = np.arange(n) - (n - 1) / 2
    h = cutoff * np.sinc(cutoff * m) * np.kaiser(n, beta=8.6)
    for phase in range(up):
        branch = h[phase::up]
        h[phase::up] = branch / (up * branch.sum())
    return h


def resample(buf: AudioBuffer, target_hz: int) -> AudioBuffer:
    """Band-limited resampling via a fixed polyphase windowed-sinc filter."""
    if target_hz <= 0:
        raise ValueError(f"target_hz must be positive, got {target_hz}")
    if len(buf) == 0:
        raise ValueError("cannot resample an empty buffer")
    if buf.sample_rate_hz == target_hz:
        return AudioBuffer(buf.samples.copy(), target_hz)

    g = math.gcd(buf.sample_rate_hz, target_hz)
    up, down = target_hz // g, buf.sample_rate_hz // g
    h = _design_resample_filter(up, down)
    out = resample_poly(buf.samples, up, down, window=h)
    return AudioBuffer(out, target_hz)


def ensure_rate(buf: AudioBuffer, target_hz: int = PIPELINE_RATE_HZ) -> AudioBuffer:
    """Return `buf` unchanged if already at `target_hz`, else resample."""
    if buf.sample_rate_hz == target_hz:
        return buf
    return resample(buf, target_hz)
