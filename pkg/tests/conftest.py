import numpy as np
import pytest

from vadpipe.audio_io import AudioBuffer

SR = 16000


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_buffer(samples, sr=SR):
    return AudioBuffer(np.asarray(samples, dtype=np.float64), sr)


def sine(freq_hz, duration_s, sr=SR, amplitude=0.5):
    t = np.arange(int(duration_s * sr)) / sr
    return AudioBuffer(amplitude * np.sin(2 * np.pi * freq_hz * t), sr)
