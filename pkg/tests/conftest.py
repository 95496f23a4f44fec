import numpy as np
import pytest
from scipy.signal import lfilter

from wakenode import Signal


def urban_like_signal(duration_s: float, rate_hz: float, seed: int) -> Signal:
    """Broadband synthetic clip: colored noise, tones, slow amplitude swings."""
    rng = np.random.default_rng(seed)
    n = int(duration_s * rate_hz)
    colored = lfilter([1.0], [1.0, -0.9], rng.normal(size=n))
    t = np.arange(n) / rate_hz
    tones = 0.4 * np.sin(2 * np.pi * 220 * t) + 0.2 * np.sin(2 * np.pi * 523 * t + 1.0)
    swell = 0.6 + 0.4 * np.sin(2 * np.pi * 0.05 * t)
    x = swell * (0.3 * colored + tones)
    return Signal(x / np.max(np.abs(x)), rate_hz)


def tone(freq_hz: float, duration_s: float, rate_hz: float, amplitude: float = 1.0) -> Signal:
    t = np.arange(int(duration_s * rate_hz)) / rate_hz
    return Signal(amplitude * np.sin(2 * np.pi * freq_hz * t), rate_hz)


def shift_right(sig: Signal, k: int) -> Signal:
    """Delay by k samples, zero-padded, same length. Negative k advances."""
    out = np.zeros(len(sig))
    if k >= 0:
        if k < len(sig):
            out[k:] = sig.samples[: len(sig) - k]
    else:
        out[: len(sig) + k] = sig.samples[-k:]
    return Signal(out, sig.sample_rate_hz)


def add_noise_at_snr(sig: Signal, snr_db: float, seed: int) -> Signal:
    rng = np.random.default_rng(seed)
    p_signal = float(np.mean(sig.samples**2))
    p_noise = p_signal / 10 ** (snr_db / 10)
    noisy = sig.samples + rng.normal(scale=np.sqrt(p_noise), size=len(sig))
    return Signal(noisy, sig.sample_rate_hz)


@pytest.fixture(scope="session")
def urban_90s_8k() -> Signal:
    return urban_like_signal(96.0, 8000.0, seed=7)
