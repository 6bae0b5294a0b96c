"""Additive-noise and mel-compression degradations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import Waveform
from .mel import MelFilterbank, linear_to_mel, mel_to_linear_pinv
from .stft import StftConfig, magnitude, stft

__all__ = [
    "DegradationError",
    "NoiseMixSpec",
    "HEAVY_NOISE_MULTIPLIER",
    "fit_noise",
    "mix_at_snr",
    "vocoding_degrade",
    "measured_snr",
]

# heavy condition: noise amplitude scaled by five relative to mild
HEAVY_NOISE_MULTIPLIER = 5.0


class DegradationError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseMixSpec:
    snr_db: float
    noise_gain_multiplier: float = 1.0

    def __post_init__(self):
        if not self.noise_gain_multiplier > 0:
            raise DegradationError(f"noise_gain_multiplier must be positive, got {self.noise_gain_multiplier}")


def _power(x: np.ndarray) -> float:
    return float(np.mean(x * x)) if x.size else 0.0


def fit_noise(noise: np.ndarray, length: int, rng: np.random.Generator) -> np.ndarray:
    """Return exactly ``length`` noise samples.

    Shorter noise is tiled circularly from a random offset; longer noise
    contributes a random contiguous segment. Equal lengths draw nothing.
    """
    n = noise.shape[0]
    if n == 0:
        raise DegradationError("noise has no samples")
    if n == length:
        return noise.copy()
    if n < length:
        offset = int(rng.integers(n))
        return noise[(offset + np.arange(length)) % n]
    start = int(rng.integers(n - length + 1))
    return noise[start:start + length].copy()


def mix_at_snr(s: Waveform, n: Waveform, spec: NoiseMixSpec, rng: np.random.Generator):
    """Mix ``s + g * n'`` so that ``s`` over ``n'`` sits at ``spec.snr_db``.

    ``g = sqrt(P_s / (P_n' * 10**(snr / 10))) * multiplier``, powers being
    mean squares over the clip. Returns ``(mixture, g)``.
    """
    if s.sample_rate_hz != n.sample_rate_hz:
        raise DegradationError(f"sample rates differ: speech {s.sample_rate_hz} Hz, noise {n.sample_rate_hz} Hz")
    p_s = _power(s.samples)
    if p_s == 0.0:
        raise DegradationError("speech has zero energy")
    n_fit = fit_noise(n.samples, len(s), rng)
    p_n = _power(n_fit)
    if p_n == 0.0:
        raise DegradationError("noise segment has zero energy")
    g = np.sqrt(p_s / (p_n * 10.0 ** (spec.snr_db / 10.0))) * spec.noise_gain_multiplier
    return Waveform(s.samples + g * n_fit, s.sample_rate_hz), float(g)


def vocoding_degrade(s: Waveform, bank: MelFilterbank, cfg: StftConfig):
    """Mel-compress ``s`` and map back with the pseudo-inverse.

    Returns ``(y_hat, mel)`` where ``y_hat`` is the clamped linear-scale
    magnitude.
    """
    if bank.fft_size != cfg.fft_size:
        raise DegradationError(f"filterbank fft_size {bank.fft_size} != stft fft_size {cfg.fft_size}")
    mel = linear_to_mel(magnitude(stft(s, cfg)), bank)
    return mel_to_linear_pinv(mel), mel


def measured_snr(s: Waveform, residual: Waveform) -> float:
    """``10 * log10(sum(s**2) / sum(residual**2))`` in dB."""
    a = s.samples if isinstance(s, Waveform) else np.asarray(s, dtype=np.float64)
    b = residual.samples if isinstance(residual, Waveform) else np.asarray(residual, dtype=np.float64)
    if a.shape != b.shape:
        raise DegradationError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    e_s, e_r = float(np.sum(a * a)), float(np.sum(b * b))
    if e_s == 0.0 or e_r == 0.0:
        raise DegradationError("measured_snr needs nonzero energy in both signals")
    return 10.0 * np.log10(e_s / e_r)
