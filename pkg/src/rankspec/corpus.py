"""Synthetic speech-like and noise corpora for offline testing and demos.

The speech generator is a crude source-filter model: a glottal pulse train
with a gliding F0 shaped by three formant resonators, interleaved with
fricative bursts and silent gaps. It is not meant to sound natural; it
reproduces the spectral structure that matters for rank statistics
(harmonic, low-rank voiced frames separated by silence).
"""

from __future__ import annotations

import os

import numpy as np
from scipy import signal

from .audio import Waveform, save_wav

__all__ = ["synth_speech", "synth_noise", "NOISE_KINDS", "harmonic_signal", "write_corpus"]

# (F1, F2, F3) in Hz for a handful of vowels
_VOWELS = np.array([
    (730, 1090, 2440),
    (270, 2290, 3010),
    (300, 870, 2240),
    (530, 1840, 2480),
    (570, 840, 2410),
    (660, 1720, 2410),
    (440, 1020, 2240),
])

NOISE_KINDS = ("white", "pink", "brown", "babble", "hum", "modulated", "bandpass", "impulsive")


def _resonator(x, freq, bw, sr):
    r = np.exp(-np.pi * bw / sr)
    theta = 2 * np.pi * freq / sr
    a = [1.0, -2 * r * np.cos(theta), r * r]
    b = [1.0 - r]
    return signal.lfilter(b, a, x)


def _envelope(n, sr, ramp_s=0.02):
    env = np.ones(n)
    k = min(int(ramp_s * sr), n // 2)
    if k > 0:
        ramp = 0.5 * (1 - np.cos(np.pi * np.arange(k) / k))
        env[:k] = ramp
        env[-k:] = ramp[::-1]
    return env


def _voiced(rng, n, sr):
    f0_start = rng.uniform(90, 240)
    f0 = np.linspace(f0_start, f0_start * rng.uniform(0.8, 1.25), n)
    ph = np.cumsum(f0 / sr)
    pulses = np.diff(np.floor(ph), prepend=0.0)
    # two-pole lowpass approximates the glottal spectral tilt
    src = signal.lfilter([1.0], [1.0, -1.6, 0.64], pulses)
    f1, f2, f3 = _VOWELS[rng.integers(len(_VOWELS))] * rng.uniform(0.9, 1.1)
    y = _resonator(src, f1, 80, sr) + 0.6 * _resonator(src, f2, 100, sr) + 0.3 * _resonator(src, f3, 120, sr)
    return y * _envelope(n, sr)


def _fricative(rng, n, sr):
    lo = min(rng.uniform(2500, 4000), 0.8 * sr / 2)
    hi = min(lo + rng.uniform(1500, 3000), 0.95 * sr / 2)
    sos = signal.butter(4, [lo, hi], btype="band", fs=sr, output="sos")
    return signal.sosfilt(sos, rng.standard_normal(n)) * _envelope(n, sr, 0.01)


def synth_speech(rng: np.random.Generator, sample_rate_hz: int = 16000, duration_s: float | None = None) -> Waveform:
    """One utterance of synthetic speech, peak level drawn from [0.3, 0.9]."""
    sr = sample_rate_hz
    if duration_s is None:
        duration_s = rng.uniform(2.0, 4.0)
    total = int(duration_s * sr)
    out = np.zeros(total)
    pos = int(rng.uniform(0.05, 0.25) * sr)
    while pos < total - int(0.15 * sr):
        for _ in range(rng.integers(1, 4)):
            if rng.random() < 0.3:
                n = int(rng.uniform(0.04, 0.12) * sr)
                seg = 0.15 * _fricative(rng, n, sr)
            else:
                n = int(rng.uniform(0.08, 0.25) * sr)
                seg = _voiced(rng, n, sr)
                seg /= np.max(np.abs(seg)) + 1e-12
                seg *= rng.uniform(0.4, 1.0)
            end = min(pos + n, total)
            out[pos:end] += seg[:end - pos]
            pos = end
        pos += int(rng.uniform(0.05, 0.3) * sr)
    # low-level floor keeps silences from being exactly zero
    out += 1e-5 * rng.standard_normal(total)
    out *= rng.uniform(0.3, 0.9) / np.max(np.abs(out))
    return Waveform(out, sr)


def _colored(rng, n, exponent):
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.arange(spec.shape[0], dtype=np.float64)
    f[0] = 1.0
    return np.fft.irfft(spec / f ** (exponent / 2.0), n=n)


def synth_noise(rng: np.random.Generator, kind: str, sample_rate_hz: int = 16000, duration_s: float = 3.0) -> Waveform:
    """Noise clip of a given ``kind`` (see ``NOISE_KINDS``), peak 0.5."""
    sr = sample_rate_hz
    n = int(duration_s * sr)
    t = np.arange(n) / sr
    if kind == "white":
        x = rng.standard_normal(n)
    elif kind == "pink":
        x = _colored(rng, n, 1.0)
    elif kind == "brown":
        x = _colored(rng, n, 2.0)
    elif kind == "babble":
        x = sum(synth_speech(rng, sr, duration_s).samples for _ in range(5))
    elif kind == "hum":
        base = rng.uniform(50, 120)
        x = sum(np.sin(2 * np.pi * k * base * t + rng.uniform(0, 2 * np.pi)) / k for k in range(1, 8))
        x = x + 0.3 * rng.standard_normal(n)
    elif kind == "modulated":
        x = _colored(rng, n, 1.0) * (1.0 + 0.8 * np.sin(2 * np.pi * rng.uniform(0.5, 4) * t))
    elif kind == "bandpass":
        lo = rng.uniform(200, 1500)
        sos = signal.butter(4, [lo, lo * rng.uniform(1.5, 3.0)], btype="band", fs=sr, output="sos")
        x = signal.sosfilt(sos, rng.standard_normal(n))
    elif kind == "impulsive":
        x = 0.1 * rng.standard_normal(n)
        hits = rng.integers(0, n, size=int(duration_s * 8))
        x[hits] += rng.uniform(-5, 5, size=hits.shape[0])
        x = _resonator(x, rng.uniform(500, 3000), 300, sr)
    else:
        raise ValueError(f"unknown noise kind {kind!r}")
    x = np.asarray(x, dtype=np.float64)
    return Waveform(0.5 * x / np.max(np.abs(x)), sr)


def harmonic_signal(rng: np.random.Generator, sample_rate_hz: int = 16000, duration_s: float = 1.0,
                    n_partials: int = 8) -> Waveform:
    """Sum of decaying harmonics of a random fundamental, used as a phase-retrieval probe."""
    sr = sample_rate_hz
    t = np.arange(int(duration_s * sr)) / sr
    f0 = rng.uniform(110, 330)
    x = np.zeros_like(t)
    for k in range(1, n_partials + 1):
        if k * f0 >= 0.45 * sr:
            break
        x += np.sin(2 * np.pi * k * f0 * t + rng.uniform(0, 2 * np.pi)) / k
    x *= _envelope(t.shape[0], sr, 0.05)
    return Waveform(0.8 * x / np.max(np.abs(x)), sr)


def write_corpus(directory, n_speech: int = 50, n_noise: int = 10, sample_rate_hz: int = 16000,
                 seed: int = 0, encoding: str = "float32"):
    """Write a synthetic corpus plus ``speech.txt`` / ``noise.txt`` manifests.

    Returns the two manifest paths.
    """
    os.makedirs(directory, exist_ok=True)
    rng = np.random.default_rng(seed)
    speech_paths, noise_paths = [], []
    for i in range(n_speech):
        p = os.path.join(directory, f"speech_{i:04d}.wav")
        save_wav(synth_speech(rng, sample_rate_hz), p, encoding)
        speech_paths.append(os.path.basename(p))
    for i in range(n_noise):
        kind = NOISE_KINDS[i % len(NOISE_KINDS)]
        p = os.path.join(directory, f"noise_{i:04d}_{kind}.wav")
        save_wav(synth_noise(rng, kind, sample_rate_hz, rng.uniform(2.0, 5.0)), p, encoding)
        noise_paths.append(os.path.basename(p))
    speech_manifest = os.path.join(directory, "speech.txt")
    noise_manifest = os.path.join(directory, "noise.txt")
    with open(speech_manifest, "w") as fh:
        fh.write("\n".join(speech_paths) + "\n")
    with open(noise_manifest, "w") as fh:
        fh.write("\n".join(noise_paths) + "\n")
    return speech_manifest, noise_manifest
