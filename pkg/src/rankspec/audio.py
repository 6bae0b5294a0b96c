"""Mono waveform container and RIFF/WAVE input/output."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

__all__ = [
    "AudioError",
    "Waveform",
    "load_wav",
    "save_wav",
    "resample_linear",
    "peak_normalize",
]


class AudioError(ValueError):
    """Raised for unreadable, unsupported, or degenerate audio."""


@dataclass(frozen=True, eq=False)
class Waveform:
    """Mono float waveform.

    Parameters
    ----------
    samples : array_like, shape (n,)
        Sample values, nominally in [-1, 1]. Stored as float64.
    sample_rate_hz : int
        Sampling rate in Hz, strictly positive.
    """

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise AudioError(f"waveform must be 1-D, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise AudioError("waveform contains non-finite samples")
        rate = int(self.sample_rate_hz)
        if rate <= 0 or rate != self.sample_rate_hz:
            raise AudioError(f"sample rate must be a positive integer, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate_hz", rate)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz


def load_wav(path) -> Waveform:
    """Read a WAV file as a mono float waveform.

    Integer PCM (16/24/32 bit) is scaled by ``2**(bits - 1)``; IEEE float
    data is taken as is. Multi-channel audio is averaged to mono.
    """
    try:
        rate, data = wavfile.read(os.fspath(path))
    except FileNotFoundError:
        raise
    except (ValueError, OSError, EOFError) as exc:
        raise AudioError(f"cannot read {path}: {exc}") from exc

    if data.dtype.kind == "i":
        # scipy returns 24-bit PCM left-justified in int32, so the container
        # width is the right divisor for every integer depth.
        scale = float(2 ** (8 * data.dtype.itemsize - 1))
        x = data.astype(np.float64) / scale
    elif data.dtype.kind == "f":
        x = data.astype(np.float64)
    else:
        raise AudioError(f"unsupported sample format {data.dtype} in {path}")

    if x.ndim == 2:
        x = x.mean(axis=1)
    if x.shape[0] == 0:
        raise AudioError(f"{path} contains no samples")
    if not np.all(np.isfinite(x)):
        raise AudioError(f"{path} contains non-finite samples")
    return Waveform(x, int(rate))


def save_wav(w: Waveform, path, encoding: str = "float32") -> None:
    """Write ``w`` as a mono WAV file.

    ``pcm16`` rounds to the nearest code and clips to [-1, 1 - 2**-15];
    ``float32`` is lossless for values that are representable in float32.
    """
    if len(w) == 0:
        raise AudioError("refusing to write an empty waveform")
    if encoding == "pcm16":
        codes = np.clip(np.round(w.samples * 32768.0), -32768, 32767)
        data = codes.astype("<i2")
    elif encoding == "float32":
        data = w.samples.astype("<f4")
    else:
        raise AudioError(f"unknown encoding {encoding!r}; use 'pcm16' or 'float32'")
    try:
        wavfile.write(os.fspath(path), w.sample_rate_hz, data)
    except OSError as exc:
        raise AudioError(f"cannot write {path}: {exc}") from exc


def resample_linear(w: Waveform, target_rate_hz: int) -> Waveform:
    """Resample by linear interpolation.

    Output sample ``j`` is read at source position ``j * source / target``;
    positions past the last source sample hold the last value. This is a
    low-fidelity utility with no anti-aliasing filter.
    """
    target = int(target_rate_hz)
    if target <= 0:
        raise AudioError(f"target rate must be positive, got {target_rate_hz}")
    source = w.sample_rate_hz
    if target == source:
        return Waveform(w.samples.copy(), source)
    n = len(w)
    # round half up, so [0, 1] at 2 Hz -> 4 Hz gives 4 samples
    n_out = int(np.floor(n * target / source + 0.5))
    pos = np.arange(n_out, dtype=np.float64) * (source / target)
    y = np.interp(pos, np.arange(n, dtype=np.float64), w.samples)
    return Waveform(y, target)


def peak_normalize(w: Waveform, peak: float = 1.0) -> Waveform:
    """Scale ``w`` so that its largest absolute sample equals ``peak``."""
    if not 0.0 < peak <= 1.0:
        raise AudioError(f"peak must lie in (0, 1], got {peak}")
    current = np.max(np.abs(w.samples)) if len(w) else 0.0
    if current == 0.0:
        raise AudioError("cannot peak-normalize an all-zero waveform")
    if current == peak:
        return Waveform(w.samples.copy(), w.sample_rate_hz)
    return Waveform(w.samples * (peak / current), w.sample_rate_hz)
