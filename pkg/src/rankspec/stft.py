"""Short-time Fourier transform with least-squares overlap-add inverse."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .audio import Waveform

__all__ = [
    "StftError",
    "StftConfig",
    "ComplexSpectrogram",
    "MagnitudeSpectrogram",
    "make_window",
    "stft",
    "istft",
    "magnitude",
    "phase",
    "n_frames_for",
    "frame_spectra",
    "overlap_add_spectra",
]

NOLA_TOL = 1e-8


class StftError(ValueError):
    """Invalid STFT configuration or input."""


def make_window(kind: str, length: int) -> np.ndarray:
    """Return a periodic Hann or rectangular window of ``length`` samples.

    >>> make_window("hann", 4)
    array([0. , 0.5, 1. , 0.5])
    """
    if length < 1:
        raise StftError(f"window length must be >= 1, got {length}")
    if kind == "hann":
        i = np.arange(length, dtype=np.float64)
        return 0.5 * (1.0 - np.cos(2.0 * np.pi * i / length))
    if kind == "rectangular":
        return np.ones(length, dtype=np.float64)
    raise StftError(f"unknown window kind {kind!r}")


@dataclass(frozen=True)
class StftConfig:
    """Framing parameters.

    Construction fails unless ``0 < hop_length <= win_length <= fft_size``
    and the squared window satisfies the nonzero overlap-add condition.
    """

    fft_size: int = 1024
    win_length: int = 1024
    hop_length: int = 256
    window: str = "hann"
    center: bool = True

    def __post_init__(self):
        if not 0 < self.hop_length <= self.win_length <= self.fft_size:
            raise StftError(
                "need 0 < hop_length <= win_length <= fft_size, got "
                f"hop={self.hop_length} win={self.win_length} fft={self.fft_size}"
            )
        if self.fft_size % 2:
            raise StftError(f"fft_size must be even, got {self.fft_size}")
        w2 = self.window_array() ** 2
        # steady-state sum of squared shifted windows, one hop period
        period = np.zeros(self.hop_length)
        for start in range(0, self.win_length, self.hop_length):
            chunk = w2[start:start + self.hop_length]
            period[:chunk.shape[0]] += chunk
        if period.min() < NOLA_TOL:
            raise StftError(
                f"window {self.window!r} of length {self.win_length} with hop "
                f"{self.hop_length} violates the NOLA condition"
            )

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def pad(self) -> int:
        return self.fft_size // 2 if self.center else 0

    def window_array(self) -> np.ndarray:
        return make_window(self.window, self.win_length)

    def to_dict(self) -> dict:
        return asdict(self)


def n_frames_for(n_samples: int, cfg: StftConfig) -> int:
    """Number of frames produced by :func:`stft` for a signal of ``n_samples``."""
    padded = n_samples + 2 * cfg.pad
    if padded < cfg.win_length:
        raise StftError(
            f"signal of {n_samples} samples is shorter than one frame "
            f"({cfg.win_length} samples after padding)"
        )
    return 1 + (padded - cfg.win_length) // cfg.hop_length


@dataclass(frozen=True, eq=False)
class ComplexSpectrogram:
    """T x F one-sided complex STFT plus the metadata needed to invert it."""

    frames: np.ndarray
    config: StftConfig
    sample_rate_hz: int
    n_samples: int

    def __post_init__(self):
        z = np.asarray(self.frames, dtype=np.complex128)
        if z.ndim != 2 or z.shape[1] != self.config.n_bins:
            raise StftError(f"expected T x {self.config.n_bins} frames, got {z.shape}")
        if not np.all(np.isfinite(z)):
            raise StftError("spectrogram contains non-finite entries")
        object.__setattr__(self, "frames", z)

    @property
    def shape(self):
        return self.frames.shape


@dataclass(frozen=True, eq=False)
class MagnitudeSpectrogram:
    """T x F nonnegative magnitude spectrogram."""

    frames: np.ndarray
    config: StftConfig
    sample_rate_hz: int
    n_samples: int

    def __post_init__(self):
        m = np.asarray(self.frames, dtype=np.float64)
        if m.ndim != 2 or m.shape[1] != self.config.n_bins:
            raise StftError(f"expected T x {self.config.n_bins} frames, got {m.shape}")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise StftError("magnitudes must be finite and nonnegative")
        object.__setattr__(self, "frames", m)

    @property
    def shape(self):
        return self.frames.shape

    def with_frames(self, frames) -> "MagnitudeSpectrogram":
        return MagnitudeSpectrogram(frames, self.config, self.sample_rate_hz, self.n_samples)


def frame_spectra(x_padded: np.ndarray, cfg: StftConfig, n_frames: int | None = None) -> np.ndarray:
    """Forward transform of an already padded signal, no further padding."""
    if n_frames is None:
        n_frames = 1 + (x_padded.shape[0] - cfg.win_length) // cfg.hop_length
    frames = kernels.frame_signal(
        np.ascontiguousarray(x_padded, dtype=np.float64), cfg.window_array(), cfg.hop_length, n_frames
    )
    return np.fft.rfft(frames, n=cfg.fft_size, axis=1)


def overlap_add_spectra(z: np.ndarray, cfg: StftConfig) -> np.ndarray:
    """Least-squares inverse of :func:`frame_spectra` on the padded domain.

    Returns ``(T - 1) * hop + win_length`` samples. Samples whose squared
    window sum is exactly zero are not constrained by any frame and are
    left at zero.
    """
    n_frames = z.shape[0]
    length = (n_frames - 1) * cfg.hop_length + cfg.win_length if n_frames else 0
    window = cfg.window_array()
    seg = np.fft.irfft(z, n=cfg.fft_size, axis=1)[:, :cfg.win_length]
    y = kernels.overlap_add(np.ascontiguousarray(seg), window, cfg.hop_length, length)
    denom = kernels.window_sumsquare(window, n_frames, cfg.hop_length, length)
    ok = denom > np.finfo(np.float64).tiny
    y[ok] /= denom[ok]
    return y


def stft(w: Waveform, cfg: StftConfig) -> ComplexSpectrogram:
    """Frame, window, zero-pad to ``fft_size`` and transform ``w``.

    Frame ``t`` covers padded samples ``[t * hop, t * hop + win_length)``.
    With ``cfg.center`` the signal is first reflect-padded by
    ``fft_size // 2`` on both sides.
    """
    x = w.samples
    n_frames = n_frames_for(x.shape[0], cfg)
    if cfg.pad:
        mode = "reflect" if x.shape[0] > 1 else "edge"
        x = np.pad(x, cfg.pad, mode=mode)
    z = frame_spectra(x, cfg, n_frames)
    return ComplexSpectrogram(z, cfg, w.sample_rate_hz, len(w))


def istft(spec, cfg: StftConfig | None = None, length: int | None = None) -> Waveform:
    """Invert a complex spectrogram by window-squared-normalized overlap-add.

    Parameters
    ----------
    spec : ComplexSpectrogram
    cfg : StftConfig, optional
        Defaults to ``spec.config``.
    length : int, optional
        Output length in samples; defaults to the analysed signal length.
        The result is truncated or zero-padded to this length.
    """
    cfg = cfg or spec.config
    if spec.frames.shape[1] != cfg.n_bins:
        raise StftError(f"spectrogram has {spec.frames.shape[1]} bins, config expects {cfg.n_bins}")
    if length is None:
        length = spec.n_samples
    y = overlap_add_spectra(spec.frames, cfg)
    y = y[cfg.pad:]
    if y.shape[0] >= length:
        y = y[:length]
    else:
        y = np.concatenate([y, np.zeros(length - y.shape[0])])
    return Waveform(y, spec.sample_rate_hz)


def magnitude(spec: ComplexSpectrogram) -> MagnitudeSpectrogram:
    return MagnitudeSpectrogram(np.abs(spec.frames), spec.config, spec.sample_rate_hz, spec.n_samples)


def phase(spec) -> np.ndarray:
    """Elementwise argument in (-pi, pi]; the argument of 0 is 0."""
    z = spec.frames if hasattr(spec, "frames") else np.asarray(spec)
    phi = np.angle(z)
    phi[phi <= -np.pi] += 2.0 * np.pi
    return phi
