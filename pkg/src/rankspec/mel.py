"""Linear-to-mel filterbank, its pseudo-inverse, and the two maps between them.

Conventions follow row-vector application: a magnitude spectrogram ``M``
of shape (T, F) compresses to ``Y = M @ A`` with ``A`` of shape (F, F_m),
and reconstructs as ``Y @ pinv(A)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensorfile
from .stft import MagnitudeSpectrogram

__all__ = [
    "MelError",
    "MelFilterbank",
    "MelSpectrogram",
    "hz_to_mel",
    "mel_to_hz",
    "pseudo_inverse",
    "build_filterbank",
    "linear_to_mel",
    "pinv_reconstruct",
    "mel_to_linear_pinv",
    "log_compress",
    "save_filterbank",
    "load_filterbank",
]


class MelError(ValueError):
    """Invalid filterbank parameters or mismatched dimensions."""


_SLANEY_F_SP = 200.0 / 3
_SLANEY_MIN_LOG_HZ = 1000.0
_SLANEY_MIN_LOG_MEL = _SLANEY_MIN_LOG_HZ / _SLANEY_F_SP
_SLANEY_LOGSTEP = np.log(6.4) / 27.0


def hz_to_mel(f, scale: str = "slaney"):
    f = np.asarray(f, dtype=np.float64)
    if scale == "htk":
        return 2595.0 * np.log10(1.0 + f / 700.0)
    if scale != "slaney":
        raise MelError(f"unknown mel scale {scale!r}")
    linear = f / _SLANEY_F_SP
    with np.errstate(divide="ignore"):
        log = _SLANEY_MIN_LOG_MEL + np.log(np.maximum(f, 1e-300) / _SLANEY_MIN_LOG_HZ) / _SLANEY_LOGSTEP
    return np.where(f >= _SLANEY_MIN_LOG_HZ, log, linear)


def mel_to_hz(m, scale: str = "slaney"):
    m = np.asarray(m, dtype=np.float64)
    if scale == "htk":
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)
    if scale != "slaney":
        raise MelError(f"unknown mel scale {scale!r}")
    linear = _SLANEY_F_SP * m
    log = _SLANEY_MIN_LOG_HZ * np.exp(_SLANEY_LOGSTEP * (m - _SLANEY_MIN_LOG_MEL))
    return np.where(m >= _SLANEY_MIN_LOG_MEL, log, linear)


def pseudo_inverse(a: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudo-inverse via SVD.

    Singular values at or below ``eps * max(a.shape) * sigma_max`` are
    treated as zero.
    """
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(a.shape[::-1])
    tol = np.finfo(a.dtype).eps * max(a.shape) * s[0]
    keep = s > tol
    return (vt[keep].T / s[keep]) @ u[:, keep].T


@dataclass(frozen=True, eq=False)
class MelFilterbank:
    """Immutable filterbank ``A`` (F x F_m) with its cached pseudo-inverse (F_m x F)."""

    matrix_a: np.ndarray
    pinv_a: np.ndarray
    sample_rate_hz: int
    fft_size: int
    n_mels: int
    f_min_hz: float
    f_max_hz: float
    scale: str = "slaney"
    normalized: bool = True

    def __post_init__(self):
        for arr in (self.matrix_a, self.pinv_a):
            arr.setflags(write=False)

    @property
    def n_bins(self) -> int:
        return self.matrix_a.shape[0]

    def to_dict(self) -> dict:
        return {
            "sample_rate_hz": self.sample_rate_hz,
            "fft_size": self.fft_size,
            "n_mels": self.n_mels,
            "f_min_hz": self.f_min_hz,
            "f_max_hz": self.f_max_hz,
            "scale": self.scale,
            "normalized": self.normalized,
        }


def build_filterbank(
    sample_rate_hz: int,
    fft_size: int,
    n_mels: int,
    f_min_hz: float = 0.0,
    f_max_hz: float | None = None,
    scale: str = "slaney",
    normalized: bool = True,
) -> MelFilterbank:
    """Triangular mel filterbank with centers evenly spaced on the mel scale.

    Parameters
    ----------
    sample_rate_hz, fft_size : int
        Determine the ``F = fft_size // 2 + 1`` linear bins.
    n_mels : int
        Number of filters; must be smaller than ``F``.
    f_min_hz, f_max_hz : float
        Band edges. ``f_max_hz`` defaults to Nyquist and may not exceed it.
    scale : {'slaney', 'htk'}
    normalized : bool
        Scale each filter by ``2 / bandwidth`` (slaney area normalization).

    Raises
    ------
    MelError
        On an invalid frequency range or when a filter covers no FFT bin.
    """
    nyquist = sample_rate_hz / 2.0
    if f_max_hz is None:
        f_max_hz = nyquist
    if not 0.0 <= f_min_hz < f_max_hz:
        raise MelError(f"need 0 <= f_min < f_max, got f_min={f_min_hz} f_max={f_max_hz}")
    if f_max_hz > nyquist:
        raise MelError(f"f_max={f_max_hz} Hz exceeds the Nyquist frequency {nyquist} Hz")
    n_bins = fft_size // 2 + 1
    if not 0 < n_mels < n_bins:
        raise MelError(f"n_mels must lie in [1, {n_bins - 1}] for fft_size {fft_size}, got {n_mels}")

    fft_freqs = np.linspace(0.0, nyquist, n_bins)
    mel_pts = np.linspace(hz_to_mel(f_min_hz, scale), hz_to_mel(f_max_hz, scale), n_mels + 2)
    hz_pts = mel_to_hz(mel_pts, scale)
    widths = np.diff(hz_pts)
    ramps = hz_pts[:, None] - fft_freqs[None, :]

    weights = np.zeros((n_mels, n_bins))
    for i in range(n_mels):
        lower = -ramps[i] / widths[i]
        upper = ramps[i + 2] / widths[i + 1]
        weights[i] = np.maximum(0.0, np.minimum(lower, upper))
    if normalized:
        weights *= (2.0 / (hz_pts[2:n_mels + 2] - hz_pts[:n_mels]))[:, None]

    empty = np.flatnonzero(weights.max(axis=1) <= 0.0)
    if empty.size:
        raise MelError(
            f"{empty.size} mel filter(s) cover no FFT bin (first: {empty[0]}); "
            "reduce n_mels or increase fft_size"
        )
    a = np.ascontiguousarray(weights.T)
    return MelFilterbank(
        matrix_a=a,
        pinv_a=np.ascontiguousarray(pseudo_inverse(a)),
        sample_rate_hz=int(sample_rate_hz),
        fft_size=int(fft_size),
        n_mels=int(n_mels),
        f_min_hz=float(f_min_hz),
        f_max_hz=float(f_max_hz),
        scale=scale,
        normalized=bool(normalized),
    )


@dataclass(frozen=True, eq=False)
class MelSpectrogram:
    """T x F_m mel spectrogram tied to the bank that produced it."""

    frames: np.ndarray
    bank: MelFilterbank
    source: MagnitudeSpectrogram | None = None

    def __post_init__(self):
        y = np.asarray(self.frames, dtype=np.float64)
        if y.ndim != 2 or y.shape[1] != self.bank.n_mels:
            raise MelError(f"expected T x {self.bank.n_mels} mel frames, got {y.shape}")
        if not np.all(np.isfinite(y)) or np.any(y < 0):
            raise MelError("mel values must be finite and nonnegative")
        object.__setattr__(self, "frames", y)


def linear_to_mel(mag: MagnitudeSpectrogram, bank: MelFilterbank) -> MelSpectrogram:
    m = mag.frames
    if m.shape[1] != bank.n_bins:
        raise MelError(f"magnitude has {m.shape[1]} bins, filterbank expects {bank.n_bins}")
    # clip guards against -0.0 / rounding below zero; A and M are both nonnegative
    return MelSpectrogram(np.maximum(m @ bank.matrix_a, 0.0), bank, mag)


def pinv_reconstruct(mel: MelSpectrogram) -> np.ndarray:
    """Unclamped linear-scale reconstruction ``Y @ pinv(A)``; may contain negatives."""
    y = mel.frames
    if y.shape[1] != mel.bank.n_mels:
        raise MelError(f"mel has {y.shape[1]} bands, filterbank expects {mel.bank.n_mels}")
    return y @ mel.bank.pinv_a


def mel_to_linear_pinv(mel: MelSpectrogram, config=None, sample_rate_hz=None, n_samples=None) -> MagnitudeSpectrogram:
    """Pseudo-inverse reconstruction with negative values clamped to zero.

    STFT metadata is taken from the magnitude the mel was computed from,
    unless given explicitly.
    """
    src = mel.source
    if config is None:
        if src is None:
            raise MelError("mel spectrogram has no source STFT metadata; pass config explicitly")
        config = src.config
    if sample_rate_hz is None:
        sample_rate_hz = src.sample_rate_hz if src is not None else mel.bank.sample_rate_hz
    if n_samples is None:
        n_samples = src.n_samples if src is not None else 0
    raw = pinv_reconstruct(mel)
    return MagnitudeSpectrogram(np.maximum(raw, 0.0), config, sample_rate_hz, n_samples)


def log_compress(x, floor: float = 1e-5) -> np.ndarray:
    """Natural log of ``max(x, floor)`` elementwise."""
    if not floor > 0:
        raise MelError(f"floor must be positive, got {floor}")
    arr = x.frames if hasattr(x, "frames") else np.asarray(x, dtype=np.float64)
    return np.log(np.maximum(arr, floor))


def save_filterbank(bank: MelFilterbank, path) -> None:
    """Export ``A`` and ``pinv(A)`` as float64 tensors in the RSB1 container."""
    tensorfile.write(
        path,
        {"kind": "mel_filterbank", "filterbank": bank.to_dict()},
        {"matrix_a": bank.matrix_a, "pinv_a": bank.pinv_a},
    )


def load_filterbank(path) -> MelFilterbank:
    header, tensors = tensorfile.read(path)
    if header.get("kind") != "mel_filterbank":
        raise MelError(f"{path} does not hold a mel filterbank")
    p = header["filterbank"]
    return MelFilterbank(
        matrix_a=np.ascontiguousarray(tensors["matrix_a"], dtype=np.float64),
        pinv_a=np.ascontiguousarray(tensors["pinv_a"], dtype=np.float64),
        sample_rate_hz=p["sample_rate_hz"],
        fft_size=p["fft_size"],
        n_mels=p["n_mels"],
        f_min_hz=p["f_min_hz"],
        f_max_hz=p["f_max_hz"],
        scale=p["scale"],
        normalized=p["normalized"],
    )
