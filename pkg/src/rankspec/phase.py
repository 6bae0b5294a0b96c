"""Proxy phases (zero, random, Griffin-Lim) and proxy waveform synthesis."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .audio import Waveform
from .stft import (
    ComplexSpectrogram,
    MagnitudeSpectrogram,
    StftConfig,
    frame_spectra,
    istft,
    overlap_add_spectra,
)

__all__ = [
    "GriffinLimConfig",
    "ProxyPhase",
    "DEFAULT_GRIFFIN_LIM",
    "spectral_weights",
    "spectral_convergence",
    "random_phase",
    "griffin_lim",
    "make_proxy_phase",
    "synthesize_proxy_waveform",
]


@dataclass(frozen=True)
class GriffinLimConfig:
    """``iterations`` projections from a ``'zero'`` or ``'random'`` start.

    ``momentum > 0`` enables the fast (accelerated) variant.
    """

    iterations: int = 32
    init: str = "random"
    seed: int = 0
    momentum: float = 0.0

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.init not in ("zero", "random"):
            raise ValueError(f"init must be 'zero' or 'random', got {self.init!r}")


DEFAULT_GRIFFIN_LIM = GriffinLimConfig(iterations=32)


@dataclass(frozen=True)
class ProxyPhase:
    kind: str = "griffin_lim"
    seed: int = 0
    griffin_lim: GriffinLimConfig = field(default_factory=GriffinLimConfig)

    def __post_init__(self):
        if self.kind not in ("zero", "random", "griffin_lim"):
            raise ValueError(f"unknown proxy phase kind {self.kind!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ProxyPhase":
        return cls(kind=d["kind"], seed=d.get("seed", 0), griffin_lim=GriffinLimConfig(**d.get("griffin_lim", {})))


def spectral_weights(n_bins: int) -> np.ndarray:
    """Per-bin weights that turn a one-sided norm into the two-sided one.

    Interior bins stand for a conjugate pair and count twice; DC and Nyquist
    count once. Under this norm the STFT/iSTFT round trip is an orthogonal
    projection, which is what makes Griffin-Lim monotone.
    """
    w = np.full(n_bins, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w


def spectral_convergence(estimate: np.ndarray, target: np.ndarray) -> float:
    """``||estimate - target|| / ||target||`` in the two-sided Frobenius norm."""
    w = spectral_weights(target.shape[1])
    den = np.sqrt(np.sum(w * target * target))
    if den == 0.0:
        return 0.0
    d = estimate - target
    return float(np.sqrt(np.sum(w * d * d)) / den)


def random_phase(shape, seed: int) -> np.ndarray:
    """I.i.d. uniform phases on (-pi, pi]."""
    rng = np.random.default_rng(seed)
    return np.pi - rng.uniform(0.0, 2.0 * np.pi, size=shape)


def _angle(z: np.ndarray) -> np.ndarray:
    phi = np.angle(z)
    phi[phi <= -np.pi] += 2.0 * np.pi
    return phi


def griffin_lim(mag: MagnitudeSpectrogram, cfg: GriffinLimConfig = DEFAULT_GRIFFIN_LIM,
                stft_cfg: StftConfig | None = None, init_phase: np.ndarray | None = None):
    """Estimate a phase consistent with ``mag`` by alternating projections.

    Iterations run on the padded signal domain so each round trip is an
    exact projection onto the set of consistent spectrograms.

    Parameters
    ----------
    mag : MagnitudeSpectrogram
    cfg : GriffinLimConfig
    stft_cfg : StftConfig, optional
        Defaults to ``mag.config``.
    init_phase : ndarray, optional
        Overrides ``cfg.init`` with an explicit starting phase.

    Returns
    -------
    phase : ndarray, shape (T, F)
    sc_errors : list of float
        Spectral convergence after each projection, ``cfg.iterations`` long.
    """
    stft_cfg = stft_cfg or mag.config
    target = mag.frames
    if target.shape[1] != stft_cfg.n_bins:
        raise ValueError(f"magnitude has {target.shape[1]} bins, config expects {stft_cfg.n_bins}")
    if init_phase is not None:
        phi = np.array(init_phase, dtype=np.float64)
    elif cfg.init == "random":
        phi = random_phase(target.shape, cfg.seed)
    else:
        phi = np.zeros(target.shape)

    n_frames = target.shape[0]
    errors = []
    prev = None
    for _ in range(cfg.iterations):
        c = target * np.exp(1j * phi)
        proj = frame_spectra(overlap_add_spectra(c, stft_cfg), stft_cfg, n_frames)
        errors.append(spectral_convergence(np.abs(proj), target))
        if cfg.momentum and prev is not None:
            step = proj + cfg.momentum * (proj - prev)
        else:
            step = proj
        prev = proj
        phi = _angle(step)
    return phi, errors


def make_proxy_phase(mag: MagnitudeSpectrogram, kind: ProxyPhase, stft_cfg: StftConfig | None = None) -> np.ndarray:
    if kind.kind == "zero":
        return np.zeros(mag.frames.shape)
    if kind.kind == "random":
        return random_phase(mag.frames.shape, kind.seed)
    phi, _ = griffin_lim(mag, kind.griffin_lim, stft_cfg)
    return phi


def synthesize_proxy_waveform(y_hat: MagnitudeSpectrogram, kind: ProxyPhase,
                              stft_cfg: StftConfig | None = None, length: int | None = None) -> Waveform:
    """Inverse STFT of ``y_hat`` combined with a proxy phase."""
    stft_cfg = stft_cfg or y_hat.config
    phi = make_proxy_phase(y_hat, kind, stft_cfg)
    spec = ComplexSpectrogram(y_hat.frames * np.exp(1j * phi), stft_cfg, y_hat.sample_rate_hz, y_hat.n_samples)
    return istft(spec, stft_cfg, length)
