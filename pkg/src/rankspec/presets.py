"""Named, versioned analysis configurations."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from types import MappingProxyType

from .mel import MelFilterbank, build_filterbank
from .phase import GriffinLimConfig, DEFAULT_GRIFFIN_LIM
from .stft import StftConfig

__all__ = ["Preset", "PRESETS", "get_preset"]


@dataclass(frozen=True)
class Preset:
    name: str
    version: int
    sample_rate_hz: int
    stft: StftConfig
    mel_bands: tuple
    f_min_hz: float
    f_max_hz: float | None
    mel_scale: str
    mel_normalized: bool
    eta: float
    griffin_lim: GriffinLimConfig
    notes: str = ""

    def filterbank(self, n_mels: int | None = None) -> MelFilterbank:
        return build_filterbank(
            self.sample_rate_hz,
            self.stft.fft_size,
            n_mels if n_mels is not None else self.mel_bands[-1],
            self.f_min_hz,
            self.f_max_hz,
            self.mel_scale,
            self.mel_normalized,
        )

    def to_dict(self) -> dict:
        return asdict(self)


_PRESETS = {
    "fig2-16k": Preset(
        name="fig2-16k",
        version=1,
        sample_rate_hz=16000,
        # 32 ms Hann window, hop of 24 ms
        stft=StftConfig(fft_size=512, win_length=512, hop_length=384, window="hann", center=True),
        mel_bands=(60, 80),
        f_min_hz=0.0,
        f_max_hz=None,
        mel_scale="slaney",
        mel_normalized=True,
        eta=0.5,
        griffin_lim=DEFAULT_GRIFFIN_LIM,
        notes="rank-difference analysis at 16 kHz; 257 linear bins; eta absolute",
    ),
    "vocoder-24k": Preset(
        name="vocoder-24k",
        version=1,
        sample_rate_hz=24000,
        stft=StftConfig(fft_size=1024, win_length=1024, hop_length=256, window="hann", center=True),
        mel_bands=(80,),
        f_min_hz=0.0,
        # a 16 kHz cutoff exceeds Nyquist at 24 kHz, so the band ends at Nyquist
        f_max_hz=None,
        mel_scale="slaney",
        mel_normalized=True,
        eta=0.5,
        griffin_lim=DEFAULT_GRIFFIN_LIM,
        notes="vocoder feature extraction; f_max capped at Nyquist (12 kHz)",
    ),
}

PRESETS = MappingProxyType(_PRESETS)


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None
