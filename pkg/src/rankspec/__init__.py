"""Spectrogram rank analysis, degradations and joint-task batch generation."""

__version__ = "0.1.0"

from .audio import Waveform, load_wav, save_wav
from .kernels import BACKEND
from .mel import MelFilterbank, build_filterbank
from .rank import RankConfig, RankReport, thresholded_rank
from .stft import StftConfig, istft, stft

__all__ = [
    "BACKEND",
    "MelFilterbank",
    "RankConfig",
    "RankReport",
    "StftConfig",
    "Waveform",
    "build_filterbank",
    "istft",
    "load_wav",
    "save_wav",
    "stft",
    "thresholded_rank",
]
