"""Objective metrics computable without external models."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.fft import dct

from .audio import Waveform
from .mel import build_filterbank, linear_to_mel
from .stft import MagnitudeSpectrogram, StftConfig, magnitude, stft

__all__ = [
    "MetricError",
    "MetricReport",
    "MCD_SCALE",
    "mel_cepstrum",
    "mcd",
    "mcd_from_cepstra",
    "log_spectral_distance",
    "si_snr",
    "write_reports_jsonl",
    "write_summary_csv",
]

MCD_SCALE = 10.0 / np.log(10.0)
SI_SNR_CAP_DB = 100.0


class MetricError(ValueError):
    pass


@dataclass
class MetricReport:
    name: str
    value: float
    units: str
    frames_used: int
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def mel_cepstrum(log_mel: np.ndarray, n_cep: int) -> np.ndarray:
    """Orthonormal DCT-II over the mel axis, first ``n_cep`` coefficients."""
    return dct(log_mel, type=2, norm="ortho", axis=-1)[..., :n_cep]


def mcd_from_cepstra(c_ref: np.ndarray, c_est: np.ndarray) -> np.ndarray:
    """Per-frame MCD in dB, ignoring coefficient 0."""
    d = c_ref[:, 1:] - c_est[:, 1:]
    return MCD_SCALE * np.sqrt(2.0 * np.sum(d * d, axis=1))


def mcd(ref: Waveform, est: Waveform, n_mels: int = 80, n_cep: int = 13,
        cfg: StftConfig | None = None, rel_floor: float = 1e-5) -> MetricReport:
    """Mel-cepstral distortion averaged over frames.

    The longer signal is truncated to the shorter. Each signal's mel
    spectrum is floored at ``rel_floor`` times its own peak mel value, so a
    global gain only shifts the log-mel by a constant and stays in the
    dropped coefficient 0. Frames where both signals sit at their floor in
    every band are skipped.
    """
    if ref.sample_rate_hz != est.sample_rate_hz:
        raise MetricError(f"sample rates differ: {ref.sample_rate_hz} vs {est.sample_rate_hz}")
    if not 1 <= n_cep <= n_mels:
        raise MetricError(f"need 1 <= n_cep <= n_mels, got n_cep={n_cep} n_mels={n_mels}")
    if not 0 < rel_floor < 1:
        raise MetricError(f"rel_floor must lie in (0, 1), got {rel_floor}")
    cfg = cfg or StftConfig(1024, 1024, 256)
    n = min(len(ref), len(est))
    bank = build_filterbank(ref.sample_rate_hz, cfg.fft_size, n_mels)
    mels, floors = [], []
    for w in (ref, est):
        seg = Waveform(w.samples[:n], w.sample_rate_hz)
        m = linear_to_mel(magnitude(stft(seg, cfg)), bank).frames
        peak = float(m.max())
        if peak == 0.0:
            raise MetricError("a signal is silent in every frame")
        mels.append(m)
        floors.append(rel_floor * peak)
    active = ~np.all((mels[0] <= floors[0]) & (mels[1] <= floors[1]), axis=1)
    cep = [mel_cepstrum(np.log(np.maximum(m[active], f)), n_cep) for m, f in zip(mels, floors)]
    per_frame = mcd_from_cepstra(*cep)
    return MetricReport(
        name="mcd",
        value=float(per_frame.mean()),
        units="dB",
        frames_used=int(active.sum()),
        config={"n_mels": n_mels, "n_cep": n_cep, "rel_floor": rel_floor, "stft": cfg.to_dict(),
                "convention": "10/ln10*sqrt(2*sum_{d>=1} dc^2), ortho DCT-II of ln mel"},
    )


def log_spectral_distance(ref_mag: MagnitudeSpectrogram, est_mag: MagnitudeSpectrogram,
                          floor: float = 1e-5) -> MetricReport:
    """Frame-averaged RMS (over bins) of the dB difference between two magnitudes."""
    a = ref_mag.frames if hasattr(ref_mag, "frames") else np.asarray(ref_mag, dtype=np.float64)
    b = est_mag.frames if hasattr(est_mag, "frames") else np.asarray(est_mag, dtype=np.float64)
    if a.shape != b.shape:
        raise MetricError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.shape[0] < 1:
        raise MetricError("no frames")
    db = 20.0 * np.log10(np.maximum(a, floor) / np.maximum(b, floor))
    per_frame = np.sqrt(np.mean(db * db, axis=1))
    return MetricReport("lsd", float(per_frame.mean()), "dB", int(a.shape[0]), {"floor": floor})


def si_snr(ref: Waveform, est: Waveform, cap_db: float = SI_SNR_CAP_DB) -> MetricReport:
    """Scale-invariant SNR of ``est`` against ``ref``, capped at ``cap_db``."""
    r = ref.samples if isinstance(ref, Waveform) else np.asarray(ref, dtype=np.float64)
    e = est.samples if isinstance(est, Waveform) else np.asarray(est, dtype=np.float64)
    if r.shape != e.shape:
        raise MetricError(f"length mismatch: {r.shape[0]} vs {e.shape[0]}")
    rr = float(r @ r)
    if rr == 0.0:
        raise MetricError("reference has zero energy")
    target = (float(e @ r) / rr) * r
    err = e - target
    num, den = float(target @ target), float(err @ err)
    if den == 0.0:
        value = cap_db
    elif num == 0.0:
        value = -cap_db
    else:
        value = float(np.clip(10.0 * np.log10(num / den), -cap_db, cap_db))
    return MetricReport("si_snr", value, "dB", int(r.shape[0]), {"cap_db": cap_db, "frames_are": "samples"})


def write_reports_jsonl(rows, path) -> None:
    """``rows`` are ``(clip_id, MetricReport)`` pairs."""
    with open(path, "w", encoding="utf-8") as fh:
        for clip_id, rep in rows:
            fh.write(json.dumps({"clip_id": clip_id, **rep.to_dict()}, sort_keys=True) + "\n")


def write_summary_csv(table: dict, metric_names, path) -> None:
    """``table`` maps clip id -> {metric name: value}."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["clip_id", *metric_names])
        for clip_id, values in table.items():
            w.writerow([clip_id, *(repr(values[m]) for m in metric_names)])
