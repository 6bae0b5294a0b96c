import math

import numpy as np
import pytest

from rankspec.audio import Waveform
from rankspec.corpus import synth_speech
from rankspec.mel import build_filterbank
from rankspec.metrics import (
    MCD_SCALE,
    MetricError,
    log_spectral_distance,
    mcd,
    mcd_from_cepstra,
    mel_cepstrum,
    si_snr,
    write_reports_jsonl,
    write_summary_csv,
)
from rankspec.stft import MagnitudeSpectrogram, StftConfig, magnitude, stft

from oracles import dct2_ortho, lsd_oracle, mcd_oracle, si_snr_oracle

SR = 16000
CFG = StftConfig(1024, 1024, 256)


def w(x):
    return Waveform(np.asarray(x, dtype=np.float64), SR)


@pytest.fixture(scope="module")
def speech():
    return synth_speech(np.random.default_rng(0), SR, 1.0)


def test_mcd_identity_and_gain(speech):
    assert mcd(speech, speech).value == 0.0
    for g in (1e-3, 0.5, 2.0, 3.7, 100.0):
        assert mcd(speech, w(g * speech.samples)).value <= 1e-9


def test_mcd_matches_oracle():
    r = np.random.default_rng(1)
    for _ in range(3):
        x, y = r.standard_normal(6000), r.standard_normal(6200)
        assert abs(mcd(w(x), w(y)).value - mcd_oracle(x, y)) <= 1e-9


def test_known_band_offset():
    log_mel = np.random.default_rng(2).standard_normal((5, 80))
    delta = np.zeros(80)
    delta[10:30] = 0.7
    per_frame = mcd_from_cepstra(mel_cepstrum(log_mel, 13), mel_cepstrum(log_mel + delta, 13))
    c = dct2_ortho(delta)
    closed = MCD_SCALE * math.sqrt(2 * float(np.sum(c[1:13] ** 2)))
    np.testing.assert_allclose(per_frame, closed, rtol=1e-12)


def test_mcd_report_and_errors(speech):
    rep = mcd(speech, w(np.roll(speech.samples[:-300], 97) * 0.9))
    assert rep.units == "dB" and rep.frames_used >= 1 and rep.value > 0
    assert rep.config["n_cep"] == 13 and "convention" in rep.config
    with pytest.raises(MetricError):
        mcd(w(np.zeros(4000)), w(np.zeros(4000)))
    with pytest.raises(MetricError):
        mcd(speech, speech, rel_floor=0.0)
    with pytest.raises(MetricError):
        mcd(speech, Waveform(speech.samples, 8000))
    with pytest.raises(MetricError):
        mcd(speech, speech, n_mels=10, n_cep=20)


def test_silence_guard():
    r = np.random.default_rng(3)
    x = np.concatenate([np.zeros(8000), r.standard_normal(8000)])
    y = np.concatenate([np.zeros(8000), r.standard_normal(8000)])
    rep = mcd(w(x), w(y))
    n_frames = 1 + 16000 // 256
    assert rep.frames_used < n_frames
    assert abs(rep.value - mcd_oracle(x, y)) <= 1e-9


def test_frame_order_independence(speech):
    m = magnitude(stft(speech, CFG))
    e = m.with_frames(m.frames * np.random.default_rng(4).uniform(0.5, 2, m.frames.shape))
    perm = np.random.default_rng(5).permutation(m.frames.shape[0])
    a = log_spectral_distance(m, e).value
    b = log_spectral_distance(m.with_frames(m.frames[perm]), e.with_frames(e.frames[perm])).value
    assert a == pytest.approx(b, rel=1e-12)


def test_lsd(speech):
    m = magnitude(stft(speech, CFG))
    assert log_spectral_distance(m, m).value == 0.0
    big = np.maximum(m.frames, 1e-3)
    ten = log_spectral_distance(m.with_frames(big), m.with_frames(10 * big))
    assert ten.value == pytest.approx(20.0, abs=1e-9)
    for g in (0.3, 2.0, 5.0):
        assert abs(log_spectral_distance(m.with_frames(g * big), m.with_frames(big)).value
                   - abs(20 * math.log10(g))) <= 1e-9
    r = np.random.default_rng(6)
    a, b = np.abs(r.standard_normal((6, 513))), np.abs(r.standard_normal((6, 513)))
    total = 0.0
    for t in range(6):
        s = 0.0
        for f in range(513):
            d = 20 * math.log10(max(a[t, f], 1e-5) / max(b[t, f], 1e-5))
            s += d * d
        total += math.sqrt(s / 513)
    got = log_spectral_distance(MagnitudeSpectrogram(a, CFG, SR, 0), MagnitudeSpectrogram(b, CFG, SR, 0))
    assert abs(got.value - total / 6) <= 1e-9
    with pytest.raises(MetricError):
        log_spectral_distance(MagnitudeSpectrogram(a, CFG, SR, 0), MagnitudeSpectrogram(b[:3], CFG, SR, 0))


def test_si_snr():
    r = np.random.default_rng(7)
    x = r.standard_normal(1000)
    assert si_snr(w(x), w(x)).value == 100.0
    assert si_snr(w(x), w(2 * x)).value == 100.0
    n = r.standard_normal(1000)
    n -= (n @ x) / (x @ x) * x
    n *= np.linalg.norm(x) / 10 / np.linalg.norm(n)
    assert si_snr(w(x), w(x + n)).value == pytest.approx(20.0, abs=1e-9)
    assert si_snr(w(x), w(3 * (x + n))).value == pytest.approx(20.0, abs=1e-9)
    with pytest.raises(MetricError):
        si_snr(w(np.zeros(10)), w(x[:10]))
    with pytest.raises(MetricError):
        si_snr(w(x), w(x[:-1]))


def test_writers(tmp_path, speech):
    rep = si_snr(speech, speech)
    write_reports_jsonl([("a", rep)], tmp_path / "m.jsonl")
    assert '"clip_id": "a"' in (tmp_path / "m.jsonl").read_text()
    write_summary_csv({"a": {"si_snr": 1.5}}, ["si_snr"], tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines() == ["clip_id,si_snr", "a,1.5"]
