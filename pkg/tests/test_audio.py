import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.io import wavfile

from rankspec.audio import AudioError, Waveform, load_wav, peak_normalize, resample_linear, save_wav


def test_waveform_rejects_bad_values():
    with pytest.raises(AudioError):
        Waveform(np.array([0.0, np.nan]), 16000)
    with pytest.raises(AudioError):
        Waveform(np.zeros(4), 0)
    with pytest.raises(AudioError):
        Waveform(np.zeros((2, 2)), 16000)


def test_pcm16_single_sample(tmp_path):
    p = tmp_path / "a.wav"
    wavfile.write(p, 8000, np.array([16384], dtype=np.int16))
    w = load_wav(p)
    assert w.sample_rate_hz == 8000
    np.testing.assert_array_equal(w.samples, [0.5])


def test_pcm16_zeros(tmp_path):
    p = tmp_path / "z.wav"
    wavfile.write(p, 16000, np.zeros(100, dtype=np.int16))
    w = load_wav(p)
    assert w.sample_rate_hz == 16000 and np.all(w.samples == 0.0)


def test_stereo_is_averaged(tmp_path):
    p = tmp_path / "s.wav"
    wavfile.write(p, 16000, np.array([[16384, -16384]] * 3, dtype=np.int16))
    np.testing.assert_array_equal(load_wav(p).samples, [0.0, 0.0, 0.0])


def test_pcm32_and_float32(tmp_path):
    p = tmp_path / "i32.wav"
    wavfile.write(p, 16000, np.array([2 ** 30, -2 ** 31], dtype=np.int32))
    np.testing.assert_array_equal(load_wav(p).samples, [0.5, -1.0])
    q = tmp_path / "f.wav"
    wavfile.write(q, 16000, np.array([0.25, -0.75], dtype=np.float32))
    np.testing.assert_array_equal(load_wav(q).samples, [0.25, -0.75])


def test_pcm24(tmp_path):
    # hand-built 24-bit PCM file with codes 2^22 and -2^23
    data = b"".join(int(v).to_bytes(3, "little", signed=True) for v in (2 ** 22, -2 ** 23))
    fmt = (1).to_bytes(2, "little") + (1).to_bytes(2, "little") + (16000).to_bytes(4, "little") \
        + (48000).to_bytes(4, "little") + (3).to_bytes(2, "little") + (24).to_bytes(2, "little")
    body = b"WAVE" + b"fmt " + len(fmt).to_bytes(4, "little") + fmt + b"data" + len(data).to_bytes(4, "little") + data
    p = tmp_path / "p24.wav"
    p.write_bytes(b"RIFF" + len(body).to_bytes(4, "little") + body)
    np.testing.assert_array_equal(load_wav(p).samples, [0.5, -1.0])


def test_load_errors(tmp_path):
    with pytest.raises(OSError):
        load_wav(tmp_path / "missing.wav")
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"not a wav file at all")
    with pytest.raises(AudioError):
        load_wav(bad)
    empty = tmp_path / "empty.wav"
    wavfile.write(empty, 16000, np.zeros(0, dtype=np.int16))
    with pytest.raises(AudioError):
        load_wav(empty)


def test_float32_exact(tmp_path):
    p = tmp_path / "f.wav"
    save_wav(Waveform(np.array([0.0, 0.5]), 16000), p)
    np.testing.assert_array_equal(load_wav(p).samples, [0.0, 0.5])


def test_pcm16_clip(tmp_path):
    p = tmp_path / "c.wav"
    save_wav(Waveform(np.array([1.5, -2.0]), 16000), p, "pcm16")
    np.testing.assert_array_equal(load_wav(p).samples, [32767 / 32768, -1.0])


def test_save_empty_rejected(tmp_path):
    with pytest.raises(AudioError):
        save_wav(Waveform(np.zeros(0), 16000), tmp_path / "e.wav")


finite = arrays(np.float64, st.integers(1, 200), elements=st.floats(-1, 1, allow_nan=False))


@settings(max_examples=40, deadline=None)
@given(finite)
def test_roundtrip_properties(tmp_path_factory, x):
    d = tmp_path_factory.mktemp("rt")
    x32 = x.astype(np.float32).astype(np.float64)
    save_wav(Waveform(x32, 16000), d / "f.wav")
    np.testing.assert_array_equal(load_wav(d / "f.wav").samples, x32)
    save_wav(Waveform(x, 16000), d / "p.wav", "pcm16")
    y = load_wav(d / "p.wav").samples
    assert np.max(np.abs(y - np.clip(x, -1.0, 1.0 - 2 ** -15))) <= 2 ** -15


def test_resample_examples():
    w = Waveform(np.array([0.0, 1.0]), 2)
    np.testing.assert_array_equal(resample_linear(w, 4).samples, [0.0, 0.5, 1.0, 1.0])
    x = np.random.default_rng(0).standard_normal(50)
    np.testing.assert_array_equal(resample_linear(Waveform(x, 16000), 16000).samples, x)
    c = resample_linear(Waveform(np.full(37, 0.3), 22050), 16000)
    assert len(c) == round(37 * 16000 / 22050) and np.all(c.samples == 0.3)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 500), st.integers(1000, 48000), st.integers(1000, 48000))
def test_resample_length(n, src, dst):
    out = resample_linear(Waveform(np.zeros(n), src), dst)
    assert len(out) == int(np.floor(n * dst / src + 0.5)) and out.sample_rate_hz == dst


def test_peak_normalize():
    np.testing.assert_array_equal(peak_normalize(Waveform(np.array([0.25, -0.5]), 8000)).samples, [0.5, -1.0])
    x = np.array([0.1, -1.0, 0.3])
    np.testing.assert_array_equal(peak_normalize(Waveform(x, 8000)).samples, x)
    with pytest.raises(AudioError):
        peak_normalize(Waveform(np.zeros(3), 8000))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.integers(1, 100), elements=st.floats(-10, 10, allow_nan=False)),
       st.floats(0.01, 1.0))
def test_peak_normalize_property(x, peak):
    if not np.any(x):
        return
    y = peak_normalize(Waveform(x, 8000), peak).samples
    assert abs(np.max(np.abs(y)) - peak) <= np.spacing(peak)
