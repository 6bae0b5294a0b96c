import numpy as np
import pytest

from rankspec.audio import Waveform
from rankspec.corpus import harmonic_signal
from rankspec.phase import (
    DEFAULT_GRIFFIN_LIM,
    GriffinLimConfig,
    ProxyPhase,
    griffin_lim,
    make_proxy_phase,
    random_phase,
    spectral_convergence,
    synthesize_proxy_waveform,
)
from rankspec.presets import get_preset
from rankspec.stft import StftConfig, istft, magnitude, phase, stft

SR = 16000
CFG = StftConfig(512, 512, 384)


@pytest.fixture(scope="module")
def harmonic():
    x = harmonic_signal(np.random.default_rng(42), SR, 1.0)
    z = stft(x, CFG)
    return x, z, magnitude(z)


def test_config_validation():
    with pytest.raises(ValueError):
        GriffinLimConfig(iterations=-1)
    with pytest.raises(ValueError):
        GriffinLimConfig(momentum=1.0)
    with pytest.raises(ValueError):
        GriffinLimConfig(init="noise")
    with pytest.raises(ValueError):
        ProxyPhase(kind="learned")
    assert DEFAULT_GRIFFIN_LIM.iterations == 32 and DEFAULT_GRIFFIN_LIM.momentum == 0.0
    assert get_preset("fig2-16k").griffin_lim == DEFAULT_GRIFFIN_LIM
    p = ProxyPhase("griffin_lim", 3, GriffinLimConfig(8, "zero", 3, 0.5))
    assert ProxyPhase.from_dict(p.to_dict()) == p


def test_simple_kinds(harmonic):
    _, _, m = harmonic
    assert np.all(make_proxy_phase(m, ProxyPhase("zero")) == 0)
    a = make_proxy_phase(m, ProxyPhase("random", seed=5))
    b = make_proxy_phase(m, ProxyPhase("random", seed=5))
    np.testing.assert_array_equal(a, b)
    assert np.all((a > -np.pi) & (a <= np.pi))
    assert not np.array_equal(a, make_proxy_phase(m, ProxyPhase("random", seed=6)))
    gl0 = ProxyPhase("griffin_lim", griffin_lim=GriffinLimConfig(0, "zero"))
    assert np.all(make_proxy_phase(m, gl0) == 0)


def test_random_phase_range():
    p = random_phase((200, 300), 1)
    assert p.min() > -np.pi and p.max() <= np.pi
    assert abs(p.mean()) < 0.02


def test_consistent_pair_is_fixed_point(harmonic):
    x, z, m = harmonic
    _, errs = griffin_lim(m, GriffinLimConfig(5), init_phase=phase(z))
    assert max(errs) < 1e-8
    assert abs(errs[1] - errs[0]) < 1e-8
    phi, _ = griffin_lim(m, GriffinLimConfig(1), init_phase=phase(z))
    y = istft(type(z)(m.frames * np.exp(1j * phi), CFG, SR, len(x))).samples
    a, b = x.samples[512:-512], y[512:-512]
    assert 10 * np.log10(np.sum(a * a) / np.sum((a - b) ** 2)) > 60


@pytest.mark.parametrize("dims", [(512, 512, 384), (1024, 1024, 256)])
@pytest.mark.parametrize("init", ["random", "zero"])
def test_monotone_and_converging(dims, init):
    cfg = StftConfig(*dims)
    m = magnitude(stft(harmonic_signal(np.random.default_rng(3), SR, 1.0), cfg))
    _, errs = griffin_lim(m, GriffinLimConfig(32, init, seed=1), cfg)
    assert len(errs) == 32
    assert np.all(np.diff(errs) <= 1e-6)
    assert errs[-1] < errs[0]


def test_more_iterations_never_worse(harmonic):
    _, _, m = harmonic
    _, e8 = griffin_lim(m, GriffinLimConfig(8, seed=2))
    _, e32 = griffin_lim(m, GriffinLimConfig(32, seed=2))
    assert e32[:8] == e8
    assert e32[-1] <= e8[-1] + 1e-12


def test_momentum_runs(harmonic):
    _, _, m = harmonic
    _, errs = griffin_lim(m, GriffinLimConfig(32, seed=2, momentum=0.99))
    assert np.all(np.isfinite(errs)) and errs[-1] < errs[0]


def test_spectral_convergence_basics():
    t = np.abs(np.random.default_rng(0).standard_normal((4, 9)))
    assert spectral_convergence(t, t) == 0.0
    assert spectral_convergence(2 * t, t) == pytest.approx(1.0)
    assert spectral_convergence(t, np.zeros_like(t)) == 0.0


def test_synthesis_determinism_and_contract(harmonic):
    x, _, m = harmonic
    for kind in (ProxyPhase("zero"), ProxyPhase("random", seed=4), ProxyPhase("griffin_lim", seed=4,
                 griffin_lim=GriffinLimConfig(8, seed=4))):
        a = synthesize_proxy_waveform(m, kind)
        b = synthesize_proxy_waveform(m, kind)
        np.testing.assert_array_equal(a.samples, b.samples)
        assert len(a) == len(x) and np.all(np.isfinite(a.samples))
    # zero phase gives real, even-symmetric frames
    frames = np.fft.irfft(m.frames, n=512, axis=1)
    np.testing.assert_allclose(frames[:, 1:], frames[:, :0:-1], atol=1e-12)
    assert len(synthesize_proxy_waveform(m, ProxyPhase("zero"), length=1234)) == 1234


def test_griffin_lim_beats_zero_phase(harmonic):
    x, _, m = harmonic
    from rankspec.metrics import si_snr
    gl = synthesize_proxy_waveform(m, ProxyPhase("griffin_lim", seed=0))
    zero = synthesize_proxy_waveform(m, ProxyPhase("zero"))
    assert si_snr(x, gl).value > si_snr(x, zero).value


def test_shape_mismatch(harmonic):
    _, _, m = harmonic
    with pytest.raises(ValueError):
        griffin_lim(m, GriffinLimConfig(1), StftConfig(1024, 1024, 256))
