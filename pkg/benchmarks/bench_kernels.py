"""Compare the compiled and NumPy framing / overlap-add kernels.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from rankspec import _kernels_py, kernels
from rankspec.corpus import harmonic_signal
from rankspec.phase import GriffinLimConfig, griffin_lim
from rankspec.stft import StftConfig, magnitude, stft

try:
    from rankspec import _kernels
except ImportError:
    _kernels = None

SHAPES = [
    ("fig2-16k, 4 s", StftConfig(512, 512, 384), 4 * 16000),
    ("vocoder-24k, 4 s", StftConfig(1024, 1024, 256), 4 * 24000),
    ("vocoder-24k, 30 s", StftConfig(1024, 1024, 256), 30 * 24000),
]


def bench(mod, cfg, n, repeat):
    rng = np.random.default_rng(0)
    window = cfg.window_array()
    n_frames = 1 + (n - cfg.win_length) // cfg.hop_length
    length = (n_frames - 1) * cfg.hop_length + cfg.win_length
    x = rng.standard_normal(n)
    frames = rng.standard_normal((n_frames, cfg.win_length))
    calls = {
        "frame_signal": lambda: mod.frame_signal(x, window, cfg.hop_length, n_frames),
        "overlap_add": lambda: mod.overlap_add(frames, window, cfg.hop_length, length),
        "window_sumsquare": lambda: mod.window_sumsquare(window, n_frames, cfg.hop_length, length),
    }
    return {k: min(timeit.repeat(f, number=5, repeat=repeat)) / 5 for k, f in calls.items()}


def bench_griffin_lim(mod, repeat):
    """Whole 32-iteration Griffin-Lim run on 4 s at 24 kHz with ``mod`` swapped in."""
    cfg = StftConfig(1024, 1024, 256)
    m = magnitude(stft(harmonic_signal(np.random.default_rng(0), 24000, 4.0), cfg))
    saved = {k: getattr(kernels, k) for k in ("frame_signal", "overlap_add", "window_sumsquare")}
    try:
        for k in saved:
            setattr(kernels, k, getattr(mod, k))
        return min(timeit.repeat(lambda: griffin_lim(m, GriffinLimConfig(32), cfg), number=1, repeat=repeat))
    finally:
        for k, v in saved.items():
            setattr(kernels, k, v)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the NumPy backend is available")
    print(f"{'case':<20} {'kernel':<17} {'numpy ms':>9} {'cython ms':>10} {'speedup':>8}")
    for name, cfg, n in SHAPES:
        py = bench(_kernels_py, cfg, n, args.repeat)
        cy = bench(_kernels, cfg, n, args.repeat) if _kernels else None
        for k, t in py.items():
            if cy:
                print(f"{name:<20} {k:<17} {t * 1e3:9.3f} {cy[k] * 1e3:10.3f} {t / cy[k]:7.1f}x")
            else:
                print(f"{name:<20} {k:<17} {t * 1e3:9.3f} {'-':>10} {'-':>8}")
    py = bench_griffin_lim(_kernels_py, args.repeat)
    if _kernels:
        cy = bench_griffin_lim(_kernels, args.repeat)
        print(f"\nGriffin-Lim K=32, 4 s @ 24 kHz: numpy {py * 1e3:.0f} ms, cython {cy * 1e3:.0f} ms, {py / cy:.2f}x")
    else:
        print(f"\nGriffin-Lim K=32, 4 s @ 24 kHz: numpy {py * 1e3:.0f} ms")


if __name__ == "__main__":
    main()
