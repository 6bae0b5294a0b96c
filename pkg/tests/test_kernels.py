import os
import subprocess
import sys

import numpy as np
import pytest

from rankspec import _kernels_py, kernels

try:
    from rankspec import _kernels as compiled
except ImportError:
    compiled = None

needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


def cases():
    r = np.random.default_rng(0)
    for win, hop, n_frames in [(8, 2, 5), (512, 384, 9), (1024, 256, 13), (7, 7, 3), (5, 1, 20)]:
        x = r.standard_normal((n_frames - 1) * hop + win + r.integers(0, hop))
        window = r.uniform(0.1, 1.0, win)
        frames = r.standard_normal((n_frames, win))
        yield x, window, hop, n_frames, frames


def test_python_kernels_against_loops():
    for x, window, hop, n_frames, frames in cases():
        f = _kernels_py.frame_signal(x, window, hop, n_frames)
        ref = np.array([x[t * hop:t * hop + len(window)] * window for t in range(n_frames)])
        np.testing.assert_array_equal(f, ref)
        length = (n_frames - 1) * hop + len(window)
        y = np.zeros(length)
        d = np.zeros(length)
        for t in range(n_frames):
            for i in range(len(window)):
                y[t * hop + i] += frames[t, i] * window[i]
                d[t * hop + i] += window[i] * window[i]
        np.testing.assert_array_equal(_kernels_py.overlap_add(frames, window, hop, length), y)
        np.testing.assert_array_equal(_kernels_py.window_sumsquare(window, n_frames, hop, length), d)


@needs_ext
def test_backends_bit_identical():
    for x, window, hop, n_frames, frames in cases():
        length = (n_frames - 1) * hop + len(window)
        np.testing.assert_array_equal(compiled.frame_signal(x, window, hop, n_frames),
                                      _kernels_py.frame_signal(x, window, hop, n_frames))
        np.testing.assert_array_equal(compiled.overlap_add(frames, window, hop, length),
                                      _kernels_py.overlap_add(frames, window, hop, length))
        np.testing.assert_array_equal(compiled.window_sumsquare(window, n_frames, hop, length),
                                      _kernels_py.window_sumsquare(window, n_frames, hop, length))


def test_output_longer_than_frames_is_zero_filled():
    window = np.ones(4)
    y = kernels.overlap_add(np.ones((2, 4)), window, 2, 10)
    np.testing.assert_array_equal(y, [1, 1, 2, 2, 1, 1, 0, 0, 0, 0])


def test_env_var_forces_fallback():
    env = dict(os.environ, RANKSPEC_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import rankspec.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_ext
@pytest.mark.skipif(os.environ.get("RANKSPEC_PURE_PYTHON") == "1", reason="fallback forced by environment")
def test_default_backend_is_compiled():
    assert kernels.BACKEND == "cython"
