"""Pure-NumPy framing and overlap-add kernels (fallback backend).

The accumulation order matches the compiled kernels exactly: frames are
added in increasing index order, each element as ``frame * window``.
"""

import numpy as np


def frame_signal(x, window, hop, n_frames):
    x = np.ascontiguousarray(x, dtype=np.float64)
    window = np.ascontiguousarray(window, dtype=np.float64)
    win = window.shape[0]
    if n_frames < 0 or hop <= 0:
        raise ValueError("n_frames must be >= 0 and hop > 0")
    if n_frames > 0 and (n_frames - 1) * hop + win > x.shape[0]:
        raise ValueError("signal too short for the requested frames")
    if n_frames == 0:
        return np.empty((0, win), dtype=np.float64)
    view = np.lib.stride_tricks.sliding_window_view(x, win)[::hop][:n_frames]
    return view * window


def overlap_add(frames, window, hop, length):
    frames = np.ascontiguousarray(frames, dtype=np.float64)
    window = np.ascontiguousarray(window, dtype=np.float64)
    n_frames, width = frames.shape
    win = window.shape[0]
    if width != win:
        raise ValueError("frame width does not match window length")
    if n_frames > 0 and (n_frames - 1) * hop + win > length:
        raise ValueError("output length too short for the frames")
    y = np.zeros(length, dtype=np.float64)
    weighted = frames * window
    for t in range(n_frames):
        y[t * hop:t * hop + win] += weighted[t]
    return y


def window_sumsquare(window, n_frames, hop, length):
    window = np.ascontiguousarray(window, dtype=np.float64)
    win = window.shape[0]
    if n_frames > 0 and (n_frames - 1) * hop + win > length:
        raise ValueError("output length too short for the frames")
    y = np.zeros(length, dtype=np.float64)
    sq = window * window
    for t in range(n_frames):
        y[t * hop:t * hop + win] += sq
    return y
