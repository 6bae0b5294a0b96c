# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled framing and overlap-add kernels.

Each routine performs the same floating-point operations, in the same
order, as its twin in ``_kernels_py`` so both backends agree bit for bit.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def frame_signal(const double[::1] x, const double[::1] window, Py_ssize_t hop,
                 Py_ssize_t n_frames):
    cdef Py_ssize_t win = window.shape[0]
    cdef Py_ssize_t t, i, start
    if n_frames < 0 or hop <= 0:
        raise ValueError("n_frames must be >= 0 and hop > 0")
    if n_frames > 0 and (n_frames - 1) * hop + win > x.shape[0]:
        raise ValueError("signal too short for the requested frames")
    out = np.empty((n_frames, win), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for t in range(n_frames):
            start = t * hop
            for i in range(win):
                o[t, i] = x[start + i] * window[i]
    return out


def overlap_add(const double[:, ::1] frames, const double[::1] window,
                Py_ssize_t hop, Py_ssize_t length):
    cdef Py_ssize_t n_frames = frames.shape[0]
    cdef Py_ssize_t win = window.shape[0]
    cdef Py_ssize_t t, i, start
    if frames.shape[1] != win:
        raise ValueError("frame width does not match window length")
    if n_frames > 0 and (n_frames - 1) * hop + win > length:
        raise ValueError("output length too short for the frames")
    out = np.zeros(length, dtype=np.float64)
    cdef double[::1] y = out
    with nogil:
        for t in range(n_frames):
            start = t * hop
            for i in range(win):
                y[start + i] += frames[t, i] * window[i]
    return out


def window_sumsquare(const double[::1] window, Py_ssize_t n_frames,
                     Py_ssize_t hop, Py_ssize_t length):
    cdef Py_ssize_t win = window.shape[0]
    cdef Py_ssize_t t, i, start
    if n_frames > 0 and (n_frames - 1) * hop + win > length:
        raise ValueError("output length too short for the frames")
    out = np.zeros(length, dtype=np.float64)
    cdef double[::1] y = out
    with nogil:
        for t in range(n_frames):
            start = t * hop
            for i in range(win):
                y[start + i] += window[i] * window[i]
    return out
