# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled tap-walk kernels for the memory block.

Mirrors the contracts of `_kernels_np`: callers allocate zeroed outputs,
`starts` carries the packed-sequence block offsets, and no tap reads
across a block boundary. The walk visits only in-band entries, so cost is
frames * (lookback + lookahead + 1) per row instead of the frames^2 of a
dense banded product.
"""

import numpy as np

cimport numpy as cnp

ctypedef fused real:
    float
    double


def encode_scalar(real[:, ::1] hidden, real[::1] taps_back, real[::1] taps_ahead,
                  cnp.int64_t[::1] starts, real[:, ::1] out):
    cdef Py_ssize_t dim = hidden.shape[0]
    cdef Py_ssize_t nback = taps_back.shape[0]
    cdef Py_ssize_t nahead = taps_ahead.shape[0]
    cdef Py_ssize_t nblocks = starts.shape[0] - 1
    cdef Py_ssize_t b, d, t, i, j, s, e, imax, jmax
    cdef real acc
    for b in range(nblocks):
        s = starts[b]
        e = starts[b + 1]
        for d in range(dim):
            for t in range(s, e):
                acc = 0
                imax = nback - 1
                if t - s < imax:
                    imax = t - s
                for i in range(imax + 1):
                    acc = acc + taps_back[i] * hidden[d, t - i]
                jmax = nahead
                if e - 1 - t < jmax:
                    jmax = e - 1 - t
                for j in range(1, jmax + 1):
                    acc = acc + taps_ahead[j - 1] * hidden[d, t + j]
                out[d, t] = acc


def encode_vector(real[:, ::1] hidden, real[:, ::1] taps_back, real[:, ::1] taps_ahead,
                  cnp.int64_t[::1] starts, real[:, ::1] out):
    cdef Py_ssize_t dim = hidden.shape[0]
    cdef Py_ssize_t nback = taps_back.shape[0]
    cdef Py_ssize_t nahead = taps_ahead.shape[0]
    cdef Py_ssize_t nblocks = starts.shape[0] - 1
    cdef Py_ssize_t b, d, t, i, j, s, e, imax, jmax
    cdef real acc
    for b in range(nblocks):
        s = starts[b]
        e = starts[b + 1]
        for d in range(dim):
            for t in range(s, e):
                acc = 0
                imax = nback - 1
                if t - s < imax:
                    imax = t - s
                for i in range(imax + 1):
                    acc = acc + taps_back[i, d] * hidden[d, t - i]
                jmax = nahead
                if e - 1 - t < jmax:
                    jmax = e - 1 - t
                for j in range(1, jmax + 1):
                    acc = acc + taps_ahead[j - 1, d] * hidden[d, t + j]
                out[d, t] = acc


def encode_scalar_backward(real[:, ::1] hidden, real[:, ::1] err_enc,
                           real[::1] taps_back, real[::1] taps_ahead,
                           cnp.int64_t[::1] starts,
                           real[::1] grad_back, real[::1] grad_ahead,
                           real[:, ::1] err_hidden):
    cdef Py_ssize_t dim = hidden.shape[0]
    cdef Py_ssize_t nback = taps_back.shape[0]
    cdef Py_ssize_t nahead = taps_ahead.shape[0]
    cdef Py_ssize_t nblocks = starts.shape[0] - 1
    cdef Py_ssize_t b, d, t, i, j, s, e, lim
    cdef real edt, acc
    for b in range(nblocks):
        s = starts[b]
        e = starts[b + 1]
        for d in range(dim):
            for t in range(s, e):
                edt = err_enc[d, t]
                lim = nback - 1
                if t - s < lim:
                    lim = t - s
                for i in range(lim + 1):
                    grad_back[i] += edt * hidden[d, t - i]
                lim = nahead
                if e - 1 - t < lim:
                    lim = e - 1 - t
                for j in range(1, lim + 1):
                    grad_ahead[j - 1] += edt * hidden[d, t + j]
                acc = 0
                lim = nback - 1
                if e - 1 - t < lim:
                    lim = e - 1 - t
                for i in range(lim + 1):
                    acc = acc + taps_back[i] * err_enc[d, t + i]
                lim = nahead
                if t - s < lim:
                    lim = t - s
                for j in range(1, lim + 1):
                    acc = acc + taps_ahead[j - 1] * err_enc[d, t - j]
                err_hidden[d, t] = acc


def encode_vector_backward(real[:, ::1] hidden, real[:, ::1] err_enc,
                           real[:, ::1] taps_back, real[:, ::1] taps_ahead,
                           cnp.int64_t[::1] starts,
                           real[:, ::1] grad_back, real[:, ::1] grad_ahead,
                           real[:, ::1] err_hidden):
    cdef Py_ssize_t dim = hidden.shape[0]
    cdef Py_ssize_t nback = taps_back.shape[0]
    cdef Py_ssize_t nahead = taps_ahead.shape[0]
    cdef Py_ssize_t nblocks = starts.shape[0] - 1
    cdef Py_ssize_t b, d, t, i, j, s, e, lim
    cdef real edt, acc
    for b in range(nblocks):
        s = starts[b]
        e = starts[b + 1]
        for d in range(dim):
            for t in range(s, e):
                edt = err_enc[d, t]
                lim = nback - 1
                if t - s < lim:
                    lim = t - s
                for i in range(lim + 1):
                    grad_back[i, d] += edt * hidden[d, t - i]
                lim = nahead
                if e - 1 - t < lim:
                    lim = e - 1 - t
                for j in range(1, lim + 1):
                    grad_ahead[j - 1, d] += edt * hidden[d, t + j]
                acc = 0
                lim = nback - 1
                if e - 1 - t < lim:
                    lim = e - 1 - t
                for i in range(lim + 1):
                    acc = acc + taps_back[i, d] * err_enc[d, t + i]
                lim = nahead
                if t - s < lim:
                    lim = t - s
                for j in range(1, lim + 1):
                    acc = acc + taps_ahead[j - 1, d] * err_enc[d, t - j]
                err_hidden[d, t] = acc
