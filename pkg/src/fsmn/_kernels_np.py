"""Numpy fallback for the tap-walk memory kernels.

Same contracts as the compiled extension in `_speedups`: each function
fills caller-allocated, zero-initialized output arrays. Sequence packing
is described by `starts`, an int64 array of block offsets (length K+1,
first 0, last the total frame count); no tap ever reads across a block
boundary.

The implementation is vectorized over frames: one shifted slice per tap
offset, with a boundary mask that zeroes source frames belonging to a
different block. Multiplying by the 0/1 mask keeps out-of-block
contributions exactly zero, which the isolation tests rely on.
"""

import numpy as np


def shift_masks(starts, total, max_shift):
    """mask[s][t] == 1 iff frames t+s and t are in the same block."""
    lengths = np.diff(starts)
    blk = np.repeat(np.arange(len(lengths)), lengths)
    masks = {}
    for s in range(1, max_shift + 1):
        if s >= total:
            break
        masks[s] = blk[s:] == blk[:-s]
    return masks


def encode_scalar(hidden, taps_back, taps_ahead, starts, out):
    total = hidden.shape[1]
    masks = shift_masks(starts, total, max(len(taps_back) - 1, len(taps_ahead)))
    out += taps_back[0] * hidden
    for i in range(1, len(taps_back)):
        if i in masks:
            out[:, i:] += taps_back[i] * (hidden[:, :-i] * masks[i])
    for j in range(1, len(taps_ahead) + 1):
        if j in masks:
            out[:, :-j] += taps_ahead[j - 1] * (hidden[:, j:] * masks[j])


def encode_vector(hidden, taps_back, taps_ahead, starts, out):
    total = hidden.shape[1]
    masks = shift_masks(starts, total, max(len(taps_back) - 1, len(taps_ahead)))
    out += taps_back[0][:, None] * hidden
    for i in range(1, len(taps_back)):
        if i in masks:
            out[:, i:] += taps_back[i][:, None] * (hidden[:, :-i] * masks[i])
    for j in range(1, len(taps_ahead) + 1):
        if j in masks:
            out[:, :-j] += taps_ahead[j - 1][:, None] * (hidden[:, j:] * masks[j])


def encode_scalar_backward(
    hidden, err_enc, taps_back, taps_ahead, starts, grad_back, grad_ahead, err_hidden
):
    total = hidden.shape[1]
    masks = shift_masks(starts, total, max(len(taps_back) - 1, len(taps_ahead)))
    grad_back[0] += np.sum(err_enc * hidden)
    err_hidden += taps_back[0] * err_enc
    for i in range(1, len(taps_back)):
        if i not in masks:
            continue
        masked_err = err_enc[:, i:] * masks[i]
        grad_back[i] += np.sum(masked_err * hidden[:, :-i])
        err_hidden[:, :-i] += taps_back[i] * masked_err
    for j in range(1, len(taps_ahead) + 1):
        if j not in masks:
            continue
        masked_err = err_enc[:, :-j] * masks[j]
        grad_ahead[j - 1] += np.sum(masked_err * hidden[:, j:])
        err_hidden[:, j:] += taps_ahead[j - 1] * masked_err


def encode_vector_backward(
    hidden, err_enc, taps_back, taps_ahead, starts, grad_back, grad_ahead, err_hidden
):
    total = hidden.shape[1]
    masks = shift_masks(starts, total, max(len(taps_back) - 1, len(taps_ahead)))
    grad_back[0] += np.sum(err_enc * hidden, axis=1)
    err_hidden += taps_back[0][:, None] * err_enc
    for i in range(1, len(taps_back)):
        if i not in masks:
            continue
        masked_err = err_enc[:, i:] * masks[i]
        grad_back[i] += np.sum(masked_err * hidden[:, :-i], axis=1)
        err_hidden[:, :-i] += taps_back[i][:, None] * masked_err
    for j in range(1, len(taps_ahead) + 1):
        if j not in masks:
            continue
        masked_err = err_enc[:, :-j] * masks[j]
        grad_ahead[j - 1] += np.sum(masked_err * hidden[:, j:], axis=1)
        err_hidden[:, j:] += taps_ahead[j - 1][:, None] * masked_err
