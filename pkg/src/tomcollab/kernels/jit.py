"""Numba-compiled twins of the reference kernels.

Same signatures and semantics as `tomcollab.kernels.reference`; row-wise
reductions are explicit loops (numba has no axis kwarg for max) and the
matmuls go through np.dot on contiguous buffers. No fastmath, so results
stay reproducible run to run.
"""

from __future__ import annotations

import numpy as np
from numba import njit

ACT_RELU, ACT_TANH = 0, 1
HEAD_LINEAR, HEAD_SOFTMAX, HEAD_SIGMOID = 0, 1, 2
LOSS_SQUARED, LOSS_CE, LOSS_KL, LOSS_L2 = 0, 1, 2, 3


@njit(cache=True)
def _linear(params, off, fi, fo, h):
    W = params[off : off + fi * fo].reshape(fi, fo)
    b = params[off + fi * fo : off + fi * fo + fo]
    z = np.dot(h, W)
    for r in range(z.shape[0]):
        for j in range(fo):
            z[r, j] += b[j]
    return z


@njit(cache=True)
def mlp_forward(params, widths, act, head, x):
    h = x
    off = 0
    last = len(widths) - 2
    for layer in range(last + 1):
        fi = widths[layer]
        fo = widths[layer + 1]
        z = _linear(params, off, fi, fo, h)
        off += fi * fo + fo
        if layer < last:
            if act == ACT_RELU:
                h = np.maximum(z, 0.0)
            else:
                h = np.tanh(z)
        else:
            h = z
    n, fo = h.shape
    if head == HEAD_LINEAR:
        return h
    if head == HEAD_SOFTMAX:
        for r in range(n):
            m = h[r, 0]
            for j in range(1, fo):
                if h[r, j] > m:
                    m = h[r, j]
            s = 0.0
            for j in range(fo):
                h[r, j] = np.exp(h[r, j] - m)
                s += h[r, j]
            for j in range(fo):
                h[r, j] /= s
        return h
    return 1.0 / (1.0 + np.exp(-h))


@njit(cache=True)
def mlp_loss_grad(params, widths, act, head, loss, x, target, weight):
    n = x.shape[0]
    nlayers = len(widths) - 1

    caches = [x]
    h = x
    off = 0
    for layer in range(nlayers):
        fi = widths[layer]
        fo = widths[layer + 1]
        z = _linear(params, off, fi, fo, h)
        off += fi * fo + fo
        if layer < nlayers - 1:
            if act == ACT_RELU:
                h = np.maximum(z, 0.0)
            else:
                h = np.tanh(z)
            caches.append(h)
        else:
            h = z

    out_dim = widths[nlayers]
    dz = np.empty((n, out_dim))
    loss_val = 0.0
    if loss == LOSS_CE or loss == LOSS_KL:
        for r in range(n):
            m = h[r, 0]
            for j in range(1, out_dim):
                if h[r, j] > m:
                    m = h[r, j]
            s = 0.0
            for j in range(out_dim):
                s += np.exp(h[r, j] - m)
            lse = m + np.log(s)
            wtsum = 0.0
            for j in range(out_dim):
                wt = weight[r, j] * target[r, j]
                wtsum += wt
                logp = h[r, j] - lse
                if loss == LOSS_CE:
                    loss_val -= wt * logp
                else:
                    if target[r, j] > 0.0:
                        loss_val += weight[r, j] * target[r, j] * np.log(target[r, j])
                    loss_val -= wt * logp
            for j in range(out_dim):
                p = np.exp(h[r, j] - lse)
                dz[r, j] = (p * wtsum - weight[r, j] * target[r, j]) / n
        loss_val /= n
    else:
        for r in range(n):
            for j in range(out_dim):
                p = h[r, j]
                if head == HEAD_SIGMOID:
                    p = 1.0 / (1.0 + np.exp(-p))
                diff = p - target[r, j]
                loss_val += weight[r, j] * diff * diff
                g = 2.0 * weight[r, j] * diff / n
                if head == HEAD_SIGMOID:
                    g *= p * (1.0 - p)
                dz[r, j] = g
        loss_val /= n

    grad = np.zeros_like(params)
    delta = dz
    for layer in range(nlayers - 1, -1, -1):
        fi = widths[layer]
        fo = widths[layer + 1]
        off -= fi * fo + fo
        W = params[off : off + fi * fo].reshape(fi, fo)
        h_in = caches[layer]
        gW = np.dot(np.ascontiguousarray(h_in.T), delta)
        grad[off : off + fi * fo] = gW.ravel()
        for j in range(fo):
            s = 0.0
            for r in range(n):
                s += delta[r, j]
            grad[off + fi * fo + j] = s
        if layer > 0:
            delta = np.dot(delta, np.ascontiguousarray(W.T))
            if act == ACT_RELU:
                for r in range(n):
                    for j in range(fi):
                        if h_in[r, j] <= 0.0:
                            delta[r, j] = 0.0
            else:
                for r in range(n):
                    for j in range(fi):
                        delta[r, j] *= 1.0 - h_in[r, j] * h_in[r, j]
    return loss_val, grad
