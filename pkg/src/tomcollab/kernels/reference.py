"""Pure-numpy MLP kernels: batched forward and fused loss+gradient.

This is the fallback backend; `tomcollab.kernels.jit` holds the numba
twins with identical signatures and semantics. Everything is float64.

Parameter layout: per layer, a (fan_in, fan_out) weight block in row-major
order followed by the fan_out bias, layers concatenated in order.
"""

from __future__ import annotations

import numpy as np

ACT_RELU, ACT_TANH = 0, 1
HEAD_LINEAR, HEAD_SOFTMAX, HEAD_SIGMOID = 0, 1, 2
LOSS_SQUARED, LOSS_CE, LOSS_KL, LOSS_L2 = 0, 1, 2, 3


def mlp_forward(params, widths, act, head, x):
    """x: (n, widths[0]) -> (n, widths[-1]) head output."""
    h = x
    off = 0
    last = len(widths) - 2
    for layer in range(last + 1):
        fi = widths[layer]
        fo = widths[layer + 1]
        W = params[off : off + fi * fo].reshape(fi, fo)
        off += fi * fo
        b = params[off : off + fo]
        off += fo
        z = h @ W + b
        if layer < last:
            h = np.maximum(z, 0.0) if act == ACT_RELU else np.tanh(z)
        else:
            h = z
    if head == HEAD_LINEAR:
        return h
    if head == HEAD_SOFTMAX:
        m = h.max(axis=1, keepdims=True)
        e = np.exp(h - m)
        return e / e.sum(axis=1, keepdims=True)
    return 1.0 / (1.0 + np.exp(-h))


def mlp_loss_grad(params, widths, act, head, loss, x, target, weight):
    """Mean weighted loss over the batch and its gradient wrt params.

    target and weight are both (n, widths[-1]); the weight multiplies each
    unit's loss contribution, so a constant row is a per-example weight and
    a one-hot row trains a single output unit.
    """
    n = x.shape[0]
    nlayers = len(widths) - 1

    # forward, caching each layer's input
    caches = [x]
    h = x
    off = 0
    for layer in range(nlayers):
        fi = widths[layer]
        fo = widths[layer + 1]
        W = params[off : off + fi * fo].reshape(fi, fo)
        off += fi * fo
        b = params[off : off + fo]
        off += fo
        z = h @ W + b
        if layer < nlayers - 1:
            h = np.maximum(z, 0.0) if act == ACT_RELU else np.tanh(z)
            caches.append(h)
        else:
            h = z

    # head output, loss value, and dL/dz at the output layer
    if loss in (LOSS_CE, LOSS_KL):
        m = h.max(axis=1, keepdims=True)
        lse = m + np.log(np.exp(h - m).sum(axis=1, keepdims=True))
        logp = h - lse
        p = np.exp(logp)
        wt = weight * target
        if loss == LOSS_CE:
            loss_val = -(wt * logp).sum() / n
        else:
            tlogt = np.where(target > 0.0, target * np.log(np.maximum(target, 1e-300)), 0.0)
            loss_val = (weight * tlogt - wt * logp).sum() / n
        dz = (p * wt.sum(axis=1, keepdims=True) - wt) / n
    else:
        if head == HEAD_SIGMOID:
            p = 1.0 / (1.0 + np.exp(-h))
        else:
            p = h
        diff = p - target
        loss_val = (weight * diff * diff).sum() / n
        dz = 2.0 * weight * diff / n
        if head == HEAD_SIGMOID:
            dz = dz * p * (1.0 - p)

    # backward
    grad = np.zeros_like(params)
    delta = dz
    for layer in range(nlayers - 1, -1, -1):
        fi = widths[layer]
        fo = widths[layer + 1]
        off -= fi * fo + fo
        W = params[off : off + fi * fo].reshape(fi, fo)
        h_in = caches[layer]
        grad[off : off + fi * fo] = (h_in.T @ delta).ravel()
        grad[off + fi * fo : off + fi * fo + fo] = delta.sum(axis=0)
        if layer > 0:
            delta = delta @ W.T
            if act == ACT_RELU:
                delta = delta * (h_in > 0.0)
            else:
                delta = delta * (1.0 - h_in * h_in)
    return loss_val, grad
