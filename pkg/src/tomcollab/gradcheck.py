"""Central finite-difference validation of the analytic gradients.

The check perturbs every parameter by +-h, evaluates the loss through the
ordinary forward path, and compares the difference quotient against the
analytic gradient. Reported error is the max absolute component gap
normalized by the max gradient magnitude.
"""

from __future__ import annotations

import numpy as np

from .approximator import MlpSpec, init_params, loss_and_grad
from .rng import make_rng

FD_STEP = 1e-5
REL_TOL = 1e-4


def finite_diff_grad(spec, params, x, targets, kind, weights, h=FD_STEP) -> np.ndarray:
    grad = np.zeros_like(params)
    for i in range(params.size):
        up = params.copy()
        up[i] += h
        down = params.copy()
        down[i] -= h
        lu, _ = loss_and_grad(spec, up, x, targets, kind, weights)
        ld, _ = loss_and_grad(spec, down, x, targets, kind, weights)
        grad[i] = (lu - ld) / (2.0 * h)
    return grad


def relative_gradient_error(spec, params, x, targets, kind, weights=None) -> float:
    _, analytic = loss_and_grad(spec, params, x, targets, kind, weights)
    numeric = finite_diff_grad(spec, params, x, targets, kind, weights)
    scale = max(np.abs(analytic).max(), 1e-8)
    return float(np.abs(analytic - numeric).max() / scale)


def _case_data(spec, kind, rng, n=5):
    """Inputs/targets for one check, resampled until no hidden pre-activation
    sits near a relu kink (finite differences are invalid there)."""
    while True:
        params = init_params(spec, rng)
        params += rng.uniform(-0.05, 0.05, size=params.size)  # nonzero biases
        x = rng.normal(size=(n, spec.in_dim))
        if spec.activation == "relu" and _near_kink(spec, params, x):
            continue
        break
    if kind in ("softmax_cross_entropy", "kl_divergence"):
        if kind == "softmax_cross_entropy":
            t = np.zeros((n, spec.out_dim))
            t[np.arange(n), rng.integers(spec.out_dim, size=n)] = 1.0
        else:
            t = rng.dirichlet(np.ones(spec.out_dim), size=n)
        w = rng.uniform(0.5, 1.5, size=n)
    else:
        t = rng.normal(size=(n, spec.out_dim))
        if spec.head == "sigmoid":
            t = rng.uniform(0.0, 1.0, size=(n, spec.out_dim))
        w = rng.uniform(0.0, 1.5, size=(n, spec.out_dim))
    return params, x, t, w


def _near_kink(spec, params, x, margin=1e-3) -> bool:
    h = x
    off = 0
    for layer in range(len(spec.widths) - 2):
        fi, fo = spec.widths[layer], spec.widths[layer + 1]
        W = params[off : off + fi * fo].reshape(fi, fo)
        b = params[off + fi * fo : off + fi * fo + fo]
        z = h @ W + b
        if np.any(np.abs(z) < margin):
            return True
        h = np.maximum(z, 0.0)
        off += fi * fo + fo
    return False


def standard_cases() -> list[tuple[str, MlpSpec, str]]:
    """Every (architecture shape, loss kind) pairing the package trains."""
    return [
        ("q/linear+squared_error/relu", MlpSpec((7, 8, 6, 5), "relu", "linear"), "squared_error"),
        ("q/linear+squared_error/tanh", MlpSpec((7, 8, 6, 5), "tanh", "linear"), "squared_error"),
        ("pi/softmax+cross_entropy/relu", MlpSpec((9, 8, 6), "relu", "softmax"), "softmax_cross_entropy"),
        ("pi/softmax+cross_entropy/tanh", MlpSpec((9, 8, 6), "tanh", "softmax"), "softmax_cross_entropy"),
        ("f/softmax+kl/relu", MlpSpec((10, 8, 4), "relu", "softmax"), "kl_divergence"),
        ("f/softmax+kl/tanh", MlpSpec((10, 8, 4), "tanh", "softmax"), "kl_divergence"),
        ("f/sigmoid+l2/relu", MlpSpec((11, 8, 4), "relu", "sigmoid"), "l2_distance"),
        ("f/sigmoid+l2/tanh", MlpSpec((11, 8, 4), "tanh", "sigmoid"), "l2_distance"),
    ]


def run_gradient_checks(seed: int = 7) -> list[tuple[str, float]]:
    rng = make_rng(seed)
    results = []
    for name, spec, kind in standard_cases():
        params, x, t, w = _case_data(spec, kind, rng)
        results.append((name, relative_gradient_error(spec, params, x, t, kind, w)))
    return results
