"""Small fully-connected function approximators with analytic gradients.

Everything the agents learn (Q-values, the partner-policy model, the
partner-belief propagator) is one of these: a float64 MLP with a linear,
softmax, or per-unit sigmoid head, trained by plain SGD or Adam. Hot loops
live in `tomcollab.kernels`; this module owns specs, parameter layout,
loss-kind plumbing, optimizers, and the checkpoint format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels

ACTIVATIONS = {"relu": kernels.ACT_RELU, "tanh": kernels.ACT_TANH}
HEADS = {
    "linear": kernels.HEAD_LINEAR,
    "softmax": kernels.HEAD_SOFTMAX,
    "sigmoid": kernels.HEAD_SIGMOID,
}
LOSSES = {
    "squared_error": kernels.LOSS_SQUARED,
    "softmax_cross_entropy": kernels.LOSS_CE,
    "kl_divergence": kernels.LOSS_KL,
    "l2_distance": kernels.LOSS_L2,
}
# l2_distance is the squared Euclidean distance; it shares the squared-error
# formula and differs only in the head it is paired with.
_SOFTMAX_LOSSES = ("softmax_cross_entropy", "kl_divergence")

CHECKPOINT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths from input to output, hidden activation, output head."""

    widths: tuple[int, ...]
    activation: str = "relu"
    head: str = "linear"

    def __post_init__(self):
        if len(self.widths) < 3:
            raise ValueError("need at least one hidden layer")
        if any(w < 1 for w in self.widths):
            raise ValueError(f"bad widths {self.widths}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.head not in HEADS:
            raise ValueError(f"unknown head {self.head!r}")

    @property
    def in_dim(self) -> int:
        return self.widths[0]

    @property
    def out_dim(self) -> int:
        return self.widths[-1]

    def param_count(self) -> int:
        return sum(
            fi * fo + fo for fi, fo in zip(self.widths[:-1], self.widths[1:])
        )

    def widths_array(self) -> np.ndarray:
        return np.asarray(self.widths, dtype=np.int64)


def init_params(spec: MlpSpec, rng: np.random.Generator) -> np.ndarray:
    """Scaled uniform fan-in init: W ~ U(+-1/sqrt(fan_in)), biases zero."""
    chunks = []
    for fi, fo in zip(spec.widths[:-1], spec.widths[1:]):
        bound = 1.0 / np.sqrt(fi)
        chunks.append(rng.uniform(-bound, bound, size=fi * fo))
        chunks.append(np.zeros(fo))
    return np.concatenate(chunks)


def _as_batch(spec: MlpSpec, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.ascontiguousarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x.reshape(1, -1)
    if x.shape[1] != spec.in_dim:
        raise ValueError(f"input width {x.shape[1]} != spec width {spec.in_dim}")
    return x, single


def forward(spec: MlpSpec, params: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Evaluate the network; accepts a single vector or a (n, in) batch."""
    if params.size != spec.param_count():
        raise ValueError("parameter vector does not match spec")
    xb, single = _as_batch(spec, x)
    out = kernels.mlp_forward(
        params, spec.widths_array(), ACTIVATIONS[spec.activation], HEADS[spec.head], xb
    )
    return out[0] if single else out


def loss_and_grad(
    spec: MlpSpec,
    params: np.ndarray,
    x: np.ndarray,
    targets: np.ndarray,
    kind: str,
    weights: Optional[np.ndarray] = None,
) -> tuple[float, np.ndarray]:
    """Mean weighted loss over the batch plus the gradient wrt params.

    ``weights`` may be None (all ones), a per-example (n,) vector, or a
    per-unit (n, out) matrix; the Q-loss uses a one-hot unit weight to train
    only the taken action's output.
    """
    if kind not in LOSSES:
        raise ValueError(f"unknown loss kind {kind!r}")
    if (kind in _SOFTMAX_LOSSES) != (spec.head == "softmax"):
        raise ValueError(f"loss {kind!r} is not usable with head {spec.head!r}")
    xb, _ = _as_batch(spec, x)
    n = xb.shape[0]
    if n == 0:
        raise ValueError("empty batch")
    t = np.ascontiguousarray(targets, dtype=np.float64).reshape(n, spec.out_dim)
    if weights is None:
        w = np.ones((n, spec.out_dim))
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim == 1:
            w = np.repeat(w.reshape(n, 1), spec.out_dim, axis=1)
        w = np.ascontiguousarray(w.reshape(n, spec.out_dim))
    loss, grad = kernels.mlp_loss_grad(
        params,
        spec.widths_array(),
        ACTIVATIONS[spec.activation],
        HEADS[spec.head],
        LOSSES[kind],
        xb,
        t,
        w,
    )
    if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
        raise FloatingPointError(f"non-finite loss or gradient (loss={loss})")
    return float(loss), grad


@dataclass
class OptimizerState:
    """State for one parameter vector; `kind` picks the update rule."""

    kind: str = "adam"
    t: int = 0
    m: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.kind not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.kind!r}")


def optimizer_step(
    params: np.ndarray, grad: np.ndarray, lr: float, state: OptimizerState
) -> tuple[np.ndarray, OptimizerState]:
    """One update; returns fresh arrays, inputs are left untouched."""
    if grad.shape != params.shape:
        raise ValueError("gradient shape mismatch")
    if state.kind == "sgd":
        return params - lr * grad, state
    if state.m is None:
        state.m = np.zeros_like(params)
        state.v = np.zeros_like(params)
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    mhat = state.m / (1.0 - state.beta1**state.t)
    vhat = state.v / (1.0 - state.beta2**state.t)
    return params - lr * mhat / (np.sqrt(vhat) + state.eps), state


def spec_to_json(spec: MlpSpec) -> dict:
    return {"widths": list(spec.widths), "activation": spec.activation, "head": spec.head}


def spec_from_json(obj: dict) -> MlpSpec:
    return MlpSpec(tuple(obj["widths"]), obj["activation"], obj["head"])


def save_checkpoint(path, spec: MlpSpec, params: np.ndarray) -> None:
    """JSON checkpoint; float64 values round-trip bit-exactly."""
    doc = {
        "v": CHECKPOINT_FORMAT_VERSION,
        "spec": spec_to_json(spec),
        "params": [float(p) for p in params],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_checkpoint(path) -> tuple[MlpSpec, np.ndarray]:
    with open(path) as fh:
        doc = json.load(fh)
    if doc["v"] != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc['v']}")
    spec = spec_from_json(doc["spec"])
    params = np.asarray(doc["params"], dtype=np.float64)
    if params.size != spec.param_count():
        raise ValueError("checkpoint parameter count does not match its spec")
    return spec, params
