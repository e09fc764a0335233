"""Shared test helpers."""

import numpy as np

from tomcollab.approximator import MlpSpec


def pack_params(spec: MlpSpec, layers) -> np.ndarray:
    """Flatten explicit (W, b) pairs into the parameter layout."""
    chunks = []
    for (W, b), fi, fo in zip(layers, spec.widths[:-1], spec.widths[1:]):
        W = np.asarray(W, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        assert W.shape == (fi, fo) and b.shape == (fo,)
        chunks.append(W.ravel())
        chunks.append(b)
    out = np.concatenate(chunks)
    assert out.size == spec.param_count()
    return out


def bias_only_net(in_dim: int, out_bias) -> tuple[MlpSpec, np.ndarray]:
    """A relu net whose output is constant `out_bias` for any input.

    All weights are zero, so hidden activations are relu(0) = 0 and the
    output is the final bias.
    """
    out_bias = np.asarray(out_bias, dtype=np.float64)
    spec = MlpSpec((in_dim, 4, out_bias.size), "relu", "linear")
    params = pack_params(
        spec,
        [
            (np.zeros((in_dim, 4)), np.zeros(4)),
            (np.zeros((4, out_bias.size)), out_bias),
        ],
    )
    return spec, params
