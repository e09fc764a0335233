"""Backend selection for the MLP kernels.

The numba backend is the default; set ``TOMCOLLAB_BACKEND=numpy`` to force
the pure-numpy fallback (or ``numba`` to insist on the jit path and fail
loudly if numba is unusable). The two backends compute the same math and
agree to float64 round-off; they are not guaranteed bit-identical to each
other, so reproducibility contracts hold per backend.

``benchmarks/kernel_bench.py`` compares the two.
"""

from __future__ import annotations

import os

from . import reference

ACT_RELU = reference.ACT_RELU
ACT_TANH = reference.ACT_TANH
HEAD_LINEAR = reference.HEAD_LINEAR
HEAD_SOFTMAX = reference.HEAD_SOFTMAX
HEAD_SIGMOID = reference.HEAD_SIGMOID
LOSS_SQUARED = reference.LOSS_SQUARED
LOSS_CE = reference.LOSS_CE
LOSS_KL = reference.LOSS_KL
LOSS_L2 = reference.LOSS_L2


def _select():
    choice = os.environ.get("TOMCOLLAB_BACKEND", "numba").lower()
    if choice == "numpy":
        return reference, "numpy"
    try:
        from . import jit

        return jit, "numba"
    except ImportError:
        if choice == "numba":
            raise
        return reference, "numpy"


_impl, BACKEND = _select()

mlp_forward = _impl.mlp_forward
mlp_loss_grad = _impl.mlp_loss_grad
