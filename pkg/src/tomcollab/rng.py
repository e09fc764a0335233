"""Seeded random streams.

All randomness in the package flows through numpy ``Generator`` objects
backed by PCG64, which produces the same stream for the same seed on every
platform. Independent substreams are derived with ``SeedSequence.spawn`` so
that, e.g., data generation and training never share a stream.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def split_rng(seed: int, n: int) -> list[np.random.Generator]:
    """Derive ``n`` independent generators from one root seed."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]
