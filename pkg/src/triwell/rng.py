"""Reproducible random streams.

All sampling in the package goes through counter-based Philox streams, so a
run is a pure function of its seed: stream ``(seed, i, j)`` yields the same
numbers whether the work items are executed serially or dispatched to a
worker pool in any order.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def substream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for a (seed, path) pair.

    ``path`` may hold up to three non-negative indices (e.g. grid point and
    trial number). Distinct paths give statistically independent streams.
    """
    if len(path) > 3:
        raise ValueError("substream path supports at most 3 indices")
    counter = [0, 0, 0, 0]
    for slot, idx in enumerate(path):
        if idx < 0:
            raise ValueError("substream indices must be non-negative")
        counter[slot] = int(idx) & _MASK64
    bitgen = np.random.Philox(key=int(seed) & ((1 << 128) - 1), counter=counter)
    return np.random.Generator(bitgen)
