"""Counter-based random streams on top of numpy's Philox.

A stream is identified by ``(seed, stream)``; each draw index owns a
disjoint 2**64-long block of Philox counters, so draw ``k`` yields the same
numbers no matter which other draws are generated, or in what order.
"""
from __future__ import annotations

import numpy as np

# stream ids; keep stable, they are part of the reproducibility contract
ADM_X = 1
ADM_Y = 2
BOOTSTRAP = 3
NULL_BAND = 4
UNIFORMITY = 5
CERTIFICATE = 6
LOCAL_SEARCH = 7
TESTING = 8

_MASK64 = (1 << 64) - 1


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    return seed


def generator(seed: int, stream: int, draw: int = 0) -> np.random.Generator:
    """Generator for one draw of one stream."""
    key = check_seed(seed) | (int(stream) << 64)
    return np.random.Generator(np.random.Philox(key=key, counter=int(draw) << 64))


def uniforms(seed: int, stream: int, n_draws: int, size: int, first_draw: int = 0) -> np.ndarray:
    """``(n_draws, size)`` array of U[0, 1) values; row ``k`` depends only on ``first_draw + k``."""
    out = np.empty((n_draws, size))
    for k in range(n_draws):
        out[k] = generator(seed, stream, first_draw + k).random(size)
    return out
