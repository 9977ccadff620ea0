"""Counter-derived random streams.

Every stochastic routine in the package draws from a generator keyed by
``(seed, *counters)`` so that work split into blocks gives the same numbers
no matter how the blocks are scheduled.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

BLOCK_SIZE = 1 << 16


def stream(seed: int, *counters: int) -> np.random.Generator:
    """Return a Philox generator keyed by the seed and a tuple of counters."""
    if seed < 0 or any(c < 0 for c in counters):
        raise ValueError("seed and counters must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *counters])))


def block_sizes(n: int, block: int = BLOCK_SIZE) -> list[int]:
    full, rest = divmod(n, block)
    return [block] * full + ([rest] if rest else [])


def map_blocks(fn: Callable[[int], T], count: int, workers: int = 1) -> list[T]:
    """Evaluate ``fn(i)`` for ``i < count`` and return results in index order."""
    if workers <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def concat(parts: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate(parts) if parts else np.empty(0)
