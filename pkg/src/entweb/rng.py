"""Per-trial random streams.

Trial ``k`` of a run with master seed ``s`` draws from
``Generator(PCG64(SeedSequence([s, k])))``, so results do not depend on how
trials are split across workers.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

import numpy as np

MAX_SEED = 2 ** 64 - 1


def trial_rng(master_seed: int, index: int) -> np.random.Generator:
    if not 0 <= master_seed <= MAX_SEED:
        raise ValueError(f"master seed must be a 64-bit unsigned integer, got {master_seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(master_seed), int(index)])))


def chunk_bounds(n_trials: int, chunk_size: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + chunk_size, n_trials)) for lo in range(0, n_trials, chunk_size)]


def map_chunks(fn: Callable, chunks: Sequence, workers: int = 1) -> list:
    """Apply ``fn`` to every chunk, in order, optionally in worker processes."""
    if workers <= 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, chunks))
