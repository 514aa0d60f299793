"""Monte Carlo estimate of the seeding success rate and heralded fidelity."""

from __future__ import annotations

import functools
import math
from collections import Counter
from dataclasses import dataclass, field

from ..rng import chunk_bounds, map_chunks, trial_rng
from .network import pattern_key
from .trajectory import ProtocolConfig, run_trajectory

CHUNK = 2000


@dataclass
class SeedingEstimate:
    trials: int
    accepted: int
    rate: float
    stderr: float
    mean_fidelity: float | None
    min_fidelity: float | None
    uncorrectable: int = 0
    leftover: int = 0
    histogram: Counter = field(default_factory=Counter)
    accepted_histogram: Counter = field(default_factory=Counter)


def _run_chunk(bounds, config: ProtocolConfig, master_seed: int, engine: str):
    lo, hi = bounds
    fids, hist, acc_hist = [], Counter(), Counter()
    accepted = uncorrectable = leftover = 0
    for k in range(lo, hi):
        res = run_trajectory(config, trial_rng(master_seed, k), engine=engine)
        key = pattern_key(res.clicks)
        hist[key] += 1
        if res.status == "leftover":
            leftover += 1
        if res.accepted:
            accepted += 1
            acc_hist[key] += 1
            if res.correctable:
                fids.append(res.fidelity)
            else:
                uncorrectable += 1
    return accepted, uncorrectable, leftover, fids, hist, acc_hist


def estimate_success(config: ProtocolConfig, trials: int, master_seed: int = 0,
                     workers: int = 1, engine: str = "sector") -> SeedingEstimate:
    """Run ``trials`` independent trajectories and aggregate.

    Deterministic in ``master_seed``; chunking is fixed, so ``workers``
    changes wall time only.  ``mean_fidelity`` averages the accepted
    trajectories whose heralded state was correctable by single-qubit
    operations; the rest are counted in ``uncorrectable``.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    fn = functools.partial(_run_chunk, config=config, master_seed=master_seed, engine=engine)
    parts = map_chunks(fn, chunk_bounds(trials, CHUNK), workers)

    accepted = uncorrectable = leftover = 0
    fids, hist, acc_hist = [], Counter(), Counter()
    for a, u, l, f, h, ah in parts:
        accepted += a
        uncorrectable += u
        leftover += l
        fids.extend(f)
        hist.update(h)
        acc_hist.update(ah)
    rate = accepted / trials
    stderr = math.sqrt(rate * (1 - rate) / trials)
    mean_fid = math.fsum(fids) / len(fids) if fids else None
    min_fid = min(fids) if fids else None
    return SeedingEstimate(trials, accepted, rate, stderr, mean_fid, min_fid,
                           uncorrectable, leftover, hist, acc_hist)
