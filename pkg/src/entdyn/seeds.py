"""Deterministic stream splitting for parallel Monte Carlo.

Every random quantity in the package is drawn from a generator keyed by the
master seed plus a small integer tuple (purpose tag, grid index, sample
index, ...). Streams therefore depend only on logical indices, never on
worker scheduling, which makes results byte-identical for any worker count.
"""
from __future__ import annotations

import numpy as np

from .errors import ParameterDomainError

# Purpose tags keep unrelated draws on disjoint streams.
SWEEP = 1
STATIONARY = 2
LANGEVIN = 3
DYSON = 4
CONDITIONAL = 5
SCALING = 6
FIT = 7
SAMPLE = 8
MOMENTS = 9


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for the given master seed and index key."""
    if seed < 0:
        raise ParameterDomainError("seed must be nonnegative")
    spawn_key = tuple(int(k) for k in key)
    if any(k < 0 for k in spawn_key):
        raise ParameterDomainError("stream key entries must be nonnegative")
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=spawn_key))
