"""Deterministic random streams derived from one master seed.

Every consumer of randomness asks for a stream by *purpose* plus an optional
counter tuple.  Streams are Philox generators keyed from the master seed and
the purpose, with the counter words carrying the caller's indices, so two
different ``(purpose, indices)`` pairs never share draws and the result of a
run does not depend on how work is split across threads or processes.
"""

from __future__ import annotations

from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    PLACEMENT = 0
    WEIGHTS = 1
    BELIEFS = 2
    FLAGS = 3
    EDGES = 4
    SWITCHING = 5
    NULL_MODEL = 6


def _key(seed: int, purpose: Stream) -> np.ndarray:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(purpose),))
    return ss.generate_state(2, dtype=np.uint64)


def stream(seed: int, purpose: Stream, *indices: int) -> np.random.Generator:
    """Return the generator for ``purpose`` at counter ``indices`` (max 2).

    The lowest counter word is left at zero; Philox increments it while
    producing output, so a single stream can emit up to 2**66 doubles before
    it could touch a neighbouring counter.
    """
    if len(indices) > 2:
        raise ValueError("at most two counter indices are supported")
    words = [0, 0, 0, 0]
    for i, value in enumerate(indices):
        if value < 0:
            raise ValueError("counter indices must be non-negative")
        words[i + 1] = int(value)
    return np.random.Generator(np.random.Philox(key=_key(seed, purpose), counter=words))


class KeyedRows:
    """Cached key for one purpose; hands out one generator per (row, step)."""

    def __init__(self, seed: int, purpose: Stream):
        self._key = _key(seed, purpose)

    def row(self, row: int, step: int) -> np.random.Generator:
        return np.random.Generator(
            np.random.Philox(key=self._key, counter=[0, int(row), int(step), 0])
        )


def derive_seeds(master_seed: int, count: int) -> list[int]:
    """Per-run seeds for an ensemble, reproducible from ``master_seed``."""
    if count < 1:
        raise ValueError("need at least one seed")
    state = np.random.SeedSequence(int(master_seed)).generate_state(count, dtype=np.uint32)
    return [int(s) for s in state]
