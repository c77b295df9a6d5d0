"""Counter-based random streams.

Every stream is a Philox4x64 generator whose 128-bit key is derived from
``(seed, replication, purpose)``. Positions in a stream are addressed by the
counter, so a block of draws can be regenerated in isolation by advancing
the counter without touching anything that comes before it.
"""
from __future__ import annotations

import numpy as np

# one Philox block yields four uint64 words
WORDS_PER_BLOCK = 4
# uniform slots reserved per tree node (two Philox blocks)
SLOTS_PER_NODE = 8

PURPOSE_TREE = 0
PURPOSE_BRANCH = 1
PURPOSE_TSAMPLE = 2
PURPOSE_LIMITS = 3

_TWO_M53 = 2.0**-53


def stream_key(seed: int, replication: int = 0, purpose: int = PURPOSE_TREE) -> np.ndarray:
    if seed < 0 or replication < 0:
        raise ValueError("seed and replication must be non-negative")
    ss = np.random.SeedSequence([int(seed), int(replication), int(purpose)])
    return ss.generate_state(2, dtype=np.uint64)


def bit_generator(seed: int, replication: int = 0, purpose: int = PURPOSE_TREE,
                  block: int = 0) -> np.random.Philox:
    bg = np.random.Philox(key=stream_key(seed, replication, purpose))
    if block:
        bg.advance(block)
    return bg


def to_uniform(raw: np.ndarray) -> np.ndarray:
    """Map uint64 words to doubles on the open interval (0, 1)."""
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


def uniforms(seed: int, replication: int, purpose: int, start_word: int, count: int) -> np.ndarray:
    """``count`` uniforms starting at word ``start_word`` of the stream."""
    if start_word % WORDS_PER_BLOCK:
        raise ValueError("start_word must be aligned to a Philox block")
    bg = bit_generator(seed, replication, purpose, block=start_word // WORDS_PER_BLOCK)
    return to_uniform(bg.random_raw(count))
