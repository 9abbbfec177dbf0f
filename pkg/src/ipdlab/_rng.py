"""Deterministic random substreams keyed by integer tuples."""

import random

import numpy as np

PROTOCOL_TAGS = {"standard": 1, "noisy": 2, "probend": 3, "noisy_probend": 4}
SAMPLING_TAG = 0


def _entropy(key):
    words = [int(x) for x in key]
    if any(w < 0 for w in words):
        raise ValueError(f"stream keys must be non-negative integers, got {key}")
    return words or [0]


def stream_seed(*key) -> int:
    """A 64-bit seed that depends only on ``key``, never on call order."""
    words = np.random.SeedSequence(_entropy(key)).generate_state(2, dtype=np.uint32)
    return int(words[0]) << 32 | int(words[1])


def substream(*key) -> random.Random:
    return random.Random(stream_seed(*key))


def np_substream(*key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(_entropy(key)))
