"""Deterministic generator derivation.

Every random stream is a PCG64 generator seeded from
``SeedSequence(entropy=master_seed, spawn_key=key)``. The key is a tuple of
small integers naming the stream, e.g. ``(STREAM_RUN, run_index)``. Streams
therefore do not depend on execution order or worker count.
"""

import numpy as np

STREAM_RUN = 0
STREAM_SELECT = 1
STREAM_STARTS = 2
STREAM_STABILITY = 3
STREAM_RESTART = 4


def derive_rng(master_seed: int, *key: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


def derive_seed(master_seed: int, *key: int) -> int:
    """A 63-bit integer seed for a child computation."""
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return int(seq.generate_state(1, dtype=np.uint64)[0]) >> 1
