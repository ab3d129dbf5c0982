"""Seeded RNG substreams.

All randomness in an experiment flows from one root seed; independent
purposes (init, shuffling, subsampling, noise) get named substreams so
adding a consumer never perturbs the others.
"""

import zlib

import numpy as np


def substream(seed, *names):
    """Generator derived deterministically from ``seed`` and a name path."""
    key = tuple(zlib.crc32(str(n).encode("utf-8")) for n in names)
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))
