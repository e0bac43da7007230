"""Counter-based random streams keyed by (seed, labels).

Every consumer asks for its own stream, so adding workers or reordering grid
points never changes which numbers a computation sees.
"""

import zlib

import numpy as np


def _key(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & 0xFFFFFFFF
    return zlib.crc32(repr(label).encode("utf-8"))


def rng_stream(seed, *labels) -> np.random.Generator:
    """Independent Philox generator for ``seed`` and a tuple of labels."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF] + [_key(lb) for lb in labels])
    return np.random.Generator(np.random.Philox(ss))
