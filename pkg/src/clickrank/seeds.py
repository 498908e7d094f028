"""Named random streams derived from a single root seed.

Every module that needs randomness asks for a stream by name, so one
``--seed`` flag reproduces the whole pipeline while modules stay
independently reseedable (adding a draw in one stream never shifts
another).
"""

import hashlib

import numpy as np


def stream(seed: int, name: str) -> np.random.Generator:
    """Return a generator for the (seed, name) stream.

    The stream name is folded into the seed material via a stable hash, so
    the mapping is identical across runs, platforms and processes.
    """
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng(
        np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, *words])
    )
