"""
Deterministic random streams.

Every replicate draws from its own generator derived from
(master seed, cell id, replicate index) through numpy's SeedSequence, so the
thread layout of a run can never change its results.
"""

import hashlib
from typing import Union

import numpy as np

Key = Union[int, str]


def stable_key(value: Key) -> int:
    """Map a string or int key to a stable 32-bit integer"""
    if isinstance(value, int):
        return value & 0xFFFFFFFF
    digest = hashlib.sha256(value.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def derive_rng(master_seed: int, *keys: Key) -> np.random.Generator:
    """Generator for the stream addressed by (master_seed, *keys)"""
    seq = np.random.SeedSequence(
        entropy=master_seed, spawn_key=tuple(stable_key(k) for k in keys)
    )
    return np.random.Generator(np.random.PCG64(seq))
