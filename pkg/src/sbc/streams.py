"""Deterministic, splittable random streams.

Every stream is derived from (master_seed, replication index, purpose tag),
so a run is reproducible no matter how replications are scheduled across
workers.  The underlying bit generator is Philox, a counter-based generator
whose streams are cheap to create and statistically independent.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _tag_code(tag: str) -> int:
    """Stable 32-bit code for a purpose tag (independent of PYTHONHASHSEED)."""
    return int.from_bytes(hashlib.blake2b(tag.encode("utf-8"), digest_size=4).digest(), "big")


class RandomStream:
    """Single-owner source of randomness for one purpose within one replication.

    Streams must never be shared between concurrent consumers; derive a fresh
    one per (replication, tag) instead.
    """

    def __init__(self, master_seed: int, replication: int = 0, tag: str = "root"):
        if master_seed < 0 or replication < 0:
            raise ValueError("master_seed and replication must be non-negative")
        self.master_seed = int(master_seed)
        self.replication = int(replication)
        self.tag = tag
        seq = np.random.SeedSequence(
            entropy=self.master_seed, spawn_key=(self.replication, _tag_code(tag))
        )
        self.gen = np.random.Generator(np.random.Philox(seed=seq))

    @property
    def stream_id(self) -> str:
        return f"{self.master_seed}/{self.replication}/{self.tag}"

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.gen.normal(loc, scale, size)

    def standard_normal(self, size=None):
        return self.gen.standard_normal(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.gen.uniform(low, high, size)

    def __repr__(self) -> str:
        return f"RandomStream({self.stream_id})"
