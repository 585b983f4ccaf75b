"""Deterministic, labeled random streams.

Every stochastic choice in the engine (dropout masks, mixup coefficients,
permutations, split sampling, epoch coins, weight init) draws from a stream
derived from a single 64-bit seed plus a purpose label. Streams with
different labels are statistically independent, and the same (seed, label)
pair yields the same draw sequence on every platform numpy supports.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _label_key(label: str) -> int:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class Rng:
    """Named deterministic generator factory with per-purpose substreams.

    ``derive(label)`` returns a stateful ``numpy.random.Generator`` that is
    cached per label, so repeated calls continue the same stream.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: dict[str, np.random.Generator] = {}

    def derive(self, label: str) -> np.random.Generator:
        gen = self._streams.get(label)
        if gen is None:
            seq = np.random.SeedSequence([self.seed & 0xFFFFFFFFFFFFFFFF, _label_key(label)])
            gen = np.random.Generator(np.random.PCG64(seq))
            self._streams[label] = gen
        return gen

    def fresh(self, label: str) -> np.random.Generator:
        """A new, rewound generator for (seed, label); does not touch the cache."""
        seq = np.random.SeedSequence([self.seed & 0xFFFFFFFFFFFFFFFF, _label_key(label)])
        return np.random.Generator(np.random.PCG64(seq))
