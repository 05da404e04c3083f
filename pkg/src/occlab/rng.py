"""Counter-based random streams for reproducible, parallelizable replicas.

Streams are indexed by ``(master_seed, stream_id)`` on top of numpy's Philox
counter-based generator, so replicas can run data-parallel with no shared
state.  Identical (master_seed, stream_id) pairs reproduce draws bit-exactly;
distinct stream ids give statistically independent streams.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SeedSpec:
    """Address of one random stream: a 64-bit master seed plus a stream id."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= int(self.master_seed) < 2**64):
            raise ValueError("master_seed must fit in 64 bits")
        if not (0 <= int(self.stream_id) < 2**64):
            raise ValueError("stream_id must fit in 64 bits")

    def seed_sequence(self, *subkeys: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(
            entropy=int(self.master_seed),
            spawn_key=(int(self.stream_id), *map(int, subkeys)),
        )

    def generator(self, *subkeys: int) -> np.random.Generator:
        """Philox generator for this stream, optionally sub-keyed.

        Sub-keys address nested parallel units, e.g. (sample_id, path_id).
        """
        return np.random.Generator(np.random.Philox(self.seed_sequence(*subkeys)))

    def child(self, *subkeys: int) -> "SeedSpec":
        """Stream for a nested unit, folded back into a flat stream id."""
        # fold the spawn key into a single 64-bit id via SeedSequence hashing
        folded = self.seed_sequence(*subkeys).generate_state(1, dtype=np.uint64)[0]
        return SeedSpec(self.master_seed, int(folded))


def replica_generators(seed: SeedSpec, n: int) -> list[np.random.Generator]:
    """Independent generators for replicas 0..n-1 of one experiment stream."""
    return [seed.generator(i) for i in range(n)]
