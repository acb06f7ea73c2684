"""Counter-based random streams for reproducible (parallel) sampling.

All randomness in the package flows through Philox, a counter-based
generator: a stream is fully determined by the 128-bit key (seed, tagged
index), so results never depend on which thread consumed which stream, and
disjoint indices can never alias each other's state.
"""

from __future__ import annotations

import numpy as np

__all__ = ["RandomStream", "philox_generator"]

_MASK64 = (1 << 64) - 1

# purpose tags keep independent subsystems from ever sharing a key
PURPOSE_USER = 0
PURPOSE_MC_CHUNK = 1
PURPOSE_SAMPLER = 2


def philox_generator(seed: int, index: int = 0, purpose: int = PURPOSE_USER) -> np.random.Generator:
    """Generator for stream `index` of `seed` within a purpose namespace."""
    key = ((int(purpose) << 56) ^ int(index)) & _MASK64
    return np.random.Generator(np.random.Philox(key=[int(seed) & _MASK64, key]))


class RandomStream:
    """A named, reproducible stream: (seed, stream_index) -> generator."""

    def __init__(self, seed: int, stream_index: int = 0):
        self.seed = int(seed)
        self.stream_index = int(stream_index)
        self.generator = philox_generator(self.seed, self.stream_index, PURPOSE_SAMPLER)

    def spawn(self, stream_index: int) -> "RandomStream":
        return RandomStream(self.seed, stream_index)

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, stream_index={self.stream_index})"
