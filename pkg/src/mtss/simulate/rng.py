"""Reproducible random streams for the samplers.

All randomness flows through counter-based Philox streams keyed by
(seed, stream).  Streams with distinct indices are statistically independent
and never overlap, so a run parallelized over paths (one stream per path)
produces bit-identical output no matter how the paths are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mtss.core import ParameterError

__all__ = ["RngConfig"]

_U64 = 2**64


@dataclass(frozen=True)
class RngConfig:
    """Seed plus the number of independent substreams a run may address."""

    seed: int
    substream_count: int = 1

    def __post_init__(self):
        if not isinstance(self.seed, int) or not (0 <= self.seed < _U64):
            raise ParameterError(f"seed must be an integer in [0, 2^64), got {self.seed!r}")
        if not isinstance(self.substream_count, int) or self.substream_count < 1:
            raise ParameterError(
                f"substream_count must be a positive integer, got {self.substream_count!r}"
            )

    def bit_generator(self, stream: int = 0) -> np.random.Philox:
        if not (0 <= stream < self.substream_count):
            raise ParameterError(
                f"stream index {stream} outside [0, {self.substream_count})"
            )
        return np.random.Philox(key=np.array([self.seed, stream], dtype=np.uint64))

    def generator(self, stream: int = 0) -> np.random.Generator:
        return np.random.Generator(self.bit_generator(stream))
