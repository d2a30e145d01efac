"""Counter-based random streams.

Every (seed, stream) pair is an independent, reproducible sequence; the
Philox generator underneath guarantees that the i-th draw from a given
pair is identical across runs and machines.  Disjoint stream ids let
data generation, training and ensemble members sample independently.
"""

from __future__ import annotations

import numpy as np


class RngStream:
    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream = int(stream) & 0xFFFFFFFFFFFFFFFF
        self._gen = np.random.Generator(
            np.random.Philox(key=np.array([self.seed, self.stream], dtype=np.uint64))
        )

    def child(self, stream: int) -> "RngStream":
        """Derived stream under the same seed."""
        return RngStream(self.seed, stream)

    def normal(self, shape=None) -> np.ndarray:
        return self._gen.standard_normal(shape)

    def uniform(self, shape=None) -> np.ndarray:
        return self._gen.random(shape)

    def integers(self, low: int, high: int, size=None):
        return self._gen.integers(low, high, size=size)

    def choice_weighted(self, weights) -> int:
        """Index drawn with the given probabilities (inverse CDF)."""
        cdf = np.cumsum(np.asarray(weights, dtype=np.float64))
        u = self._gen.random() * cdf[-1]
        return int(np.searchsorted(cdf, u, side="right").clip(0, len(cdf) - 1))

    def truncated_normal(self, shape, sigma: float, bound_sigmas: float = 2.0):
        """Gaussian draws redrawn while outside +-bound_sigmas."""
        out = self._gen.standard_normal(shape)
        mask = np.abs(out) > bound_sigmas
        while mask.any():
            out[mask] = self._gen.standard_normal(int(mask.sum()))
            mask = np.abs(out) > bound_sigmas
        return out * sigma
