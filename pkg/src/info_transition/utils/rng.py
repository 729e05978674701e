"""Seeded, splittable random number generation for reproducible trajectories."""
from __future__ import annotations

from typing import Any, Dict, List, Optional

import numpy as np


class SeededRNG:
    """Wrapper around a PCG64 ``numpy.random.Generator`` built from a SeedSequence.

    Children obtained through :meth:`spawn` are statistically independent and do
    not depend on how many draws the parent has made, so trajectory results are
    schedule-independent.
    """

    def __init__(self, seed: int, spawn_key: tuple = ()):
        self._seed = int(seed)
        self._spawn_key = tuple(spawn_key)
        self._seq = np.random.SeedSequence(self._seed, spawn_key=self._spawn_key)
        self._gen = np.random.Generator(np.random.PCG64(self._seq))

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def spawn_key(self) -> tuple:
        return self._spawn_key

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def random(self) -> float:
        return float(self._gen.random())

    def choice(self, probabilities: np.ndarray) -> int:
        """Inverse-CDF draw of an index from a probability vector"""
        cdf = np.cumsum(probabilities)
        u = self._gen.random() * cdf[-1]
        return int(min(np.searchsorted(cdf, u, side="right"), len(cdf) - 1))

    def spawn(self, n: int) -> List[SeededRNG]:
        """Create ``n`` independent children keyed by their position"""
        return [SeededRNG(self._seed, self._spawn_key + (i,)) for i in range(n)]

    def child_seed(self) -> int:
        """Derive a 63-bit integer seed for collaborators that need a plain int"""
        return int(self._seq.generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))

    def snapshot(self) -> Dict[str, Any]:
        """JSON-serialisable state sufficient to replay subsequent draws"""
        return {
            "seed": self._seed,
            "spawn_key": list(self._spawn_key),
            "bit_generator": self._gen.bit_generator.state,
        }

    @classmethod
    def restore(cls, snapshot: Dict[str, Any]) -> SeededRNG:
        rng = cls(snapshot["seed"], tuple(snapshot.get("spawn_key", ())))
        state: Optional[dict] = snapshot.get("bit_generator")
        if state is not None:
            rng._gen.bit_generator.state = state
        return rng
