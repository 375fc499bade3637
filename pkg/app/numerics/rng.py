"""Reproducible random streams

Streams are backed by numpy's Philox counter-based bit generator. The 128-bit
Philox key is derived from ``(seed, *path)`` through ``numpy.random.SeedSequence``,
so ``stream.child(k)`` gives an independent, uncorrelated sub-stream for fold
``k`` without consuming draws from the parent.
"""

from typing import Any, List, MutableSequence, Sequence, Tuple, TypeVar

import numpy as np

T = TypeVar("T")


def _philox_key(seed: int, path: Tuple[int, ...]) -> np.ndarray:
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=path)
    return sequence.generate_state(2, dtype=np.uint64)


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 63-bit seed for a named sub-task (e.g. a fold index)"""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


class RngStream:
    """Seeded random stream with a splittable key path"""

    def __init__(self, seed: int, path: Sequence[int] = ()):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)
        self._bit_generator = np.random.Philox(key=_philox_key(self.seed, self.path))
        self.generator = np.random.Generator(self._bit_generator)

    @property
    def counter(self) -> int:
        """Philox block counter; advances with every draw"""
        state: Any = self._bit_generator.state
        words = state["state"]["counter"]
        return int(words[0]) + (int(words[1]) << 64)

    def child(self, *keys: int) -> "RngStream":
        """Independent sub-stream identified by ``keys``"""
        return RngStream(self.seed, self.path + tuple(keys))

    def draw_normal(
        self, shape: Any = None, mean: float = 0.0, std: float = 1.0
    ) -> Any:
        return self.generator.normal(mean, std, size=shape)

    def draw_uniform(
        self, shape: Any = None, low: float = 0.0, high: float = 1.0
    ) -> Any:
        return self.generator.uniform(low, high, size=shape)

    def integers(self, low: int, high: int, shape: Any = None) -> Any:
        """Integers in [low, high)"""
        return self.generator.integers(low, high, size=shape)

    def shuffle(self, items: MutableSequence[T]) -> None:
        """In-place Fisher-Yates shuffle driven by this stream"""
        for i in range(len(items) - 1, 0, -1):
            j = int(self.generator.integers(0, i + 1))
            items[i], items[j] = items[j], items[i]

    def shuffled(self, items: Sequence[T]) -> List[T]:
        out = list(items)
        self.shuffle(out)
        return out

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, path={self.path}, counter={self.counter})"


def seeded_rng(seed: int) -> RngStream:
    """Root stream for a seed"""
    return RngStream(seed)
