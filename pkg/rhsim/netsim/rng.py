"""Seeded randomness for the simulator.

All randomness in a run comes from one PCG64DXSM bit generator seeded with the
run seed. Named child streams are derived through numpy's SeedSequence so that
adding a consumer does not shift the draws of another.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

ALGORITHM = "PCG64DXSM"


def stream_words(stream: str) -> tuple[int, ...]:
    """The sha256 of a stream name as eight 32-bit spawn key words."""
    digest = hashlib.sha256(stream.encode()).digest()
    return tuple(np.frombuffer(digest, dtype="<u4").tolist())


@dataclass
class Rng:
    seed: int
    stream: str = ""

    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        spawn_key = stream_words(self.stream) if self.stream else ()
        seq = np.random.SeedSequence(self.seed & 0xFFFFFFFFFFFFFFFF, spawn_key=spawn_key)
        self.generator = np.random.Generator(np.random.PCG64DXSM(seq))

    @property
    def algorithm(self) -> str:
        return ALGORITHM

    def child(self, name: str) -> Rng:
        stream = f"{self.stream}/{name}" if self.stream else name
        return Rng(self.seed, stream)

    def uniform(self, low: float, high: float) -> float:
        return float(self.generator.uniform(low, high))

    def exponential(self, mean: float) -> float:
        return float(self.generator.exponential(mean))

    def integers(self, low: int, high: int) -> int:
        return int(self.generator.integers(low, high))

    def bytes(self, n: int) -> bytes:
        return self.generator.bytes(n)

    def choice(self, items: list):
        return items[self.integers(0, len(items))]
