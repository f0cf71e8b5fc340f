from __future__ import annotations

import logging
from typing import Iterator, Literal, Union

from pydantic import BaseModel, ValidationError, validator

from ..errors import ConfigError
from ..netsim import Rng

logger = logging.getLogger(__name__)


def gen_constant(delay_ms: float, deviation: float, rng: Rng) -> Iterator[float]:
    """Delays drawn uniformly from delay * (1 - deviation) .. delay * (1 + deviation)."""
    low, high = delay_ms * (1 - deviation), delay_ms * (1 + deviation)
    while True:
        yield delay_ms if deviation == 0 else rng.uniform(low, high)


def gen_poisson(lambda_tps: float, rng: Rng) -> Iterator[float]:
    """Exponential inter-arrivals with mean 1000 / lambda_tps ms."""
    mean_ms = 1000.0 / lambda_tps
    while True:
        yield rng.exponential(mean_ms)


class ConstantRate(BaseModel):
    kind: Literal["constant"] = "constant"
    delay_ms: float
    deviation: float = 0.3

    @validator("delay_ms")
    def positive_delay(cls, v):
        if v <= 0:
            raise ValueError("delay_ms must be positive")
        return v

    @validator("deviation")
    def deviation_range(cls, v):
        if not 0 <= v < 1:
            raise ValueError("deviation must be in [0, 1)")
        return v

    def delays(self, rng: Rng) -> Iterator[float]:
        return gen_constant(self.delay_ms, self.deviation, rng)

    def scaled(self, factor: float) -> ConstantRate:
        """Offer factor times the traffic."""
        return self.copy(update={"delay_ms": self.delay_ms / factor})

    @property
    def mean_delay_ms(self) -> float:
        return self.delay_ms

    def __str__(self):
        return f"constant({self.delay_ms:g}ms, ±{self.deviation:g})"


class Poisson(BaseModel):
    kind: Literal["poisson"] = "poisson"
    lambda_tps: float

    @validator("lambda_tps")
    def positive_rate(cls, v):
        if v <= 0:
            raise ValueError("lambda_tps must be positive")
        return v

    @classmethod
    def from_interarrival_ms(cls, mean_ms: float) -> Poisson:
        if mean_ms <= 0:
            raise ConfigError("mean inter-arrival must be positive")
        return cls(lambda_tps=1000.0 / mean_ms)

    def delays(self, rng: Rng) -> Iterator[float]:
        return gen_poisson(self.lambda_tps, rng)

    def scaled(self, factor: float) -> Poisson:
        return self.copy(update={"lambda_tps": self.lambda_tps * factor})

    @property
    def mean_delay_ms(self) -> float:
        return 1000.0 / self.lambda_tps

    def __str__(self):
        return f"poisson({self.lambda_tps:g} tps)"


TrafficProfile = Union[ConstantRate, Poisson]


def traffic_profile(
    kind: str,
    delay_ms: float | None = None,
    deviation: float = 0.3,
    lambda_tps: float | None = None,
    lambda_interarrival_ms: float | None = None,
) -> TrafficProfile:
    """Build a profile from flat options, as the command line gives them."""
    try:
        if kind == "constant":
            if delay_ms is None:
                raise ConfigError("constant traffic needs delay_ms")
            return ConstantRate(delay_ms=delay_ms, deviation=deviation)
        if kind == "poisson":
            if (lambda_tps is None) == (lambda_interarrival_ms is None):
                raise ConfigError(
                    "poisson traffic needs exactly one of lambda_tps, lambda_interarrival_ms"
                )
            if lambda_interarrival_ms is not None:
                return Poisson.from_interarrival_ms(lambda_interarrival_ms)
            return Poisson(lambda_tps=lambda_tps)
    except ValidationError as e:
        raise ConfigError(f"invalid {kind} traffic: {e}")
    raise ConfigError(f"unknown traffic profile {kind!r}")


def parse_traffic(data: dict) -> TrafficProfile:
    kind = data.get("kind", "constant")
    options = {k: v for k, v in data.items() if k != "kind"}
    try:
        return traffic_profile(kind, **options)
    except TypeError as e:
        raise ConfigError(f"invalid traffic options {sorted(options)}: {e}")
