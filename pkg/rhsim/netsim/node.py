from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

from pydantic import BaseModel, Field, validator

from ..settings import settings
from .scheduler import ms_to_us

if TYPE_CHECKING:
    from .scheduler import Scheduler

logger = logging.getLogger(__name__)


class NodeProfile(BaseModel):
    """Service times of one simulated node, in milliseconds.

    Every node is a single FIFO server: endorsement and commit work on a peer
    compete for the same server.
    """

    endorse_service_ms: float = 0.0
    commit_service_ms_per_tx: float = 0.0
    order_service_ms: float = 0.0
    verify_service_ms: float = 0.0
    policy_eval_ms: float = 0.0
    submit_service_ms: float = 0.0
    link_latency_ms: dict[str, float] = Field(default_factory=dict)
    default_link_latency_ms: float = Field(
        default_factory=lambda: settings.default_link_latency_ms
    )

    @validator(
        "endorse_service_ms",
        "commit_service_ms_per_tx",
        "order_service_ms",
        "verify_service_ms",
        "policy_eval_ms",
        "submit_service_ms",
        "default_link_latency_ms",
    )
    def non_negative(cls, v):
        if v < 0:
            raise ValueError("durations must be non-negative")
        return v

    @validator("link_latency_ms")
    def non_negative_links(cls, v):
        for dst, ms in v.items():
            if ms < 0:
                raise ValueError(f"negative link latency to {dst}")
        return v

    def link_latency_us(self, dst: str) -> int:
        return ms_to_us(self.link_latency_ms.get(dst, self.default_link_latency_ms))

    def service_us(self, kind: str) -> int:
        """Service time of one endorse, order, verify or submit job."""
        return ms_to_us(getattr(self, f"{kind}_service_ms"))

    def commit_cost_us(self, tx_count: int, endorsements: int, orgs: int) -> int:
        ms = (
            self.commit_service_ms_per_tx * tx_count
            + self.verify_service_ms * endorsements
            + self.policy_eval_ms * endorsements * orgs
        )
        return ms_to_us(ms)


# Calibration knobs, not hardware claims.
PROFILE_PRESETS: dict[str, dict] = {
    "server": dict(
        endorse_service_ms=2.0,
        commit_service_ms_per_tx=1.0,
        order_service_ms=1.0,
        verify_service_ms=0.2,
        policy_eval_ms=0.1,
    ),
    "pi": dict(
        endorse_service_ms=3.0,
        commit_service_ms_per_tx=2.0,
        order_service_ms=2.0,
        verify_service_ms=0.5,
        policy_eval_ms=3.0,
    ),
    "client": dict(
        verify_service_ms=0.5,
        submit_service_ms=60.0,
    ),
}


def resolve_profile(value: str | dict | NodeProfile) -> NodeProfile:
    if isinstance(value, NodeProfile):
        return value
    if isinstance(value, str):
        try:
            return NodeProfile(**PROFILE_PRESETS[value])
        except KeyError:
            raise ValueError(f"unknown profile preset {value}")
    return NodeProfile(**value)


@dataclass
class Node:
    """A named single-server FIFO queue on the scheduler."""

    name: str
    profile: NodeProfile
    scheduler: Scheduler

    busy_until: int = field(default=0, init=False)
    queued: int = field(default=0, init=False)
    max_queued: int = field(default=0, init=False)
    jobs_done: int = field(default=0, init=False)
    busy_time: int = field(default=0, init=False)

    def submit(self, service_us: int, on_done: Callable[[], None], label: str = ""):
        now = self.scheduler.now
        start = max(now, self.busy_until)
        self.busy_until = start + service_us
        self.busy_time += service_us
        self.queued += 1
        self.max_queued = max(self.max_queued, self.queued)

        def done():
            self.queued -= 1
            self.jobs_done += 1
            on_done()

        self.scheduler.schedule(self.busy_until, done, label=label or self.name)

    def utilization(self, elapsed_us: int | None = None) -> float:
        elapsed = elapsed_us if elapsed_us is not None else self.scheduler.now
        if elapsed <= 0:
            return 0.0
        return min(1.0, self.busy_time / elapsed)

    def __repr__(self):
        return f"<Node {self.name} queued={self.queued}>"
