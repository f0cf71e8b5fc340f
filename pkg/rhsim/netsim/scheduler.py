from __future__ import annotations

import heapq
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from ..errors import TimeTravel

logger = logging.getLogger(__name__)

US_PER_MS = 1000


def ms_to_us(ms: float | int | Fraction) -> int:
    # Decimal strings keep 0.1 ms style config values exact.
    return int(round(Fraction(str(ms)) * US_PER_MS))


def us_to_ms(us: int) -> float:
    return us / US_PER_MS


@dataclass(order=True)
class SimEvent:
    fire_at: int
    seq: int
    action: Callable[[], None] = field(compare=False)
    label: str = field(default="", compare=False)


@dataclass
class RunResult:
    now: int
    executed: int
    pending: int


@dataclass
class Scheduler:
    """Virtual-time event loop; time is integer microseconds."""

    now: int = 0
    record_trace: bool = False

    executed: int = field(default=0, init=False)
    trace: list[tuple[int, int, str]] = field(default_factory=list, init=False)
    _queue: list[SimEvent] = field(default_factory=list, init=False)
    _seq: itertools.count = field(default_factory=itertools.count, init=False)

    def schedule(self, at: int, action: Callable[[], None], label: str = "") -> SimEvent:
        if at < self.now:
            raise TimeTravel(f"cannot schedule at {at} before now {self.now}")
        event = SimEvent(at, next(self._seq), action, label)
        heapq.heappush(self._queue, event)
        return event

    def call_later(self, delay: int, action: Callable[[], None], label: str = ""):
        return self.schedule(self.now + delay, action, label=label)

    @property
    def pending(self) -> int:
        return len(self._queue)

    def run_until(self, deadline: int | None = None) -> RunResult:
        executed = 0
        while self._queue:
            if deadline is not None and self._queue[0].fire_at > deadline:
                break
            event = heapq.heappop(self._queue)
            self.now = event.fire_at
            if self.record_trace:
                self.trace.append((event.fire_at, event.seq, event.label))
            event.action()
            executed += 1
        if deadline is not None and deadline > self.now:
            self.now = deadline
        self.executed += executed
        return RunResult(now=self.now, executed=executed, pending=len(self._queue))

    def run_while(self, predicate: Callable[[], bool]) -> RunResult:
        """Run events until the predicate turns false or the queue drains."""
        executed = 0
        while self._queue and predicate():
            event = heapq.heappop(self._queue)
            self.now = event.fire_at
            if self.record_trace:
                self.trace.append((event.fire_at, event.seq, event.label))
            event.action()
            executed += 1
        self.executed += executed
        return RunResult(now=self.now, executed=executed, pending=len(self._queue))
