from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

from ..errors import UnknownNode
from .node import Node, NodeProfile
from .scheduler import Scheduler

logger = logging.getLogger(__name__)


@dataclass
class SimNetwork:
    scheduler: Scheduler = field(default_factory=Scheduler)
    nodes: dict[str, Node] = field(default_factory=dict, init=False)
    messages: int = field(default=0, init=False)

    @property
    def now(self) -> int:
        return self.scheduler.now

    def add_node(self, name: str, profile: NodeProfile) -> Node:
        node = Node(name, profile, self.scheduler)
        self.nodes[name] = node
        return node

    def node(self, name: str) -> Node:
        try:
            return self.nodes[name]
        except KeyError:
            raise UnknownNode(f"no such node {name}")

    def send(
        self,
        src: str,
        dst: str,
        handler: Callable[[], None],
        service_us: int = 0,
        label: str = "",
    ):
        """Deliver after the link latency, then queue a job on the destination."""
        source = self.node(src)
        target = self.node(dst)
        latency = source.profile.link_latency_us(dst)
        self.messages += 1
        logger.debug("send %s -> %s %s", src, dst, label)
        self.scheduler.call_later(
            latency,
            lambda: target.submit(service_us, handler, label=label),
            label=f"deliver {label}",
        )
