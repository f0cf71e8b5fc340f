from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

from ..ledger import GENESIS_PREV_HASH, Block
from ..netsim import ms_to_us

if TYPE_CHECKING:
    from ..netsim import Scheduler
    from ..settings.topology import OrderingConfig
    from .proposal import Envelope

logger = logging.getLogger(__name__)


@dataclass
class CutRecord:
    height: int
    size: int
    first_arrival: int
    cut_at: int
    reason: str


class OrderingService:
    """A single serial orderer that batches envelopes into blocks.

    A block is cut as soon as max_message_count envelopes are pending, or
    batch_timeout after the oldest pending envelope arrived, whichever is first.
    """

    def __init__(
        self,
        scheduler: Scheduler,
        config: OrderingConfig,
        on_block: Callable[[Block], None],
    ):
        self.scheduler = scheduler
        self.batch_timeout_us = ms_to_us(config.batch_timeout_ms)
        self.max_message_count = config.max_message_count
        self.on_block = on_block
        self.pending: list[Envelope] = []
        self.first_arrival = 0
        self.batch = 0
        self.height = 0
        self.prev_hash = GENESIS_PREV_HASH
        self.cuts: list[CutRecord] = []
        self.received = 0

    def bootstrap(self, genesis: Block):
        self.height = genesis.height
        self.prev_hash = genesis.hash()

    def receive(self, envelope: Envelope):
        """Enqueue at the current virtual time; this instant is the ack time."""
        self.received += 1
        self.pending.append(envelope)
        if len(self.pending) == 1:
            self.first_arrival = self.scheduler.now
            batch = self.batch
            self.scheduler.call_later(
                self.batch_timeout_us,
                lambda: self._timeout(batch),
                label=f"batch timeout {batch}",
            )
        if len(self.pending) >= self.max_message_count:
            self.cut("size")

    def _timeout(self, batch: int):
        if batch == self.batch and self.pending:
            self.cut("timeout")

    def cut(self, reason: str = "manual") -> Block | None:
        if not self.pending:
            return None
        txs = self.pending[: self.max_message_count]
        self.pending = self.pending[self.max_message_count :]
        self.batch += 1
        self.height += 1
        block = Block(self.height, self.prev_hash, self.scheduler.now, txs)
        self.prev_hash = block.hash()
        self.cuts.append(
            CutRecord(self.height, len(txs), self.first_arrival, self.scheduler.now, reason)
        )
        logger.info("cut block %s with %s txs (%s)", block.height, len(txs), reason)
        if self.pending:
            self.first_arrival = self.scheduler.now
            batch = self.batch
            self.scheduler.call_later(
                self.batch_timeout_us,
                lambda: self._timeout(batch),
                label=f"batch timeout {batch}",
            )
        self.on_block(block)
        return block
