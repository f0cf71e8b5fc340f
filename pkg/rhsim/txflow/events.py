from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

from dotmap import DotMap

from ..chaincode import RideEventName
from ..errors import UnknownEvent
from ..ledger import ValidationCode, tx_id_of

if TYPE_CHECKING:
    from ..ledger import Block

logger = logging.getLogger(__name__)

EVENT_NAMES = {e.value for e in RideEventName}


@dataclass
class RideEvent:
    name: str
    ride_key: str
    payload: DotMap
    tx_id: str
    block_height: int
    tx_index: int


@dataclass
class TxStatus:
    tx_id: str
    code: ValidationCode
    block_height: int
    tx_index: int
    event: RideEvent | None = None

    @property
    def valid(self) -> bool:
        return self.code == ValidationCode.VALID


@dataclass
class Subscriber:
    client: str
    event_name: str
    callback: Callable[[RideEvent], None] = field(repr=False)
    delivered: int = 0

    def send(self, event: RideEvent):
        self.delivered += 1
        self.callback(event)

    def __eq__(self, other):
        return self.client == other.client and self.event_name == other.event_name


class EventHub:
    """Per-peer event service: chaincode event subscriptions and
    one-shot transaction status listeners, fired after each commit."""

    def __init__(self, peer: str):
        self.peer = peer
        self.subscribers: dict[str, list[Subscriber]] = {}
        self.tx_listeners: dict[str, list[Callable[[TxStatus], None]]] = {}

    def add_subscriber(
        self, client: str, event_name: str, callback: Callable[[RideEvent], None]
    ) -> Subscriber:
        if event_name not in EVENT_NAMES:
            raise UnknownEvent(f"no chaincode event named {event_name}")
        logger.info("add_subscriber %s %s at %s", client, event_name, self.peer)
        subscriber = Subscriber(client, event_name, callback)
        subscribers = self.subscribers.setdefault(event_name, [])
        if subscriber in subscribers:
            subscribers.remove(subscriber)
        subscribers.append(subscriber)
        return subscriber

    def remove_subscriber(self, client: str, event_name: str | None = None):
        logger.info("remove_subscriber %s %s at %s", client, event_name, self.peer)
        names = [event_name] if event_name is not None else list(self.subscribers)
        for name in names:
            self.subscribers[name] = [
                s for s in self.subscribers.get(name, []) if s.client != client
            ]

    def register_tx(self, tx_id: str, callback: Callable[[TxStatus], None]):
        self.tx_listeners.setdefault(tx_id, []).append(callback)

    def notify(self, block: Block, codes: list[ValidationCode]):
        """Fire listeners in tx index order; events only from valid txs."""
        for index, (tx, code) in enumerate(zip(block.txs, codes)):
            event = None
            chaincode_event = getattr(tx, "event", None)
            if code == ValidationCode.VALID and chaincode_event is not None:
                event = RideEvent(
                    name=chaincode_event.name,
                    ride_key=chaincode_event.payload.get("ride_key", ""),
                    payload=DotMap(chaincode_event.payload),
                    tx_id=tx_id_of(tx),
                    block_height=block.height,
                    tx_index=index,
                )
                for subscriber in list(self.subscribers.get(event.name, [])):
                    subscriber.send(event)

            status = TxStatus(tx_id_of(tx), code, block.height, index, event)
            for callback in self.tx_listeners.pop(status.tx_id, []):
                callback(status)
