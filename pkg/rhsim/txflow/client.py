from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Iterable, Mapping, Sequence

from ..errors import (
    BadSignature,
    Divergence,
    EndorsementRejected,
    PolicyUnsatisfied,
    TxFlowError,
    UnknownSigner,
    VersionMismatch,
)
from ..identity import Identity
from ..ledger import ValidationCode
from ..netsim import us_to_ms
from ..utils import ride_time_at
from .events import RideEvent, TxStatus
from .policy import EndorsementPolicy
from .proposal import Endorsement, Envelope, Proposal, Verdict

if TYPE_CHECKING:
    from ..identity import MembershipRegistry
    from ..netsim import Node
    from .network import FabricNetwork
    from .peer import Peer

logger = logging.getLogger(__name__)

ENDORSEMENT_FAILURES = (
    PolicyUnsatisfied.code,
    Divergence.code,
    EndorsementRejected.code,
    BadSignature.code,
    VersionMismatch.code,
)


@dataclass
class TxResult:
    """Lifecycle and timings of one submitted transaction, virtual µs."""

    tx_id: str
    fn: str
    client: str
    ride_id: str = ""
    submitted_at: int = 0
    endorsed_at: int | None = None
    registered_at: int | None = None
    acked_at: int | None = None
    event_at: int | None = None
    code: str = ""
    error: str | None = None
    response: bytes = b""
    block_height: int | None = None
    retries: int = 0
    read_after_write: bool = False
    event: RideEvent | None = None
    done: bool = False

    @property
    def valid(self) -> bool:
        return self.code == ValidationCode.VALID.value

    @property
    def endorsement_failed(self) -> bool:
        return self.code in ENDORSEMENT_FAILURES

    @property
    def peer_ms(self) -> float | None:
        if self.endorsed_at is None:
            return None
        return us_to_ms(self.endorsed_at - self.submitted_at)

    @property
    def orderer_ms(self) -> float | None:
        if self.acked_at is None or self.registered_at is None:
            return None
        return us_to_ms(self.acked_at - self.registered_at)

    @property
    def event_ms(self) -> float | None:
        if self.event_at is None or self.registered_at is None:
            return None
        return us_to_ms(self.event_at - self.registered_at)


def collect(
    policy: EndorsementPolicy,
    endorsements: Sequence[Endorsement],
    peers_by_org: Mapping[str, Sequence[str]],
) -> Endorsement:
    """Check a set of verified endorsements; return one representative.

    Raises Divergence when endorsers disagree, EndorsementRejected when they
    agree the chaincode failed, PolicyUnsatisfied when the set is too small.
    """
    if not endorsements:
        raise PolicyUnsatisfied("no endorsements")
    first = endorsements[0]
    for other in endorsements[1:]:
        if other.result_key() != first.result_key():
            raise Divergence(
                f"{first.endorser_name} and {other.endorser_name} "
                f"disagree on {first.tx_id[:8]}",
                endorsers=[first.endorser_name, other.endorser_name],
            )
    if first.verdict == Verdict.REJECTED:
        raise EndorsementRejected(first.response.decode(), error_code=first.error_code)
    if not policy.satisfied([e.endorser for e in endorsements], peers_by_org):
        raise PolicyUnsatisfied(
            f"{policy} not satisfied by {[e.endorser_name for e in endorsements]}"
        )
    return first


@dataclass
class _Flight:
    """In-flight bookkeeping for one transaction."""

    proposal: Proposal
    result: TxResult
    on_done: Callable[[TxResult], None] | None
    expected: int = 0
    replies: list[Endorsement] = field(default_factory=list)
    failures: list[TxFlowError] = field(default_factory=list)
    status: TxStatus | None = None


class Client:
    """A client application acting for one enrolled identity."""

    def __init__(
        self,
        network: FabricNetwork,
        identity: Identity,
        node: Node,
        allowed_peers: Iterable[str] | None = None,
        generation: int = 0,
    ):
        self.network = network
        self.identity = identity
        self.node = node
        self.allowed = set(allowed_peers) if allowed_peers is not None else None
        self.rng = network.rng.child(f"client/{identity.msp}/{identity.uid}/{generation}")
        self.turn = 0
        self.results: list[TxResult] = []

    @property
    def name(self) -> str:
        return self.node.name

    @property
    def registry(self) -> MembershipRegistry:
        return self.network.registry

    @property
    def event_peer(self) -> Peer:
        """First visible peer of the own organization, else of any organization."""
        peers = self._visible_peers()
        if not peers:
            raise TxFlowError(f"{self.name} can reach no peer")
        msp = self.identity.msp if self.identity.msp in peers else next(iter(peers))
        return self.network.peer_by_id(msp, peers[msp][0])

    def _visible_peers(self) -> dict[str, list[str]]:
        visible = {}
        for msp, uids in self.network.peers_by_org.items():
            kept = [
                uid
                for uid in uids
                if self.allowed is None
                or self.network.peer_by_id(msp, uid).name in self.allowed
            ]
            if kept:
                visible[msp] = kept
        return visible

    def _targets(self) -> list[Peer]:
        targets = self.network.policy.targets(
            self.identity.msp, self._visible_peers(), self.turn
        )
        self.turn += 1
        return [self.network.peer_by_id(msp, uid) for msp, uid in targets]

    def proposal(
        self,
        fn: str,
        args: list,
        transient: dict[str, bytes] | None = None,
        timestamp: str | None = None,
        chaincode: tuple[str, str] | None = None,
    ) -> Proposal:
        return Proposal.create(
            self.identity,
            chaincode or (self.network.chaincode.name, self.network.chaincode.version),
            fn,
            args,
            timestamp or ride_time_at(self.network.now),
            self.rng.bytes(16),
            transient,
        )

    def submit(
        self,
        fn: str,
        args: list,
        transient: dict[str, bytes] | None = None,
        timestamp: str | None = None,
        on_done: Callable[[TxResult], None] | None = None,
        ride_id: str = "",
        chaincode: tuple[str, str] | None = None,
    ) -> TxResult:
        """Start the endorse, order, commit flow; returns immediately."""
        proposal = self.proposal(fn, args, transient, timestamp, chaincode)
        result = TxResult(
            proposal.tx_id, fn, self.name, ride_id=ride_id, submitted_at=self.network.now
        )
        self.results.append(result)
        self._endorse(_Flight(proposal, result, on_done))
        return result

    def _endorse(self, flight: _Flight):
        targets = self._targets()
        flight.expected = len(targets)
        flight.replies = []
        flight.failures = []
        if not targets:
            self._fail(flight, PolicyUnsatisfied("no reachable endorsers"))
            return
        sim = self.network.sim
        for peer in targets:
            sim.send(
                self.name,
                peer.name,
                lambda peer=peer: self._on_proposal(flight, peer),
                service_us=peer.node.profile.service_us("endorse"),
                label=f"endorse {flight.proposal.fn}",
            )

    def _on_proposal(self, flight: _Flight, peer: Peer):
        try:
            reply: Endorsement | TxFlowError = peer.endorse(flight.proposal)
        except TxFlowError as e:
            reply = e
        self.network.sim.send(
            peer.name,
            self.name,
            lambda: self._on_endorsement(flight, reply),
            service_us=self.node.profile.service_us("verify"),
            label="endorsement",
        )

    def _on_endorsement(self, flight: _Flight, reply: Endorsement | TxFlowError):
        if isinstance(reply, TxFlowError):
            flight.failures.append(reply)
        elif not self._verify(reply):
            flight.failures.append(BadSignature(f"endorsement from {reply.endorser_name}"))
        else:
            flight.replies.append(reply)
        if len(flight.replies) + len(flight.failures) < flight.expected:
            return

        result = flight.result
        result.endorsed_at = self.network.now
        if flight.failures:
            self._fail(flight, flight.failures[0])
            return
        try:
            chosen = collect(self.network.policy, flight.replies, self.network.peers_by_org)
        except Divergence as e:
            if result.retries == 0:
                result.retries += 1
                logger.warning("%s: %s, retrying", self.name, e)
                self._endorse(flight)
                return
            self._fail(flight, e)
            return
        except TxFlowError as e:
            self._fail(flight, e)
            return

        result.response = chosen.response
        result.read_after_write = chosen.rwset.read_after_write
        envelope = Envelope(
            flight.proposal, chosen.rwset, chosen.response, chosen.event, flight.replies
        )
        envelope.signature = self.identity.sign(envelope.payload())

        result.registered_at = self.network.now
        self.event_peer.events.register_tx(
            result.tx_id, lambda status: self._on_status_at_peer(flight, status)
        )
        self.network.sim.send(
            self.name,
            self.network.orderer_node.name,
            lambda: self._on_ordered(flight, envelope),
            service_us=self.network.orderer_node.profile.service_us("order"),
            label="broadcast",
        )
        logger.debug("%s broadcast %s", self.name, result.tx_id[:8])

    def _verify(self, endorsement: Endorsement) -> bool:
        signature = endorsement.signature
        if signature is None or signature.signer != endorsement.endorser:
            return False
        try:
            return self.registry.verify(signature, endorsement.payload())
        except UnknownSigner:
            return False

    def _on_ordered(self, flight: _Flight, envelope: Envelope):
        self.network.orderer.receive(envelope)
        self.network.sim.send(
            self.network.orderer_node.name,
            self.name,
            lambda: self._on_ack(flight),
            label="ack",
        )

    def _on_ack(self, flight: _Flight):
        flight.result.acked_at = self.network.now
        if flight.status is not None:
            self._finish(flight)

    def _on_status_at_peer(self, flight: _Flight, status: TxStatus):
        self.network.sim.send(
            self.event_peer.name,
            self.name,
            lambda: self._on_status(flight, status),
            label="tx event",
        )

    def _on_status(self, flight: _Flight, status: TxStatus):
        flight.status = status
        # the commit event can overtake the ack; it counts once both arrived
        if flight.result.acked_at is not None:
            self._finish(flight)

    def _finish(self, flight: _Flight):
        result, status = flight.result, flight.status
        result.event_at = self.network.now
        result.code = status.code.value
        result.block_height = status.block_height
        result.event = status.event
        if not status.valid:
            logger.warning("%s: tx %s invalid: %s", self.name, result.tx_id[:8], result.code)
        self._done(flight)

    def _fail(self, flight: _Flight, error: TxFlowError):
        result = flight.result
        result.code = error.code
        result.error = str(error)
        if isinstance(error, EndorsementRejected):
            result.error = error.details.get("error_code") or str(error)
        logger.info("%s: %s failed: %s", self.name, result.fn, result.error)
        self._done(flight)

    def _done(self, flight: _Flight):
        flight.result.done = True
        if flight.on_done is not None:
            flight.on_done(flight.result)

    def evaluate(
        self, fn: str, args: list | None = None, transient: dict[str, bytes] | None = None
    ) -> bytes:
        """Run a query on one peer right now; nothing is ordered."""
        proposal = self.proposal(fn, args or [], transient)
        peer = self.event_peer
        endorsement = peer.endorse(proposal)
        if endorsement.verdict == Verdict.REJECTED:
            raise EndorsementRejected(
                endorsement.response.decode(), error_code=endorsement.error_code
            )
        return endorsement.response

    def subscribe(self, event_name: str, callback: Callable[[RideEvent], None]):
        """Chaincode events from the event peer, delivered over the network."""
        peer = self.event_peer

        def forward(event: RideEvent):
            self.network.sim.send(
                peer.name, self.name, lambda: callback(event), label="chaincode event"
            )

        return peer.events.add_subscriber(self.name, event_name, forward)

    def __repr__(self):
        return f"<Client {self.name}>"
