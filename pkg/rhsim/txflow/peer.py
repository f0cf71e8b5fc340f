from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Mapping, Sequence

from ..chaincode import Caller, RideHailChaincode
from ..errors import (
    AccessDenied,
    BadSignature,
    ChaincodeError,
    UnknownSigner,
    VersionMismatch,
)
from ..identity import Identity, MembershipRegistry
from ..ledger import Block, Ledger, ReadWriteSet, ValidationCode, simulate
from .events import EventHub
from .policy import EndorsementPolicy
from .proposal import Endorsement, Envelope, Proposal, Verdict

if TYPE_CHECKING:
    from ..netsim import Node

logger = logging.getLogger(__name__)

_EMPTY_RWSET = ReadWriteSet()


class Peer:
    """An endorsing and committing peer with its own ledger copy."""

    def __init__(
        self,
        identity: Identity,
        chaincode: RideHailChaincode,
        registry: MembershipRegistry,
        policy: EndorsementPolicy,
        peers_by_org: Mapping[str, Sequence[str]],
        node: Node | None = None,
    ):
        self.identity = identity
        self.chaincode = chaincode
        self.registry = registry
        self.policy = policy
        self.peers_by_org = peers_by_org
        self.node = node
        self.ledger = Ledger()
        self.events = EventHub(self.name)
        self.lag = 0
        self.withheld: list[Block] = []
        self.endorsed = 0

    @property
    def name(self) -> str:
        return self.identity.name

    @property
    def msp(self) -> str:
        return self.identity.msp

    @property
    def height(self) -> int:
        return self.ledger.height

    def endorse(self, proposal: Proposal) -> Endorsement:
        if tuple(proposal.chaincode) != (self.chaincode.name, self.chaincode.version):
            raise VersionMismatch(
                f"{self.name} runs {self.chaincode.name}:{self.chaincode.version}, "
                f"proposal wants {proposal.chaincode[0]}:{proposal.chaincode[1]}"
            )
        try:
            ok = proposal.signature is not None and self.registry.verify(
                proposal.signature, proposal.payload()
            )
            invoker = self.registry.lookup(*proposal.invoker)
        except UnknownSigner:
            ok = False
        if not ok or proposal.signature.signer != tuple(proposal.invoker):
            raise BadSignature(f"proposal {proposal.tx_id[:8]} signature does not verify")

        caller = Caller(invoker.msp, invoker.uid, invoker.role.value)
        try:
            result = simulate(
                self.ledger.snapshot(),
                self.chaincode.invoke,
                caller,
                proposal.fn,
                proposal.args,
                proposal.tx_id,
                proposal.timestamp,
                proposal.transient,
            )
            endorsement = Endorsement(
                proposal.tx_id,
                self.identity.key,
                self.name,
                result.rwset,
                result.response,
                Verdict.ACCEPTED,
                result.event,
            )
        except ChaincodeError as e:
            logger.debug("%s rejects %s: %s", self.name, proposal.fn, e)
            endorsement = Endorsement(
                proposal.tx_id,
                self.identity.key,
                self.name,
                rwset=_EMPTY_RWSET,
                response=e.code.encode(),
                verdict=Verdict.REJECTED,
                error_code=e.code,
            )
        endorsement.signature = self.identity.sign(endorsement.payload())
        self.endorsed += 1
        return endorsement

    def validate_tx(self, envelope: Envelope) -> ValidationCode:
        """Signature and policy checks done before MVCC at commit."""
        try:
            if envelope.signature is None or not self.registry.verify(
                envelope.signature, envelope.payload()
            ):
                return ValidationCode.BAD_SIGNATURE
            if envelope.signature.signer != tuple(envelope.creator):
                return ValidationCode.BAD_SIGNATURE
            if not self.registry.verify(
                envelope.proposal.signature, envelope.proposal.payload()
            ):
                return ValidationCode.BAD_SIGNATURE
            signed = envelope.endorsement_payload()
            for endorsement in envelope.endorsements:
                if endorsement.signature is None or not self.registry.verify(
                    endorsement.signature, signed
                ):
                    return ValidationCode.BAD_SIGNATURE
        except UnknownSigner:
            return ValidationCode.BAD_SIGNATURE

        endorsers = [e.signature.signer for e in envelope.endorsements]
        if not self.policy.satisfied(endorsers, self.peers_by_org):
            return ValidationCode.ENDORSEMENT_POLICY_FAILURE
        return ValidationCode.VALID

    def commit(self, block: Block) -> list[ValidationCode]:
        codes = self.ledger.commit_block(block, self.validate_tx)
        valid = sum(code == ValidationCode.VALID for code in codes)
        logger.debug(
            "%s committed block %s (%s/%s valid)", self.name, block.height, valid, len(codes)
        )
        self.events.notify(block, codes)
        return codes

    def withhold(self, blocks: int = 1):
        """Stay the given number of blocks behind the ordering service."""
        self.lag = blocks

    def release(self) -> list[tuple[Block, list[ValidationCode]]]:
        self.lag = 0
        return self._drain()

    def receive_block(self, block: Block) -> list[tuple[Block, list[ValidationCode]]]:
        """Accept a delivered block; returns the blocks actually committed."""
        self.withheld.append(block)
        return self._drain()

    def _drain(self) -> list[tuple[Block, list[ValidationCode]]]:
        committed = []
        while len(self.withheld) > self.lag:
            block = self.withheld.pop(0)
            committed.append((block, self.commit(block)))
        return committed

    def query_state(self, key: str):
        """Clients never read the world state directly."""
        raise AccessDenied(f"{self.name}: direct state query of {key} refused")

    def __repr__(self):
        return f"<Peer {self.name} height={self.height}>"
