from __future__ import annotations

import base64
import json
import logging
from dataclasses import dataclass, field
from enum import Enum

from ..identity import Identity, Signature
from ..ledger import ChaincodeEvent, ReadWriteSet
from ..utils import canonical, digest

logger = logging.getLogger(__name__)


class Verdict(str, Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"


def endorsed_result(
    rwset: ReadWriteSet, response: bytes, verdict: Verdict, event: ChaincodeEvent | None
) -> dict:
    return {
        "rwset": rwset.digest(),
        "response": base64.b64encode(response).decode(),
        "verdict": verdict.value,
        "event": event.to_dict() if event else None,
    }


def make_tx_id(nonce: bytes, creator: tuple[str, str]) -> str:
    return digest(nonce + canonical(list(creator)), "sha256")


@dataclass
class Proposal:
    tx_id: str
    invoker: tuple[str, str]
    chaincode: tuple[str, str]
    fn: str
    args: list[str]
    timestamp: str
    nonce: str
    signature: Signature | None = None
    # never signed, never ordered
    transient: dict[str, bytes] = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def create(
        cls,
        invoker: Identity,
        chaincode: tuple[str, str],
        fn: str,
        args: list,
        timestamp: str,
        nonce: bytes,
        transient: dict[str, bytes] | None = None,
    ) -> Proposal:
        proposal = cls(
            tx_id=make_tx_id(nonce, invoker.key),
            invoker=invoker.key,
            chaincode=chaincode,
            fn=fn,
            args=[str(a) for a in args],
            timestamp=timestamp,
            nonce=nonce.hex(),
            transient=dict(transient or {}),
        )
        proposal.signature = invoker.sign(proposal.payload())
        return proposal

    def payload(self) -> bytes:
        return canonical(
            {
                "tx_id": self.tx_id,
                "invoker": list(self.invoker),
                "chaincode": list(self.chaincode),
                "fn": self.fn,
                "args": self.args,
                "timestamp": self.timestamp,
                "nonce": self.nonce,
            }
        )

    def to_dict(self) -> dict:
        d = json_view(self.payload())
        d["signature"] = self.signature.to_dict() if self.signature else None
        return d


@dataclass
class Endorsement:
    tx_id: str
    endorser: tuple[str, str]
    endorser_name: str
    rwset: ReadWriteSet
    response: bytes
    verdict: Verdict
    event: ChaincodeEvent | None = None
    error_code: str | None = None
    signature: Signature | None = None

    def result(self) -> dict:
        return endorsed_result(self.rwset, self.response, self.verdict, self.event)

    def payload(self) -> bytes:
        return canonical({"tx_id": self.tx_id, **self.result()})

    def result_key(self) -> bytes:
        """What must match across endorsers for a transaction to be consistent."""
        return canonical(self.result())

    def to_dict(self) -> dict:
        return {
            "endorser": list(self.endorser),
            "signature": self.signature.to_dict() if self.signature else None,
        }


@dataclass
class Envelope:
    """An endorsed transaction as submitted for ordering."""

    proposal: Proposal
    rwset: ReadWriteSet
    response: bytes
    event: ChaincodeEvent | None
    endorsements: list[Endorsement]
    signature: Signature | None = None

    @property
    def tx_id(self) -> str:
        return self.proposal.tx_id

    @property
    def creator(self) -> tuple[str, str]:
        return self.proposal.invoker

    def payload(self) -> bytes:
        return canonical(
            {
                "proposal": self.proposal.to_dict(),
                "rwset": self.rwset.to_dict(),
                "response": base64.b64encode(self.response).decode(),
                "event": self.event.to_dict() if self.event else None,
                "endorsements": [e.to_dict() for e in self.endorsements],
            }
        )

    def endorsement_payload(self) -> bytes:
        """The payload every endorser signed, rebuilt from the envelope."""
        result = endorsed_result(self.rwset, self.response, Verdict.ACCEPTED, self.event)
        return canonical({"tx_id": self.tx_id, **result})

    def to_dict(self) -> dict:
        d = json_view(self.payload())
        d["tx_id"] = self.tx_id
        d["signature"] = self.signature.to_dict() if self.signature else None
        return d


def json_view(payload: bytes) -> dict:
    return json.loads(payload)
