from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from ..errors import ConfigError

logger = logging.getLogger(__name__)

# (msp, peer uid)
PeerId = tuple[str, str]


class PolicyKind(str, Enum):
    ALL_ORG_PEERS = "ALL_ORG_PEERS"
    ANY_ONE = "ANY_ONE"
    CROSS_ORG = "CROSS_ORG"


@dataclass(frozen=True)
class EndorsementPolicy:
    """Which endorsement sets are enough for a transaction.

    ALL_ORG_PEERS  every peer of every organization
    ANY_ONE        a single peer of any organization
    CROSS_ORG:k    peers from at least k + 1 distinct organizations
    """

    kind: PolicyKind
    k: int = 0

    @classmethod
    def parse(cls, text: str) -> EndorsementPolicy:
        name, _, arg = text.partition(":")
        try:
            kind = PolicyKind(name)
        except ValueError:
            raise ConfigError(f"unknown policy {text!r}")
        if kind == PolicyKind.CROSS_ORG:
            if not arg.isdigit():
                raise ConfigError(f"CROSS_ORG needs a count, got {text!r}")
            return cls(kind, int(arg))
        if arg:
            raise ConfigError(f"{name} takes no argument")
        return cls(kind)

    def __str__(self):
        return f"CROSS_ORG:{self.k}" if self.kind == PolicyKind.CROSS_ORG else self.kind.value

    def satisfied(
        self, endorsers: Iterable[PeerId], peers_by_org: Mapping[str, Sequence[str]]
    ) -> bool:
        known = {
            (msp, uid) for msp, uids in peers_by_org.items() for uid in uids
        }
        got = {e for e in endorsers if e in known}
        if self.kind == PolicyKind.ANY_ONE:
            return len(got) >= 1
        if self.kind == PolicyKind.ALL_ORG_PEERS:
            return got == known
        return len({msp for msp, _ in got}) >= self.k + 1

    def targets(
        self,
        own_msp: str,
        peers_by_org: Mapping[str, Sequence[str]],
        turn: int = 0,
    ) -> list[PeerId]:
        """Peers a client asks for endorsement on its turn-th proposal."""
        if self.kind == PolicyKind.ALL_ORG_PEERS:
            return [(msp, uid) for msp, uids in peers_by_org.items() for uid in uids]
        if self.kind == PolicyKind.ANY_ONE:
            every = [(msp, uid) for msp, uids in peers_by_org.items() for uid in uids]
            return [every[turn % len(every)]] if every else []

        orgs = list(peers_by_org)
        if own_msp in orgs:
            start = orgs.index(own_msp)
            orgs = orgs[start:] + orgs[:start]
        picked = []
        for msp in orgs[: self.k + 1]:
            uids = peers_by_org[msp]
            if uids:
                picked.append((msp, uids[turn % len(uids)]))
        return picked
