from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Iterable

from ..errors import ChainBreak
from ..utils import canonical, digest
from .state import ReadWriteSet, Snapshot, WorldState, mvcc_validate

logger = logging.getLogger(__name__)

GENESIS_PREV_HASH = "0" * 64
BLOCK_FIELDS = {"height", "prev_hash", "timestamp", "data_hash", "txs", "validity"}
TIP_FIELDS = {"height", "tip_hash"}


class ValidationCode(str, Enum):
    VALID = "VALID"
    MVCC_READ_CONFLICT = "MVCC_READ_CONFLICT"
    ENDORSEMENT_POLICY_FAILURE = "ENDORSEMENT_POLICY_FAILURE"
    BAD_SIGNATURE = "BAD_SIGNATURE"
    DUPLICATE_TXID = "DUPLICATE_TXID"


@dataclass
class BootstrapTx:
    """Writes carried by the genesis block."""

    tx_id: str
    rwset: ReadWriteSet

    def to_dict(self) -> dict:
        return {"tx_id": self.tx_id, "rwset": self.rwset.to_dict()}


def tx_id_of(tx: Any) -> str:
    return tx["tx_id"] if isinstance(tx, dict) else tx.tx_id


def rwset_of(tx: Any) -> ReadWriteSet:
    if isinstance(tx, dict):
        return ReadWriteSet.from_dict(tx["rwset"])
    return tx.rwset


@dataclass
class Block:
    height: int
    prev_hash: str
    timestamp: int
    txs: list = field(default_factory=list)
    validity: list[ValidationCode] = field(default_factory=list)
    # data_hash as read from a dump, None for blocks built in memory
    stored_data_hash: str | None = field(default=None, repr=False, compare=False)

    @property
    def data_hash(self) -> str:
        return digest(canonical(self.txs))

    def header(self) -> dict:
        return {
            "height": self.height,
            "prev_hash": self.prev_hash,
            "timestamp": self.timestamp,
            "data_hash": self.data_hash,
        }

    def hash(self) -> str:
        return digest(canonical(self.header()))

    @property
    def validity_flags(self) -> list[bool]:
        return [code == ValidationCode.VALID for code in self.validity]

    def to_dict(self) -> dict:
        d = self.header()
        d["txs"] = self.txs
        d["validity"] = [code.value for code in self.validity]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> Block:
        if set(d) != BLOCK_FIELDS:
            raise ValueError(f"unexpected block fields {sorted(set(d) ^ BLOCK_FIELDS)}")
        return cls(
            height=d["height"],
            prev_hash=d["prev_hash"],
            timestamp=d["timestamp"],
            txs=list(d["txs"]),
            validity=[ValidationCode(v) for v in d["validity"]],
            stored_data_hash=d["data_hash"],
        )

    def __repr__(self):
        return f"<Block {self.height} txs={len(self.txs)}>"


def genesis_block(writes: Iterable[tuple[str, bytes]] = (), timestamp: int = 0) -> Block:
    writes = tuple(sorted(writes))
    txs = [BootstrapTx("genesis", ReadWriteSet(writes=writes))] if writes else []
    return Block(0, GENESIS_PREV_HASH, timestamp, txs)


def verify_chain(blocks: list[Block], tip_hash: str | None = None) -> int | None:
    """Return None when the chain is intact, else the first bad height."""
    prev_hash = GENESIS_PREV_HASH
    for position, block in enumerate(blocks):
        if block.height != position or block.prev_hash != prev_hash:
            return position
        if block.stored_data_hash not in (None, block.data_hash):
            return position
        if block.validity and len(block.validity) != len(block.txs):
            return position
        prev_hash = block.hash()
    if tip_hash is not None and blocks and prev_hash != tip_hash:
        return len(blocks) - 1
    return None


class BlockStore:
    def __init__(self):
        self.blocks: list[Block] = []
        self.tip_hash = GENESIS_PREV_HASH

    @property
    def height(self) -> int:
        return len(self.blocks) - 1

    def append(self, block: Block):
        if block.height != len(self.blocks):
            raise ChainBreak(
                f"expected height {len(self.blocks)}, got {block.height}",
                height=block.height,
            )
        if block.prev_hash != self.tip_hash:
            raise ChainBreak(f"prev_hash mismatch at {block.height}", height=block.height)
        self.blocks.append(block)
        self.tip_hash = block.hash()

    def verify(self) -> int | None:
        return verify_chain(self.blocks, self.tip_hash)

    def to_lines(self) -> list[str]:
        return [canonical(block.to_dict()).decode() for block in self.blocks]

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> list[Block]:
        """Parse a dump without checking it; see verify_chain."""
        return [Block.from_dict(json.loads(line)) for line in lines if line.strip()]

    def dump_lines(self) -> list[str]:
        """Block lines followed by a trailer naming the tip."""
        trailer = {"height": self.height, "tip_hash": self.tip_hash}
        return self.to_lines() + [canonical(trailer).decode()]

    @classmethod
    def load_dump(cls, lines: Iterable[str | bytes]) -> tuple[list[Block], str]:
        """Parse a dump_lines dump into its blocks and the tip hash it names.

        An unreadable line raises ChainBreak at its height; the trailer counts as
        the newest block.
        """
        lines = [line for line in lines if line.strip()]
        if not lines:
            raise ChainBreak("empty dump", height=0)
        *body, trailer = lines
        blocks = []
        for position, line in enumerate(body):
            try:
                blocks.append(Block.from_dict(json.loads(line)))
            except (ValueError, KeyError, TypeError) as e:
                raise ChainBreak(f"unreadable block at {position}: {e}", height=position)
        newest = max(len(blocks) - 1, 0)
        try:
            tip = json.loads(trailer)
            if set(tip) != TIP_FIELDS or tip["height"] != len(blocks) - 1:
                raise ValueError(f"trailer does not match {len(blocks)} blocks")
        except (ValueError, KeyError, TypeError) as e:
            raise ChainBreak(f"unreadable trailer: {e}", height=newest)
        return blocks, tip["tip_hash"]

    def __len__(self):
        return len(self.blocks)


Validator = Callable[[Any], ValidationCode]


class Ledger:
    """One peer's world state plus its block store."""

    def __init__(self):
        self.state = WorldState()
        self.store = BlockStore()
        self.tx_ids: set[str] = set()

    @property
    def height(self) -> int:
        return self.store.height

    def snapshot(self) -> Snapshot:
        return self.state.snapshot(self.height)

    def commit_block(
        self, block: Block, validator: Validator | None = None
    ) -> list[ValidationCode]:
        """Validate every tx in order and apply the valid writes.

        validator runs the checks that precede MVCC (signatures, policy); it is
        skipped for the genesis block.
        """
        if block.height != self.height + 1:
            raise ChainBreak(
                f"expected height {self.height + 1}, got {block.height}",
                height=block.height,
            )
        if block.prev_hash != self.store.tip_hash:
            raise ChainBreak(f"prev_hash mismatch at {block.height}", height=block.height)

        codes = []
        for index, tx in enumerate(block.txs):
            tx_id = tx_id_of(tx)
            rwset = rwset_of(tx)
            if tx_id in self.tx_ids:
                code = ValidationCode.DUPLICATE_TXID
            elif validator is not None and block.height > 0:
                code = validator(tx)
            else:
                code = ValidationCode.VALID
            if code == ValidationCode.VALID and not mvcc_validate(self.state, rwset):
                code = ValidationCode.MVCC_READ_CONFLICT
            if code == ValidationCode.VALID:
                self.state.apply(rwset.writes, (block.height, index))
            else:
                logger.debug("tx %s invalid at %s: %s", tx_id, block.height, code.value)
            self.tx_ids.add(tx_id)
            codes.append(code)

        self.store.append(replace(block, validity=codes))
        return codes

    def dump(self) -> bytes:
        return self.state.dump()
