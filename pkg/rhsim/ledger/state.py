from __future__ import annotations

import base64
import logging
from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable, Iterable, Mapping

from ..errors import InvalidKey
from ..settings import settings
from ..utils import canonical, digest

logger = logging.getLogger(__name__)

NAMESPACES = ("User", "RideRequest", "Ride")

Version = tuple[int, int]


def make_key(*parts: str) -> str:
    sep = settings.key_separator
    if not parts or parts[0] not in NAMESPACES:
        raise InvalidKey(f"key must start with one of {NAMESPACES}: {parts}")
    for part in parts:
        if not part or sep in part:
            raise InvalidKey(f"invalid key part {part!r}")
    return sep.join(parts)


def split_key(key: str) -> list[str]:
    parts = key.split(settings.key_separator)
    if parts[0] not in NAMESPACES or any(not p for p in parts):
        raise InvalidKey(f"invalid key {key!r}")
    return parts


@dataclass(frozen=True)
class VersionedValue:
    value: bytes
    version: Version


def _b64(value: bytes | None) -> str | None:
    return None if value is None else base64.b64encode(value).decode()


def _unb64(value: str | None) -> bytes | None:
    return None if value is None else base64.b64decode(value)


@dataclass(frozen=True)
class ReadWriteSet:
    """Reads carry the version observed (None for absent keys); a write of
    None is a delete."""

    reads: tuple[tuple[str, Version | None], ...] = ()
    writes: tuple[tuple[str, bytes | None], ...] = ()
    read_after_write: bool = False

    def to_dict(self) -> dict:
        return {
            "reads": [[k, list(v) if v is not None else None] for k, v in self.reads],
            "writes": [[k, _b64(v)] for k, v in self.writes],
            "read_after_write": self.read_after_write,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ReadWriteSet:
        return cls(
            reads=tuple(
                (k, (v[0], v[1]) if v is not None else None) for k, v in d["reads"]
            ),
            writes=tuple((k, _unb64(v)) for k, v in d["writes"]),
            read_after_write=d.get("read_after_write", False),
        )

    def encode(self) -> bytes:
        return canonical(self.to_dict())

    def digest(self) -> str:
        return digest(self.encode())

    @property
    def write_keys(self) -> list[str]:
        return [k for k, _ in self.writes]


class WorldState:
    def __init__(self, data: Mapping[str, VersionedValue] | None = None):
        self._data: dict[str, VersionedValue] = dict(data or {})

    def get(self, key: str) -> VersionedValue | None:
        return self._data.get(key)

    def version(self, key: str) -> Version | None:
        vv = self._data.get(key)
        return vv.version if vv is not None else None

    def apply(self, writes: Iterable[tuple[str, bytes | None]], version: Version):
        for key, value in writes:
            if value is None:
                self._data.pop(key, None)
            else:
                self._data[key] = VersionedValue(value, version)

    def snapshot(self, height: int) -> Snapshot:
        return Snapshot(MappingProxyType(dict(self._data)), height)

    def clone(self) -> WorldState:
        return WorldState(self._data)

    def keys(self, namespace: str | None = None) -> list[str]:
        keys = sorted(self._data)
        if namespace is None:
            return keys
        prefix = namespace + settings.key_separator
        return [k for k in keys if k.startswith(prefix)]

    def dump(self) -> bytes:
        return canonical(
            [
                [k, _b64(vv.value), list(vv.version)]
                for k, vv in sorted(self._data.items())
            ]
        )

    def __len__(self):
        return len(self._data)


@dataclass(frozen=True)
class Snapshot:
    """Read-only copy of a world state at a fixed height; later applies do not
    show through."""

    data: Mapping[str, VersionedValue]
    height: int

    def get(self, key: str) -> VersionedValue | None:
        return self.data.get(key)


@dataclass
class ChaincodeEvent:
    name: str
    payload: dict

    def to_dict(self) -> dict:
        return {"name": self.name, "payload": self.payload}


class TxSimulator:
    """Records what a chaincode execution reads and writes without touching
    the world state."""

    def __init__(self, snapshot: Snapshot):
        self.snapshot = snapshot
        self._reads: dict[str, Version | None] = {}
        self._writes: dict[str, bytes | None] = {}
        self.read_after_write = False
        self.event: ChaincodeEvent | None = None

    def get_state(self, key: str) -> bytes | None:
        if key in self._writes:
            logger.debug("read after write on %s", key)
            self.read_after_write = True
            return self._writes[key]
        vv = self.snapshot.get(key)
        if key not in self._reads:
            self._reads[key] = vv.version if vv is not None else None
        return vv.value if vv is not None else None

    def put_state(self, key: str, value: bytes):
        split_key(key)
        self._writes[key] = value

    def del_state(self, key: str):
        split_key(key)
        self._writes[key] = None

    def set_event(self, name: str, payload: dict):
        self.event = ChaincodeEvent(name, payload)

    def rwset(self) -> ReadWriteSet:
        return ReadWriteSet(
            reads=tuple(sorted(self._reads.items())),
            writes=tuple(sorted(self._writes.items())),
            read_after_write=self.read_after_write,
        )


@dataclass
class SimulationResult:
    rwset: ReadWriteSet
    response: bytes
    event: ChaincodeEvent | None = None


def simulate(
    snapshot: Snapshot, tx_logic: Callable[..., bytes], *args
) -> SimulationResult:
    """Run tx_logic(simulator, *args) against a snapshot.

    Chaincode errors propagate to the caller.
    """
    sim = TxSimulator(snapshot)
    response = tx_logic(sim, *args)
    return SimulationResult(sim.rwset(), response or b"", sim.event)


def mvcc_validate(committed: WorldState, rwset: ReadWriteSet) -> bool:
    return all(committed.version(key) == version for key, version in rwset.reads)
