from __future__ import annotations

import base64
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from ..errors import (
    DuplicateOrg,
    IdentityError,
    RoleTransitionError,
    UidCollision,
    UnknownOrg,
    UnknownSigner,
    ZeroPeers,
)
from ..settings import settings
from ..utils import b64url, digest, digest_bytes

logger = logging.getLogger(__name__)

UID_LENGTH = 6
PINNED_UID_RE = re.compile(r"^[A-Za-z0-9_-]{1,16}$")


class Role(str, Enum):
    RIDER = "Rider"
    DRIVER = "Driver"
    PEER = "Peer"
    ORDERER = "Orderer"
    ADMIN = "Admin"


def _seed_bytes(seed: bytes | int | str) -> bytes:
    if isinstance(seed, bytes):
        return seed
    return str(seed).encode()


def derive_uid(public_key: bytes) -> str:
    return b64url(digest_bytes(public_key, "sha256"))[:UID_LENGTH]


@lru_cache(maxsize=settings.verify_cache_size)
def _ed25519_verify(public_key: bytes, signature: bytes, payload_digest: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, payload_digest)
        return True
    except (InvalidSignature, ValueError):
        return False


@dataclass(frozen=True)
class Signature:
    signer: tuple[str, str]
    value: bytes
    payload_digest: str

    def to_dict(self) -> dict:
        return {
            "signer": list(self.signer),
            "value": base64.b64encode(self.value).decode(),
            "payload_digest": self.payload_digest,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Signature:
        return cls(
            signer=(d["signer"][0], d["signer"][1]),
            value=base64.b64decode(d["value"]),
            payload_digest=d["payload_digest"],
        )


def verify_signature(sig: Signature, payload: bytes, public_key: bytes) -> bool:
    """True iff sig was made by the holder of public_key over payload."""
    if digest(payload, "sha256") != sig.payload_digest:
        return False
    return _ed25519_verify(public_key, sig.value, bytes.fromhex(sig.payload_digest))


@dataclass
class Identity:
    msp: str
    uid: str
    role: Role
    public_key: bytes = field(repr=False)
    alias: str = ""
    _private: Ed25519PrivateKey | None = field(default=None, repr=False, compare=False)

    @property
    def key(self) -> tuple[str, str]:
        return self.msp, self.uid

    @property
    def name(self) -> str:
        return self.alias or f"{self.uid}@{self.msp}"

    def sign(self, payload: bytes) -> Signature:
        if self._private is None:
            raise IdentityError(f"{self.name} holds no signing key")
        d = digest_bytes(payload, "sha256")
        return Signature(self.key, self._private.sign(d), d.hex())

    def with_role(self, role: Role) -> Identity:
        return Identity(self.msp, self.uid, role, self.public_key, self.alias, self._private)

    def __str__(self):
        return self.name


@dataclass
class CaRecord:
    name: str
    fingerprint: str


@dataclass
class Org:
    name: str
    msp_id: str
    ca: CaRecord
    peers: list[Identity] = field(default_factory=list)
    orderers: list[Identity] = field(default_factory=list)
    members: dict[str, Identity] = field(default_factory=dict)


class MembershipRegistry:
    """Network-wide view of every MSP and the identities it has issued.

    Written while the network is built, read-only afterwards.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.orgs: dict[str, Org] = {}
        self._identities: dict[tuple[str, str], Identity] = {}

    def org(self, name: str) -> Org:
        if name in self.orgs:
            return self.orgs[name]
        for org in self.orgs.values():
            if org.name == name:
                return org
        raise UnknownOrg(f"unknown organization {name}")

    def provision_org(self, name: str, peer_count: int, orderer_count: int = 1) -> Org:
        if not name or settings.key_separator in name:
            raise IdentityError(f"invalid organization name {name!r}")
        msp_id = f"{name}MSP"
        if msp_id in self.orgs:
            raise DuplicateOrg(f"organization {name} already provisioned")
        if peer_count < 1:
            raise ZeroPeers(f"organization {name} needs at least one peer")
        if orderer_count < 1:
            raise IdentityError(f"organization {name} needs at least one orderer")

        root = Ed25519PrivateKey.from_private_bytes(
            digest_bytes(f"{self.seed}:{msp_id}:ca".encode(), "sha256")
        )
        root_pub = root.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
        org = Org(name, msp_id, CaRecord(f"ca.{name}", digest(root_pub, "sha256")))
        self.orgs[msp_id] = org

        for i in range(peer_count):
            org.peers.append(
                self._enroll(
                    org, Role.PEER, f"{self.seed}:{msp_id}:peer:{i}", alias=f"peer{i}.{name}"
                )
            )
        for i in range(orderer_count):
            org.orderers.append(
                self._enroll(
                    org,
                    Role.ORDERER,
                    f"{self.seed}:{msp_id}:orderer:{i}",
                    alias=f"orderer{i}.{name}",
                )
            )
        logger.info(
            "provisioned %s with %s peers and %s orderers", msp_id, peer_count, orderer_count
        )
        return org

    def enroll_identity(
        self,
        org: str,
        role: Role,
        seed: bytes | int | str,
        uid: str | None = None,
        alias: str = "",
    ) -> Identity:
        if role not in (Role.RIDER, Role.DRIVER, Role.ADMIN):
            raise IdentityError(f"users cannot enroll as {role}")
        return self._enroll(self.org(org), role, seed, uid=uid, alias=alias)

    def _enroll(
        self,
        org: Org,
        role: Role,
        seed: bytes | int | str,
        uid: str | None = None,
        alias: str = "",
    ) -> Identity:
        private = Ed25519PrivateKey.from_private_bytes(
            digest_bytes(b"rhsim-key:" + _seed_bytes(seed), "sha256")
        )
        public = private.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
        if uid is None:
            uid = derive_uid(public)
        elif not PINNED_UID_RE.match(uid):
            raise IdentityError(f"invalid pinned uid {uid!r}")

        existing = org.members.get(uid)
        if existing is not None:
            if existing.public_key == public:
                return existing
            raise UidCollision(f"uid {uid} already issued in {org.msp_id}")

        identity = Identity(org.msp_id, uid, role, public, alias, private)
        org.members[uid] = identity
        self._identities[identity.key] = identity
        logger.debug("enrolled %s as %s", identity.name, role.value)
        return identity

    def upgrade_identity(self, identity: Identity) -> Identity:
        current = self.lookup(identity.msp, identity.uid)
        if current.role != Role.RIDER:
            raise RoleTransitionError(f"{current.name} is {current.role.value}, not Rider")
        upgraded = current.with_role(Role.DRIVER)
        self.orgs[upgraded.msp].members[upgraded.uid] = upgraded
        self._identities[upgraded.key] = upgraded
        return upgraded

    def lookup(self, msp: str, uid: str) -> Identity:
        try:
            return self._identities[(msp, uid)]
        except KeyError:
            raise UnknownSigner(f"no identity {uid} in {msp}")

    def is_enrolled(self, identity: Identity) -> bool:
        return identity.key in self._identities

    def verify(self, sig: Signature, payload: bytes) -> bool:
        signer = self.lookup(*sig.signer)
        return verify_signature(sig, payload, signer.public_key)

    def identities(self) -> list[Identity]:
        return list(self._identities.values())

    @property
    def msp_ids(self) -> list[str]:
        return list(self.orgs.keys())
