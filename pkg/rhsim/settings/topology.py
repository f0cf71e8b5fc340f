from __future__ import annotations

import re
from pathlib import Path
from typing import Optional, Union

from pydantic import BaseModel, Field, ValidationError, validator

from ..errors import ConfigError
from ..netsim.node import NodeProfile, resolve_profile
from . import settings

POLICY_RE = re.compile(r"^(ALL_ORG_PEERS|ANY_ONE|CROSS_ORG:\d+)$")

ProfileValue = Union[str, dict]


def _check_profile(v):
    resolve_profile(v)
    return v


class OrgConfig(BaseModel):
    name: str
    peers: int = 2
    orderers: int = 1
    profile: Optional[ProfileValue] = None

    @validator("name")
    def plain_name(cls, v):
        if not v or settings.key_separator in v:
            raise ValueError(f"invalid organization name {v!r}")
        return v

    @validator("peers", "orderers")
    def positive(cls, v):
        if v < 1:
            raise ValueError("must be at least 1")
        return v

    @validator("profile")
    def known_profile(cls, v):
        return v if v is None else _check_profile(v)


class OrderingConfig(BaseModel):
    batch_timeout_ms: float = Field(default_factory=lambda: settings.batch_timeout_ms)
    max_message_count: int = Field(default_factory=lambda: settings.max_message_count)

    @validator("batch_timeout_ms", "max_message_count")
    def positive(cls, v):
        if v <= 0:
            raise ValueError("must be positive")
        return v


class TopologyConfig(BaseModel):
    """A network description: organizations, ordering, policy and node profiles."""

    orgs: list[OrgConfig]
    seed: Optional[int] = None
    policy: str = Field(default_factory=lambda: settings.default_policy)
    ordering: OrderingConfig = Field(default_factory=OrderingConfig)
    profile: ProfileValue = "server"
    client_profile: ProfileValue = "client"
    submitters_per_org: int = 2
    location_tolerance_m: float = Field(
        default_factory=lambda: settings.location_tolerance_m
    )
    chaincode_name: str = Field(default_factory=lambda: settings.chaincode_name)
    chaincode_version: str = Field(default_factory=lambda: settings.chaincode_version)

    @validator("orgs")
    def unique_orgs(cls, v):
        if not v:
            raise ValueError("at least one organization is required")
        names = [org.name for org in v]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate organization in {names}")
        return v

    @validator("policy")
    def policy_syntax(cls, v):
        if not POLICY_RE.match(v):
            raise ValueError(f"bad policy {v!r}")
        return v

    @validator("profile", "client_profile")
    def known_profiles(cls, v):
        return _check_profile(v)

    @validator("submitters_per_org")
    def some_submitters(cls, v):
        if v < 1:
            raise ValueError("need at least one submitter per organization")
        return v

    @classmethod
    def parse(cls, data: dict) -> TopologyConfig:
        try:
            return cls.parse_obj(data)
        except ValidationError as e:
            raise ConfigError(f"invalid topology: {e}")

    @classmethod
    def from_file(cls, path: str | Path) -> TopologyConfig:
        try:
            data = settings.load_json(path)
        except (OSError, ValueError) as e:
            raise ConfigError(f"cannot read topology {path}: {e}")
        return cls.parse(data)

    def org_profile(self, org: OrgConfig) -> NodeProfile:
        return resolve_profile(org.profile if org.profile is not None else self.profile)

    def with_peers(self, peers: int) -> TopologyConfig:
        """Every organization gets the given number of peers."""
        orgs = [org.copy(update={"peers": peers}) for org in self.orgs]
        return self.copy(update={"orgs": orgs})

    def with_orgs(self, count: int) -> TopologyConfig:
        """Grow or shrink to count organizations shaped like the first one."""
        template = self.orgs[0]
        orgs = [
            self.orgs[i]
            if i < len(self.orgs)
            else template.copy(update={"name": f"Org{i + 1}PeerOrg"})
            for i in range(count)
        ]
        return self.copy(update={"orgs": orgs})

    def with_policy(self, policy: str) -> TopologyConfig:
        if not POLICY_RE.match(policy):
            raise ConfigError(f"bad policy {policy!r}")
        return self.copy(update={"policy": policy})


def default_topology() -> TopologyConfig:
    """Two organizations with two peers each."""
    return TopologyConfig.from_file("net2x2.json")
