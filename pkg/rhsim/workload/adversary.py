"""Attacks against the ride-hailing network and the outcome each should have.

Eclipse         a rider's client only reaches its own organization's peers
MaliciousQuery  a rider tries to read every other user's records
StaleEndorser   one peer endorses from a ledger a block behind
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum

from ..chaincode import ride_request_key, user_key
from ..errors import AccessDenied, ConfigError, Divergence, PolicyUnsatisfied
from ..identity import Identity, Role
from ..netsim import Rng
from ..scenario.query import owns, query_as
from ..settings.topology import TopologyConfig, default_topology
from ..txflow import FabricNetwork, PolicyKind

logger = logging.getLogger(__name__)

PASSWORD = "hunter2"
PICKUP = "36.15212/-86.7735"
DROPOFF = "36.16624/-86.7719"


class Adversary(str, Enum):
    ECLIPSE = "Eclipse"
    MALICIOUS_QUERY = "MaliciousQuery"
    STALE_ENDORSER = "StaleEndorser"


@dataclass
class ScenarioVerdict:
    scenario: str
    policy: str
    expected: str
    passed: bool
    observed: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "policy": self.policy,
            "expected": self.expected,
            "passed": self.passed,
            "observed": self.observed,
        }

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.scenario} under {self.policy}: "
            f"expected {self.expected}, observed {self.observed}"
        )


def _password() -> dict[str, bytes]:
    return {"password": PASSWORD.encode()}


def _enroll_pair(network: FabricNetwork, org: str, name: str) -> tuple[Identity, Identity]:
    rider = network.enroll(
        org, Role.RIDER, f"{network.seed}:{name}:rider", alias=f"{name}-rider"
    )
    driver = network.enroll(
        org, Role.DRIVER, f"{network.seed}:{name}:driver", alias=f"{name}-driver"
    )
    return rider, driver


def _complete_ride(network: FabricNetwork, rider: Identity, driver: Identity, leave=True):
    """Drive one full ride through the network, one transaction at a time."""
    key = ride_request_key(rider.msp, rider.uid)
    r, d = network.client(rider), network.client(driver)
    steps = [
        (r, "requestRide", [PICKUP]),
        (d, "acceptRide", [key]),
        (r, "setRideDestination", [key, DROPOFF]),
        (d, "pickupRider", [key, PICKUP]),
        (d, "dropoffRider", [key, DROPOFF]),
    ]
    if leave:
        steps.append((r, "leaveDriver", [key]))
    for client, fn, args in steps:
        result = network.transact(client, fn, args)
        if not result.valid:
            raise ConfigError(f"fixture ride failed at {fn}: {result.code} {result.error}")


def run_eclipse(topology: TopologyConfig, seed: int, txs: int = 4) -> ScenarioVerdict:
    network = FabricNetwork(topology, seed)
    msps = list(network.peers_by_org)
    victim_org = msps[0]
    victims = [
        network.enroll(victim_org, Role.RIDER, f"{seed}:eclipse:{i}", alias=f"victim{i}")
        for i in range(txs)
    ]
    network.bootstrap()

    # all victims share one eclipsed client node
    allowed = [peer.name for peer in network.org_peers(victim_org)]
    results = []
    for identity in victims:
        client = network.client(identity, allowed_peers=allowed, node="client.eclipsed")
        results.append(
            network.transact(client, "registerUser", [], transient=_password())
        )

    committed = sum(r.valid for r in results)
    unsatisfied = sum(r.code == PolicyUnsatisfied.code for r in results)
    policy = network.policy
    protected = policy.kind == PolicyKind.CROSS_ORG or (
        policy.kind == PolicyKind.ALL_ORG_PEERS and len(msps) > 1
    )
    if protected:
        expected = "every transaction refused with PolicyUnsatisfied"
        passed = committed == 0 and unsatisfied == len(results)
    else:
        expected = "every transaction commits"
        passed = committed == len(results)
    return ScenarioVerdict(
        Adversary.ECLIPSE.value,
        str(policy),
        expected,
        passed,
        {
            "attempted": len(results),
            "committed": committed,
            "policy_unsatisfied": unsatisfied,
        },
    )


def run_malicious_query(
    topology: TopologyConfig, seed: int, attempts: int = 100
) -> ScenarioVerdict:
    network = FabricNetwork(topology, seed)
    msps = list(network.peers_by_org)
    attacker = network.enroll(msps[0], Role.RIDER, f"{seed}:mallory", alias="mallory")
    pairs = [
        _enroll_pair(network, msps[i % len(msps)], f"victim{i}") for i in range(3)
    ]
    users = [(attacker, PASSWORD, Role.RIDER.value)]
    for rider, driver in pairs:
        users += [(rider, PASSWORD, Role.RIDER.value), (driver, PASSWORD, Role.DRIVER.value)]
    network.bootstrap(users)

    # two archived rides and one still in flight
    _complete_ride(network, *pairs[0])
    _complete_ride(network, *pairs[1])
    _complete_ride(network, *pairs[2], leave=False)

    state = network.peers[next(iter(network.peers))].ledger.state
    foreign = sorted(
        key
        for namespace in ("User", "RideRequest", "Ride")
        for key in state.keys(namespace)
        if not owns(attacker, key)
    )
    # every foreign key once, then random repeats
    rng = Rng(seed, "malicious-query")
    targets = list(foreign)
    while len(targets) < attempts:
        targets.append(rng.choice(foreign))

    leaked, denied, direct_denied = [], 0, 0
    for key in targets:
        try:
            value = query_as(network, attacker, key)
            leaked.append(key)
            logger.error("mallory read %s: %s", key, value)
        except AccessDenied:
            denied += 1
        try:
            query_as(network, attacker, key, direct=True)
            leaked.append(key)
        except AccessDenied:
            direct_denied += 1

    # getUserInfo ignores a victim id slipped in as an argument
    own = json.loads(network.client(attacker).evaluate("getUserInfo"))
    for rider, _ in pairs:
        spoofed = json.loads(
            network.client(attacker).evaluate("getUserInfo", [rider.msp, rider.uid])
        )
        if spoofed != own:
            leaked.append(user_key(rider.msp, rider.uid))

    return ScenarioVerdict(
        Adversary.MALICIOUS_QUERY.value,
        str(network.policy),
        "no foreign record readable",
        not leaked,
        {
            "foreign_keys": len(foreign),
            "attempts": len(targets),
            "denied": denied,
            "direct_denied": direct_denied,
            "leaked": len(leaked),
        },
    )


def run_stale_endorser(topology: TopologyConfig, seed: int) -> ScenarioVerdict:
    # every peer endorses, so the stale one is always asked
    topology = topology.with_policy("ALL_ORG_PEERS")
    network = FabricNetwork(topology, seed)
    msps = list(network.peers_by_org)
    rider, driver = _enroll_pair(network, msps[0], "stale")
    network.bootstrap(
        [(rider, PASSWORD, Role.RIDER.value), (driver, PASSWORD, Role.DRIVER.value)]
    )
    r, d = network.client(rider), network.client(driver)
    event_peers = {r.event_peer.name, d.event_peer.name}
    candidates = [p for p in network.peers.values() if p.name not in event_peers]
    stale = candidates[-1]
    stale.withhold(1)

    key = ride_request_key(rider.msp, rider.uid)
    request = network.transact(r, "requestRide", [PICKUP])
    height = network.orderer.height
    accept = network.transact(d, "acceptRide", [key])
    ordered_after = network.orderer.height - height

    stale.release()
    dumps = set(network.state_dumps().values())
    passed = (
        request.valid
        and accept.code == Divergence.code
        and ordered_after == 0
        and len(dumps) == 1
    )
    return ScenarioVerdict(
        Adversary.STALE_ENDORSER.value,
        str(network.policy),
        "Divergence at collect and nothing ordered from it",
        passed,
        {
            "stale_peer": stale.name,
            "accept_code": accept.code,
            "retries": accept.retries,
            "blocks_ordered": ordered_after,
            "states_agree_after_release": len(dumps) == 1,
        },
    )


def run_adversary(
    scenario: Adversary | str,
    topology: TopologyConfig | None = None,
    seed: int = 0,
    policy: str | None = None,
) -> ScenarioVerdict:
    topology = topology or default_topology()
    if policy is not None:
        topology = topology.with_policy(policy)
    try:
        scenario = Adversary(scenario)
    except ValueError:
        raise ConfigError(f"unknown adversary scenario {scenario!r}")
    if scenario == Adversary.ECLIPSE:
        verdict = run_eclipse(topology, seed)
    elif scenario == Adversary.MALICIOUS_QUERY:
        verdict = run_malicious_query(topology, seed)
    else:
        verdict = run_stale_endorser(topology, seed)
    log = logger.info if verdict.passed else logger.warning
    log("%s", verdict)
    return verdict
