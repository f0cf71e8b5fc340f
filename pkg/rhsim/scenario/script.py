"""Scripted ride-hailing stories replayed through the full transaction flow.

A scenario document::

    {
      "name": "nashville",
      "actors": {"R1": {"org": "Org1PeerOrg", "role": "Rider", "uid": "eDUwOT"}},
      "locations": {"Airport": "36.13149/-86.6694"},
      "subscriptions": [{"actor": "D1", "event": "RideRequested"}],
      "steps": [{"actor": "R1", "fn": "requestRide", "args": ["@Airport"]}],
      "assertions": [{"ride_of": "R1", "field": "status", "equals": "Completed"}]
    }

Step arguments may reference "@<location>", "$ride:<actor>" (the actor's
temporal ride key), "$id:<actor>" (ride id) and "$user:<actor>" (user key).
Steps run one at a time; each waits for its commit event.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from dotmap import DotMap

from ..chaincode import (
    FUNCTIONS,
    GeoPoint,
    RideRecord,
    ride_request_key,
    ride_table,
    user_key,
)
from ..errors import (
    ConfigError,
    EndorsementRejected,
    RhsimError,
    RoleTransitionError,
    ScenarioError,
    ScenarioStepFailed,
)
from ..identity import Identity, Role
from ..settings import SCENARIO_DIR
from ..settings.topology import TopologyConfig, default_topology
from ..txflow import Client, FabricNetwork, Peer, RideEvent

logger = logging.getLogger(__name__)

DEFAULT_PASSWORD = "password"


def load_script(path: str | Path) -> DotMap:
    """Read a scenario document; bare names are looked up among the shipped ones."""
    p = Path(path)
    if not p.exists() and not p.is_absolute():
        shipped = SCENARIO_DIR / p
        p = shipped if shipped.exists() else SCENARIO_DIR / f"{p}.json"
    try:
        with open(p) as f:
            data = json.load(f)
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot read scenario {path}: {e}")
    script = DotMap(data, _dynamic=False)
    check_script(script)
    return script


def check_script(script: DotMap):
    actors = script.get("actors")
    if not actors:
        raise ConfigError("a scenario needs actors")
    for name, actor in actors.items():
        if "org" not in actor:
            raise ConfigError(f"actor {name} has no org")
        try:
            Role(actor.get("role", "Rider"))
        except ValueError:
            raise ConfigError(f"actor {name} has unknown role {actor.get('role')}")
    for index, step in enumerate(script.get("steps", [])):
        if step.get("actor") not in actors:
            raise ConfigError(f"step {index}: unknown actor {step.get('actor')!r}")
        if step.get("fn") not in FUNCTIONS:
            raise ConfigError(f"step {index}: unknown function {step.get('fn')!r}")
    for sub in script.get("subscriptions", []):
        if sub.get("actor") not in actors:
            raise ConfigError(f"subscription for unknown actor {sub.get('actor')!r}")


@dataclass
class AssertionResult:
    index: int
    description: str
    passed: bool
    actual: object = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "description": self.description,
            "passed": self.passed,
            "actual": self.actual,
        }


@dataclass
class StepRecord:
    index: int
    actor: str
    fn: str
    code: str
    response: str = ""
    event: str | None = None
    block_height: int | None = None


@dataclass
class ScenarioReport:
    name: str
    steps: list[StepRecord] = field(default_factory=list)
    assertions: list[AssertionResult] = field(default_factory=list)
    snapshots: dict[str, RideRecord] = field(default_factory=dict)
    delivered: list[tuple[str, str]] = field(default_factory=list)
    height: int = 0

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    @property
    def failures(self) -> list[AssertionResult]:
        return [a for a in self.assertions if not a.passed]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "height": self.height,
            "steps": [vars(s) for s in self.steps],
            "assertions": [a.to_dict() for a in self.assertions],
            "snapshots": {k: ride_table(v) for k, v in self.snapshots.items()},
            "delivered": [list(d) for d in self.delivered],
        }


class ScenarioRunner:
    def __init__(self, script: DotMap, network: FabricNetwork):
        self.script = script
        self.network = network
        self.actors: dict[str, Identity] = {}
        self.passwords: dict[str, str] = {}
        self.report = ScenarioReport(script.get("name", "scenario"))

    @property
    def locations(self) -> dict:
        return self.script.get("locations", {})

    def enroll(self):
        users = []
        for name, actor in self.script.actors.items():
            role = Role(actor.get("role", "Rider"))
            identity = self.network.enroll(
                actor.org,
                role,
                actor.get("seed", f"{self.network.seed}:{name}"),
                uid=actor.get("uid"),
                alias=name,
            )
            self.actors[name] = identity
            self.passwords[name] = actor.get("password", DEFAULT_PASSWORD)
            if actor.get("bootstrap", False):
                users.append((identity, self.passwords[name], role.value))
        self.network.bootstrap(users)
        for sub in self.script.get("subscriptions", []):
            self._subscribe(sub.actor, sub.event)

    def _subscribe(self, actor: str, event_name: str):
        def record(event: RideEvent):
            self.report.delivered.append((actor, event.name))
            logger.info("%s got %s for %s", actor, event.name, event.payload.get("ride_id"))

        self.client(actor).subscribe(event_name, record)

    def client(self, actor: str) -> Client:
        return self.network.client(self.actors[actor])

    def resolve(self, value):
        if isinstance(value, list):
            return [self.resolve(v) for v in value]
        if not isinstance(value, str):
            return value
        if value.startswith("@"):
            name = value[1:]
            if name not in self.locations:
                raise ScenarioError(f"unknown location {name!r}")
            return str(GeoPoint.parse(self.locations[name]))
        kind, sep, actor = value.partition(":")
        if sep and kind in ("$ride", "$id", "$user"):
            if actor not in self.actors:
                raise ScenarioError(f"unknown actor in {value!r}")
            identity = self.actors[actor]
            if kind == "$ride":
                return ride_request_key(identity.msp, identity.uid)
            if kind == "$id":
                return f"ID-{identity.uid}"
            return user_key(identity.msp, identity.uid)
        return value

    def run_steps(self):
        for index, step in enumerate(self.script.get("steps", [])):
            try:
                self.run_step(index, step)
            except ScenarioStepFailed:
                raise
            except RhsimError as e:
                raise ScenarioStepFailed(index, f"{step.actor} {step.fn}: {e}")

    def run_step(self, index: int, step: DotMap):
        actor, fn = step.actor, step.fn
        args = self.resolve(list(step.get("args", [])))
        transient = None
        if FUNCTIONS[fn].needs_password:
            password = step.get("password", self.passwords[actor])
            transient = {"password": password.encode()}
        expect_error = step.get("expect_error")
        if fn == "leaveDriver":
            self._snapshot(actor)
        logger.info("step %s: %s %s %s", index, actor, fn, args)

        if FUNCTIONS[fn].read_only:
            self._query_step(index, step, args, transient)
            return

        result = self.network.transact(
            self.client(actor), fn, args, transient=transient, timestamp=step.get("at")
        )
        code = result.code
        if result.code == EndorsementRejected.code:
            code = result.error
        record = StepRecord(
            index,
            actor,
            fn,
            code,
            result.response.decode(errors="replace"),
            result.event.name if result.event else None,
            result.block_height,
        )
        self.report.steps.append(record)

        if expect_error is not None:
            if result.valid or code != expect_error:
                raise ScenarioStepFailed(
                    index, f"{fn} expected {expect_error}, got {code}"
                )
            return
        if not result.valid:
            raise ScenarioStepFailed(index, f"{actor} {fn} failed: {code}", code=code)
        expect_event = step.get("expect_event")
        if expect_event is not None and record.event != expect_event:
            raise ScenarioStepFailed(
                index, f"{fn} expected event {expect_event}, got {record.event}"
            )
        if fn == "upgradeToDriver":
            self._upgrade(actor)

    def _query_step(self, index: int, step: DotMap, args: list, transient):
        expect_error = step.get("expect_error")
        try:
            response = self.client(step.actor).evaluate(step.fn, args, transient)
        except EndorsementRejected as e:
            code = e.details.get("error_code")
            self.report.steps.append(StepRecord(index, step.actor, step.fn, code))
            if expect_error == code:
                return
            raise ScenarioStepFailed(index, f"{step.actor} {step.fn} failed: {code}")
        text = response.decode()
        self.report.steps.append(StepRecord(index, step.actor, step.fn, "VALID", text))
        if expect_error is not None:
            raise ScenarioStepFailed(index, f"{step.fn} expected {expect_error}")
        if "expect" in step and json.loads(text) != _plain(step.expect):
            raise ScenarioStepFailed(index, f"{step.fn} returned {text}")

    def _upgrade(self, actor: str):
        try:
            upgraded = self.network.registry.upgrade_identity(self.actors[actor])
        except RoleTransitionError:
            return
        self.actors[actor] = upgraded
        self.client(actor).identity = upgraded

    def _snapshot(self, actor: str):
        """Keep the temporal ride as it was before leaveDriver deletes it."""
        identity = self.actors[actor]
        raw = self._state(ride_request_key(identity.msp, identity.uid))
        if raw is not None:
            self.report.snapshots[actor] = json.loads(raw)

    @property
    def oracle(self) -> Peer:
        """The peer whose world state assertions read."""
        return next(iter(self.network.peers.values()))

    def _state(self, key: str) -> bytes | None:
        versioned = self.oracle.ledger.state.get(key)
        return versioned.value if versioned is not None else None

    def permanent_rides(self, actor: str) -> list[RideRecord]:
        identity = self.actors[actor]
        raw = self._state(user_key(identity.msp, identity.uid))
        if raw is None:
            return []
        return [json.loads(self._state(key)) for key in json.loads(raw)["ride_keys"]]

    def check(self, index: int, assertion: DotMap) -> AssertionResult:
        if "ride_of" in assertion or "snapshot_of" in assertion:
            if "ride_of" in assertion:
                owner, where = assertion.ride_of, "permanent ride"
                rides = self.permanent_rides(owner)
                position = assertion.get("index", 0)
                ride = rides[position] if position < len(rides) else None
            else:
                owner, where = assertion.snapshot_of, "ride before leaving"
                ride = self.report.snapshots.get(owner)
            if ride is None:
                return AssertionResult(index, f"{owner} has a {where}", False)
            if "table" in assertion:
                expected = {k: self.resolve(v) for k, v in _plain(assertion.table).items()}
                actual = ride_table(ride)
                return AssertionResult(
                    index, f"{where} of {owner} matches table", actual == expected, actual
                )
            field_name = assertion["field"]
            actual = ride[field_name]
            if assertion.get("absent", False):
                return AssertionResult(
                    index, f"{field_name} of {owner}'s {where} absent", actual is None, actual
                )
            expected = self.resolve(assertion.equals)
            return AssertionResult(
                index,
                f"{field_name} of {owner}'s {where} == {expected}",
                actual == expected,
                actual,
            )
        if "deleted" in assertion:
            key = self.resolve(assertion.deleted)
            return AssertionResult(index, f"{key} deleted", self._state(key) is None)
        if "count" in assertion:
            namespace = assertion["count"]
            actual = len(self.oracle.ledger.state.keys(namespace))
            return AssertionResult(
                index,
                f"{assertion.equals} {namespace} keys",
                actual == assertion.equals,
                actual,
            )
        if "delivered" in assertion:
            actual = sum(
                1 for actor, _ in self.report.delivered if actor == assertion.delivered
            )
            return AssertionResult(
                index,
                f"{assertion.delivered} received {assertion.equals} events",
                actual == assertion.equals,
                actual,
            )
        raise ConfigError(f"assertion {index} has no known form: {_plain(assertion)}")

    def run(self) -> ScenarioReport:
        self.enroll()
        self.run_steps()
        for index, assertion in enumerate(self.script.get("assertions", [])):
            result = self.check(index, assertion)
            log = logger.info if result.passed else logger.warning
            status = "ok" if result.passed else "FAILED"
            log("assertion %s: %s %s", index, result.description, status)
            self.report.assertions.append(result)
        self.report.height = max(peer.height for peer in self.network.peers.values())
        return self.report


def _plain(value):
    return value.toDict() if isinstance(value, DotMap) else value


def scenario_topology(
    script: DotMap, topology: TopologyConfig | None = None
) -> TopologyConfig:
    if topology is not None:
        return topology
    if "topology" in script:
        return TopologyConfig.from_file(script.topology)
    return default_topology()


def run_scenario(
    script: DotMap | str | Path,
    topology: TopologyConfig | None = None,
    seed: int | None = None,
    network: FabricNetwork | None = None,
) -> tuple[ScenarioReport, FabricNetwork]:
    """Replay a scenario on a fresh network (or the one given) and check it."""
    if isinstance(script, DotMap):
        check_script(script)
    else:
        script = load_script(script)
    if network is None:
        topology = scenario_topology(script, topology)
        network = FabricNetwork(topology, seed if seed is not None else script.get("seed"))
    report = ScenarioRunner(script, network).run()
    logger.info(
        "scenario %s: %s/%s assertions hold",
        report.name,
        len(report.assertions) - len(report.failures),
        len(report.assertions),
    )
    return report, network

