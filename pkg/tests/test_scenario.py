from __future__ import annotations

import json

import pytest
from dotmap import DotMap

from rhsim.chaincode import ride_request_key, user_key
from rhsim.errors import AccessDenied, ConfigError, ScenarioError, ScenarioStepFailed
from rhsim.identity import Role
from rhsim.scenario import ScenarioRunner, load_script, owns, query_as, run_scenario

AIRPORT = "36.13149/-86.6694"


def script(**extra) -> DotMap:
    data = {
        "name": "tiny",
        "seed": 5,
        "actors": {
            "R1": {"org": "Org1PeerOrg", "role": "Rider", "bootstrap": True},
            "D1": {"org": "Org2PeerOrg", "role": "Driver", "bootstrap": True},
        },
        "locations": {"Airport": AIRPORT},
        "steps": [
            {"actor": "R1", "fn": "requestRide", "args": ["@Airport"]},
            {"actor": "D1", "fn": "acceptRide", "args": ["$ride:R1"]},
        ],
    }
    data.update(extra)
    return DotMap(data, _dynamic=False)


def test_archived_ride_record():
    report, network = run_scenario("table2_fixture")
    assert report.passed, [a.to_dict() for a in report.failures]
    table = report.to_dict()["snapshots"]["R1"]
    assert table["Co-RiderPicLocation"] == "36.15395/-85.5138"
    assert table["Co-RiderDropLocation"] == "N/A"
    refused = [s for s in report.steps if s.code == "NotAssignedDriver"]
    assert [(s.actor, s.fn) for s in refused] == [("R1", "setCoRiderInformation")]
    assert len(set(network.state_dumps().values())) == 1


def test_nashville_story():
    report, _ = run_scenario("nashville")
    assert report.passed, [a.to_dict() for a in report.failures]
    assert ("D1", "RideRequested") in report.delivered
    assert report.height == max(s.block_height or 0 for s in report.steps)


def test_same_seed_same_report():
    first, _ = run_scenario("nashville")
    second, _ = run_scenario("nashville")
    assert json.dumps(first.to_dict()) == json.dumps(second.to_dict())


def test_failing_assertion_is_reported():
    report, _ = run_scenario(
        script(assertions=[{"count": "RideRequest", "equals": 2}, {"deleted": "$ride:R1"}])
    )
    assert not report.passed
    assert [a.index for a in report.failures] == [0, 1]
    assert report.failures[0].actual == 1


def test_unexpected_rejection_stops_the_run():
    steps = [{"actor": "R1", "fn": "acceptRide", "args": ["$ride:R1"]}]
    with pytest.raises(ScenarioStepFailed) as e:
        run_scenario(script(steps=steps))
    assert e.value.index == 0
    assert e.value.details["code"] == "NotADriver"


def test_expected_error_must_happen():
    steps = [{"actor": "R1", "fn": "requestRide", "args": ["@Airport"], "expect_error": "X"}]
    with pytest.raises(ScenarioStepFailed):
        run_scenario(script(steps=steps))


def test_script_checks():
    with pytest.raises(ConfigError):
        load_script("no-such-scenario")
    bad_step = script(steps=[{"actor": "R9", "fn": "requestRide", "args": []}])
    with pytest.raises(ConfigError):
        run_scenario(bad_step)
    bad_fn = script(steps=[{"actor": "R1", "fn": "teleport", "args": []}])
    with pytest.raises(ConfigError):
        run_scenario(bad_fn)
    with pytest.raises(ConfigError):
        run_scenario(script(assertions=[{"weight": 3}]))


def test_references(network):
    runner = ScenarioRunner(script(), network)
    runner.enroll()
    r1 = runner.actors["R1"]
    assert runner.resolve("@Airport") == AIRPORT
    assert runner.resolve(["$ride:R1", "$id:R1"]) == [
        ride_request_key(r1.msp, r1.uid),
        f"ID-{r1.uid}",
    ]
    assert runner.resolve("$user:R1") == user_key(r1.msp, r1.uid)
    assert runner.resolve("plain") == "plain"
    with pytest.raises(ScenarioError):
        runner.resolve("@Moon")
    with pytest.raises(ScenarioError):
        runner.resolve("$ride:R9")


def test_query_as(network):
    alice = network.enroll("Org1PeerOrg", Role.RIDER, "alice", alias="alice")
    bob = network.enroll("Org2PeerOrg", Role.RIDER, "bob", alias="bob")
    network.bootstrap([(alice, "pw", "Rider"), (bob, "pw", "Rider")])
    network.transact(network.client(bob), "requestRide", [AIRPORT])

    own = ride_request_key(alice.msp, alice.uid)
    assert owns(alice, own)
    assert not owns(alice, ride_request_key(bob.msp, bob.uid))
    assert query_as(network, alice, user_key(alice.msp, alice.uid))["role"] == "Rider"
    assert query_as(network, alice, own) is None
    with pytest.raises(AccessDenied):
        query_as(network, alice, ride_request_key(bob.msp, bob.uid))
    with pytest.raises(AccessDenied):
        query_as(network, alice, user_key(bob.msp, bob.uid))
    with pytest.raises(AccessDenied):
        query_as(network, alice, own, direct=True)
