from __future__ import annotations

import itertools

import numpy as np
import pytest

from rhsim.errors import ConfigError
from rhsim.netsim import Rng
from rhsim.workload import (
    LIFECYCLE,
    Adversary,
    ConstantRate,
    Poisson,
    RideWorkload,
    gen_constant,
    gen_poisson,
    parse_traffic,
    run_adversary,
    run_bench,
    run_points,
    sweep_orgs,
    sweep_points,
    traffic_profile,
)


def take(gen, n):
    return np.array(list(itertools.islice(gen, n)))


def test_constant_traffic_stays_in_band():
    delays = take(gen_constant(100, 0.3, Rng(1)), 5000)
    assert delays.min() >= 70
    assert delays.max() <= 130
    assert abs(delays.mean() - 100) < 2
    assert set(take(gen_constant(100, 0, Rng(1)), 10)) == {100}


def test_poisson_traffic():
    delays = take(gen_poisson(50, Rng(2)), 5000)
    assert abs(delays.mean() - 20) < 1.5
    assert abs(delays.std() / delays.mean() - 1) < 0.1
    assert Poisson.from_interarrival_ms(20).lambda_tps == 50
    assert Poisson(lambda_tps=50).mean_delay_ms == 20


def test_traffic_profile_options():
    assert traffic_profile("constant", delay_ms=10) == ConstantRate(delay_ms=10)
    assert traffic_profile("poisson", lambda_interarrival_ms=4).lambda_tps == 250
    assert parse_traffic({"kind": "poisson", "lambda_tps": 5}) == Poisson(lambda_tps=5)
    assert ConstantRate(delay_ms=100).scaled(4).delay_ms == 25
    bad = [
        dict(kind="constant"),
        dict(kind="constant", delay_ms=0),
        dict(kind="constant", delay_ms=10, deviation=1),
        dict(kind="poisson"),
        dict(kind="poisson", lambda_tps=5, lambda_interarrival_ms=200),
        dict(kind="burst", delay_ms=10),
    ]
    for options in bad:
        with pytest.raises(ConfigError):
            traffic_profile(**options)
    with pytest.raises(ConfigError):
        parse_traffic({"kind": "constant", "delay_ms": 10, "jitter": 2})
    with pytest.raises(ConfigError):
        RideWorkload(0)


def test_single_ride_bench(topology):
    report = run_bench(topology, ConstantRate(delay_ms=100), RideWorkload(1), seed=4)
    assert [s.fn for s in report.samples] == list(LIFECYCLE)
    assert report.valid == report.submitted == 6
    assert report.lossless
    assert (report.events_expected, report.events_delivered) == (4, 4)
    assert report.flag_disagreements == 0
    assert report.tps > 0
    assert all(s.event_ms >= s.orderer_ms for s in report.samples)
    # header plus one row per transaction
    assert len(report.to_csv().splitlines()) == 7


def test_bench_is_deterministic(topology):
    def run():
        return run_bench(topology, ConstantRate(delay_ms=50), RideWorkload(3), seed=21)

    first, second = run(), run()
    assert first.to_csv() == second.to_csv()
    assert first.to_json() == second.to_json()


def test_bench_without_contention_is_lossless(topology):
    report = run_bench(topology, ConstantRate(delay_ms=100), RideWorkload(20), seed=8)
    assert report.valid == 120
    assert report.counts["unfinished"] == 0
    assert report.lossless
    assert report.flag_disagreements == 0
    assert report.events_delivered == 80


def test_bench_report_files(topology, tmp_path):
    report = run_bench(topology, Poisson(lambda_tps=20), RideWorkload(2), seed=1)
    csv_path, json_path = report.write(tmp_path, "poisson")
    assert csv_path.read_text() == report.to_csv()
    assert json_path.name == "poisson.json"
    assert report.summary()["config"]["traffic"] == "poisson(20 tps)"


def spearman(xs, ys) -> float:
    rx = np.argsort(np.argsort(xs))
    ry = np.argsort(np.argsort(ys))
    return float(np.corrcoef(rx, ry)[0, 1])


def non_increasing(values, slack=0.05) -> bool:
    return all(b <= a * (1 + slack) for a, b in zip(values, values[1:]))


def test_thousand_rides_are_lossless(topology):
    report = run_bench(topology, ConstantRate(delay_ms=100, deviation=0.3), 1000, seed=1)
    assert report.valid == report.submitted == 6000
    assert report.counts["unfinished"] == 0
    assert (report.events_expected, report.events_delivered) == (4000, 4000)
    assert report.lossless


def test_event_latency_follows_the_delay(topology):
    delays = [100, 200, 300, 400, 500]
    result = sweep_orgs(
        topology,
        "delay",
        delays,
        ConstantRate(delay_ms=100, deviation=0.3),
        rides=200,
        seed=2,
        workers=1,
    )
    event_ms = result.column("event_ms")
    assert spearman(delays, event_ms) >= 0.9, event_ms
    assert non_increasing(result.column("peer_ms")), result.column("peer_ms")
    assert non_increasing(result.column("orderer_ms")), result.column("orderer_ms")


def peer_sweep(topology, policy):
    # the client checks every endorsement in turn
    client = {"verify_service_ms": 0.5, "submit_service_ms": 0}
    base = topology.copy(update={"client_profile": client})
    return sweep_orgs(
        base,
        "peers",
        [1, 2, 3, 4],
        ConstantRate(delay_ms=100),
        rides=20,
        seed=6,
        policy=policy,
        workers=1,
    )


def test_endorsement_cost_grows_with_peers(topology):
    result = peer_sweep(topology, "ALL_ORG_PEERS")
    assert result.policy == "ALL_ORG_PEERS"
    peer_ms = result.column("peer_ms")
    assert all(a < b for a, b in zip(peer_ms, peer_ms[1:])), peer_ms
    assert result.trend().count("\n") == 5


def test_balanced_endorsement_stays_flat(topology):
    result = peer_sweep(topology, "ANY_ONE")
    peer_ms = result.column("peer_ms")
    baseline = peer_ms[0]
    assert all(ms <= baseline * 1.1 for ms in peer_ms[1:]), peer_ms


def test_sweep_points(topology):
    traffic = ConstantRate(delay_ms=100)
    orgs = sweep_points(topology, "orgs", [1, 2, 4], traffic)
    assert [len(p.topology.orgs) for p in orgs] == [1, 2, 4]
    # each new organization brings its own submitters
    assert [p.traffic.delay_ms for p in orgs] == [100, 100, 100]
    flat = sweep_points(topology, "orgs", [1, 2, 4], traffic, scale_traffic=False)
    assert [p.traffic.delay_ms for p in flat] == [50, 100, 200]
    peers = sweep_points(topology, "peers", [3], traffic, policy="ANY_ONE")
    assert [org.peers for org in peers[0].topology.orgs] == [3, 3]
    assert peers[0].topology.policy == "ANY_ONE"
    assert orgs[0].topology.policy == "ALL_ORG_PEERS"
    rates = sweep_points(topology, "lambda", [5, 10], traffic)
    assert [p.traffic.lambda_tps for p in rates] == [5, 10]

    for axis, values in [
        ("latency", [1]),
        ("peers", []),
        ("peers", [2, 1]),
        ("orgs", [1.5]),
        ("peers", [0, 1]),
    ]:
        with pytest.raises(ConfigError):
            sweep_points(topology, axis, values, traffic)
    with pytest.raises(ConfigError):
        sweep_points(topology, "delay", [10], Poisson(lambda_tps=5))
    with pytest.raises(ConfigError):
        sweep_points(topology, "orgs", [1, 2], traffic, policy="CROSS_ORG:1")


def test_org_sweep_rises_then_falls(topology):
    pi = topology.copy(update={"profile": "pi"})
    result = sweep_orgs(
        pi,
        "orgs",
        [1, 2, 3, 4, 5, 6],
        ConstantRate(delay_ms=100, deviation=0.3),
        rides=60,
        seed=1,
        workers=1,
    )
    assert result.policy == "ALL_ORG_PEERS"
    assert result.reports[0].valid == 360
    tps = result.column("tps")
    peak = int(np.argmax(tps))
    assert 0 < peak < len(tps) - 1, tps
    assert all(a < b for a, b in zip(tps[:peak], tps[1 : peak + 1])), tps
    assert all(a > b for a, b in zip(tps[peak:], tps[peak + 1 :])), tps

@pytest.mark.asyncio
async def test_run_points_in_process(topology):
    points = sweep_points(topology, "delay", [50, 100], ConstantRate(delay_ms=100))
    reports = await run_points(points, rides=1, seed=3, workers=1)
    assert [r.config["traffic"] for r in reports] == [str(p.traffic) for p in points]
    assert all(r.lossless for r in reports)


def test_eclipse_under_cross_org(topology):
    verdict = run_adversary(Adversary.ECLIPSE, topology, seed=1, policy="CROSS_ORG:1")
    assert verdict.passed
    assert verdict.observed["committed"] == 0
    assert verdict.observed["policy_unsatisfied"] == verdict.observed["attempted"]


def test_eclipse_under_any_one(topology):
    verdict = run_adversary("Eclipse", topology, seed=1, policy="ANY_ONE")
    assert verdict.passed
    assert verdict.observed["committed"] == verdict.observed["attempted"]


def test_malicious_query(topology):
    verdict = run_adversary(Adversary.MALICIOUS_QUERY, topology, seed=2)
    assert verdict.passed
    assert verdict.observed["leaked"] == 0
    assert verdict.observed["denied"] == verdict.observed["attempts"] == 100


def test_stale_endorser(topology):
    verdict = run_adversary(Adversary.STALE_ENDORSER, topology, seed=3)
    assert verdict.passed
    assert verdict.policy == "ALL_ORG_PEERS"
    assert verdict.observed["blocks_ordered"] == 0
    assert verdict.to_dict()["scenario"] == "StaleEndorser"


def test_unknown_adversary(topology):
    with pytest.raises(ConfigError):
        run_adversary("Sybil", topology)
