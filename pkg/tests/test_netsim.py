from __future__ import annotations

import pytest
from hypothesis import given, settings as hsettings, strategies as st
from pydantic import ValidationError

from rhsim.errors import TimeTravel, UnknownNode
from rhsim.netsim import (
    PROFILE_PRESETS,
    NodeProfile,
    Rng,
    Scheduler,
    SimNetwork,
    ms_to_us,
    resolve_profile,
    us_to_ms,
)
from rhsim.netsim.rng import stream_words
from rhsim.settings.topology import OrderingConfig
from rhsim.txflow import OrderingService


def test_ms_conversion():
    assert ms_to_us(0.1) == 100
    assert ms_to_us(2000) == 2_000_000
    assert ms_to_us(0.2) * 3 == ms_to_us(0.6)
    assert us_to_ms(1500) == 1.5


def test_scheduler_orders_by_time_then_insertion():
    scheduler = Scheduler()
    fired = []
    scheduler.schedule(20, lambda: fired.append("late"))
    scheduler.schedule(10, lambda: fired.append("first"))
    scheduler.schedule(10, lambda: fired.append("second"))
    result = scheduler.run_until()
    assert fired == ["first", "second", "late"]
    assert result.now == 20
    assert result.executed == 3
    assert result.pending == 0


def test_scheduler_deadline_and_time_travel():
    scheduler = Scheduler()
    fired = []
    scheduler.schedule(5, lambda: fired.append(5))
    scheduler.schedule(50, lambda: fired.append(50))
    result = scheduler.run_until(10)
    assert fired == [5]
    assert result.now == 10
    assert result.pending == 1
    with pytest.raises(TimeTravel):
        scheduler.schedule(9, lambda: None)


def test_run_while_stops_on_predicate():
    scheduler = Scheduler()
    fired = []
    for t in range(1, 6):
        scheduler.schedule(t, lambda t=t: fired.append(t))
    scheduler.run_while(lambda: len(fired) < 3)
    assert fired == [1, 2, 3]
    assert scheduler.pending == 2


def test_trace_replays_identically():
    def run():
        scheduler = Scheduler(record_trace=True)
        for t in (3, 1, 2, 1):
            scheduler.schedule(t, lambda: None, label=f"at {t}")
        scheduler.run_until()
        return scheduler.trace

    assert run() == run()
    assert [fire_at for fire_at, _, _ in run()] == [1, 1, 2, 3]


def test_node_is_a_fifo_server():
    net = SimNetwork()
    node = net.add_node("peer0", NodeProfile())
    done = []
    node.submit(5000, lambda: done.append(("a", net.now)))
    node.submit(5000, lambda: done.append(("b", net.now)))
    assert node.max_queued == 2
    net.scheduler.run_until()
    assert done == [("a", 5000), ("b", 10000)]
    assert node.jobs_done == 2
    assert node.utilization() == 1.0


def test_send_adds_link_latency_then_service():
    net = SimNetwork()
    net.add_node("client", NodeProfile(default_link_latency_ms=1.0, link_latency_ms={"far": 7.0}))
    net.add_node("peer", NodeProfile())
    net.add_node("far", NodeProfile())
    arrivals = {}
    net.send("client", "peer", lambda: arrivals.setdefault("peer", net.now), service_us=2000)
    net.send("client", "far", lambda: arrivals.setdefault("far", net.now))
    net.scheduler.run_until()
    assert arrivals == {"peer": 3000, "far": 7000}
    assert net.messages == 2
    with pytest.raises(UnknownNode):
        net.send("client", "nowhere", lambda: None)


def test_profiles():
    server = resolve_profile("server")
    assert server.service_us("endorse") == 2000
    # 10 txs, 20 endorsements, 2 organizations
    assert server.commit_cost_us(10, 20, 2) == 18_000
    pi = resolve_profile("pi")
    assert pi.commit_cost_us(10, 20, 2) > server.commit_cost_us(10, 20, 2)
    assert resolve_profile("client").service_us("submit") == 120_000
    assert resolve_profile({"endorse_service_ms": 4}).service_us("endorse") == 4000
    assert set(PROFILE_PRESETS) == {"server", "pi", "client"}
    with pytest.raises(ValueError):
        resolve_profile("mainframe")
    with pytest.raises(ValidationError):
        NodeProfile(endorse_service_ms=-1)


def test_rng_streams():
    a, b = Rng(42), Rng(42)
    assert [a.uniform(0, 1) for _ in range(5)] == [b.uniform(0, 1) for _ in range(5)]
    assert a.algorithm == "PCG64DXSM"

    # drawing from one child does not move another
    fresh = Rng(42).child("traffic")
    parent = Rng(42)
    parent.child("client").bytes(64)
    assert parent.child("traffic").uniform(0, 1) == fresh.uniform(0, 1)
    assert Rng(42).child("x").uniform(0, 1) != Rng(42).child("y").uniform(0, 1)
    assert Rng(42, "a").child("b").stream == "a/b"


def test_crc_colliding_names_get_distinct_streams():
    # "plumless" and "buckeroo" share a crc32
    plum, buck = Rng(7).child("plumless"), Rng(7).child("buckeroo")
    assert plum.bytes(32) != buck.bytes(32)


@hsettings(max_examples=200, deadline=None)
@given(st.text(min_size=1, max_size=20), st.text(min_size=1, max_size=20))
def test_distinct_names_distinct_spawn_keys(a, b):
    if a != b:
        assert stream_words(a) != stream_words(b)
    assert len(stream_words(a)) == 8


arrival_gaps = st.lists(st.integers(min_value=0, max_value=3000), min_size=1, max_size=60)


@hsettings(max_examples=60, deadline=None)
@given(
    gaps=arrival_gaps,
    max_count=st.integers(min_value=1, max_value=10),
    timeout_ms=st.integers(min_value=1, max_value=5),
)
def test_block_cutting(gaps, max_count, timeout_ms):
    scheduler = Scheduler()
    blocks = []
    orderer = OrderingService(
        scheduler,
        OrderingConfig(batch_timeout_ms=timeout_ms, max_message_count=max_count),
        blocks.append,
    )
    at = 0
    for i, gap in enumerate(gaps):
        at += gap
        scheduler.schedule(at, lambda i=i: orderer.receive({"tx_id": f"t{i}"}))
    scheduler.run_until()

    # every envelope exactly once, in arrival order
    assert [tx["tx_id"] for b in blocks for tx in b.txs] == [f"t{i}" for i in range(len(gaps))]
    assert [b.height for b in blocks] == list(range(1, len(blocks) + 1))
    for prev, block in zip(blocks, blocks[1:]):
        assert block.prev_hash == prev.hash()

    timeout_us = ms_to_us(timeout_ms)
    for cut in orderer.cuts:
        assert 1 <= cut.size <= max_count
        assert cut.cut_at - cut.first_arrival <= timeout_us
        if cut.reason == "size":
            assert cut.size == max_count
        else:
            assert cut.reason == "timeout"
            assert cut.cut_at - cut.first_arrival == timeout_us


def test_twenty_five_envelopes_cut_ten_ten_five():
    scheduler = Scheduler()
    blocks = []
    orderer = OrderingService(
        scheduler,
        OrderingConfig(batch_timeout_ms=2000, max_message_count=10),
        blocks.append,
    )
    for i in range(25):
        scheduler.schedule(ms_to_us(i + 1), lambda i=i: orderer.receive({"tx_id": f"t{i}"}))
    scheduler.run_until()

    assert [len(b.txs) for b in blocks] == [10, 10, 5]
    assert [cut.reason for cut in orderer.cuts] == ["size", "size", "timeout"]
    assert orderer.cuts[2].cut_at == ms_to_us(21) + ms_to_us(2000)
    assert orderer.pending == []
