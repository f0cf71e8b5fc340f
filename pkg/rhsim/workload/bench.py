"""Ride lifecycle load against a simulated network.

Every submitter (a client process, submitters_per_org in every organization)
offers its own stream of submission slots drawn from the traffic profile, one
slot per transaction of the rides it was given.
A slot costs the submitter one proposal-construction job; when the job ends the
submitter sends the oldest lifecycle transaction that is ready, or else starts
its next ride, or else holds the slot until something becomes ready. A ride's
next transaction is ready once the previous one committed.
"""
from __future__ import annotations

import logging
from collections import Counter, deque
from dataclasses import dataclass, field

from ..chaincode import GeoPoint, ride_request_key
from ..errors import ConfigError
from ..identity import Identity, Role
from ..netsim import Node, Rng, ms_to_us, us_to_ms
from ..settings import settings
from ..settings.topology import TopologyConfig
from ..txflow import FabricNetwork, TxResult
from .report import BenchReport, LatencySample, window_means
from .traffic import TrafficProfile

logger = logging.getLogger(__name__)

LIFECYCLE = (
    "requestRide",
    "acceptRide",
    "setRideDestination",
    "pickupRider",
    "dropoffRider",
    "leaveDriver",
)
EMITTING = {"requestRide", "acceptRide", "pickupRider", "dropoffRider"}

# lat_min, lat_max, lon_min, lon_max
NASHVILLE_AREA = (36.05, 36.25, -86.90, -86.65)
BENCH_PASSWORD = "bench"


@dataclass(frozen=True)
class RideWorkload:
    rides: int
    tx_per_ride: tuple[str, ...] = LIFECYCLE

    def __post_init__(self):
        if self.rides < 1:
            raise ConfigError("a workload needs at least one ride")

    @property
    def total_txs(self) -> int:
        return self.rides * len(self.tx_per_ride)


@dataclass
class Submitter:
    name: str
    msp: str
    node: Node
    waiting: deque[Ride] = field(default_factory=deque, repr=False)
    ready: deque[Ride] = field(default_factory=deque, repr=False)
    held: int = 0
    # transactions not yet sent, and slots dealt but not yet used
    pending: int = 0
    claimed: int = 0

    @property
    def needs_slot(self) -> bool:
        return self.pending > self.claimed


@dataclass
class Ride:
    index: int
    rider: Identity
    driver: Identity
    pickup: GeoPoint
    dest: GeoPoint
    submitter: Submitter = field(repr=False)
    step: int = 0
    failed: bool = False

    @property
    def ride_id(self) -> str:
        return f"ID-{self.rider.uid}"

    @property
    def key(self) -> str:
        return ride_request_key(self.rider.msp, self.rider.uid)

    @property
    def finished(self) -> bool:
        return self.step >= len(LIFECYCLE)

    def next_call(self) -> tuple[Identity, str, list]:
        fn = LIFECYCLE[self.step]
        if fn == "requestRide":
            return self.rider, fn, [str(self.pickup)]
        if fn == "acceptRide":
            return self.driver, fn, [self.key]
        if fn == "setRideDestination":
            return self.rider, fn, [self.key, str(self.dest)]
        if fn == "pickupRider":
            return self.driver, fn, [self.key, str(self.pickup)]
        if fn == "dropoffRider":
            return self.driver, fn, [self.key, str(self.dest)]
        return self.rider, fn, [self.key]


class BenchRun:
    """One benchmark simulation; build, run once, read the report."""

    def __init__(
        self,
        topology: TopologyConfig,
        traffic: TrafficProfile,
        workload: RideWorkload,
        seed: int | None = None,
    ):
        self.topology = topology
        self.traffic = traffic
        self.workload = workload
        self.network = FabricNetwork(topology, seed)
        self.rng = self.network.rng.child("workload")
        self.submit_us = self.network.client_profile.service_us("submit")
        self.submitters = self._make_submitters()
        self.rides = self._make_rides()
        self.results: list[TxResult] = []
        self.held_slots = 0
        self.spare_slots = 0

        users = []
        for ride in self.rides:
            users.append((ride.rider, BENCH_PASSWORD, Role.RIDER.value))
            users.append((ride.driver, BENCH_PASSWORD, Role.DRIVER.value))
        self.network.bootstrap(users)

    def _make_submitters(self) -> list[Submitter]:
        submitters = []
        for org in self.topology.orgs:
            msp = self.network.registry.org(org.name).msp_id
            for i in range(self.topology.submitters_per_org):
                name = f"submitter{i}.{org.name}"
                node = self.network.sim.add_node(name, self.network.client_profile)
                submitters.append(Submitter(name, msp, node))
        return submitters

    def _point(self) -> GeoPoint:
        lat_min, lat_max, lon_min, lon_max = NASHVILLE_AREA
        lat = round(self.rng.uniform(lat_min, lat_max), 5)
        lon = round(self.rng.uniform(lon_min, lon_max), 5)
        return GeoPoint(lat, lon)

    def _make_rides(self) -> list[Ride]:
        rides = []
        seed = self.network.seed
        for index in range(self.workload.rides):
            submitter = self.submitters[index % len(self.submitters)]
            rider = self.network.enroll(
                submitter.msp, Role.RIDER, f"{seed}:bench:{index}:rider"
            )
            driver = self.network.enroll(
                submitter.msp, Role.DRIVER, f"{seed}:bench:{index}:driver"
            )
            ride = Ride(index, rider, driver, self._point(), self._point(), submitter)
            submitter.waiting.append(ride)
            submitter.pending += len(LIFECYCLE)
            rides.append(ride)
        return rides

    def run(self) -> BenchReport:
        traffic_rng = self.rng.child("traffic")
        for submitter in self.submitters:
            self._schedule_slots(submitter, traffic_rng.child(submitter.name))
        logger.info(
            "bench: %s rides, %s slots over %s submitters, %s each",
            len(self.rides),
            self.workload.total_txs,
            len(self.submitters),
            self.traffic,
        )
        self.network.run()
        return self.report()

    def _schedule_slots(self, submitter: Submitter, rng: Rng):
        at_ms = 0.0
        delays = self.traffic.delays(rng)
        for slot in range(submitter.pending):
            self.network.scheduler.schedule(
                ms_to_us(round(at_ms, 3)),
                lambda: self._deal(submitter),
                label=f"{submitter.name} slot {slot}",
            )
            at_ms += next(delays)

    def _deal(self, submitter: Submitter):
        if not submitter.needs_slot:
            self.spare_slots += 1
            logger.debug("%s needs no slot at %s", submitter.name, self.network.now)
            return
        submitter.claimed += 1
        self._start_job(submitter)

    def _start_job(self, submitter: Submitter):
        submitter.node.submit(
            self.submit_us, lambda: self._fill(submitter), label=f"{submitter.name} submit"
        )

    def _fill(self, submitter: Submitter):
        if submitter.ready:
            ride = submitter.ready.popleft()
        elif submitter.waiting:
            ride = submitter.waiting.popleft()
        else:
            submitter.held += 1
            self.held_slots += 1
            logger.debug("%s holds a slot", submitter.name)
            return
        submitter.claimed -= 1
        submitter.pending -= 1
        self._submit(ride)

    def _submit(self, ride: Ride):
        identity, fn, args = ride.next_call()
        client = self.network.client(identity, node=ride.submitter.name)
        result = client.submit(
            fn,
            args,
            ride_id=ride.ride_id,
            on_done=lambda r: self._on_done(ride, r),
        )
        self.results.append(result)

    def _on_done(self, ride: Ride, result: TxResult):
        submitter = ride.submitter
        if not result.valid:
            ride.failed = True
            logger.warning(
                "ride %s abandoned at %s: %s", ride.ride_id, result.fn, result.code
            )
            submitter.pending -= len(LIFECYCLE) - ride.step - 1
            # held slots beyond what is left to send are dropped
            excess = min(submitter.held, submitter.claimed - submitter.pending)
            if excess > 0:
                submitter.held -= excess
                submitter.claimed -= excess
                self.spare_slots += excess
            return
        ride.step += 1
        if ride.finished:
            return
        submitter.ready.append(ride)
        if submitter.held:
            submitter.held -= 1
            self._start_job(submitter)

    def report(self) -> BenchReport:
        results = self.results
        samples = [LatencySample.from_result(r) for r in results]
        valid = [r for r in results if r.valid]
        failed = [r for r in results if r.endorsement_failed]
        counts = {
            "valid": len(valid),
            "invalid": sum(
                1 for r in results if r.done and not r.valid and not r.endorsement_failed
            ),
            "endorsement_failures": len(failed),
            "unfinished": sum(1 for r in results if not r.done),
        }

        tps = 0.0
        duration_ms = 0.0
        if valid:
            first = min(r.submitted_at for r in results)
            last = max(r.event_at for r in valid)
            duration_ms = us_to_ms(last - first)
            if last > first:
                tps = len(valid) * 1000.0 / duration_ms

        expected = [r for r in valid if r.fn in EMITTING]
        delivered = [r for r in expected if r.event is not None and r.event.tx_id == r.tx_id]
        return BenchReport(
            config=self.config_echo(),
            samples=samples,
            tps=tps,
            duration_ms=duration_ms,
            counts=counts,
            codes=dict(sorted(Counter(r.code or "none" for r in results).items())),
            retries=sum(r.retries for r in results),
            read_after_write=sum(1 for r in results if r.read_after_write),
            events_expected=len(expected),
            events_delivered=len(delivered),
            flag_disagreements=self.network.flag_disagreements,
            held_slots=self.held_slots,
            spare_slots=self.spare_slots,
            windows=window_means(samples, settings.window_size),
        )

    def config_echo(self) -> dict:
        return {
            "seed": self.network.seed,
            "rides": self.workload.rides,
            "txs": self.workload.total_txs,
            "traffic": str(self.traffic),
            "traffic_options": self.traffic.dict(),
            "policy": str(self.network.policy),
            "orgs": [org.name for org in self.topology.orgs],
            "peers": {org.name: org.peers for org in self.topology.orgs},
            "submitters": [s.name for s in self.submitters],
            "ordering": self.topology.ordering.dict(),
            "profile": self.topology.profile,
            "client_profile": self.topology.client_profile,
        }


def run_bench(
    topology: TopologyConfig,
    traffic: TrafficProfile,
    workload: RideWorkload | int = 1000,
    seed: int | None = None,
) -> BenchReport:
    if isinstance(workload, int):
        workload = RideWorkload(workload)
    return BenchRun(topology, traffic, workload, seed).run()

