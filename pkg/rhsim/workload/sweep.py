from __future__ import annotations

import asyncio
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError
from ..settings import settings
from ..settings.topology import TopologyConfig
from .bench import RideWorkload, run_bench
from .report import BenchReport, trend_csv, write_atomic
from .traffic import ConstantRate, Poisson, TrafficProfile

logger = logging.getLogger(__name__)

AXES = ("peers", "orgs", "delay", "lambda")
SWEEP_POLICIES = ("ALL_ORG_PEERS", "ANY_ONE")


@dataclass
class SweepPoint:
    axis: str
    value: float
    topology: TopologyConfig
    traffic: TrafficProfile

    @property
    def stem(self) -> str:
        return f"{self.axis}-{self.value:g}"


@dataclass
class SweepResult:
    axis: str
    policy: str
    points: list[SweepPoint]
    reports: list[BenchReport] = field(default_factory=list)

    def column(self, name: str) -> list:
        """One value per point: "tps" or a mean latency name."""
        if name == "tps":
            return [report.tps for report in self.reports]
        return [report.means[name] for report in self.reports]

    def trend(self) -> str:
        return trend_csv(
            report.trend_row(point.axis, f"{point.value:g}")
            for point, report in zip(self.points, self.reports)
        )

    def write(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for point, report in zip(self.points, self.reports):
            report.write(out, point.stem)
        path = write_atomic(out / f"trend-{self.axis}.csv", self.trend())
        logger.info("sweep %s: trend written to %s", self.axis, path)
        return path


def sweep_points(
    base: TopologyConfig,
    axis: str,
    values: list[float],
    traffic: TrafficProfile,
    policy: str | None = None,
    scale_traffic: bool | None = None,
) -> list[SweepPoint]:
    """Configurations of a sweep.

    Peer and org sweeps compare ALL_ORG_PEERS and ANY_ONE, by default
    settings.sweep_policy; one organization satisfies either.
    peers: every organization gets value peers, traffic unchanged.
    orgs: value organizations. Traffic profiles describe one submitter, so with
    scale_traffic (default for this axis) the offered total grows with the
    count; without it every submitter slows down to keep the base total.
    delay / lambda: the constant-rate delay or the Poisson rate varies.
    """
    if axis not in AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}, expected one of {AXES}")
    if not values:
        raise ConfigError("empty sweep")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"sweep values must increase: {values}")
    if axis in ("peers", "orgs") and any(v < 1 or v != int(v) for v in values):
        raise ConfigError(f"{axis} counts must be positive integers: {values}")
    if axis in ("peers", "orgs"):
        policy = policy or settings.sweep_policy
        if policy not in SWEEP_POLICIES:
            allowed = " and ".join(SWEEP_POLICIES)
            raise ConfigError(f"{axis} sweeps compare {allowed}, not {policy}")
    if policy is not None:
        base = base.with_policy(policy)
    if scale_traffic is None:
        scale_traffic = axis == "orgs"

    points = []
    for value in values:
        topology, point_traffic = base, traffic
        if axis == "peers":
            topology = base.with_peers(int(value))
        elif axis == "orgs":
            topology = base.with_orgs(int(value))
            if not scale_traffic:
                point_traffic = traffic.scaled(len(base.orgs) / value)
        elif axis == "delay":
            if not isinstance(traffic, ConstantRate):
                raise ConfigError("a delay sweep needs constant-rate traffic")
            point_traffic = traffic.copy(update={"delay_ms": value})
        else:
            if value <= 0:
                raise ConfigError("lambda must be positive")
            point_traffic = Poisson(lambda_tps=value)
        points.append(SweepPoint(axis, value, topology, point_traffic))
    return points


def _run_point(
    topology: TopologyConfig, traffic: TrafficProfile, rides: int, seed: int
) -> BenchReport:
    return run_bench(topology, traffic, RideWorkload(rides), seed)


async def run_points(
    points: list[SweepPoint], rides: int, seed: int, workers: int | None = None
) -> list[BenchReport]:
    """Every point is an independent simulation with the same seed."""
    workers = workers or settings.sweep_workers
    if workers <= 1:
        reports = []
        for point in points:
            logger.info("sweep point %s=%g", point.axis, point.value)
            reports.append(_run_point(point.topology, point.traffic, rides, seed))
            await asyncio.sleep(0)
        return reports

    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        tasks = [
            loop.run_in_executor(
                pool, _run_point, point.topology, point.traffic, rides, seed
            )
            for point in points
        ]
        return list(await asyncio.gather(*tasks))


def sweep_orgs(
    base: TopologyConfig,
    axis: str,
    values: list[float],
    traffic: TrafficProfile,
    rides: int,
    seed: int,
    policy: str | None = None,
    scale_traffic: bool | None = None,
    workers: int | None = None,
) -> SweepResult:
    """Run one benchmark per sweep point and collect the reports."""
    points = sweep_points(base, axis, values, traffic, policy, scale_traffic)
    reports = asyncio.run(run_points(points, rides, seed, workers))
    for point, report in zip(points, reports):
        logger.info("%s=%g: %s", point.axis, point.value, report)
    return SweepResult(axis, points[0].topology.policy, points, reports)
