from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel, ValidationError, validator

from .errors import ChainBreak, ConfigError, RhsimError, ScenarioStepFailed
from .ledger import BlockStore, verify_chain
from .netsim import resolve_profile
from .scenario import load_script, run_scenario
from .settings import CONFIG_DIR, settings
from .settings.topology import TopologyConfig
from .workload import (
    Adversary,
    RideWorkload,
    run_adversary,
    run_bench,
    sweep_orgs,
    traffic_profile,
)
from .workload.sweep import AXES

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


class RunConfig(BaseModel):
    """What every command shares: the topology file, the seed and where output goes."""

    config: Optional[str] = None
    seed: Optional[int] = None
    out: str = settings.output_dir
    policy: Optional[str] = None
    node_profile: Optional[str] = None

    @validator("config")
    def config_exists(cls, v):
        if v is not None and not Path(v).exists() and not (CONFIG_DIR / v).exists():
            raise ValueError(f"no topology file {v}")
        return v

    @validator("node_profile")
    def known_profile(cls, v):
        if v is not None:
            resolve_profile(v)
        return v

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> RunConfig:
        try:
            return cls(
                config=args.config,
                seed=args.seed,
                out=args.out or settings.output_dir,
                policy=getattr(args, "policy", None),
                node_profile=getattr(args, "node_profile", None),
            )
        except ValidationError as e:
            raise ConfigError(str(e))

    @property
    def has_topology(self) -> bool:
        return any(v is not None for v in (self.config, self.policy, self.node_profile))

    def topology(self) -> TopologyConfig:
        topology = TopologyConfig.from_file(self.config or "net2x2.json")
        if self.policy is not None:
            topology = topology.with_policy(self.policy)
        if self.node_profile is not None:
            topology = topology.copy(update={"profile": self.node_profile})
        return topology

    def require_seed(self, topology: TopologyConfig) -> int:
        seed = self.seed if self.seed is not None else topology.seed
        if seed is None:
            raise ConfigError("a seed is required: pass --seed or set one in the topology")
        return seed

    def out_dir(self) -> Path:
        return settings.output_path(self.out)


def _traffic(args: argparse.Namespace):
    return traffic_profile(
        args.profile,
        delay_ms=args.delay_ms,
        deviation=args.deviation,
        lambda_tps=args.lambda_tps,
        lambda_interarrival_ms=args.lambda_interarrival_ms,
    )


def _write_json(path: Path, data: dict) -> Path:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


def cmd_scenario(args: argparse.Namespace) -> int:
    run = RunConfig.from_args(args)
    script = load_script(args.script)
    topology = run.topology() if run.has_topology else None
    try:
        report, _ = run_scenario(script, topology, run.seed)
    except ScenarioStepFailed as e:
        print(f"FAIL {script.get('name', args.script)} at step {e.index}: {e}")
        return EXIT_FAILED
    path = _write_json(run.out_dir() / f"scenario-{report.name}.json", report.to_dict())
    for result in report.assertions:
        print(f"{'ok  ' if result.passed else 'FAIL'} [{result.index}] {result.description}")
    print(f"{report.name}: {len(report.assertions) - len(report.failures)}/"
          f"{len(report.assertions)} assertions hold, report in {path}")
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_bench(args: argparse.Namespace) -> int:
    run = RunConfig.from_args(args)
    topology = run.topology()
    seed = run.require_seed(topology)
    report = run_bench(topology, _traffic(args), RideWorkload(args.rides), seed)
    csv_path, json_path = report.write(run.out_dir(), args.stem)
    print(report)
    print(f"samples in {csv_path}, summary in {json_path}")
    return EXIT_OK


def _sweep_values(axis: str, start: float, stop: float, step: float) -> list[float]:
    if step <= 0:
        raise ConfigError("--step must be positive")
    if stop < start:
        raise ConfigError(f"--to {stop:g} is below --from {start:g}")
    values = np.arange(start, stop + step / 2, step)
    if axis in ("peers", "orgs"):
        return [int(v) for v in np.rint(values)]
    return [round(float(v), 6) for v in values]


def cmd_sweep(args: argparse.Namespace) -> int:
    run = RunConfig.from_args(args)
    topology = run.topology()
    seed = run.require_seed(topology)
    values = _sweep_values(args.axis, args.start, args.stop, args.step)
    traffic = _traffic(args)
    result = sweep_orgs(
        topology,
        args.axis,
        values,
        traffic,
        args.rides,
        seed,
        policy=run.policy,
        scale_traffic=args.scale_traffic,
        workers=args.workers,
    )
    path = result.write(run.out_dir())
    for point, report in zip(result.points, result.reports):
        print(f"{point.axis}={point.value:g}: {report}")
    print(f"trend in {path}")
    return EXIT_OK


def cmd_adversary(args: argparse.Namespace) -> int:
    run = RunConfig.from_args(args)
    topology = run.topology()
    verdict = run_adversary(args.scenario, topology, run.require_seed(topology))
    _write_json(run.out_dir() / f"adversary-{verdict.scenario}.json", verdict.to_dict())
    print(verdict)
    return EXIT_OK if verdict.passed else EXIT_FAILED


def cmd_dump(args: argparse.Namespace) -> int:
    run = RunConfig.from_args(args)
    script = load_script(args.script)
    topology = run.topology() if run.has_topology else None
    try:
        report, network = run_scenario(script, topology, run.seed)
    except ScenarioStepFailed as e:
        print(f"FAIL at step {e.index}: {e}")
        return EXIT_FAILED
    peer_name = args.peer or next(iter(network.peers))
    if peer_name not in network.peers:
        raise ConfigError(f"no peer {peer_name!r}, have {sorted(network.peers)}")
    store = network.peers[peer_name].ledger.store
    path = run.out_dir() / args.file
    path.write_text("".join(f"{line}\n" for line in store.dump_lines()))
    print(f"{len(store)} blocks of {peer_name} written to {path}")
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_verify_chain(args: argparse.Namespace) -> int:
    try:
        with open(args.path, "rb") as f:
            blocks, tip_hash = BlockStore.load_dump(f)
    except OSError as e:
        raise ConfigError(f"cannot read {args.path}: {e}")
    except ChainBreak as e:
        logger.debug("%s", e)
        print(f"chain broken at height {e.details['height']}")
        return EXIT_FAILED
    bad = verify_chain(blocks, tip_hash)
    if bad is None:
        print(f"ok: {len(blocks)} blocks")
        return EXIT_OK
    print(f"chain broken at height {bad}")
    return EXIT_FAILED


def _add_traffic_flags(p: argparse.ArgumentParser, rides: int = 1000):
    p.add_argument("--profile", choices=("constant", "poisson"), default="constant")
    p.add_argument("--delay-ms", type=float, default=100.0)
    p.add_argument("--deviation", type=float, default=0.3)
    p.add_argument("--lambda-tps", type=float)
    p.add_argument("--lambda-interarrival-ms", type=float)
    p.add_argument("--rides", type=int, default=rides)
    p.add_argument("--node-profile", help="server, pi or client for every peer and orderer")
    p.add_argument("--policy", help="ALL_ORG_PEERS, ANY_ONE or CROSS_ORG:k")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="topology file (default net2x2.json)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help=f"output directory (default {settings.output_dir})")

    ap = argparse.ArgumentParser(prog=settings.product)
    sub = ap.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("scenario", parents=[common], help="replay a scripted story")
    s.add_argument("script")
    s.add_argument("--policy")
    s.set_defaults(func=cmd_scenario)

    b = sub.add_parser("bench", parents=[common], help="run the ride lifecycle load test")
    _add_traffic_flags(b)
    b.add_argument("--stem", default="bench")
    b.set_defaults(func=cmd_bench)

    w = sub.add_parser("sweep", parents=[common], help="one benchmark per configuration")
    w.add_argument("--axis", choices=AXES, required=True)
    w.add_argument("--from", dest="start", type=float, required=True)
    w.add_argument("--to", dest="stop", type=float, required=True)
    w.add_argument("--step", type=float, default=1.0)
    w.add_argument("--scale-traffic", action=argparse.BooleanOptionalAction, default=None)
    w.add_argument("--workers", type=int)
    _add_traffic_flags(w)
    w.set_defaults(func=cmd_sweep)

    a = sub.add_parser("adversary", parents=[common], help="run an attack scenario")
    a.add_argument("--scenario", choices=[item.value for item in Adversary], required=True)
    a.add_argument("--policy")
    a.set_defaults(func=cmd_adversary)

    d = sub.add_parser(
        "dump", parents=[common], help="replay a scenario and dump a peer's blocks"
    )
    d.add_argument("script", nargs="?", default="nashville")
    d.add_argument("--peer")
    d.add_argument("--file", default="blocks.jsonl")
    d.add_argument("--policy")
    d.set_defaults(func=cmd_dump)

    v = sub.add_parser("verify-chain", parents=[common], help="check a block dump")
    v.add_argument("path")
    v.set_defaults(func=cmd_verify_chain)
    return ap


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=settings.log_level,
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        logger.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except RhsimError as e:
        logger.error("%s failed: %s", args.cmd, e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
