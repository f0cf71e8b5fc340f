from .adversary import Adversary, ScenarioVerdict, run_adversary
from .bench import LIFECYCLE, BenchRun, RideWorkload, run_bench
from .report import CSV_HEADER, BenchReport, LatencySample, trend_csv, window_means
from .sweep import SweepPoint, SweepResult, run_points, sweep_orgs, sweep_points
from .traffic import (
    ConstantRate,
    Poisson,
    TrafficProfile,
    gen_constant,
    gen_poisson,
    parse_traffic,
    traffic_profile,
)
