from __future__ import annotations

import csv
import io
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

import numpy as np

from ..settings import settings

if TYPE_CHECKING:
    from ..txflow import TxResult

logger = logging.getLogger(__name__)

CSV_HEADER = [
    "tx_id",
    "ride_id",
    "fn",
    "peer_ms",
    "orderer_ms",
    "event_ms",
    "valid",
    "block_height",
]
LATENCIES = ("peer_ms", "orderer_ms", "event_ms")
TREND_HEADER = [
    "axis",
    "value",
    "policy",
    "traffic",
    "submitted",
    "valid",
    "tps",
    "mean_peer_ms",
    "mean_orderer_ms",
    "mean_event_ms",
    "p99_event_ms",
]


@dataclass
class LatencySample:
    tx_id: str
    ride_id: str
    fn: str
    peer_ms: float | None
    orderer_ms: float | None
    event_ms: float | None
    valid: bool
    block_height: int | None
    code: str = ""

    @classmethod
    def from_result(cls, result: TxResult) -> LatencySample:
        return cls(
            tx_id=result.tx_id,
            ride_id=result.ride_id,
            fn=result.fn,
            peer_ms=result.peer_ms,
            orderer_ms=result.orderer_ms,
            event_ms=result.event_ms,
            valid=result.valid,
            block_height=result.block_height,
            code=result.code,
        )

    def row(self) -> list[str]:
        return [
            self.tx_id,
            self.ride_id,
            self.fn,
            _fmt(self.peer_ms),
            _fmt(self.orderer_ms),
            _fmt(self.event_ms),
            "true" if self.valid else "false",
            "" if self.block_height is None else str(self.block_height),
        ]


def _fmt(ms: float | None) -> str:
    return "" if ms is None else f"{ms:.3f}"


def _column(samples: Iterable[LatencySample], name: str) -> np.ndarray:
    values = [getattr(s, name) for s in samples]
    return np.array([np.nan if v is None else v for v in values], dtype=float)


def _mean(values: np.ndarray) -> float | None:
    values = values[~np.isnan(values)]
    return round(float(values.mean()), 3) if values.size else None


def _percentile(values: np.ndarray, q: float) -> float | None:
    values = values[~np.isnan(values)]
    return round(float(np.percentile(values, q)), 3) if values.size else None


def latency_means(samples: list[LatencySample]) -> dict[str, float | None]:
    return {name: _mean(_column(samples, name)) for name in LATENCIES}


def window_means(
    samples: list[LatencySample], size: int | None = None
) -> list[dict[str, float | int | None]]:
    """Mean latencies over consecutive windows of size transactions."""
    size = size or settings.window_size
    windows = []
    for start in range(0, len(samples), size):
        chunk = samples[start : start + size]
        windows.append({"first": start, "count": len(chunk), **latency_means(chunk)})
    return windows


@dataclass
class BenchReport:
    config: dict
    samples: list[LatencySample]
    tps: float
    duration_ms: float
    counts: dict[str, int]
    codes: dict[str, int]
    retries: int
    read_after_write: int
    events_expected: int
    events_delivered: int
    flag_disagreements: int
    held_slots: int
    spare_slots: int = 0
    windows: list[dict] = field(default_factory=list)

    @property
    def submitted(self) -> int:
        return len(self.samples)

    @property
    def valid(self) -> int:
        return self.counts.get("valid", 0)

    @property
    def means(self) -> dict[str, float | None]:
        return latency_means(self.samples)

    def percentile(self, name: str, q: float) -> float | None:
        return _percentile(_column(self.samples, name), q)

    @property
    def lossless(self) -> bool:
        return (
            self.valid == self.submitted
            and self.events_delivered == self.events_expected
        )

    def summary(self) -> dict:
        return {
            "config": self.config,
            "submitted": self.submitted,
            "counts": self.counts,
            "codes": self.codes,
            "tps": round(self.tps, 3),
            "duration_ms": round(self.duration_ms, 3),
            "means": self.means,
            "p50": {name: self.percentile(name, 50) for name in LATENCIES},
            "p99": {name: self.percentile(name, 99) for name in LATENCIES},
            "windows": self.windows,
            "retries": self.retries,
            "read_after_write": self.read_after_write,
            "events": {
                "expected": self.events_expected,
                "delivered": self.events_delivered,
            },
            "flag_disagreements": self.flag_disagreements,
            "held_slots": self.held_slots,
            "spare_slots": self.spare_slots,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for sample in self.samples:
            writer.writerow(sample.row())
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"

    def write(self, out_dir: str | Path, stem: str = "bench") -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = write_atomic(out / f"{stem}.csv", self.to_csv())
        json_path = write_atomic(out / f"{stem}.json", self.to_json())
        logger.info("wrote %s and %s", csv_path, json_path)
        return csv_path, json_path

    def trend_row(self, axis: str, value) -> list[str]:
        means = self.means
        return [
            axis,
            str(value),
            str(self.config.get("policy", "")),
            str(self.config.get("traffic", "")),
            str(self.submitted),
            str(self.valid),
            f"{self.tps:.3f}",
            _fmt(means["peer_ms"]),
            _fmt(means["orderer_ms"]),
            _fmt(means["event_ms"]),
            _fmt(self.percentile("event_ms", 99)),
        ]

    def __str__(self):
        means = self.means
        return (
            f"{self.valid}/{self.submitted} valid, {self.tps:.2f} tps, "
            f"peer {_fmt(means['peer_ms'])} ms, orderer {_fmt(means['orderer_ms'])} ms, "
            f"event {_fmt(means['event_ms'])} ms"
        )


def trend_csv(rows: Iterable[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TREND_HEADER)
    writer.writerows(rows)
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> Path:
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
    return path
