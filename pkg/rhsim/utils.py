from __future__ import annotations

import base64
import hashlib
import json
import math
from datetime import datetime, timedelta

from .settings import settings

EARTH_RADIUS_M = 6_371_008.8

RIDE_TIME_FORMAT = "%m/%d/%Y %H:%M"
# Virtual time zero of every run.
SIM_EPOCH = datetime(2018, 12, 5, 12, 0)


def canonical(obj) -> bytes:
    """Deterministic encoding: sorted keys, no whitespace, bytes as base64."""
    return json.dumps(
        obj, sort_keys=True, separators=(",", ":"), default=_encode_default
    ).encode()


def _encode_default(o):
    if isinstance(o, (bytes, bytearray)):
        return {"b64": base64.b64encode(bytes(o)).decode()}
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"not serializable {type(o).__name__}")


def digest(data: bytes, name: str | None = None) -> str:
    return hashlib.new(name or settings.block_digest, data).hexdigest()


def digest_bytes(data: bytes, name: str | None = None) -> bytes:
    return hashlib.new(name or settings.block_digest, data).digest()


def b64url(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).decode().rstrip("=")


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(a)))


def format_ride_time(t: datetime) -> str:
    # "12/5/2018 12:34": no zero padding on month and day.
    return f"{t.month}/{t.day}/{t.year} {t.hour:02d}:{t.minute:02d}"


def parse_ride_time(s: str) -> datetime:
    return datetime.strptime(s, RIDE_TIME_FORMAT)


def ride_time_at(virtual_us: int) -> str:
    return format_ride_time(SIM_EPOCH + timedelta(microseconds=virtual_us))


def format_coord(value: float) -> str:
    """Five decimal places, trailing zeros dropped ("36.1452", "-85.5089")."""
    s = f"{round(value, 5):.5f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s
