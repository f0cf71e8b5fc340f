from __future__ import annotations

from dataclasses import dataclass

from ..errors import BadArgument
from ..utils import format_coord, haversine_m


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not -90 <= self.lat <= 90:
            raise BadArgument(f"latitude out of range: {self.lat}")
        if not -180 <= self.lon <= 180:
            raise BadArgument(f"longitude out of range: {self.lon}")

    @classmethod
    def parse(cls, value) -> GeoPoint:
        """Accepts "lat/lon", a (lat, lon) pair or a {"lat", "lon"} mapping."""
        if isinstance(value, GeoPoint):
            return value
        try:
            if isinstance(value, str):
                lat, lon = value.split("/")
            elif isinstance(value, dict):
                lat, lon = value["lat"], value["lon"]
            else:
                lat, lon = value
            return cls(float(lat), float(lon))
        except (ValueError, TypeError, KeyError):
            raise BadArgument(f"not a location: {value!r}")

    def distance_m(self, other: GeoPoint) -> float:
        return haversine_m(self.lat, self.lon, other.lat, other.lon)

    def __str__(self):
        return f"{format_coord(self.lat)}/{format_coord(self.lon)}"
