from __future__ import annotations

from enum import Enum
from typing import TypedDict


class RideStatus(str, Enum):
    REQUESTED = "Requested"
    ACCEPTED = "Accepted"
    COMPLETED = "Completed"


class RideEventName(str, Enum):
    RIDE_REQUESTED = "RideRequested"
    RIDE_ACCEPTED = "RideAccepted"
    DRIVER_ARRIVED = "DriverArrived"
    RIDE_ENDING = "RideEnding"


class CoRiderEvent(str, Enum):
    PICKUP = "Pickup"
    DROPOFF = "Dropoff"


class UserRecord(TypedDict):
    pw_hash: str
    pw_salt: str
    role: str
    ride_keys: list[str]


class RideRecord(TypedDict):
    ride_id: str
    driver_id: str | None
    driver_msp: str | None
    status: str
    pickup_loc: str
    dropoff_loc: str | None
    pickup_time: str | None
    dropoff_time: str | None
    co_rider_id: str | None
    co_rider_pickup_loc: str | None
    co_rider_dropoff_loc: str | None


class RideEventPayload(TypedDict, total=False):
    ride_id: str
    ride_key: str
    driver_id: str
    location: str


# Column labels of the temporal ride request table.
RIDE_LABELS = {
    "ride_id": "RideID",
    "driver_id": "DriverID",
    "status": "Status",
    "pickup_loc": "PickupLocation",
    "dropoff_loc": "DropoffLocation",
    "pickup_time": "PickupTime",
    "dropoff_time": "DropoffTime",
    "co_rider_id": "Co-RiderID",
    "co_rider_pickup_loc": "Co-RiderPicLocation",
    "co_rider_dropoff_loc": "Co-RiderDropLocation",
}


def new_ride(ride_id: str, pickup_loc: str) -> RideRecord:
    return RideRecord(
        ride_id=ride_id,
        driver_id=None,
        driver_msp=None,
        status=RideStatus.REQUESTED.value,
        pickup_loc=pickup_loc,
        dropoff_loc=None,
        pickup_time=None,
        dropoff_time=None,
        co_rider_id=None,
        co_rider_pickup_loc=None,
        co_rider_dropoff_loc=None,
    )


def ride_table(ride: RideRecord) -> dict[str, str]:
    return {label: ride[name] or "N/A" for name, label in RIDE_LABELS.items()}
