"""The ride-hailing chaincode.

Every function is a pure transition over (snapshot, caller, arguments). The
caller comes from the verified proposal signature and the clock from the signed
proposal timestamp, so two peers at the same height produce the same read-write
set. Keys:

    User~{msp}~{uid}                     UserRecord
    RideRequest~{msp}~{uid}              temporal ride of a rider
    Ride~{msp}~{uid}~{dropoff_time}      permanent ride of a rider or driver
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Callable

from ..errors import (
    AlreadyAccepted,
    AlreadyDriver,
    AlreadyRegistered,
    BadArgument,
    FieldAlreadySet,
    InvalidKey,
    NoDestination,
    NotADriver,
    NotAssignedDriver,
    NotOwner,
    NotPickedUp,
    NotRegistered,
    ObserverNotPresent,
    RideAlreadyActive,
    RideInProgress,
    RideNotCompleted,
    RideNotFound,
    RideNotOngoing,
    UnknownFunction,
    WrongLocation,
    WrongStatus,
)
from ..ledger import TxSimulator, make_key, split_key
from ..settings import settings
from ..utils import canonical, digest_bytes
from .geo import GeoPoint
from .models import (
    CoRiderEvent,
    RideEventName,
    RideRecord,
    RideStatus,
    UserRecord,
    new_ride,
)

logger = logging.getLogger(__name__)

SALT_BYTES = 16


@dataclass(frozen=True)
class Caller:
    msp: str
    uid: str
    role: str

    @property
    def ride_id(self) -> str:
        return f"ID-{self.uid}"


@dataclass
class ChaincodeContext:
    stub: TxSimulator
    caller: Caller
    tx_id: str
    now: str
    transient: dict[str, bytes] = field(default_factory=dict)
    tolerance_m: float = field(default_factory=lambda: settings.location_tolerance_m)

    def emit(self, name: RideEventName, ride_key: str, **payload):
        self.stub.set_event(name.value, {"ride_key": ride_key, **payload})


def user_key(msp: str, uid: str) -> str:
    return make_key("User", msp, uid)


def ride_request_key(msp: str, uid: str) -> str:
    return make_key("RideRequest", msp, uid)


def hash_password(salt: bytes, password: str) -> str:
    return hashlib.new(settings.password_digest, salt + password.encode()).hexdigest()


def as_ride_id(value: str) -> str:
    return value if value.startswith("ID-") else f"ID-{value}"


def _encode(record) -> bytes:
    return canonical(record)


def _load_user(ctx: ChaincodeContext, msp: str, uid: str) -> UserRecord | None:
    raw = ctx.stub.get_state(user_key(msp, uid))
    return json.loads(raw) if raw is not None else None


def _require_user(ctx: ChaincodeContext) -> UserRecord:
    user = _load_user(ctx, ctx.caller.msp, ctx.caller.uid)
    if user is None:
        raise NotRegistered(f"{ctx.caller.uid} is not registered")
    return user


def _ride_key_owner(ride_key: str) -> tuple[str, str]:
    try:
        parts = split_key(ride_key)
    except InvalidKey:
        raise RideNotFound(f"not a ride key: {ride_key!r}")
    if parts[0] != "RideRequest" or len(parts) != 3:
        raise RideNotFound(f"not a ride request key: {ride_key!r}")
    return parts[1], parts[2]


def _load_ride(ctx: ChaincodeContext, ride_key: str) -> RideRecord:
    _ride_key_owner(ride_key)
    raw = ctx.stub.get_state(ride_key)
    if raw is None:
        raise RideNotFound(f"no ride at {ride_key}")
    return json.loads(raw)


def _require_owner(ctx: ChaincodeContext, ride_key: str):
    if _ride_key_owner(ride_key) != (ctx.caller.msp, ctx.caller.uid):
        raise NotOwner(f"{ctx.caller.uid} does not own {ride_key}")


def _is_driver_of(caller: Caller, ride: RideRecord) -> bool:
    return (ride["driver_msp"], ride["driver_id"]) == (caller.msp, caller.ride_id)


def _require_driver_of(ctx: ChaincodeContext, ride: RideRecord):
    if not _is_driver_of(ctx.caller, ride):
        raise NotAssignedDriver(f"{ctx.caller.uid} is not the driver of {ride['ride_id']}")


def _check_location(ctx: ChaincodeContext, expected: str, actual: GeoPoint):
    distance = GeoPoint.parse(expected).distance_m(actual)
    if distance > ctx.tolerance_m:
        raise WrongLocation(f"{distance:.0f} m away from {expected}", distance_m=distance)


def _archive(ctx: ChaincodeContext, user: UserRecord, ride: RideRecord) -> str:
    """Write a permanent copy of ride for the caller and list it on user."""
    key = make_key("Ride", ctx.caller.msp, ctx.caller.uid, ride["dropoff_time"])
    if ctx.stub.get_state(key) is not None:
        key = make_key(
            "Ride", ctx.caller.msp, ctx.caller.uid, ride["dropoff_time"], ride["ride_id"]
        )
    ctx.stub.put_state(key, _encode(ride))
    user["ride_keys"].append(key)
    ctx.stub.put_state(user_key(ctx.caller.msp, ctx.caller.uid), _encode(user))
    return key


def register_user(ctx: ChaincodeContext, password: str) -> str:
    key = user_key(ctx.caller.msp, ctx.caller.uid)
    if ctx.stub.get_state(key) is not None:
        raise AlreadyRegistered(f"{ctx.caller.uid} already registered")
    salt = digest_bytes(
        f"{ctx.tx_id}:{ctx.caller.msp}:{ctx.caller.uid}".encode()
    )[:SALT_BYTES]
    record = UserRecord(
        pw_hash=hash_password(salt, password),
        pw_salt=salt.hex(),
        role="Rider",
        ride_keys=[],
    )
    ctx.stub.put_state(key, _encode(record))
    return key


def bootstrap_user(
    msp: str, uid: str, password: str, role: str = "Rider"
) -> tuple[str, bytes]:
    """A user record written by the genesis block instead of registerUser."""
    salt = digest_bytes(f"genesis:{msp}:{uid}".encode())[:SALT_BYTES]
    record = UserRecord(
        pw_hash=hash_password(salt, password),
        pw_salt=salt.hex(),
        role=role,
        ride_keys=[],
    )
    return user_key(msp, uid), _encode(record)


def unregister_user(ctx: ChaincodeContext) -> None:
    _require_user(ctx)
    if ctx.stub.get_state(ride_request_key(ctx.caller.msp, ctx.caller.uid)) is not None:
        raise RideInProgress(f"{ctx.caller.uid} has an active ride")
    ctx.stub.del_state(user_key(ctx.caller.msp, ctx.caller.uid))


def upgrade_to_driver(ctx: ChaincodeContext) -> None:
    user = _require_user(ctx)
    if user["role"] == "Driver":
        raise AlreadyDriver(f"{ctx.caller.uid} is already a driver")
    user["role"] = "Driver"
    ctx.stub.put_state(user_key(ctx.caller.msp, ctx.caller.uid), _encode(user))


def request_ride(ctx: ChaincodeContext, pickup: GeoPoint) -> str:
    _require_user(ctx)
    key = ride_request_key(ctx.caller.msp, ctx.caller.uid)
    if ctx.stub.get_state(key) is not None:
        raise RideAlreadyActive(f"{ctx.caller.uid} already has a ride")
    ride = new_ride(ctx.caller.ride_id, str(pickup))
    ctx.stub.put_state(key, _encode(ride))
    ctx.emit(
        RideEventName.RIDE_REQUESTED, key, ride_id=ride["ride_id"], location=str(pickup)
    )
    return key


def accept_ride(ctx: ChaincodeContext, ride_key: str) -> None:
    user = _require_user(ctx)
    if user["role"] != "Driver":
        raise NotADriver(f"{ctx.caller.uid} is not a driver")
    ride = _load_ride(ctx, ride_key)
    if ride["status"] != RideStatus.REQUESTED.value:
        raise AlreadyAccepted(f"{ride['ride_id']} is {ride['status']}")
    ride["driver_id"] = ctx.caller.ride_id
    ride["driver_msp"] = ctx.caller.msp
    ride["status"] = RideStatus.ACCEPTED.value
    ctx.stub.put_state(ride_key, _encode(ride))
    ctx.emit(
        RideEventName.RIDE_ACCEPTED,
        ride_key,
        ride_id=ride["ride_id"],
        driver_id=ride["driver_id"],
    )


def set_ride_destination(ctx: ChaincodeContext, ride_key: str, dest: GeoPoint) -> None:
    _require_owner(ctx, ride_key)
    ride = _load_ride(ctx, ride_key)
    if ride["status"] != RideStatus.ACCEPTED.value:
        raise WrongStatus(f"destination cannot be set while {ride['status']}")
    if ride["dropoff_loc"] is not None:
        raise FieldAlreadySet("destination already set")
    ride["dropoff_loc"] = str(dest)
    ctx.stub.put_state(ride_key, _encode(ride))


def pickup_rider(ctx: ChaincodeContext, ride_key: str, driver_loc: GeoPoint) -> None:
    ride = _load_ride(ctx, ride_key)
    _require_driver_of(ctx, ride)
    if ride["status"] != RideStatus.ACCEPTED.value or ride["pickup_time"] is not None:
        raise RideNotOngoing(f"{ride['ride_id']} cannot be picked up")
    _check_location(ctx, ride["pickup_loc"], driver_loc)
    ride["pickup_time"] = ctx.now
    ctx.stub.put_state(ride_key, _encode(ride))
    ctx.emit(RideEventName.DRIVER_ARRIVED, ride_key, ride_id=ride["ride_id"])


def set_corider_information(
    ctx: ChaincodeContext,
    observer_ride_key: str,
    co_rider_id: str,
    event: CoRiderEvent,
    loc: GeoPoint,
) -> None:
    """Record a co-rider boarding or leaving on the ride of a rider onboard."""
    ride = _load_ride(ctx, observer_ride_key)
    _require_driver_of(ctx, ride)
    if ride["pickup_time"] is None or ride["dropoff_time"] is not None:
        raise ObserverNotPresent(f"{ride['ride_id']} is not onboard")

    co_rider_id = as_ride_id(co_rider_id)
    if ride["co_rider_id"] not in (None, co_rider_id):
        raise FieldAlreadySet(f"co-rider of {ride['ride_id']} is {ride['co_rider_id']}")
    field_name = (
        "co_rider_pickup_loc" if event == CoRiderEvent.PICKUP else "co_rider_dropoff_loc"
    )
    if ride[field_name] is not None:
        raise FieldAlreadySet(f"{field_name} already set")

    ride["co_rider_id"] = co_rider_id
    ride[field_name] = str(loc)
    ctx.stub.put_state(observer_ride_key, _encode(ride))


def dropoff_rider(ctx: ChaincodeContext, ride_key: str, driver_loc: GeoPoint) -> None:
    ride = _load_ride(ctx, ride_key)
    _require_driver_of(ctx, ride)
    if ride["pickup_time"] is None:
        raise NotPickedUp(f"{ride['ride_id']} was not picked up")
    if ride["dropoff_loc"] is None:
        raise NoDestination(f"{ride['ride_id']} has no destination")
    if ride["status"] != RideStatus.ACCEPTED.value:
        raise RideNotOngoing(f"{ride['ride_id']} is {ride['status']}")
    _check_location(ctx, ride["dropoff_loc"], driver_loc)

    ride["dropoff_time"] = ctx.now
    ride["status"] = RideStatus.COMPLETED.value
    ctx.stub.put_state(ride_key, _encode(ride))
    _archive(ctx, _require_user(ctx), ride)
    ctx.emit(RideEventName.RIDE_ENDING, ride_key, ride_id=ride["ride_id"])


def leave_driver(ctx: ChaincodeContext, ride_key: str) -> str:
    _require_owner(ctx, ride_key)
    ride = _load_ride(ctx, ride_key)
    if ride["status"] != RideStatus.COMPLETED.value:
        raise RideNotCompleted(f"{ride['ride_id']} is {ride['status']}")
    key = _archive(ctx, _require_user(ctx), ride)
    ctx.stub.del_state(ride_key)
    return key


def get_user_info(ctx: ChaincodeContext) -> UserRecord:
    return _require_user(ctx)


def authenticate(ctx: ChaincodeContext, password: str) -> bool:
    user = _require_user(ctx)
    return hash_password(bytes.fromhex(user["pw_salt"]), password) == user["pw_hash"]


def get_ride_info(ctx: ChaincodeContext, ride_key: str) -> RideRecord:
    try:
        parts = split_key(ride_key)
    except InvalidKey:
        raise RideNotFound(f"not a ride key: {ride_key!r}")
    if parts[0] == "User":
        raise NotOwner("user records are only readable through getUserInfo")
    owned = (parts[1], parts[2]) == (ctx.caller.msp, ctx.caller.uid)
    raw = ctx.stub.get_state(ride_key) if owned or parts[0] == "RideRequest" else None
    if raw is None:
        if owned:
            raise RideNotFound(f"no ride at {ride_key}")
        raise NotOwner(f"{ctx.caller.uid} may not read {ride_key}")
    ride = json.loads(raw)
    if not owned and not _is_driver_of(ctx.caller, ride):
        raise NotOwner(f"{ctx.caller.uid} may not read {ride_key}")
    return ride


def _location(value) -> GeoPoint:
    return GeoPoint.parse(value)


def _corider_event(value) -> CoRiderEvent:
    try:
        return CoRiderEvent(value)
    except ValueError:
        raise BadArgument(f"co-rider event must be Pickup or Dropoff, not {value!r}")


def _password(ctx: ChaincodeContext) -> str:
    try:
        return ctx.transient["password"].decode()
    except KeyError:
        raise BadArgument("password missing from transient data")


@dataclass(frozen=True)
class Function:
    handler: Callable
    params: tuple[Callable, ...] = ()
    needs_password: bool = False
    read_only: bool = False


FUNCTIONS: dict[str, Function] = {
    "registerUser": Function(register_user, needs_password=True),
    "unregisterUser": Function(unregister_user),
    "upgradeToDriver": Function(upgrade_to_driver),
    "requestRide": Function(request_ride, (_location,)),
    "acceptRide": Function(accept_ride, (str,)),
    "setRideDestination": Function(set_ride_destination, (str, _location)),
    "pickupRider": Function(pickup_rider, (str, _location)),
    "setCoRiderInformation": Function(
        set_corider_information, (str, str, _corider_event, _location)
    ),
    "dropoffRider": Function(dropoff_rider, (str, _location)),
    "leaveDriver": Function(leave_driver, (str,)),
    "getUserInfo": Function(get_user_info, read_only=True),
    "authenticate": Function(authenticate, needs_password=True, read_only=True),
    "getRideInfo": Function(get_ride_info, (str,), read_only=True),
}


class RideHailChaincode:
    def __init__(
        self,
        name: str | None = None,
        version: str | None = None,
        tolerance_m: float | None = None,
    ):
        self.name = name or settings.chaincode_name
        self.version = version or settings.chaincode_version
        self.tolerance_m = (
            tolerance_m if tolerance_m is not None else settings.location_tolerance_m
        )

    @staticmethod
    def functions() -> list[str]:
        return list(FUNCTIONS)

    def invoke(
        self,
        stub: TxSimulator,
        caller: Caller,
        fn: str,
        args: list,
        tx_id: str,
        now: str,
        transient: dict[str, bytes] | None = None,
    ) -> bytes:
        """Run one chaincode function; usable directly as a simulate() tx_logic."""
        try:
            function = FUNCTIONS[fn]
        except KeyError:
            raise UnknownFunction(f"{self.name} has no function {fn}")

        if len(args) < len(function.params):
            raise BadArgument(f"{fn} takes {len(function.params)} arguments")
        if len(args) > len(function.params):
            # identity always comes from the certificate; extra args are ignored
            logger.debug("%s: dropping extra arguments %s", fn, args[len(function.params):])

        ctx = ChaincodeContext(
            stub, caller, tx_id, now, dict(transient or {}), self.tolerance_m
        )
        parsed = [parse(arg) for parse, arg in zip(function.params, args)]
        if function.needs_password:
            parsed.append(_password(ctx))
        result = function.handler(ctx, *parsed)
        if result is None:
            return b""
        if isinstance(result, str):
            return result.encode()
        return canonical(result)
