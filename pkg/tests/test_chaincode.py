from __future__ import annotations

import json

import pytest
from hypothesis import given, settings as hsettings, strategies as st

from rhsim.chaincode import (
    Caller,
    GeoPoint,
    RideHailChaincode,
    ride_request_key,
    ride_table,
    user_key,
)
from rhsim.errors import (
    AlreadyAccepted,
    AlreadyDriver,
    AlreadyRegistered,
    BadArgument,
    FieldAlreadySet,
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
    UnknownFunction,
    WrongLocation,
    WrongStatus,
)
from rhsim.ledger import WorldState, simulate

MSP = "Org1PeerOrgMSP"
AIRPORT = "36.13149/-86.6694"
STADIUM = "36.16624/-86.7719"
GREYHOUND = "36.15212/-86.7735"

R1 = Caller(MSP, "rider1", "Rider")
R2 = Caller(MSP, "rider2", "Rider")
D1 = Caller(MSP, "driver1", "Rider")
R3 = Caller(MSP, "rider3", "Rider")


class Harness:
    """One world state with every call committed straight away."""

    def __init__(self):
        self.state = WorldState()
        self.chaincode = RideHailChaincode()
        self.height = 0
        self.events = []
        self.results = []

    def call(self, caller, fn, *args, password=None, now="12/5/2018 12:30"):
        self.height += 1
        transient = {"password": password.encode()} if password is not None else None
        result = simulate(
            self.state.snapshot(self.height),
            self.chaincode.invoke,
            caller,
            fn,
            list(args),
            f"tx{self.height}",
            now,
            transient,
        )
        self.state.apply(result.rwset.writes, (self.height, 0))
        self.results.append(result)
        if result.event is not None:
            self.events.append(result.event.name)
        return result

    def get(self, key):
        vv = self.state.get(key)
        return json.loads(vv.value) if vv is not None else None

    def register(self, *callers):
        for caller in callers:
            self.call(caller, "registerUser", password="secret")

    def ride(self, caller):
        return self.get(ride_request_key(caller.msp, caller.uid))

    def permanent(self, caller):
        user = self.get(user_key(caller.msp, caller.uid))
        return [self.get(key) for key in user["ride_keys"]]


@pytest.fixture
def chain():
    chain = Harness()
    chain.register(R1, R2, D1)
    chain.call(D1, "upgradeToDriver")
    return chain


def start_ride(chain, rider=R1, pickup=AIRPORT, dest=STADIUM):
    key = ride_request_key(rider.msp, rider.uid)
    chain.call(rider, "requestRide", pickup)
    chain.call(D1, "acceptRide", key)
    chain.call(rider, "setRideDestination", key, dest)
    return key


def test_register_and_authenticate(chain):
    user = chain.get(user_key(MSP, R1.uid))
    assert user["role"] == "Rider"
    assert user["ride_keys"] == []
    ok = chain.call(R1, "authenticate", password="secret")
    bad = chain.call(R1, "authenticate", password="wrong")
    assert json.loads(ok.response) is True
    assert json.loads(bad.response) is False


def test_password_never_stored_in_clear():
    chain = Harness()
    result = chain.call(R1, "registerUser", password="correct horse")
    assert b"correct horse" not in result.rwset.encode()


def test_same_password_different_hash(chain):
    a = chain.get(user_key(MSP, R1.uid))
    b = chain.get(user_key(MSP, R2.uid))
    assert a["pw_salt"] != b["pw_salt"]
    assert a["pw_hash"] != b["pw_hash"]


def test_registration_errors(chain):
    with pytest.raises(AlreadyRegistered):
        chain.call(R1, "registerUser", password="again")
    with pytest.raises(BadArgument):
        chain.call(Caller(MSP, "nopass", "Rider"), "registerUser")
    with pytest.raises(NotRegistered):
        chain.call(Caller(MSP, "ghost", "Rider"), "requestRide", AIRPORT)
    with pytest.raises(AlreadyDriver):
        chain.call(D1, "upgradeToDriver")
    with pytest.raises(UnknownFunction):
        chain.call(R1, "stealRide")


def test_full_lifecycle(chain):
    key = start_ride(chain)
    chain.call(D1, "pickupRider", key, AIRPORT, now="12/5/2018 12:34")
    chain.call(D1, "dropoffRider", key, STADIUM, now="12/5/2018 12:36")
    ride = chain.ride(R1)
    assert ride["status"] == "Completed"
    assert ride["driver_id"] == "ID-driver1"
    assert (ride["pickup_time"], ride["dropoff_time"]) == ("12/5/2018 12:34", "12/5/2018 12:36")

    chain.call(R1, "leaveDriver", key)
    assert chain.ride(R1) is None
    assert chain.permanent(R1) == [ride]
    assert chain.permanent(D1) == [ride]
    assert chain.events == ["RideRequested", "RideAccepted", "DriverArrived", "RideEnding"]
    assert len(chain.state.keys("Ride")) == 2
    assert not any(result.rwset.read_after_write for result in chain.results)


def test_ride_table_labels(chain):
    start_ride(chain)
    table = ride_table(chain.ride(R1))
    assert table["RideID"] == "ID-rider1"
    assert table["Status"] == "Accepted"
    assert table["PickupTime"] == "N/A"
    assert table["Co-RiderDropLocation"] == "N/A"


def test_lifecycle_errors(chain):
    key = ride_request_key(MSP, R1.uid)
    chain.call(R1, "requestRide", AIRPORT)
    with pytest.raises(RideAlreadyActive):
        chain.call(R1, "requestRide", AIRPORT)
    with pytest.raises(NotADriver):
        chain.call(R2, "acceptRide", key)
    with pytest.raises(RideInProgress):
        chain.call(R1, "unregisterUser")
    chain.call(D1, "acceptRide", key)
    with pytest.raises(AlreadyAccepted):
        chain.call(D1, "acceptRide", key)
    with pytest.raises(NotOwner):
        chain.call(R2, "setRideDestination", key, STADIUM)
    chain.call(R1, "setRideDestination", key, STADIUM)
    with pytest.raises(NotPickedUp):
        chain.call(D1, "dropoffRider", key, STADIUM)
    with pytest.raises(WrongLocation):
        chain.call(D1, "pickupRider", key, STADIUM)
    with pytest.raises(RideNotCompleted):
        chain.call(R1, "leaveDriver", key)


def test_destination_and_dropoff_errors(chain):
    key = ride_request_key(MSP, R1.uid)
    chain.call(R1, "requestRide", AIRPORT)
    with pytest.raises(WrongStatus):
        chain.call(R1, "setRideDestination", key, STADIUM)
    chain.call(D1, "acceptRide", key)
    chain.call(R1, "setRideDestination", key, STADIUM)
    with pytest.raises(FieldAlreadySet):
        chain.call(R1, "setRideDestination", key, GREYHOUND)
    chain.call(D1, "pickupRider", key, AIRPORT)
    with pytest.raises(WrongLocation) as e:
        chain.call(D1, "dropoffRider", key, GREYHOUND)
    assert e.value.details["distance_m"] > 150
    chain.call(D1, "dropoffRider", key, STADIUM)
    chain.call(R1, "leaveDriver", key)
    with pytest.raises(RideNotFound):
        chain.call(R1, "leaveDriver", key)


def test_dropoff_needs_a_destination(chain):
    key = ride_request_key(MSP, R2.uid)
    chain.call(R2, "requestRide", GREYHOUND)
    chain.call(D1, "acceptRide", key)
    chain.call(D1, "pickupRider", key, GREYHOUND)
    with pytest.raises(NoDestination):
        chain.call(D1, "dropoffRider", key, STADIUM)
    chain.call(R2, "setRideDestination", key, STADIUM)
    chain.call(D1, "dropoffRider", key, STADIUM)
    assert chain.ride(R2)["status"] == "Completed"


def test_only_the_assigned_driver_moves_the_ride(chain):
    chain.call(R2, "upgradeToDriver")
    key = start_ride(chain)
    with pytest.raises(NotAssignedDriver):
        chain.call(R2, "pickupRider", key, AIRPORT)
    chain.call(D1, "pickupRider", key, AIRPORT)
    with pytest.raises(NotAssignedDriver):
        chain.call(R2, "setCoRiderInformation", key, "rider3", "Pickup", GREYHOUND)
    with pytest.raises(NotAssignedDriver):
        chain.call(R2, "dropoffRider", key, STADIUM)


def test_same_uid_in_another_msp_is_not_the_driver(chain):
    twin = Caller("Org2PeerOrgMSP", D1.uid, "Rider")
    chain.register(twin)
    chain.call(twin, "upgradeToDriver")
    key = start_ride(chain)
    assert chain.ride(R1)["driver_msp"] == MSP
    with pytest.raises(NotAssignedDriver):
        chain.call(twin, "pickupRider", key, AIRPORT)
    with pytest.raises(NotOwner):
        chain.call(twin, "getRideInfo", key)
    chain.call(D1, "pickupRider", key, AIRPORT)


def test_unregister_user(chain):
    chain.call(R2, "unregisterUser")
    assert chain.get(user_key(MSP, R2.uid)) is None
    with pytest.raises(NotRegistered):
        chain.call(R2, "unregisterUser")
    with pytest.raises(NotRegistered):
        chain.call(R2, "getUserInfo")
    chain.call(R2, "registerUser", password="again")
    assert chain.get(user_key(MSP, R2.uid))["role"] == "Rider"


def test_pickup_within_tolerance(chain):
    key = start_ride(chain)
    # about 50 m north of the airport point
    nearby = str(GeoPoint(36.13194, -86.6694))
    chain.call(D1, "pickupRider", key, nearby)
    assert chain.ride(R1)["pickup_time"] is not None


def test_get_ride_info_access(chain):
    key = start_ride(chain)
    own = chain.call(R1, "getRideInfo", key)
    driver = chain.call(D1, "getRideInfo", key)
    assert json.loads(own.response) == json.loads(driver.response)
    with pytest.raises(NotOwner):
        chain.call(R2, "getRideInfo", key)
    with pytest.raises(NotOwner):
        chain.call(R2, "getRideInfo", user_key(MSP, R1.uid))


def test_get_user_info_ignores_spoofed_arguments(chain):
    own = chain.call(R2, "getUserInfo")
    spoofed = chain.call(R2, "getUserInfo", MSP, R1.uid)
    assert spoofed.response == own.response


def test_two_rides_same_minute_get_distinct_keys(chain):
    for rider in (R1, R2):
        key = start_ride(chain, rider)
        chain.call(D1, "pickupRider", key, AIRPORT)
        chain.call(D1, "dropoffRider", key, STADIUM, now="12/5/2018 12:40")
    rides = chain.permanent(D1)
    assert [r["ride_id"] for r in rides] == ["ID-rider1", "ID-rider2"]
    user = chain.get(user_key(MSP, D1.uid))
    assert len(set(user["ride_keys"])) == 2


def test_co_rider_privacy_asymmetry(chain):
    k1 = start_ride(chain, R1, AIRPORT, STADIUM)
    chain.call(D1, "pickupRider", k1, AIRPORT)
    k2 = start_ride(chain, R2, GREYHOUND, STADIUM)
    chain.call(D1, "setCoRiderInformation", k1, "ID-rider2", "Pickup", GREYHOUND)
    chain.call(D1, "pickupRider", k2, GREYHOUND)
    chain.call(D1, "dropoffRider", k1, STADIUM, now="12/5/2018 12:40")
    chain.call(D1, "setCoRiderInformation", k2, "rider1", "Dropoff", STADIUM)
    chain.call(D1, "dropoffRider", k2, STADIUM, now="12/5/2018 12:41")
    chain.call(R1, "leaveDriver", k1)
    chain.call(R2, "leaveDriver", k2)

    (r1,) = chain.permanent(R1)
    (r2,) = chain.permanent(R2)
    assert r1["co_rider_id"] == "ID-rider2"
    assert r1["co_rider_pickup_loc"] == GREYHOUND
    assert r1["co_rider_dropoff_loc"] is None
    assert r2["co_rider_id"] == "ID-rider1"
    assert r2["co_rider_dropoff_loc"] == STADIUM
    assert r2["co_rider_pickup_loc"] is None


PLACES = [AIRPORT, STADIUM, GREYHOUND]


@st.composite
def co_rider_timelines(draw):
    attempts = draw(
        st.lists(
            st.tuples(
                st.sampled_from(["rider2", "ID-rider2", "rider3"]),
                st.sampled_from(["Pickup", "Dropoff"]),
                st.sampled_from(PLACES),
            ),
            min_size=1,
            max_size=6,
        )
    )
    pickup_at = draw(st.integers(min_value=0, max_value=len(attempts)))
    dropoff_at = draw(st.integers(min_value=pickup_at, max_value=len(attempts)))
    return pickup_at, dropoff_at, attempts


@hsettings(max_examples=200, deadline=None)
@given(co_rider_timelines())
def test_co_rider_recorded_only_while_observer_onboard(timeline):
    pickup_at, dropoff_at, attempts = timeline
    chain = Harness()
    chain.register(R1, R2, D1)
    chain.call(D1, "upgradeToDriver")
    key = start_ride(chain)
    onboard = False
    expected = {"co_rider_id": None, "Pickup": None, "Dropoff": None}

    def move(step):
        nonlocal onboard
        if step == pickup_at:
            chain.call(D1, "pickupRider", key, AIRPORT)
            onboard = True
        if step == dropoff_at:
            chain.call(D1, "dropoffRider", key, STADIUM)
            onboard = False

    for step, (co_rider, event, loc) in enumerate(attempts):
        move(step)
        co_rider_id = co_rider if co_rider.startswith("ID-") else f"ID-{co_rider}"
        args = (key, co_rider, event, loc)
        if not onboard:
            with pytest.raises(ObserverNotPresent):
                chain.call(D1, "setCoRiderInformation", *args)
        elif expected["co_rider_id"] not in (None, co_rider_id) or expected[event]:
            with pytest.raises(FieldAlreadySet):
                chain.call(D1, "setCoRiderInformation", *args)
        else:
            chain.call(D1, "setCoRiderInformation", *args)
            expected["co_rider_id"] = co_rider_id
            expected[event] = loc
    move(len(attempts))
    chain.call(R1, "leaveDriver", key)

    (ride,) = chain.permanent(R1)
    assert chain.permanent(D1) == [ride]
    assert ride["co_rider_id"] == expected["co_rider_id"]
    assert ride["co_rider_pickup_loc"] == expected["Pickup"]
    assert ride["co_rider_dropoff_loc"] == expected["Dropoff"]
    # the co-rider's own records are never touched by the observer's ride
    assert chain.get(user_key(MSP, R2.uid))["ride_keys"] == []
    assert chain.ride(R2) is None


def _reach(chain, fn, loc, dest, password, event):
    """Commit whatever fn needs and return the call that should succeed."""
    key = ride_request_key(MSP, R1.uid)
    if fn == "registerUser":
        return R3, (), password
    if fn in ("unregisterUser", "upgradeToDriver"):
        return R2, (), None
    if fn in ("getUserInfo", "authenticate"):
        return R1, (), "secret" if fn == "authenticate" else None
    if fn == "requestRide":
        return R1, (loc,), None
    steps = [
        (R1, "requestRide", (loc,)),
        (D1, "acceptRide", (key,)),
        (R1, "setRideDestination", (key, dest)),
        (D1, "pickupRider", (key, loc)),
        (D1, "dropoffRider", (key, dest)),
        (R1, "leaveDriver", (key,)),
    ]
    if fn == "getRideInfo":
        chain.call(R1, "requestRide", loc)
        return R1, (key,), None
    if fn == "setCoRiderInformation":
        for caller, name, args in steps[:4]:
            chain.call(caller, name, *args)
        return D1, (key, "rider2", event, dest), None
    for caller, name, args in steps:
        if name == fn:
            return caller, args, None
        chain.call(caller, name, *args)
    raise AssertionError(fn)


coords = st.tuples(
    st.floats(min_value=-80, max_value=80), st.floats(min_value=-170, max_value=170)
).map(lambda p: str(GeoPoint(*p)))


@pytest.mark.parametrize("fn", RideHailChaincode.functions())
@hsettings(max_examples=1000, deadline=None)
@given(
    password=st.text(min_size=1, max_size=12),
    tx_id=st.text(alphabet="0123456789abcdef", min_size=8, max_size=8),
    loc=coords,
    dest=coords,
    minute=st.integers(min_value=0, max_value=59),
    event=st.sampled_from(["Pickup", "Dropoff"]),
)
def test_double_execution_is_identical(fn, password, tx_id, loc, dest, minute, event):
    chain = Harness()
    chain.register(R1, R2, D1)
    chain.call(D1, "upgradeToDriver")
    caller, args, secret = _reach(chain, fn, loc, dest, password, event)
    transient = {"password": secret.encode()} if secret is not None else None
    snapshot = chain.state.snapshot(chain.height)
    calls = [
        simulate(
            snapshot,
            chain.chaincode.invoke,
            caller,
            fn,
            list(args),
            tx_id,
            f"12/5/2018 13:{minute:02d}",
            transient,
        )
        for _ in range(2)
    ]
    assert calls[0].rwset == calls[1].rwset
    assert calls[0].response == calls[1].response
    assert calls[0].event == calls[1].event
    assert not calls[0].rwset.read_after_write
