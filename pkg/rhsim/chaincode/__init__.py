from .geo import GeoPoint
from .models import (
    RIDE_LABELS,
    CoRiderEvent,
    RideEventName,
    RideRecord,
    RideStatus,
    UserRecord,
    ride_table,
)
from .ridehail import (
    FUNCTIONS,
    Caller,
    ChaincodeContext,
    RideHailChaincode,
    bootstrap_user,
    hash_password,
    ride_request_key,
    user_key,
)
