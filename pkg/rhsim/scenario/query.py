from __future__ import annotations

import json
import logging

from ..chaincode import user_key
from ..errors import AccessDenied, EndorsementRejected, InvalidKey, NotOwner, RideNotFound
from ..identity import Identity
from ..ledger import split_key
from ..txflow import FabricNetwork

logger = logging.getLogger(__name__)


def owns(identity: Identity, key: str) -> bool:
    try:
        parts = split_key(key)
    except InvalidKey:
        return False
    return len(parts) >= 3 and (parts[1], parts[2]) == identity.key


def query_as(
    network: FabricNetwork, identity: Identity, key: str, direct: bool = False
) -> dict | None:
    """Read key the only way a client can: through a chaincode query.

    direct asks a peer for the raw world state instead, which is always refused.
    Foreign keys are refused with AccessDenied; an own key that does not exist
    reads as None.
    """
    client = network.client(identity)
    if direct:
        return client.event_peer.query_state(key)

    try:
        if key == user_key(identity.msp, identity.uid):
            raw = client.evaluate("getUserInfo")
        else:
            raw = client.evaluate("getRideInfo", [key])
    except EndorsementRejected as e:
        code = e.details.get("error_code")
        if code == RideNotFound.code and owns(identity, key):
            return None
        if code in (NotOwner.code, RideNotFound.code):
            logger.info("%s denied %s (%s)", identity.name, key, code)
            raise AccessDenied(f"{identity.name} may not read {key}", key=key)
        raise
    return json.loads(raw)
