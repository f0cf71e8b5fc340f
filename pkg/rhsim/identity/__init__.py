from .msp import (
    CaRecord,
    Identity,
    MembershipRegistry,
    Org,
    Role,
    Signature,
    derive_uid,
    verify_signature,
)
