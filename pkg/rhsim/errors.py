from __future__ import annotations


class RhsimError(Exception):
    code = "RhsimError"

    def __init__(self, message: str = "", **details):
        self.details = details
        super().__init__(message or self.code)


class ConfigError(RhsimError):
    code = "ConfigError"


# identity


class IdentityError(RhsimError):
    code = "IdentityError"


class DuplicateOrg(IdentityError):
    code = "DuplicateOrg"


class ZeroPeers(IdentityError):
    code = "ZeroPeers"


class UnknownOrg(IdentityError):
    code = "UnknownOrg"


class UnknownSigner(IdentityError):
    code = "UnknownSigner"


class UidCollision(IdentityError):
    code = "UidCollision"


class RoleTransitionError(IdentityError):
    code = "RoleTransitionError"


# ledger


class LedgerError(RhsimError):
    code = "LedgerError"


class ChainBreak(LedgerError):
    code = "ChainBreak"


class InvalidKey(LedgerError):
    code = "InvalidKey"


# chaincode


class ChaincodeError(RhsimError):
    code = "ChaincodeError"


class UnknownFunction(ChaincodeError):
    code = "UnknownFunction"


class BadArgument(ChaincodeError):
    code = "BadArgument"


class AlreadyRegistered(ChaincodeError):
    code = "AlreadyRegistered"


class NotRegistered(ChaincodeError):
    code = "NotRegistered"


class RideInProgress(ChaincodeError):
    code = "RideInProgress"


class AlreadyDriver(ChaincodeError):
    code = "AlreadyDriver"


class RideAlreadyActive(ChaincodeError):
    code = "RideAlreadyActive"


class NotADriver(ChaincodeError):
    code = "NotADriver"


class RideNotFound(ChaincodeError):
    code = "RideNotFound"


class AlreadyAccepted(ChaincodeError):
    code = "AlreadyAccepted"


class NotOwner(ChaincodeError):
    code = "NotOwner"


class WrongStatus(ChaincodeError):
    code = "WrongStatus"


class NotAssignedDriver(ChaincodeError):
    code = "NotAssignedDriver"


class RideNotOngoing(ChaincodeError):
    code = "RideNotOngoing"


class WrongLocation(ChaincodeError):
    code = "WrongLocation"


class ObserverNotPresent(ChaincodeError):
    code = "ObserverNotPresent"


class FieldAlreadySet(ChaincodeError):
    code = "FieldAlreadySet"


class NotPickedUp(ChaincodeError):
    code = "NotPickedUp"


class NoDestination(ChaincodeError):
    code = "NoDestination"


class RideNotCompleted(ChaincodeError):
    code = "RideNotCompleted"


# txflow


class TxFlowError(RhsimError):
    code = "TxFlowError"


class VersionMismatch(TxFlowError):
    code = "VersionMismatch"


class BadSignature(TxFlowError):
    code = "BadSignature"


class PolicyUnsatisfied(TxFlowError):
    code = "PolicyUnsatisfied"


class Divergence(TxFlowError):
    code = "Divergence"


class EndorsementRejected(TxFlowError):
    code = "EndorsementRejected"


class UnknownEvent(TxFlowError):
    code = "UnknownEvent"


# netsim


class SimError(RhsimError):
    code = "SimError"


class TimeTravel(SimError):
    code = "TimeTravel"


class UnknownNode(SimError):
    code = "UnknownNode"


# scenario


class ScenarioError(RhsimError):
    code = "ScenarioError"


class ScenarioStepFailed(ScenarioError):
    code = "ScenarioStepFailed"

    def __init__(self, index: int, message: str = "", **details):
        self.index = index
        super().__init__(f"step {index}: {message}", index=index, **details)


class AccessDenied(ScenarioError):
    code = "AccessDenied"
