from .client import Client, TxResult, collect
from .events import EventHub, RideEvent, Subscriber, TxStatus
from .network import FabricNetwork, deliver_and_commit
from .orderer import CutRecord, OrderingService
from .peer import Peer
from .policy import EndorsementPolicy, PolicyKind
from .proposal import Endorsement, Envelope, Proposal, Verdict
