from __future__ import annotations

import logging
from typing import Iterable

from ..chaincode import RideHailChaincode, bootstrap_user
from ..errors import ConfigError, TxFlowError, UnknownNode
from ..identity import Identity, MembershipRegistry, Role
from ..ledger import Block, ValidationCode, genesis_block
from ..netsim import Node, Rng, RunResult, Scheduler, SimNetwork, resolve_profile
from ..settings.topology import TopologyConfig
from .client import Client, TxResult
from .orderer import OrderingService
from .peer import Peer
from .policy import EndorsementPolicy

logger = logging.getLogger(__name__)


def deliver_and_commit(
    peers: Iterable[Peer], block: Block
) -> dict[str, list[ValidationCode]]:
    """Commit one block on every peer right away and check the flags agree."""
    results = {peer.name: peer.commit(block) for peer in peers}
    if len({tuple(codes) for codes in results.values()}) > 1:
        raise TxFlowError(f"peers disagree on block {block.height}", flags=results)
    return results


class FabricNetwork:
    """Organizations, peers, one ordering service and the clients that use them,
    wired onto one simulated network."""

    def __init__(
        self,
        topology: TopologyConfig,
        seed: int | None = None,
        record_trace: bool = False,
    ):
        seed = seed if seed is not None else topology.seed
        if seed is None:
            raise ConfigError("a seed is required")
        self.topology = topology
        self.seed = seed
        self.rng = Rng(seed)
        self.policy = EndorsementPolicy.parse(topology.policy)
        self.registry = MembershipRegistry(seed)
        self.sim = SimNetwork(Scheduler(record_trace=record_trace))
        self.chaincode = RideHailChaincode(
            topology.chaincode_name,
            topology.chaincode_version,
            topology.location_tolerance_m,
        )
        self.client_profile = resolve_profile(topology.client_profile)

        self.peers: dict[str, Peer] = {}
        self.peers_by_org: dict[str, list[str]] = {}
        self._by_id: dict[tuple[str, str], Peer] = {}
        orderer_identity: Identity | None = None

        for org_config in topology.orgs:
            org = self.registry.provision_org(
                org_config.name, org_config.peers, org_config.orderers
            )
            profile = topology.org_profile(org_config)
            self.peers_by_org[org.msp_id] = [p.uid for p in org.peers]
            for identity in org.peers:
                node = self.sim.add_node(identity.name, profile)
                peer = Peer(
                    identity,
                    self.chaincode,
                    self.registry,
                    self.policy,
                    self.peers_by_org,
                    node,
                )
                self.peers[peer.name] = peer
                self._by_id[identity.key] = peer
            if orderer_identity is None:
                orderer_identity = org.orderers[0]
                self.orderer_node = self.sim.add_node(orderer_identity.name, profile)

        self.orderer = OrderingService(self.sim.scheduler, topology.ordering, self._deliver)
        self.clients: dict[str, Client] = {}
        self._generations: dict[str, int] = {}
        self.first_flags: dict[int, list[ValidationCode]] = {}
        self.flag_disagreements = 0
        self.genesis: Block | None = None

    @property
    def scheduler(self) -> Scheduler:
        return self.sim.scheduler

    @property
    def now(self) -> int:
        return self.sim.now

    @property
    def org_count(self) -> int:
        return len(self.peers_by_org)

    def peer_by_id(self, msp: str, uid: str) -> Peer:
        try:
            return self._by_id[(msp, uid)]
        except KeyError:
            raise UnknownNode(f"no peer {uid} in {msp}")

    def org_peers(self, msp: str) -> list[Peer]:
        return [self._by_id[(msp, uid)] for uid in self.peers_by_org[msp]]

    def enroll(
        self,
        org: str,
        role: Role | str,
        seed: bytes | int | str,
        uid: str | None = None,
        alias: str = "",
    ) -> Identity:
        return self.registry.enroll_identity(org, Role(role), seed, uid=uid, alias=alias)

    def bootstrap(self, users: Iterable[tuple[Identity, str, str]] = ()) -> Block:
        """Commit the genesis block, optionally pre-registering users.

        users are (identity, password, ledger role) triples.
        """
        if self.genesis is not None:
            raise TxFlowError("network already bootstrapped")
        writes = [
            bootstrap_user(identity.msp, identity.uid, password, role)
            for identity, password, role in users
        ]
        genesis = genesis_block(writes, timestamp=self.now)
        deliver_and_commit(self.peers.values(), genesis)
        self.orderer.bootstrap(genesis)
        self.genesis = genesis
        logger.info(
            "genesis committed on %s peers with %s users", len(self.peers), len(writes)
        )
        return genesis

    def client(
        self,
        identity: Identity,
        allowed_peers: Iterable[str] | None = None,
        node: str | None = None,
    ) -> Client:
        """A client for identity, running on its own node unless one is named."""
        if self.genesis is None:
            self.bootstrap()
        key = f"client.{identity.name}"
        node = node or key
        cached = self.clients.get(key)
        if cached is not None and allowed_peers is None and cached.node.name == node:
            return cached
        if node not in self.sim.nodes:
            self.sim.add_node(node, self.client_profile)
        generation = self._generations.get(key, 0)
        self._generations[key] = generation + 1
        client = Client(self, identity, self.sim.node(node), allowed_peers, generation)
        self.clients[key] = client
        return client

    def _deliver(self, block: Block):
        endorsements = sum(len(getattr(tx, "endorsements", ())) for tx in block.txs)
        for peer in self.peers.values():
            node: Node = peer.node
            self.sim.send(
                self.orderer_node.name,
                peer.name,
                lambda peer=peer: self._commit(peer, block),
                service_us=node.profile.commit_cost_us(
                    len(block.txs), endorsements, self.org_count
                ),
                label=f"deliver block {block.height}",
            )

    def _commit(self, peer: Peer, block: Block):
        for committed, codes in peer.receive_block(block):
            self._check_flags(peer, committed, codes)

    def _check_flags(self, peer: Peer, block: Block, codes: list[ValidationCode]):
        first = self.first_flags.setdefault(block.height, codes)
        if first != codes:
            self.flag_disagreements += 1
            logger.error(
                "%s disagrees on block %s: %s vs %s", peer.name, block.height, codes, first
            )

    def run(self, deadline: int | None = None) -> RunResult:
        return self.scheduler.run_until(deadline)

    def transact(
        self,
        client: Client,
        fn: str,
        args: list,
        transient: dict[str, bytes] | None = None,
        timestamp: str | None = None,
    ) -> TxResult:
        """Submit one transaction and run until the network is idle again."""
        result = client.submit(fn, args, transient=transient, timestamp=timestamp)
        self.run()
        if not result.done:
            raise TxFlowError(f"{fn} from {client.name} never settled", tx_id=result.tx_id)
        return result

    def state_dumps(self) -> dict[str, bytes]:
        return {name: peer.ledger.dump() for name, peer in self.peers.items()}

    def __repr__(self):
        return (
            f"<FabricNetwork orgs={self.org_count} peers={len(self.peers)} "
            f"policy={self.policy}>"
        )
