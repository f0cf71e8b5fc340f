from .blocks import (
    GENESIS_PREV_HASH,
    Block,
    BlockStore,
    BootstrapTx,
    Ledger,
    ValidationCode,
    genesis_block,
    rwset_of,
    tx_id_of,
    verify_chain,
)
from .state import (
    NAMESPACES,
    ChaincodeEvent,
    ReadWriteSet,
    SimulationResult,
    Snapshot,
    TxSimulator,
    VersionedValue,
    WorldState,
    make_key,
    mvcc_validate,
    simulate,
    split_key,
)
