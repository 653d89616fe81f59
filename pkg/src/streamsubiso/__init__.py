"""Continuous subgraph matching over streaming graph updates.

The package keeps a set of registered pattern queries matched
incrementally against a stream of timestamped edge insertions and
deletions, emitting each complete match the moment its final edge
arrives. Temporal constraints (arrival order, cluster gap, window)
bound how long partial matches are retained.
"""

from .dispatch import DispatchIndex, GateCandidate, SpawnGate, find_shared_gates
from .engine import (
    ADVISORY,
    AUTO,
    Engine,
    EngineConfig,
    EngineStats,
    MatchResult,
    PartialSnapshot,
)
from .errors import (
    ClusterGapUnitUnsupported,
    DuplicateQueryName,
    InsufficientData,
    InvalidQuery,
    OutOfOrderTimestamp,
    QuerySyntaxError,
    StreamSubisoError,
    WireFormatError,
)
from .graph import (
    DELETE,
    INSERT,
    EdgeRecord,
    GraphSnapshot,
    GraphStore,
    StreamUpdate,
    Vertex,
)
from .oracle import (
    Embedding,
    find_all_matches,
    find_all_matches_temporal,
    satisfies_temporal,
)
from .query import (
    GAP_TIME,
    GAP_UPDATES,
    AttributePredicate,
    QueryEdge,
    QueryGraph,
    QueryVertex,
    TemporalConstraints,
)
from .synopsis import StreamSynopsis

__version__ = "0.1.0"

__all__ = [
    "ADVISORY",
    "AUTO",
    "AttributePredicate",
    "ClusterGapUnitUnsupported",
    "DELETE",
    "DispatchIndex",
    "DuplicateQueryName",
    "EdgeRecord",
    "Embedding",
    "Engine",
    "EngineConfig",
    "EngineStats",
    "GAP_TIME",
    "GAP_UPDATES",
    "GateCandidate",
    "GraphSnapshot",
    "GraphStore",
    "INSERT",
    "InsufficientData",
    "InvalidQuery",
    "MatchResult",
    "OutOfOrderTimestamp",
    "PartialSnapshot",
    "QueryEdge",
    "QueryGraph",
    "QuerySyntaxError",
    "QueryVertex",
    "SpawnGate",
    "StreamSubisoError",
    "StreamSynopsis",
    "StreamUpdate",
    "TemporalConstraints",
    "Vertex",
    "WireFormatError",
    "find_all_matches",
    "find_all_matches_temporal",
    "find_shared_gates",
    "satisfies_temporal",
]
