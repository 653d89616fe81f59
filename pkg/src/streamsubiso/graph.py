"""Streaming property graph store.

The store ingests timestamped edge updates. Vertices are created implicitly
the first time an edge references them and are never removed; edges are a
multigraph keyed by caller-supplied edge ids. An append-only update log
supports reconstructing the graph as of any past timestamp.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from .errors import DuplicateEdgeId, LabelConflict, UnknownEdgeId

Scalar = str | int | float

_EMPTY: Mapping[str, Scalar] = MappingProxyType({})

INSERT = "insert"
DELETE = "delete"


@dataclass(frozen=True, slots=True)
class StreamUpdate:
    """One timestamped edge operation.

    ``src_attrs`` / ``dst_attrs`` carry endpoint vertex attributes; they are
    applied only when the update implicitly creates that vertex and are
    ignored for vertices that already exist.
    """

    op: str
    edge_id: str
    src: str
    src_label: str
    dst: str
    dst_label: str
    edge_type: str
    timestamp: int
    attrs: Mapping[str, Scalar] = _EMPTY
    src_attrs: Mapping[str, Scalar] = _EMPTY
    dst_attrs: Mapping[str, Scalar] = _EMPTY


@dataclass(frozen=True, slots=True)
class Vertex:
    id: str
    label: str
    attrs: Mapping[str, Scalar] = _EMPTY


@dataclass(frozen=True, slots=True)
class EdgeRecord:
    """A live edge: endpoints, type, attributes, and insertion timestamp."""

    edge_id: str
    src: str
    dst: str
    edge_type: str
    timestamp: int
    attrs: Mapping[str, Scalar] = _EMPTY


@dataclass(frozen=True, slots=True)
class UpdateReceipt:
    """Outcome of one applied update."""

    op: str
    edge_id: str
    created_vertices: int


@dataclass(frozen=True)
class GraphSnapshot:
    """Immutable view of the graph at a point in time."""

    as_of: int | None
    vertices: Mapping[str, Vertex]
    edges: Mapping[str, EdgeRecord]

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def edge_count(self) -> int:
        return len(self.edges)


@dataclass
class _State:
    """Mutable graph state shared by the store and snapshot replay."""

    vertices: dict[str, Vertex] = field(default_factory=dict)
    edges: dict[str, EdgeRecord] = field(default_factory=dict)

    def apply(self, u: StreamUpdate) -> UpdateReceipt:
        if u.timestamp < 0:
            raise ValueError(f"negative timestamp {u.timestamp} on {u.edge_id!r}")
        if u.op == INSERT:
            return self._insert(u)
        if u.op == DELETE:
            return self._delete(u)
        raise ValueError(f"unknown op {u.op!r}")

    def _check_label(self, vid: str, label: str) -> None:
        existing = self.vertices.get(vid)
        if existing is not None and existing.label != label:
            raise LabelConflict(
                f"vertex {vid!r} has label {existing.label!r}, "
                f"referenced as {label!r}"
            )

    def _insert(self, u: StreamUpdate) -> UpdateReceipt:
        edges = self.edges
        if u.edge_id in edges:
            raise DuplicateEdgeId(f"edge id {u.edge_id!r} is already live")
        vertices = self.vertices
        src_v = vertices.get(u.src)
        if src_v is not None and src_v.label != u.src_label:
            raise LabelConflict(
                f"vertex {u.src!r} has label {src_v.label!r}, "
                f"referenced as {u.src_label!r}"
            )
        dst_v = vertices.get(u.dst)
        if dst_v is not None and dst_v.label != u.dst_label:
            raise LabelConflict(
                f"vertex {u.dst!r} has label {dst_v.label!r}, "
                f"referenced as {u.dst_label!r}"
            )
        created = 0
        if src_v is None:
            vertices[u.src] = Vertex(u.src, u.src_label, dict(u.src_attrs))
            created += 1
        if dst_v is None and u.dst != u.src:
            vertices[u.dst] = Vertex(u.dst, u.dst_label, dict(u.dst_attrs))
            created += 1
        edges[u.edge_id] = EdgeRecord(
            u.edge_id, u.src, u.dst, u.edge_type, u.timestamp, dict(u.attrs)
        )
        return UpdateReceipt(INSERT, u.edge_id, created)

    def _delete(self, u: StreamUpdate) -> UpdateReceipt:
        if u.edge_id not in self.edges:
            raise UnknownEdgeId(f"edge id {u.edge_id!r} is not live")
        self._check_label(u.src, u.src_label)
        self._check_label(u.dst, u.dst_label)
        del self.edges[u.edge_id]
        return UpdateReceipt(DELETE, u.edge_id, 0)


class GraphStore:
    """Live graph plus the update log that produced it.

    ``track_history=False`` drops the log (and with it ``snapshot``) for
    long-running ingestion where replay is not needed.
    """

    def __init__(self, track_history: bool = True):
        self._state = _State()
        self._history: list[StreamUpdate] | None = [] if track_history else None

    @property
    def track_history(self) -> bool:
        return self._history is not None

    @property
    def history(self) -> tuple[StreamUpdate, ...]:
        if self._history is None:
            raise RuntimeError("history tracking is disabled for this store")
        return tuple(self._history)

    @property
    def vertex_count(self) -> int:
        return len(self._state.vertices)

    @property
    def edge_count(self) -> int:
        return len(self._state.edges)

    def vertex(self, vid: str) -> Vertex | None:
        return self._state.vertices.get(vid)

    def edge(self, edge_id: str) -> EdgeRecord | None:
        return self._state.edges.get(edge_id)

    def apply_update(self, u: StreamUpdate) -> UpdateReceipt:
        """Apply one update, or raise without touching state.

        Raises DuplicateEdgeId, UnknownEdgeId, or LabelConflict; all checks
        run before any mutation, so a failed update leaves no trace.
        """
        receipt = self._state.apply(u)
        if self._history is not None:
            self._history.append(u)
        return receipt

    def snapshot(self, as_of: int | None = None) -> GraphSnapshot:
        """Reconstruct the graph from updates with timestamp <= ``as_of``.

        ``as_of=None`` replays the full log. The boundary is inclusive.
        """
        if self._history is None:
            raise RuntimeError("history tracking is disabled for this store")
        state = _State()
        for u in self._history:
            if as_of is not None and u.timestamp > as_of:
                continue
            state.apply(u)
        return GraphSnapshot(
            as_of,
            MappingProxyType(state.vertices),
            MappingProxyType(state.edges),
        )

    def current(self) -> GraphSnapshot:
        """Snapshot of the live state without replaying the log."""
        return GraphSnapshot(
            None,
            MappingProxyType(dict(self._state.vertices)),
            MappingProxyType(dict(self._state.edges)),
        )
