"""The incremental matching engine.

Each insert is handled in five steps: expiry sweep, dispatch through the
shared signature index, augmentation of existing partial matches,
singleton spawning, and emission of completed matches. Partial matches are
immutable: augmenting a partial creates a copy with one more edge and the
original is retained, so a partial's expiry deadlines are fixed at
creation and exact expiry reduces to deadline min-heaps plus a staleness
guard at augmentation time.

Candidate partials for an incoming edge are found through two indexes:
one keyed by (query, mapped data vertex) for partials that share a vertex
with the edge, and one keyed by (query, eid) holding partials where that
query edge's endpoints are both still unmapped. Together they cover every
extendable partial without scanning the store.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .dispatch import (
    GateCandidate,
    build_dispatch_index,
    find_shared_gates,
)
from .errors import (
    DuplicateQueryName,
    InvalidQuery,
    OutOfOrderTimestamp,
    UnknownQueryState,
)
from .graph import DELETE, GraphStore, StreamUpdate
from .query import (
    GAP_TIME,
    GAP_UPDATES,
    QueryGraph,
    order_closure,
    spawn_eligible_edges,
    validate,
)
from .synopsis import DEFAULT_ALPHA, DEFAULT_RESERVOIR, StreamSynopsis

ADVISORY = "advisory"
AUTO = "auto"


@dataclass
class EngineConfig:
    ordered_pruning: bool = True
    dedup: bool = True
    reorder_slack: int = 0
    # Gates keyed by query name; applied when that query is registered.
    spawn_gates: dict[str, frozenset[int]] | None = None
    track_history: bool = True
    synopsis_alpha: float = DEFAULT_ALPHA
    synopsis_reservoir: int = DEFAULT_RESERVOIR
    synopsis_seed: int = 0

    def __post_init__(self):
        if self.reorder_slack < 0:
            raise ValueError("reorder_slack must be non-negative")


@dataclass
class MatchResult:
    qid: int
    query: str
    vmap: dict[str, str]
    emap: dict[int, tuple[str, int]]
    completion_ts: int
    emit_seq: int

    def key(self) -> tuple:
        return (
            tuple(sorted(self.vmap.items())),
            tuple(sorted(self.emap.items())),
        )


class PartialMatch:
    """Immutable partial embedding. ``vmap`` is positional over the query's
    variables, ``emap`` positional over its edges (None where unbound)."""

    __slots__ = (
        "qid",
        "matched_mask",
        "vmap",
        "emap",
        "first_ts",
        "last_ts",
        "last_seq",
        "alive",
    )

    def __init__(self, qid, matched_mask, vmap, emap, first_ts, last_ts, last_seq):
        self.qid = qid
        self.matched_mask = matched_mask
        self.vmap = vmap
        self.emap = emap
        self.first_ts = first_ts
        self.last_ts = last_ts
        self.last_seq = last_seq
        self.alive = True


@dataclass(frozen=True)
class PartialSnapshot:
    """Read-only view of one live partial, for observability and tests."""

    qid: int
    matched: frozenset[int]
    emap: tuple[tuple[int, str, int], ...]  # (eid, edge_id, timestamp)
    first_ts: int
    last_ts: int
    last_seq: int


@dataclass
class QueryStats:
    qid: int
    name: str
    live: int
    peak: int
    spawned: int
    emitted: int
    expired: int
    deleted: int


@dataclass
class EngineStats:
    updates: int
    live_partials: int
    peak_partials: int
    emitted: int
    expired: int
    deleted_partials: int
    predicate_evals: int
    ops: int
    per_query: dict[int, QueryStats]


class _CompiledQuery:
    def __init__(self, qid: int, q: QueryGraph):
        self.qid = qid
        self.query = q
        self.name = q.name
        self.nvars = len(q.vertices)
        self.nedges = len(q.edges)
        self.var_names = tuple(v.var for v in q.vertices)
        var_index = {v.var: i for i, v in enumerate(q.vertices)}
        self.edge_src = tuple(var_index[e.src_var] for e in q.edges)
        self.edge_dst = tuple(var_index[e.dst_var] for e in q.edges)
        self.full_mask = (1 << self.nedges) - 1

        closure = order_closure(q.constraints.arrival_order, self.nedges)
        self.pred_masks = [0] * self.nedges
        self.succ_masks = [0] * self.nedges
        for a, b in closure:
            self.pred_masks[b] |= 1 << a
            self.succ_masks[a] |= 1 << b
        direct: list[list[int]] = [[] for _ in range(self.nedges)]
        for a, b in q.constraints.arrival_order:
            direct[b].append(a)
        self.direct_preds = tuple(tuple(sorted(ps)) for ps in direct)

        self.spawn_mask = 0
        for eid in spawn_eligible_edges(q):
            self.spawn_mask |= 1 << eid

        # Effective temporal constraints; the adaptive layer may rewrite
        # the gap, so these live apart from the registered QueryGraph.
        self.window = q.constraints.window
        self.gap = q.constraints.cluster_gap
        self.gap_unit = q.constraints.cluster_gap_unit
        self.gap_is_time = self.gap_unit == GAP_TIME
        self.original_constraints = q.constraints

        self.gate_mask: int | None = None
        self.gate_unlocked = True

        # Lazily filled; keyed by matched_mask, at most 2**nedges entries.
        self._mask_info: dict[int, tuple[tuple, tuple, tuple]] = {}

    def mask_info(self, mask: int) -> tuple[tuple, tuple, tuple]:
        """(matched eids, bound var indices, open eids) for a matched_mask.

        A partial's bound variables are exactly the endpoints of its matched
        edges, so all three sets depend only on the mask and can be shared
        across every partial in the same state.
        """
        info = self._mask_info.get(mask)
        if info is None:
            matched = tuple(e for e in range(self.nedges) if (mask >> e) & 1)
            bound = set()
            for eid in matched:
                bound.add(self.edge_src[eid])
                bound.add(self.edge_dst[eid])
            open_eids = tuple(
                eid
                for eid in range(self.nedges)
                if not (mask >> eid) & 1
                and self.edge_src[eid] not in bound
                and self.edge_dst[eid] not in bound
            )
            info = (matched, tuple(sorted(bound)), open_eids)
            self._mask_info[mask] = info
        return info


class _QueryState:
    __slots__ = (
        "cq",
        "partials",
        "by_vertex",
        "open_by_eid",
        "emitted_keys",
        "live",
        "peak",
        "spawned",
        "emitted",
        "expired",
        "deleted",
    )

    def __init__(self, cq: _CompiledQuery):
        self.cq = cq
        self.partials: dict[PartialMatch, None] = {}
        self.by_vertex: dict[str, dict[PartialMatch, None]] = {}
        self.open_by_eid: list[dict[PartialMatch, None]] = [
            {} for _ in range(cq.nedges)
        ]
        self.emitted_keys: set[tuple] = set()
        self.live = 0
        self.peak = 0
        self.spawned = 0
        self.emitted = 0
        self.expired = 0
        self.deleted = 0


class Engine:
    """One continuous-query engine over one update stream."""

    def __init__(self, config: EngineConfig | None = None):
        self.config = config or EngineConfig()
        self.store = GraphStore(track_history=self.config.track_history)
        self.synopsis = StreamSynopsis(
            alpha=self.config.synopsis_alpha,
            reservoir_capacity=self.config.synopsis_reservoir,
            seed=self.config.synopsis_seed,
        )
        self._states: dict[int, _QueryState] = {}
        self._names: dict[str, int] = {}
        self._dispatch = build_dispatch_index({})
        self._next_qid = 1

        self._seq = 0
        self._watermark: int | None = None
        self._processed_ts: int | None = None
        self._buffer: list[tuple[int, int, StreamUpdate]] = []
        self._arrivals = 0

        self._by_edge: dict[str, dict[PartialMatch, None]] = {}
        self._ts_heap: list[tuple[int, int, PartialMatch]] = []
        self._seq_heap: list[tuple[int, int, PartialMatch]] = []
        self._heap_counter = 0

        self._live_total = 0
        self._peak_total = 0
        self._emitted_total = 0
        self._expired_total = 0
        self._deleted_total = 0
        self._predicate_evals = 0
        self._ops = 0

    # --- registration ------------------------------------------------------

    def register_query(self, q: QueryGraph) -> int:
        report = validate(q)
        if not report.ok:
            raise InvalidQuery(report.violations)
        if q.name in self._names:
            raise DuplicateQueryName(f"query {q.name!r} is already registered")
        qid = self._next_qid
        self._next_qid += 1
        cq = _CompiledQuery(qid, q)
        self._states[qid] = _QueryState(cq)
        self._names[q.name] = qid
        self._rebuild_dispatch()
        for eid in range(cq.nedges):
            self.synopsis.register_predicate(qid, eid)
        gates = self.config.spawn_gates
        if gates and q.name in gates:
            self.set_spawn_gate(qid, gates[q.name])
        return qid

    def _rebuild_dispatch(self) -> None:
        self._dispatch = build_dispatch_index(
            {qid: st.cq.query for qid, st in self._states.items()}
        )

    def query_ids(self) -> list[int]:
        return list(self._states)

    def query_name(self, qid: int) -> str:
        return self._state(qid).cq.name

    def query_graph(self, qid: int) -> QueryGraph:
        return self._state(qid).cq.query

    def effective_constraints(self, qid: int) -> tuple[int | None, str, int | None]:
        """(cluster_gap, gap_unit, window) currently in force for a query."""
        cq = self._state(qid).cq
        return cq.gap, cq.gap_unit, cq.window

    def _state(self, qid: int) -> _QueryState:
        st = self._states.get(qid)
        if st is None:
            raise UnknownQueryState(f"no state for query id {qid}")
        return st

    # --- gates --------------------------------------------------------------

    def set_spawn_gate(self, qid: int, eids: frozenset[int] | None) -> None:
        """Install or clear a spawn gate for one query.

        The gate must be a connected subpattern of one or two edges and
        closed under arrival-order predecessors.
        """
        st = self._state(qid)
        cq = st.cq
        if eids is None:
            cq.gate_mask = None
            cq.gate_unlocked = True
            return
        eids = frozenset(eids)
        if not 1 <= len(eids) <= 2:
            raise ValueError("a spawn gate covers one or two edges")
        if any(e < 0 or e >= cq.nedges for e in eids):
            raise ValueError(f"gate edge out of range for query {cq.name!r}")
        if len(eids) == 2:
            a, b = sorted(eids)
            ea, eb = cq.query.edges[a], cq.query.edges[b]
            if not {ea.src_var, ea.dst_var} & {eb.src_var, eb.dst_var}:
                raise ValueError("a two-edge gate must share a variable")
        closure = order_closure(cq.query.constraints.arrival_order, cq.nedges)
        for a, b in closure:
            if b in eids and a not in eids:
                raise ValueError(
                    "gate edges must include their arrival-order predecessors"
                )
        mask = 0
        for e in eids:
            mask |= 1 << e
        cq.gate_mask = mask
        cq.gate_unlocked = any(
            p.matched_mask & mask == mask for p in st.partials
        )

    def gate_candidates(self) -> dict[int, list[GateCandidate]]:
        return find_shared_gates(
            {qid: st.cq.query for qid, st in self._states.items()},
            self.synopsis,
        )

    def auto_apply_gates(self) -> dict[int, list[int]]:
        """Install the top-ranked sound gate per query, where one exists.

        Only sound gates (covering the whole spawn-eligible set) are
        applied automatically, because any narrower gate can silently drop
        matches whose first edge arrives before the gate completes.
        """
        applied: dict[int, list[int]] = {}
        for qid, candidates in self.gate_candidates().items():
            for cand in candidates:
                if cand.sound:
                    self.set_spawn_gate(qid, cand.gate.eids)
                    applied[qid] = sorted(cand.gate.eids)
                    break
        return applied

    # --- stream intake -------------------------------------------------------

    @property
    def seq(self) -> int:
        return self._seq

    @property
    def watermark(self) -> int | None:
        return self._watermark

    @property
    def processed_ts(self) -> int | None:
        return self._processed_ts

    def process_update(self, u: StreamUpdate) -> list[MatchResult]:
        """Accept one stream update; returns matches completed by any
        update released from the reorder buffer as a consequence."""
        slack = self.config.reorder_slack
        if self._watermark is not None and u.timestamp < self._watermark - slack:
            raise OutOfOrderTimestamp(u.timestamp, self._watermark, slack)
        if self._watermark is None or u.timestamp > self._watermark:
            self._watermark = u.timestamp
        heapq.heappush(self._buffer, (u.timestamp, self._arrivals, u))
        self._arrivals += 1
        horizon = self._watermark - slack
        results: list[MatchResult] = []
        while self._buffer and self._buffer[0][0] <= horizon:
            _, _, released = heapq.heappop(self._buffer)
            results.extend(self._process(released))
        return results

    def flush(self) -> list[MatchResult]:
        """Drain the reorder buffer (end of stream)."""
        results: list[MatchResult] = []
        while self._buffer:
            _, _, released = heapq.heappop(self._buffer)
            results.extend(self._process(released))
        return results

    # --- core per-update path ------------------------------------------------

    def _process(self, u: StreamUpdate) -> list[MatchResult]:
        self.store.apply_update(u)
        self._seq += 1
        now_seq = self._seq
        now_ts = u.timestamp
        self._processed_ts = now_ts
        self.synopsis.observe(u)

        if u.op == DELETE:
            self._discard_edge(u.edge_id)
            return []

        self._sweep(now_ts, now_seq)

        src_attrs = self.store.vertex(u.src).attrs
        dst_attrs = self.store.vertex(u.dst).attrs
        hits, evals = self._dispatch.match(
            u.edge_type, u.src_label, u.dst_label, u.attrs, src_attrs, dst_attrs
        )
        self._predicate_evals += evals
        if not hits:
            return []
        self.synopsis.observe_hits(u, hits)
        if u.src == u.dst:
            # A reflexive data edge cannot bind two distinct variables.
            return []

        results: list[MatchResult] = []
        states = self._states
        for qid, eid in hits:
            self._augment(states[qid], eid, u, now_seq, results)
        for qid, eid in hits:
            self._maybe_spawn(states[qid], eid, u, now_seq, results)
        return results

    def _augment(self, st, eid, u, now_seq, results) -> None:
        cq = st.cq
        bit = 1 << eid
        src_i = cq.edge_src[eid]
        dst_i = cq.edge_dst[eid]
        now_ts = u.timestamp
        u_src = u.src
        u_dst = u.dst
        u_edge_id = u.edge_id

        candidates: dict[PartialMatch, None] = {}
        bucket = st.by_vertex.get(u_src)
        if bucket:
            candidates.update(bucket)
        bucket = st.by_vertex.get(u_dst)
        if bucket:
            candidates.update(bucket)
        if st.open_by_eid[eid]:
            candidates.update(st.open_by_eid[eid])
        if not candidates:
            return

        pruning = self.config.ordered_pruning
        pred_mask = cq.pred_masks[eid]
        succ_mask = cq.succ_masks[eid]
        direct_preds = cq.direct_preds[eid]
        # Kills and inserts below touch the shared buckets, never this
        # snapshot, so iterating it directly is safe.
        for p in candidates:
            self._ops += 1
            if not p.alive or p.matched_mask & bit:
                continue
            if self._is_expired(cq, p, now_ts, now_seq):
                self._kill(p, expired=True)
                continue
            vmap = p.vmap
            bound_src = vmap[src_i]
            if bound_src is None:
                if u_src in vmap:
                    continue
            elif bound_src != u_src:
                continue
            bound_dst = vmap[dst_i]
            if bound_dst is None:
                if u_dst in vmap:
                    continue
            elif bound_dst != u_dst:
                continue
            emap = p.emap
            dup = False
            for en in emap:
                if en is not None and en[0] == u_edge_id:
                    dup = True
                    break
            if dup:
                continue
            if pruning:
                if pred_mask & ~p.matched_mask:
                    continue
                stale = False
                for pe in direct_preds:
                    if emap[pe][1] >= now_ts:
                        stale = True
                        break
                if stale:
                    continue
                if succ_mask & p.matched_mask:
                    continue
            self._extend(st, p, eid, u, now_seq, results)

    def _extend(self, st, parent, eid, u, now_seq, results) -> None:
        cq = st.cq
        src_i = cq.edge_src[eid]
        dst_i = cq.edge_dst[eid]
        vmap = list(parent.vmap)
        vmap[src_i] = u.src
        vmap[dst_i] = u.dst
        emap = list(parent.emap)
        emap[eid] = (u.edge_id, u.timestamp)
        new_mask = parent.matched_mask | (1 << eid)
        if new_mask == cq.full_mask:
            self._emit(st, tuple(vmap), tuple(emap), u.timestamp, results)
            return
        child = PartialMatch(
            cq.qid,
            new_mask,
            tuple(vmap),
            tuple(emap),
            parent.first_ts,
            u.timestamp,
            now_seq,
        )
        self._insert_partial(st, child)

    def _maybe_spawn(self, st, eid, u, now_seq, results) -> None:
        cq = st.cq
        if self.config.ordered_pruning:
            if not (cq.spawn_mask >> eid) & 1:
                return
            if (
                cq.gate_mask is not None
                and not cq.gate_unlocked
                and not (cq.gate_mask >> eid) & 1
            ):
                return
        st.spawned += 1
        vmap: list[str | None] = [None] * cq.nvars
        vmap[cq.edge_src[eid]] = u.src
        vmap[cq.edge_dst[eid]] = u.dst
        emap: list[tuple[str, int] | None] = [None] * cq.nedges
        emap[eid] = (u.edge_id, u.timestamp)
        bit = 1 << eid
        if bit == cq.full_mask:
            self._emit(st, tuple(vmap), tuple(emap), u.timestamp, results)
            return
        child = PartialMatch(
            cq.qid, bit, tuple(vmap), tuple(emap), u.timestamp, u.timestamp, now_seq
        )
        self._insert_partial(st, child)

    def _emit(self, st, vmap, emap, completion_ts, results) -> None:
        cq = st.cq
        key = emap  # a full emap pins the vmap as well
        if self.config.dedup and key in st.emitted_keys:
            return
        st.emitted_keys.add(key)
        st.emitted += 1
        self._emitted_total += 1
        cq.gate_unlocked = True
        result = MatchResult(
            qid=cq.qid,
            query=cq.name,
            vmap={cq.var_names[i]: vmap[i] for i in range(cq.nvars)},
            emap={eid: emap[eid] for eid in range(cq.nedges)},
            completion_ts=completion_ts,
            emit_seq=self._seq,
        )
        results.append(result)

    # --- partial bookkeeping ---------------------------------------------------

    def _insert_partial(self, st, p: PartialMatch) -> None:
        self._ops += 1
        cq = st.cq
        st.partials[p] = None
        st.live += 1
        if st.live > st.peak:
            st.peak = st.live
        self._live_total += 1
        if self._live_total > self._peak_total:
            self._peak_total = self._live_total
        matched, bound_vars, open_eids = cq.mask_info(p.matched_mask)
        vmap = p.vmap
        by_vertex = st.by_vertex
        for i in bound_vars:
            v = vmap[i]
            bucket = by_vertex.get(v)
            if bucket is None:
                bucket = {}
                by_vertex[v] = bucket
            bucket[p] = None
        open_by_eid = st.open_by_eid
        for eid in open_eids:
            open_by_eid[eid][p] = None
        emap = p.emap
        by_edge = self._by_edge
        for eid in matched:
            edge_id = emap[eid][0]
            bucket = by_edge.get(edge_id)
            if bucket is None:
                bucket = {}
                by_edge[edge_id] = bucket
            bucket[p] = None

        ts_deadline = None
        if cq.window is not None:
            ts_deadline = p.first_ts + cq.window
        if cq.gap is not None:
            if cq.gap_is_time:
                gap_deadline = p.last_ts + cq.gap
                if ts_deadline is None or gap_deadline < ts_deadline:
                    ts_deadline = gap_deadline
            else:
                self._heap_counter += 1
                heapq.heappush(
                    self._seq_heap, (p.last_seq + cq.gap, self._heap_counter, p)
                )
        if ts_deadline is not None:
            self._heap_counter += 1
            heapq.heappush(self._ts_heap, (ts_deadline, self._heap_counter, p))

        if (
            cq.gate_mask is not None
            and not cq.gate_unlocked
            and p.matched_mask & cq.gate_mask == cq.gate_mask
        ):
            cq.gate_unlocked = True

    def _kill(self, p: PartialMatch, expired: bool) -> None:
        if not p.alive:
            return
        p.alive = False
        self._ops += 1
        st = self._states[p.qid]
        cq = st.cq
        st.partials.pop(p, None)
        st.live -= 1
        self._live_total -= 1
        if expired:
            st.expired += 1
            self._expired_total += 1
        else:
            st.deleted += 1
            self._deleted_total += 1
        matched, bound_vars, open_eids = cq.mask_info(p.matched_mask)
        vmap = p.vmap
        by_vertex = st.by_vertex
        for i in bound_vars:
            v = vmap[i]
            bucket = by_vertex.get(v)
            if bucket is not None:
                bucket.pop(p, None)
                if not bucket:
                    del by_vertex[v]
        open_by_eid = st.open_by_eid
        for eid in open_eids:
            open_by_eid[eid].pop(p, None)
        emap = p.emap
        by_edge = self._by_edge
        for eid in matched:
            edge_id = emap[eid][0]
            bucket = by_edge.get(edge_id)
            if bucket is not None:
                bucket.pop(p, None)
                if not bucket:
                    del by_edge[edge_id]

    def _discard_edge(self, edge_id: str) -> None:
        bucket = self._by_edge.pop(edge_id, None)
        if not bucket:
            return
        for p in list(bucket):
            self._kill(p, expired=False)

    # --- expiry -----------------------------------------------------------------

    def _is_expired(self, cq, p, now_ts: int, now_seq: int) -> bool:
        gap = cq.gap
        if gap is not None:
            if cq.gap_is_time:
                if now_ts - p.last_ts > gap:
                    return True
            elif now_seq - p.last_seq > gap:
                return True
        window = cq.window
        return window is not None and now_ts - p.first_ts > window

    def _sweep(self, now_ts: int, now_seq: int) -> int:
        removed = 0
        states = self._states
        heappop = heapq.heappop
        heap = self._ts_heap
        while heap and heap[0][0] < now_ts:
            _, _, p = heappop(heap)
            self._ops += 1
            if not p.alive:
                continue
            # Re-check with current constraints: adaptation may have moved
            # deadlines after this entry was pushed (fresh entries exist).
            if self._is_expired(states[p.qid].cq, p, now_ts, now_seq):
                self._kill(p, expired=True)
                removed += 1
        heap = self._seq_heap
        while heap and heap[0][0] < now_seq:
            _, _, p = heappop(heap)
            self._ops += 1
            if not p.alive:
                continue
            if self._is_expired(states[p.qid].cq, p, now_ts, now_seq):
                self._kill(p, expired=True)
                removed += 1
        return removed

    def expire(self, now_ts: int, now_seq: int | None = None) -> int:
        """Remove exactly the partials whose gap or window is violated at
        (now_ts, now_seq). Returns the number removed."""
        return self._sweep(now_ts, self._seq if now_seq is None else now_seq)

    # --- adaptation ----------------------------------------------------------------

    def recommend_cluster_gap(self, qid: int, quantile: float) -> int:
        self._state(qid)
        return self.synopsis.recommend_cluster_gap(qid, quantile)

    def apply_recommendation(
        self, qid: int, mode: str, quantile: float = 0.95
    ) -> tuple[int | None, int]:
        """Recommend a cluster gap and, in auto mode, install it.

        Returns (old gap, recommended gap). Installation rewrites the
        effective constraint (time units) and schedules fresh deadlines
        for the query's live partials; already-expired partials stay gone.
        """
        if mode not in (ADVISORY, AUTO):
            raise ValueError(f"unknown adaptation mode {mode!r}")
        st = self._state(qid)
        cq = st.cq
        recommended = self.synopsis.recommend_cluster_gap(qid, quantile)
        old = cq.gap
        if mode == ADVISORY:
            return old, recommended
        cq.gap = recommended
        cq.gap_unit = GAP_TIME
        cq.gap_is_time = True
        for p in st.partials:
            ts_deadline = p.last_ts + recommended
            if cq.window is not None:
                ts_deadline = min(ts_deadline, p.first_ts + cq.window)
            self._heap_counter += 1
            heapq.heappush(self._ts_heap, (ts_deadline, self._heap_counter, p))
        return old, recommended

    # --- observability ----------------------------------------------------------------

    def stats(self) -> EngineStats:
        per_query = {
            qid: QueryStats(
                qid=qid,
                name=st.cq.name,
                live=st.live,
                peak=st.peak,
                spawned=st.spawned,
                emitted=st.emitted,
                expired=st.expired,
                deleted=st.deleted,
            )
            for qid, st in self._states.items()
        }
        return EngineStats(
            updates=self._seq,
            live_partials=self._live_total,
            peak_partials=self._peak_total,
            emitted=self._emitted_total,
            expired=self._expired_total,
            deleted_partials=self._deleted_total,
            predicate_evals=self._predicate_evals,
            ops=self._ops,
            per_query=per_query,
        )

    def live_partials(self, qid: int | None = None) -> list[PartialSnapshot]:
        out: list[PartialSnapshot] = []
        states = (
            self._states.items()
            if qid is None
            else [(qid, self._state(qid))]
        )
        for q, st in states:
            for p in st.partials:
                emap = tuple(
                    (eid, en[0], en[1])
                    for eid, en in enumerate(p.emap)
                    if en is not None
                )
                out.append(
                    PartialSnapshot(
                        qid=q,
                        matched=frozenset(
                            eid for eid in range(st.cq.nedges)
                            if p.matched_mask & (1 << eid)
                        ),
                        emap=emap,
                        first_ts=p.first_ts,
                        last_ts=p.last_ts,
                        last_seq=p.last_seq,
                    )
                )
        return out

    def emitted_match_keys(self, qid: int) -> set[tuple]:
        """Emitted matches as sorted (eid, edge_id, ts) tuples, for
        oracle comparisons."""
        st = self._state(qid)
        out = set()
        for emap in st.emitted_keys:
            out.add(
                tuple(
                    (eid, en[0], en[1])
                    for eid, en in enumerate(emap)
                    if en is not None
                )
            )
        return out
