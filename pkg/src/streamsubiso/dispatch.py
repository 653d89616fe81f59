"""Shared dispatch across registered queries.

Every query edge is indexed under an edge signature: edge type, endpoint
labels, and the canonicalized predicate list (edge predicates plus both
endpoints' vertex predicates, tagged by role). An incoming stream edge is
evaluated once per distinct signature, then fanned out to every (query,
eid) pair in the matching buckets.

Spawn gates live here too: small connected subpatterns ranked for reuse
across queries, per-query.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .query import (
    AttributePredicate,
    QueryGraph,
    order_closure,
    spawn_eligible_edges,
)

ROLE_EDGE = "edge"
ROLE_SRC = "src"
ROLE_DST = "dst"


def _pred_key(role: str, p: AttributePredicate) -> tuple:
    # str(value) with a type tag gives a total order over mixed int/str
    # literals; the stored tuple keeps the real value for evaluation.
    return (role, p.attr, p.cmp, type(p.value).__name__, str(p.value))


def edge_signature(q: QueryGraph, eid: int) -> tuple:
    """Canonical signature of one query edge, hashable and order-free."""
    e = q.edges[eid]
    by_var = q.vertex_by_var()
    src_v = by_var[e.src_var]
    dst_v = by_var[e.dst_var]
    tagged = (
        [(ROLE_EDGE, p) for p in e.predicates]
        + [(ROLE_SRC, p) for p in src_v.predicates]
        + [(ROLE_DST, p) for p in dst_v.predicates]
    )
    tagged.sort(key=lambda rp: _pred_key(*rp))
    preds = tuple((role, p.attr, p.cmp, p.value) for role, p in tagged)
    return (e.edge_type, src_v.label, dst_v.label, preds)


@dataclass
class _Bucket:
    signature: tuple
    predicates: tuple  # ((role, AttributePredicate), ...)
    entries: list[tuple[int, int]]  # (query id, eid)

    def matches(self, edge_attrs, src_attrs, dst_attrs) -> bool:
        for role, p in self.predicates:
            if role == ROLE_EDGE:
                attrs = edge_attrs
            elif role == ROLE_SRC:
                attrs = src_attrs
            else:
                attrs = dst_attrs
            if not p.matches(attrs):
                return False
        return True


class DispatchIndex:
    """Signature-keyed fan-out from stream edges to (query, eid) pairs."""

    def __init__(self):
        self._buckets: dict[tuple, _Bucket] = {}
        self._by_triple: dict[tuple[str, str, str], list[_Bucket]] = {}

    @property
    def bucket_count(self) -> int:
        return len(self._buckets)

    def entries(self) -> list[tuple[tuple, list[tuple[int, int]]]]:
        return [(b.signature, list(b.entries)) for b in self._buckets.values()]

    def add_query(self, qid: int, q: QueryGraph) -> None:
        by_var = q.vertex_by_var()
        for e in q.edges:
            sig = edge_signature(q, e.eid)
            bucket = self._buckets.get(sig)
            if bucket is None:
                src_v = by_var[e.src_var]
                dst_v = by_var[e.dst_var]
                tagged = tuple(
                    sorted(
                        [(ROLE_EDGE, p) for p in e.predicates]
                        + [(ROLE_SRC, p) for p in src_v.predicates]
                        + [(ROLE_DST, p) for p in dst_v.predicates],
                        key=lambda rp: _pred_key(*rp),
                    )
                )
                bucket = _Bucket(sig, tagged, [])
                self._buckets[sig] = bucket
                key = (e.edge_type, src_v.label, dst_v.label)
                self._by_triple.setdefault(key, []).append(bucket)
            bucket.entries.append((qid, e.eid))

    def match(
        self,
        edge_type: str,
        src_label: str,
        dst_label: str,
        edge_attrs: Mapping,
        src_attrs: Mapping,
        dst_attrs: Mapping,
    ) -> tuple[list[tuple[int, int]], int]:
        """Return matching (query, eid) pairs and the evaluation count.

        One predicate evaluation is charged per bucket sharing the concrete
        (type, labels) triple, regardless of how many query edges the
        bucket fans out to.
        """
        buckets = self._by_triple.get((edge_type, src_label, dst_label))
        if not buckets:
            return [], 0
        hits: list[tuple[int, int]] = []
        evals = 0
        for bucket in buckets:
            evals += 1
            if bucket.matches(edge_attrs, src_attrs, dst_attrs):
                hits.extend(bucket.entries)
        return hits, evals


def build_dispatch_index(queries: Mapping[int, QueryGraph]) -> DispatchIndex:
    """Build the shared index over all registered queries at once."""
    index = DispatchIndex()
    for qid, q in queries.items():
        index.add_query(qid, q)
    return index


@dataclass(frozen=True)
class SpawnGate:
    """A per-query gate: singleton spawns for edges outside ``eids`` are
    suppressed until some partial match covers every gate edge."""

    qid: int
    eids: frozenset[int]


@dataclass(frozen=True)
class GateCandidate:
    gate: SpawnGate
    signature: tuple
    shared_queries: int
    selectivity: int
    sound: bool


def _gate_signature(q: QueryGraph, eids: tuple[int, ...]) -> tuple:
    if len(eids) == 1:
        return ("1", edge_signature(q, eids[0]))
    a, b = eids
    ea, eb = q.edges[a], q.edges[b]
    sig_a, sig_b = edge_signature(q, a), edge_signature(q, b)

    def shape(first, second):
        joins = []
        for role_f, var_f in (("src", first.src_var), ("dst", first.dst_var)):
            for role_s, var_s in (("src", second.src_var), ("dst", second.dst_var)):
                if var_f == var_s:
                    joins.append((role_f, role_s))
        return tuple(sorted(joins))

    one = (sig_a, sig_b, shape(ea, eb))
    two = (sig_b, sig_a, shape(eb, ea))
    return ("2",) + min(one, two)


def _downward_closed(q: QueryGraph, eids: frozenset[int]) -> bool:
    closure = order_closure(q.constraints.arrival_order, len(q.edges))
    return all(a in eids for a, b in closure if b in eids)


def find_shared_gates(
    queries: Mapping[int, QueryGraph], synopsis=None
) -> dict[int, list[GateCandidate]]:
    """Rank gate candidates per query.

    Candidates are 1-edge and connected 2-edge subpatterns that are
    downward-closed under the arrival order. Ranking favors signatures
    shared by many queries, then low selectivity (few observed predicate
    hits), then canonical signature order. A candidate is ``sound`` when
    its edges cover the query's whole spawn-eligible set; only sound gates
    leave the emitted match set untouched.
    """
    per_query: dict[int, list[tuple[tuple, tuple[int, ...]]]] = {}
    sig_owners: dict[tuple, set[int]] = {}
    for qid, q in queries.items():
        cands: list[tuple[tuple, tuple[int, ...]]] = []
        n = len(q.edges)
        for e in range(n):
            if _downward_closed(q, frozenset((e,))):
                cands.append((_gate_signature(q, (e,)), (e,)))
        for a in range(n):
            for b in range(a + 1, n):
                ea, eb = q.edges[a], q.edges[b]
                shared_var = {ea.src_var, ea.dst_var} & {eb.src_var, eb.dst_var}
                if not shared_var:
                    continue
                if _downward_closed(q, frozenset((a, b))):
                    cands.append((_gate_signature(q, (a, b)), (a, b)))
        per_query[qid] = cands
        for sig, _ in cands:
            sig_owners.setdefault(sig, set()).add(qid)

    out: dict[int, list[GateCandidate]] = {}
    for qid, q in queries.items():
        spawn_set = spawn_eligible_edges(q)
        ranked = []
        for sig, eids in per_query[qid]:
            selectivity = 0
            if synopsis is not None:
                selectivity = sum(synopsis.predicate_count(qid, e) for e in eids)
            ranked.append(
                GateCandidate(
                    gate=SpawnGate(qid, frozenset(eids)),
                    signature=sig,
                    shared_queries=len(sig_owners[sig]),
                    selectivity=selectivity,
                    sound=spawn_set <= frozenset(eids),
                )
            )
        ranked.sort(key=lambda c: (-c.shared_queries, c.selectivity, c.signature))
        out[qid] = ranked
    return out
