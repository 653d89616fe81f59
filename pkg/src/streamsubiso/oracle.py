"""Brute-force static subgraph matching over a snapshot.

This is the trusted baseline: a from-scratch backtracking enumerator with
no incremental state, used to cross-check the streaming engine and to
answer backfill requests. Clarity and determinism are the priorities here,
not speed.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ClusterGapUnitUnsupported
from .graph import EdgeRecord, GraphSnapshot
from .query import GAP_TIME, GAP_UPDATES, QueryGraph


@dataclass
class Embedding:
    """One injective mapping of a query into a snapshot."""

    vmap: dict[str, str]  # query var -> data vertex id
    emap: dict[int, tuple[str, int]]  # query eid -> (data edge id, timestamp)

    def key(self) -> tuple:
        return (
            tuple(sorted(self.vmap.items())),
            tuple(sorted(self.emap.items())),
        )

    @property
    def completion_ts(self) -> int:
        return max(ts for _, ts in self.emap.values())


class _Search:
    def __init__(self, g: GraphSnapshot, q: QueryGraph):
        self.g = g
        self.q = q
        self.by_var = q.vertex_by_var()
        self.verts_by_label: dict[str, list[str]] = {}
        for vid in sorted(g.vertices):
            self.verts_by_label.setdefault(g.vertices[vid].label, []).append(vid)
        self.out_adj: dict[str, list[EdgeRecord]] = {}
        self.in_adj: dict[str, list[EdgeRecord]] = {}
        for eid in sorted(g.edges):
            rec = g.edges[eid]
            self.out_adj.setdefault(rec.src, []).append(rec)
            self.in_adj.setdefault(rec.dst, []).append(rec)
        self.var_order = self._var_order()

    def _var_order(self) -> list[str]:
        degree = {v.var: 0 for v in self.q.vertices}
        for e in self.q.edges:
            degree[e.src_var] += 1
            degree[e.dst_var] += 1
        chosen: list[str] = []
        remaining = set(degree)
        while remaining:
            if not chosen:
                pool = remaining
            else:
                pool = {
                    var
                    for var in remaining
                    if any(
                        (e.src_var == var and e.dst_var in chosen)
                        or (e.dst_var == var and e.src_var in chosen)
                        for e in self.q.edges
                    )
                }
                if not pool:  # disconnected query; validate() rejects these
                    pool = remaining
            # Descending degree, ties broken by variable name.
            pick = min(pool, key=lambda var: (-degree[var], var))
            chosen.append(pick)
            remaining.discard(pick)
        return chosen

    def _vertex_ok(self, var: str, vid: str) -> bool:
        qv = self.by_var[var]
        data = self.g.vertices.get(vid)
        if data is None or data.label != qv.label:
            return False
        return all(p.matches(data.attrs) for p in qv.predicates)

    def _edge_ok(self, eid: int, rec: EdgeRecord) -> bool:
        e = self.q.edges[eid]
        if rec.edge_type != e.edge_type:
            return False
        return all(p.matches(rec.attrs) for p in e.predicates)

    def _candidates(self, var: str, vmap: dict[str, str]) -> list[str]:
        # Prefer candidates reachable from an already-mapped neighbor via
        # some query edge; fall back to the label index for the first var.
        for e in self.q.edges:
            if e.src_var == var and e.dst_var in vmap:
                pool = self.in_adj.get(vmap[e.dst_var], [])
                return sorted({r.src for r in pool if self._edge_ok(e.eid, r)})
            if e.dst_var == var and e.src_var in vmap:
                pool = self.out_adj.get(vmap[e.src_var], [])
                return sorted({r.dst for r in pool if self._edge_ok(e.eid, r)})
        return list(self.verts_by_label.get(self.by_var[var].label, []))

    def _pairs_ok(self, var: str, vmap: dict[str, str]) -> bool:
        # Every query edge with both endpoints mapped must have at least
        # one satisfying data edge between the images.
        for e in self.q.edges:
            if e.src_var not in vmap or e.dst_var not in vmap:
                continue
            if var not in (e.src_var, e.dst_var):
                continue
            src, dst = vmap[e.src_var], vmap[e.dst_var]
            pool = self.out_adj.get(src, [])
            if not any(r.dst == dst and self._edge_ok(e.eid, r) for r in pool):
                return False
        return True

    def run(self) -> list[Embedding]:
        results: list[Embedding] = []
        vmap: dict[str, str] = {}

        def assign(idx: int) -> None:
            if idx == len(self.var_order):
                self._enumerate_edges(vmap, results)
                return
            var = self.var_order[idx]
            for vid in self._candidates(var, vmap):
                if vid in vmap.values():
                    continue
                if not self._vertex_ok(var, vid):
                    continue
                vmap[var] = vid
                if self._pairs_ok(var, vmap):
                    assign(idx + 1)
                del vmap[var]

        assign(0)
        results.sort(key=lambda emb: emb.key())
        return results

    def _enumerate_edges(self, vmap: dict[str, str], results: list[Embedding]) -> None:
        options: list[list[EdgeRecord]] = []
        for e in self.q.edges:
            src, dst = vmap[e.src_var], vmap[e.dst_var]
            pool = self.out_adj.get(src, [])
            recs = [r for r in pool if r.dst == dst and self._edge_ok(e.eid, r)]
            recs.sort(key=lambda r: r.edge_id)
            if not recs:
                return
            options.append(recs)

        chosen: list[EdgeRecord] = []
        used: set[str] = set()

        def pick(eid: int) -> None:
            if eid == len(options):
                emap = {
                    i: (rec.edge_id, rec.timestamp) for i, rec in enumerate(chosen)
                }
                results.append(Embedding(dict(vmap), emap))
                return
            for rec in options[eid]:
                if rec.edge_id in used:
                    continue
                used.add(rec.edge_id)
                chosen.append(rec)
                pick(eid + 1)
                chosen.pop()
                used.discard(rec.edge_id)

        pick(0)


def find_all_matches(g: GraphSnapshot, q: QueryGraph) -> list[Embedding]:
    """Every injective embedding of ``q`` into ``g``, deterministically
    ordered by sorted vmap then emap."""
    return _Search(g, q).run()


def satisfies_temporal(
    emb: Embedding,
    q: QueryGraph,
    seq_by_edge: dict[str, int] | None = None,
    check_order: bool = True,
) -> bool:
    """Apply the arrival-order, window, and cluster-gap predicates.

    ``seq_by_edge`` maps data edge id to stream sequence number; it is
    required for gaps in update units, which a bare snapshot cannot judge.
    """
    c = q.constraints
    if check_order:
        for a, b in c.arrival_order:
            if emb.emap[a][1] >= emb.emap[b][1]:
                return False
    timestamps = sorted(ts for _, ts in emb.emap.values())
    if c.window is not None and timestamps[-1] - timestamps[0] > c.window:
        return False
    if c.cluster_gap is not None:
        if c.cluster_gap_unit == GAP_TIME:
            series = timestamps
        elif c.cluster_gap_unit == GAP_UPDATES:
            if seq_by_edge is None:
                raise ClusterGapUnitUnsupported(
                    "update-count gaps need stream sequence numbers, "
                    "which a snapshot does not carry"
                )
            series = sorted(seq_by_edge[eid] for eid, _ in emb.emap.values())
        else:
            raise ClusterGapUnitUnsupported(
                f"unknown gap unit {c.cluster_gap_unit!r}"
            )
        for earlier, later in zip(series, series[1:]):
            if later - earlier > c.cluster_gap:
                return False
    return True


def find_all_matches_temporal(
    g: GraphSnapshot,
    q: QueryGraph,
    seq_by_edge: dict[str, int] | None = None,
    check_order: bool = True,
) -> list[Embedding]:
    """Embeddings of ``q`` in ``g`` that also satisfy the temporal
    constraints. Raises ClusterGapUnitUnsupported for update-unit gaps
    unless ``seq_by_edge`` is supplied."""
    return [
        emb
        for emb in find_all_matches(g, q)
        if satisfies_temporal(emb, q, seq_by_edge, check_order)
    ]
