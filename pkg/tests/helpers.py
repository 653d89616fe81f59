"""Shared fixtures and independent reference implementations.

The enumerators and the stream replay oracle here are deliberately
written with different algorithms than the package's own code, so tests
compare two independent derivations of every answer.
"""

from __future__ import annotations

from streamsubiso.engine import Engine, EngineConfig, MatchResult
from streamsubiso.graph import DELETE, INSERT, GraphSnapshot, GraphStore, StreamUpdate
from streamsubiso.oracle import find_all_matches, satisfies_temporal
from streamsubiso.query import (
    GAP_TIME,
    GAP_UPDATES,
    AttributePredicate,
    QueryEdge,
    QueryGraph,
    QueryVertex,
    TemporalConstraints,
)

Key = tuple


def result_key(m: MatchResult) -> Key:
    return m.key()


def embedding_key(emb) -> Key:
    return emb.key()


# --- independent enumerators --------------------------------------------------


def _vertex_ok(snap: GraphSnapshot, vid: str, qv: QueryVertex) -> bool:
    v = snap.vertices[vid]
    if v.label != qv.label:
        return False
    return all(p.matches(v.attrs) for p in qv.predicates)


def _edge_ok(snap: GraphSnapshot, er, qe: QueryEdge,
             by_var: dict[str, QueryVertex]) -> bool:
    if er.edge_type != qe.edge_type:
        return False
    if not all(p.matches(er.attrs) for p in qe.predicates):
        return False
    return _vertex_ok(snap, er.src, by_var[qe.src_var]) and _vertex_ok(
        snap, er.dst, by_var[qe.dst_var]
    )


def brute_force_subset_embeddings(
    snap: GraphSnapshot, q: QueryGraph, eids: tuple[int, ...]
) -> set[Key]:
    """All injective embeddings of the given query edges, by trying every
    data edge for every slot. Exponential; for small instances only."""
    data_edges = sorted(snap.edges.values(), key=lambda er: er.edge_id)
    by_var = q.vertex_by_var()
    out: set[Key] = set()

    def rec(i: int, vmap: dict[str, str], used_v: set[str], used_e: set[str],
            emap: dict[int, tuple[str, int]]) -> None:
        if i == len(eids):
            out.add(
                (
                    tuple(sorted(vmap.items())),
                    tuple(sorted(emap.items())),
                )
            )
            return
        qe = q.edges[eids[i]]
        for er in data_edges:
            if er.edge_id in used_e or not _edge_ok(snap, er, qe, by_var):
                continue
            binds: list[tuple[str, str]] = []
            ok = True
            for var, vid in ((qe.src_var, er.src), (qe.dst_var, er.dst)):
                bound = vmap.get(var)
                if bound is not None:
                    if bound != vid:
                        ok = False
                        break
                elif vid in used_v or any(b == vid for _w, b in binds):
                    ok = False
                    break
                else:
                    binds.append((var, vid))
            if not ok:
                continue
            for var, vid in binds:
                vmap[var] = vid
                used_v.add(vid)
            used_e.add(er.edge_id)
            emap[eids[i]] = (er.edge_id, er.timestamp)
            rec(i + 1, vmap, used_v, used_e, emap)
            del emap[eids[i]]
            used_e.discard(er.edge_id)
            for var, vid in binds:
                del vmap[var]
                used_v.discard(vid)

    rec(0, {}, set(), set(), {})
    return out


def brute_force_embeddings(snap: GraphSnapshot, q: QueryGraph) -> set[Key]:
    return brute_force_subset_embeddings(snap, q, tuple(range(len(q.edges))))


def brute_force_partial_count(snap: GraphSnapshot, q: QueryGraph) -> int:
    """Count injective embeddings of every nonempty proper edge subset."""
    n = len(q.edges)
    total = 0
    for mask in range(1, (1 << n) - 1):
        eids = tuple(i for i in range(n) if mask & (1 << i))
        total += len(brute_force_subset_embeddings(snap, q, eids))
    return total


# --- stream replay oracle ------------------------------------------------------


def expected_stream_results(
    queries: list[QueryGraph],
    updates: list[StreamUpdate],
    ordered_pruning: bool = True,
    dedup: bool = True,
) -> dict[str, list[Key]]:
    """Replay the stream against a per-update static search: at every
    insert, any full embedding that contains the new edge and satisfies
    the temporal constraints is due for emission exactly then."""
    store = GraphStore(track_history=False)
    seq_by_edge: dict[str, int] = {}
    emitted: dict[str, list[Key]] = {q.name: [] for q in queries}
    seen: dict[str, set[Key]] = {q.name: set() for q in queries}
    seq = 0
    for u in updates:
        store.apply_update(u)
        seq += 1
        if u.op == DELETE:
            continue
        seq_by_edge[u.edge_id] = seq
        snap = store.current()
        for q in queries:
            for emb in find_all_matches(snap, q):
                if all(e[0] != u.edge_id for e in emb.emap.values()):
                    continue
                if not satisfies_temporal(
                    emb, q, seq_by_edge=seq_by_edge, check_order=ordered_pruning
                ):
                    continue
                k = emb.key()
                if dedup:
                    if k in seen[q.name]:
                        continue
                    seen[q.name].add(k)
                emitted[q.name].append(k)
    return emitted


def run_engine(
    queries: list[QueryGraph],
    updates: list[StreamUpdate],
    config: EngineConfig | None = None,
) -> tuple[Engine, list[MatchResult]]:
    engine = Engine(config)
    for q in queries:
        engine.register_query(q)
    results: list[MatchResult] = []
    for u in updates:
        results.extend(engine.process_update(u))
    results.extend(engine.flush())
    return engine, results


def results_by_query(results: list[MatchResult]) -> dict[str, list[Key]]:
    out: dict[str, list[Key]] = {}
    for m in results:
        out.setdefault(m.query, []).append(m.key())
    return out


# --- expiry shadow --------------------------------------------------------------


def shadow_surviving(
    partials,
    now_ts: int,
    now_seq: int,
    gap: int | None,
    gap_unit: str,
    window: int | None,
):
    """Straight-line restatement of the three expiry predicates, applied
    to PartialSnapshot rows."""
    kept = []
    for p in partials:
        if gap is not None and gap_unit == GAP_TIME and now_ts - p.last_ts > gap:
            continue
        if gap is not None and gap_unit == GAP_UPDATES and now_seq - p.last_seq > gap:
            continue
        if window is not None and now_ts - p.first_ts > window:
            continue
        kept.append(p)
    return kept


# --- the publications scenario ---------------------------------------------------


PUBS_QUERY_TEXT = """
query pubs {
  vertex a: Author;
  vertex p1: Paper (venue = "ICDM", year = 2006);
  vertex p2: Paper (venue = "ICDM", year = 2007);
  vertex p3: Paper (year >= 2008);
  edge e1: a -authored-> p1 order 1;
  edge e2: a -authored-> p2 order 2;
  edge e3: a -authored-> p3 order 3;
}
"""


def pubs_query() -> QueryGraph:
    return QueryGraph(
        name="pubs",
        vertices=(
            QueryVertex("a", "Author"),
            QueryVertex(
                "p1",
                "Paper",
                (
                    AttributePredicate("venue", "=", "ICDM"),
                    AttributePredicate("year", "=", 2006),
                ),
            ),
            QueryVertex(
                "p2",
                "Paper",
                (
                    AttributePredicate("venue", "=", "ICDM"),
                    AttributePredicate("year", "=", 2007),
                ),
            ),
            QueryVertex("p3", "Paper", (AttributePredicate("year", ">=", 2008),)),
        ),
        edges=(
            QueryEdge(0, "a", "p1", "authored"),
            QueryEdge(1, "a", "p2", "authored"),
            QueryEdge(2, "a", "p3", "authored"),
        ),
        constraints=TemporalConstraints(
            arrival_order=frozenset({(0, 1), (0, 2), (1, 2)})
        ),
    )


def pubs_updates() -> list[StreamUpdate]:
    def authored(ts: int, edge_id: str, paper: str, attrs) -> StreamUpdate:
        return StreamUpdate(
            op=INSERT,
            edge_id=edge_id,
            src="alice",
            src_label="Author",
            dst=paper,
            dst_label="Paper",
            edge_type="authored",
            timestamp=ts,
            dst_attrs=attrs,
        )

    return [
        authored(1, "w1", "paperA", {"venue": "ICDM", "year": 2006}),
        authored(3, "w2", "paperB", {"venue": "ICDM", "year": 2007}),
        authored(6, "w3", "paperC", {"year": 2008}),
    ]


PUBS_STREAM_TEXT = (
    "1\t+\tw1\talice\tAuthor\tauthored\tpaperA\tPaper\tdst.venue=ICDM;dst.year=2006\n"
    "3\t+\tw2\talice\tAuthor\tauthored\tpaperB\tPaper\tdst.venue=ICDM;dst.year=2007\n"
    "6\t+\tw3\talice\tAuthor\tauthored\tpaperC\tPaper\tdst.year=2008\n"
)
