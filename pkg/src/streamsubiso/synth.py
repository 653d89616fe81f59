"""Seeded synthetic workloads for benchmarks and the test suite.

Every generator takes an explicit ``random.Random`` so runs are
reproducible; the CLI seeds one from the ``STREAMSUBISO_SEED``
environment variable.
"""

from __future__ import annotations

import os
import random
from collections.abc import Iterator
from dataclasses import dataclass

from .graph import DELETE, INSERT, Scalar, StreamUpdate
from .query import (
    GAP_TIME,
    GAP_UPDATES,
    AttributePredicate,
    QueryEdge,
    QueryGraph,
    QueryVertex,
    TemporalConstraints,
    validate,
)

SEED_ENV = "STREAMSUBISO_SEED"

LABELS = ("A", "B", "C", "D")
EDGE_TYPES = ("t0", "t1", "t2")


def env_seed(default: int = 0) -> int:
    """Seed from the environment, falling back to ``default``."""
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        return default


@dataclass
class SynthCase:
    """A generated workload: pattern queries plus an update stream."""

    queries: list[QueryGraph]
    updates: list[StreamUpdate]


def _insert(
    ts: int,
    edge_id: str,
    src: str,
    src_label: str,
    dst: str,
    dst_label: str,
    edge_type: str,
    attrs: dict[str, Scalar] | None = None,
    src_attrs: dict[str, Scalar] | None = None,
    dst_attrs: dict[str, Scalar] | None = None,
) -> StreamUpdate:
    return StreamUpdate(
        op=INSERT,
        edge_id=edge_id,
        src=src,
        src_label=src_label,
        dst=dst,
        dst_label=dst_label,
        edge_type=edge_type,
        timestamp=ts,
        attrs=attrs or {},
        src_attrs=src_attrs or {},
        dst_attrs=dst_attrs or {},
    )


def _delete_of(ts: int, ins: StreamUpdate) -> StreamUpdate:
    return StreamUpdate(
        op=DELETE,
        edge_id=ins.edge_id,
        src=ins.src,
        src_label=ins.src_label,
        dst=ins.dst,
        dst_label=ins.dst_label,
        edge_type=ins.edge_type,
        timestamp=ts,
    )


def _random_constraints(rng: random.Random, n_edges: int) -> TemporalConstraints:
    pairs: set[tuple[int, int]] = set()
    if n_edges > 1 and rng.random() < 0.5:
        perm = list(range(n_edges))
        rng.shuffle(perm)
        for i in range(n_edges):
            for j in range(i + 1, n_edges):
                if rng.random() < 0.35:
                    pairs.add((perm[i], perm[j]))
    window = rng.randint(2, 12) if rng.random() < 0.5 else None
    gap = None
    unit = GAP_TIME
    if rng.random() < 0.5:
        gap = rng.randint(1, 6)
        if rng.random() < 0.3:
            unit = GAP_UPDATES
        elif window is not None and gap > window:
            gap = window
    return TemporalConstraints(
        arrival_order=frozenset(pairs),
        cluster_gap=gap,
        cluster_gap_unit=unit,
        window=window,
    )


def _sample_query(
    rng: random.Random,
    name: str,
    inserts: list[StreamUpdate],
    max_edges: int = 5,
) -> QueryGraph | None:
    """Sample a connected pattern from the inserted edges so the stream
    is likely (not guaranteed) to contain matches."""
    usable = [u for u in inserts if u.src != u.dst]
    if not usable:
        return None
    first = rng.choice(usable)
    vertex_ids: dict[str, str] = {}

    def var_for(vid: str, label: str) -> str:
        if vid not in vertex_ids:
            vertex_ids[vid] = f"{chr(ord('a') + len(vertex_ids))}"
        return vertex_ids[vid]

    labels: dict[str, str] = {}
    chosen: list[StreamUpdate] = [first]
    touched = {first.src, first.dst}
    target = rng.randint(1, max_edges)
    while len(chosen) < target:
        frontier = [
            u
            for u in usable
            if u not in chosen and (u.src in touched or u.dst in touched)
        ]
        if not frontier:
            break
        nxt = rng.choice(frontier)
        chosen.append(nxt)
        touched.update((nxt.src, nxt.dst))

    edges: list[QueryEdge] = []
    for eid, u in enumerate(chosen):
        sv = var_for(u.src, u.src_label)
        dv = var_for(u.dst, u.dst_label)
        labels[sv] = u.src_label
        labels[dv] = u.dst_label
        preds: list[AttributePredicate] = []
        if "w" in u.attrs and rng.random() < 0.4:
            w = u.attrs["w"]
            preds.append(
                rng.choice(
                    [
                        AttributePredicate("w", "=", w),
                        AttributePredicate("w", "<=", int(w) + rng.randint(0, 2)),
                        AttributePredicate("w", ">=", int(w) - rng.randint(0, 2)),
                    ]
                )
            )
        edges.append(QueryEdge(eid, sv, dv, u.edge_type, tuple(preds)))
    vertices = tuple(
        QueryVertex(var, labels[var]) for var in sorted(vertex_ids.values())
    )
    q = QueryGraph(
        name=name,
        vertices=vertices,
        edges=tuple(edges),
        constraints=_random_constraints(rng, len(edges)),
    )
    return q if validate(q).ok else None


def random_case(
    rng: random.Random,
    n_queries: int = 1,
    max_vertices: int = 12,
    max_edges: int = 40,
    delete_prob: float = 0.08,
    reinsert_prob: float = 0.04,
) -> SynthCase:
    """A small random stream plus queries sampled from its own shape."""
    nv = rng.randint(4, max_vertices)
    vlabels = {f"v{i}": rng.choice(LABELS) for i in range(nv)}
    vattrs = {
        vid: {"grp": rng.randint(0, 3)} if rng.random() < 0.5 else {}
        for vid in vlabels
    }
    updates: list[StreamUpdate] = []
    inserts: list[StreamUpdate] = []
    live: dict[str, StreamUpdate] = {}
    dead: list[StreamUpdate] = []
    seen: set[str] = set()
    ts = 0
    ne = rng.randint(6, max_edges)
    next_edge = 0
    while next_edge < ne:
        ts += rng.choice((0, 0, 1, 1, 2))
        roll = rng.random()
        if roll < delete_prob and live:
            victim = live.pop(rng.choice(sorted(live)))
            dead.append(victim)
            updates.append(_delete_of(ts, victim))
            continue
        if roll < delete_prob + reinsert_prob and dead:
            back = dead.pop(rng.randrange(len(dead)))
            redo = _insert(
                ts,
                back.edge_id,
                back.src,
                back.src_label,
                back.dst,
                back.dst_label,
                back.edge_type,
                dict(back.attrs),
            )
            live[redo.edge_id] = redo
            updates.append(redo)
            inserts.append(redo)
            continue
        src, dst = rng.sample(sorted(vlabels), 2)
        edge_id = f"x{next_edge}"
        next_edge += 1
        attrs: dict[str, Scalar] = {}
        if rng.random() < 0.5:
            attrs["w"] = rng.randint(0, 9)
        u = _insert(
            ts,
            edge_id,
            src,
            vlabels[src],
            dst,
            vlabels[dst],
            rng.choice(EDGE_TYPES),
            attrs,
            src_attrs=dict(vattrs[src]) if src not in seen else {},
            dst_attrs=dict(vattrs[dst]) if dst not in seen else {},
        )
        seen.update((src, dst))
        live[edge_id] = u
        updates.append(u)
        inserts.append(u)

    queries: list[QueryGraph] = []
    attempts = 0
    while len(queries) < n_queries and attempts < 50:
        attempts += 1
        q = _sample_query(rng, f"q{len(queries)}", inserts)
        if q is not None:
            queries.append(q)
    return SynthCase(queries=queries, updates=updates)


def star_query(name: str = "star", leaves: int = 3) -> QueryGraph:
    """A star whose edges all share one dispatch signature, so every
    data edge from the hub extends every partial."""
    vertices = [QueryVertex("a", "Hub")]
    edges = []
    for i in range(leaves):
        var = chr(ord("b") + i)
        vertices.append(QueryVertex(var, "Leaf"))
        edges.append(QueryEdge(i, "a", var, "spoke"))
    return QueryGraph(
        name=name,
        vertices=tuple(vertices),
        edges=tuple(edges),
        constraints=TemporalConstraints(),
    )


def star_stream(n: int) -> list[StreamUpdate]:
    """n spokes out of one hub, one per timestamp starting at 1."""
    return [
        _insert(i + 1, f"s{i}", "hub", "Hub", f"leaf{i}", "Leaf", "spoke")
        for i in range(n)
    ]


def overlap_case(
    rng: random.Random, n_queries: int = 10, n_updates: int = 10_000
) -> SynthCase:
    """Queries that share edge signatures over a narrow type universe,
    paired with a long stream in the same universe."""
    queries: list[QueryGraph] = []
    for i in range(n_queries):
        length = 2 + (i % 3)
        vertices = [
            QueryVertex(chr(ord("a") + j), LABELS[j % 2]) for j in range(length + 1)
        ]
        edges = []
        for j in range(length):
            preds: tuple[AttributePredicate, ...] = ()
            if j == length - 1 and i % 2:
                preds = (AttributePredicate("w", "<=", 5),)
            edges.append(
                QueryEdge(
                    j,
                    chr(ord("a") + j),
                    chr(ord("a") + j + 1),
                    EDGE_TYPES[j % 2],
                    preds,
                )
            )
        queries.append(
            QueryGraph(
                name=f"shared{i}",
                vertices=tuple(vertices),
                edges=tuple(edges),
                constraints=TemporalConstraints(
                    window=6, cluster_gap=3, cluster_gap_unit=GAP_TIME
                ),
            )
        )
    updates = []
    nv = 60
    for i in range(n_updates):
        src = rng.randrange(nv)
        dst = rng.randrange(nv)
        while dst == src:
            dst = rng.randrange(nv)
        updates.append(
            _insert(
                i // 4,
                f"x{i}",
                f"v{src}",
                LABELS[src % 2],
                f"v{dst}",
                LABELS[dst % 2],
                rng.choice(EDGE_TYPES[:2]),
                {"w": rng.randint(0, 9)},
            )
        )
    return SynthCase(queries=queries, updates=updates)


def pair_query(name: str = "pair") -> QueryGraph:
    """Two-hop chain used by the gap-adaptation workloads."""
    return QueryGraph(
        name=name,
        vertices=(
            QueryVertex("a", "A"),
            QueryVertex("b", "B"),
            QueryVertex("c", "C"),
        ),
        edges=(
            QueryEdge(0, "a", "b", "first"),
            QueryEdge(1, "b", "c", "second"),
        ),
        constraints=TemporalConstraints(),
    )


def paired_sites(
    rng: random.Random,
    n_sites: int,
    spacing: int = 30,
    max_gap: int = 10,
    start: int = 0,
    site_prefix: str = "p",
) -> tuple[list[StreamUpdate], dict[str, int]]:
    """Vertex-disjoint two-edge sites for ``pair_query``.

    Site i gets its first edge at ``s_i`` and its second at
    ``s_i + g_i`` with ``g_i`` drawn uniformly from 1..max_gap; returns
    the stream and the planted gap of every site keyed by site id.
    """
    updates: list[StreamUpdate] = []
    gaps: dict[str, int] = {}
    ts = start
    for i in range(n_sites):
        site = f"{site_prefix}{i}"
        g = rng.randint(1, max_gap)
        gaps[site] = g
        updates.append(
            _insert(ts, f"{site}f", f"{site}a", "A", f"{site}b", "B", "first")
        )
        updates.append(
            _insert(ts + g, f"{site}s", f"{site}b", "B", f"{site}c", "C", "second")
        )
        ts += spacing
    updates.sort(key=lambda u: u.timestamp)
    return updates, gaps


def throughput_updates(rng: random.Random, n_updates: int) -> Iterator[StreamUpdate]:
    """The stream half of ``throughput_case``, yielded lazily so very long
    runs never hold the whole list in memory."""
    nv = 5000
    for i in range(n_updates):
        src = rng.randrange(nv)
        dst = rng.randrange(nv)
        while dst == src:
            dst = rng.randrange(nv)
        yield _insert(
            i // 100,
            f"x{i}",
            f"v{src}",
            LABELS[src % len(LABELS)],
            f"v{dst}",
            LABELS[dst % len(LABELS)],
            EDGE_TYPES[rng.randrange(3)],
        )


def throughput_case(
    rng: random.Random, n_updates: int, n_queries: int = 10
) -> SynthCase:
    """A long stream against several three-edge chains, for timing runs."""
    queries: list[QueryGraph] = []
    for i in range(n_queries):
        t = (EDGE_TYPES * 2)[i % 3 :][:3]
        vertices = tuple(
            QueryVertex(chr(ord("a") + j), LABELS[(i + j) % len(LABELS)])
            for j in range(4)
        )
        edges = tuple(
            QueryEdge(j, chr(ord("a") + j), chr(ord("a") + j + 1), t[j])
            for j in range(3)
        )
        queries.append(
            QueryGraph(
                name=f"tp{i}",
                vertices=vertices,
                edges=edges,
                constraints=TemporalConstraints(
                    window=4, cluster_gap=2, cluster_gap_unit=GAP_TIME
                ),
            )
        )
    return SynthCase(
        queries=queries, updates=list(throughput_updates(rng, n_updates))
    )
