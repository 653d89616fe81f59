"""Pattern query model: typed graph patterns plus temporal constraints.

A query is a small connected directed multigraph over vertex variables.
Temporal constraints restrict when a set of stream edges counts as a match:

* ``arrival_order``: a strict partial order over query edges; a match must
  bind ordered edges to stream edges with strictly increasing timestamps.
* ``cluster_gap``: consecutive edges of a match (in timestamp order) must
  arrive within the gap, measured in time units or in stream updates.
* ``window``: the whole match must fit inside a time window, measured from
  its earliest edge to its completing edge.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .graph import Scalar

COMPARATORS = ("=", "!=", "<", "<=", ">", ">=")

GAP_TIME = "time"
GAP_UPDATES = "updates"

_MISSING = object()


@dataclass(frozen=True, slots=True)
class AttributePredicate:
    """Comparison of one attribute against a literal.

    A missing attribute fails every comparator, ``!=`` included. Ordering
    comparators apply only between numeric values; comparing a string
    attribute with ``<`` simply fails rather than erroring.
    """

    attr: str
    cmp: str
    value: Scalar

    def matches(self, attrs: Mapping[str, Scalar]) -> bool:
        actual = attrs.get(self.attr, _MISSING)
        if actual is _MISSING:
            return False
        if self.cmp == "=":
            return _eq(actual, self.value)
        if self.cmp == "!=":
            return not _eq(actual, self.value)
        if not _numeric(actual) or not _numeric(self.value):
            return False
        if self.cmp == "<":
            return actual < self.value
        if self.cmp == "<=":
            return actual <= self.value
        if self.cmp == ">":
            return actual > self.value
        return actual >= self.value


def _numeric(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _eq(a, b) -> bool:
    # Equality is type-sensitive across str/number: "2006" != 2006.
    if isinstance(a, str) != isinstance(b, str):
        return False
    return a == b


@dataclass(frozen=True, slots=True)
class QueryVertex:
    var: str
    label: str
    predicates: tuple[AttributePredicate, ...] = ()


@dataclass(frozen=True, slots=True)
class QueryEdge:
    """Directed pattern edge. ``eid`` is the edge's index in the query."""

    eid: int
    src_var: str
    dst_var: str
    edge_type: str
    predicates: tuple[AttributePredicate, ...] = ()


@dataclass(frozen=True, slots=True)
class TemporalConstraints:
    arrival_order: frozenset[tuple[int, int]] = frozenset()
    cluster_gap: int | None = None
    cluster_gap_unit: str = GAP_TIME
    window: int | None = None


@dataclass(frozen=True)
class QueryGraph:
    name: str
    vertices: tuple[QueryVertex, ...]
    edges: tuple[QueryEdge, ...]
    constraints: TemporalConstraints = field(default_factory=TemporalConstraints)

    def vertex_by_var(self) -> dict[str, QueryVertex]:
        return {v.var: v for v in self.vertices}


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code: str, message: str) -> None:
        self.violations.append(Violation(code, message))


def validate(q: QueryGraph) -> ValidationReport:
    """Check a query's structural and temporal well-formedness."""
    report = ValidationReport()
    if not q.name:
        report.add("empty_name", "query name must be non-empty")
    if not q.edges:
        report.add("no_edges", "query must declare at least one edge")

    seen_vars: set[str] = set()
    for v in q.vertices:
        if not v.var:
            report.add("empty_var", "vertex variable name must be non-empty")
        if v.var in seen_vars:
            report.add("duplicate_var", f"vertex variable {v.var!r} declared twice")
        seen_vars.add(v.var)
        if not v.label:
            report.add("empty_label", f"vertex {v.var!r} has an empty label")
        _check_predicates(report, f"vertex {v.var!r}", v.predicates)

    used_vars: set[str] = set()
    for idx, e in enumerate(q.edges):
        if e.eid != idx:
            report.add("bad_eid", f"edge at position {idx} carries eid {e.eid}")
        if not e.edge_type:
            report.add("empty_type", f"edge {e.eid} has an empty type")
        for var in (e.src_var, e.dst_var):
            if var not in seen_vars:
                report.add("unknown_var", f"edge {e.eid} references unknown {var!r}")
        if e.src_var == e.dst_var:
            report.add("self_loop", f"edge {e.eid} is a self loop on {e.src_var!r}")
        used_vars.update((e.src_var, e.dst_var))
        _check_predicates(report, f"edge {e.eid}", e.predicates)

    unused = seen_vars - used_vars
    for var in sorted(unused):
        report.add("isolated_vertex", f"vertex {var!r} is not used by any edge")

    if q.edges and not unused and seen_vars and not _connected(q):
        report.add("disconnected", "query pattern is not weakly connected")

    _check_constraints(report, q)
    return report


def _check_predicates(
    report: ValidationReport, where: str, preds: Iterable[AttributePredicate]
) -> None:
    for p in preds:
        if p.cmp not in COMPARATORS:
            report.add("bad_comparator", f"{where}: unknown comparator {p.cmp!r}")
        elif p.cmp not in ("=", "!=") and not _numeric(p.value):
            report.add(
                "non_numeric_bound",
                f"{where}: comparator {p.cmp!r} needs a numeric literal",
            )
        if not p.attr:
            report.add("empty_attr", f"{where}: empty attribute name")


def _connected(q: QueryGraph) -> bool:
    adj: dict[str, set[str]] = {v.var: set() for v in q.vertices}
    for e in q.edges:
        if e.src_var in adj and e.dst_var in adj:
            adj[e.src_var].add(e.dst_var)
            adj[e.dst_var].add(e.src_var)
    start = q.vertices[0].var
    seen = {start}
    stack = [start]
    while stack:
        for nxt in adj[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen) == len(adj)


def _check_constraints(report: ValidationReport, q: QueryGraph) -> None:
    c = q.constraints
    n = len(q.edges)
    for a, b in sorted(c.arrival_order):
        if not (0 <= a < n and 0 <= b < n):
            report.add("order_range", f"order pair ({a}, {b}) is out of range")
        elif a == b:
            report.add("order_cycle", f"edge {a} ordered before itself")
    if not _acyclic(c.arrival_order, n):
        report.add("order_cycle", "arrival order contains a cycle")
    if c.cluster_gap is not None and c.cluster_gap <= 0:
        report.add("bad_gap", f"cluster gap must be positive, got {c.cluster_gap}")
    if c.cluster_gap_unit not in (GAP_TIME, GAP_UPDATES):
        report.add("bad_gap_unit", f"unknown gap unit {c.cluster_gap_unit!r}")
    if c.window is not None and c.window <= 0:
        report.add("bad_window", f"window must be positive, got {c.window}")
    if (
        c.cluster_gap is not None
        and c.window is not None
        and c.cluster_gap_unit == GAP_TIME
        and c.cluster_gap > c.window
    ):
        report.add(
            "gap_exceeds_window",
            f"cluster gap {c.cluster_gap} exceeds window {c.window}",
        )


def _acyclic(pairs: frozenset[tuple[int, int]], n: int) -> bool:
    succ: dict[int, list[int]] = {i: [] for i in range(n)}
    indeg = {i: 0 for i in range(n)}
    for a, b in pairs:
        if 0 <= a < n and 0 <= b < n and a != b:
            succ[a].append(b)
            indeg[b] += 1
    ready = [i for i in range(n) if indeg[i] == 0]
    seen = 0
    while ready:
        node = ready.pop()
        seen += 1
        for nxt in succ[node]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                ready.append(nxt)
    return seen == n


def order_closure(pairs: Iterable[tuple[int, int]], n: int) -> frozenset[tuple[int, int]]:
    """Transitive closure of the arrival order over edge ids 0..n-1."""
    succ = [set() for _ in range(n)]
    for a, b in pairs:
        succ[a].add(b)
    changed = True
    while changed:
        changed = False
        for a in range(n):
            extra = set()
            for b in succ[a]:
                extra |= succ[b]
            if not extra <= succ[a]:
                succ[a] |= extra
                changed = True
    return frozenset((a, b) for a in range(n) for b in succ[a])


def spawn_eligible_edges(q: QueryGraph) -> frozenset[int]:
    """Edge ids allowed to start a partial match under ordered pruning.

    These are the minimal elements of the arrival order: edges with no
    predecessor. With no order constraints every edge qualifies, and the
    result is never empty for a valid query (the order is acyclic).
    """
    n = len(q.edges)
    closure = order_closure(q.constraints.arrival_order, n)
    blocked = {b for _, b in closure}
    return frozenset(i for i in range(n) if i not in blocked)
