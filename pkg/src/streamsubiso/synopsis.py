"""Bounded-memory stream statistics for adaptive constraint estimation.

Tracks, per edge type, an arrival count and an exponentially weighted
moving average of inter-arrival time gaps; and per registered (query, eid)
predicate, a hit count plus a reservoir sample of the time gaps between
consecutive hits. Gap quantiles over the pooled reservoirs back the
cluster-gap recommendation.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .errors import InsufficientData
from .graph import INSERT, StreamUpdate

DEFAULT_ALPHA = 0.125
DEFAULT_RESERVOIR = 1024


@dataclass
class TypeStats:
    count: int = 0
    last_ts: int | None = None
    ewma_gap: float | None = None


@dataclass
class PredicateStats:
    hits: int = 0
    last_hit_ts: int | None = None
    samples: list[int] = field(default_factory=list)
    gaps_seen: int = 0


class StreamSynopsis:
    def __init__(
        self,
        alpha: float = DEFAULT_ALPHA,
        reservoir_capacity: int = DEFAULT_RESERVOIR,
        seed: int = 0,
    ):
        if not 0 < alpha <= 1:
            raise ValueError(f"alpha must be in (0, 1], got {alpha}")
        if reservoir_capacity < 1:
            raise ValueError("reservoir capacity must be positive")
        self.alpha = alpha
        self.reservoir_capacity = reservoir_capacity
        self._rng = random.Random(seed)
        self._types: dict[str, TypeStats] = {}
        self._predicates: dict[tuple[int, int], PredicateStats] = {}
        self.watermark: int | None = None
        self.total_updates = 0

    def register_predicate(self, qid: int, eid: int) -> None:
        self._predicates.setdefault((qid, eid), PredicateStats())

    def observe(self, u: StreamUpdate) -> None:
        """Record one stream update. Inserts feed the per-type gap EWMA;
        deletes only advance the global counters."""
        self.total_updates += 1
        if self.watermark is None or u.timestamp > self.watermark:
            self.watermark = u.timestamp
        if u.op != INSERT:
            return
        stats = self._types.get(u.edge_type)
        if stats is None:
            stats = TypeStats()
            self._types[u.edge_type] = stats
        stats.count += 1
        if stats.last_ts is not None:
            gap = u.timestamp - stats.last_ts
            if stats.ewma_gap is None:
                stats.ewma_gap = float(gap)
            else:
                stats.ewma_gap = self.alpha * gap + (1 - self.alpha) * stats.ewma_gap
        stats.last_ts = u.timestamp

    def observe_hits(self, u: StreamUpdate, hits) -> None:
        """Record predicate hits for one update: ``hits`` is the dispatch
        fan-out, an iterable of (query id, eid)."""
        for key in hits:
            stats = self._predicates.get(key)
            if stats is None:
                stats = PredicateStats()
                self._predicates[key] = stats
            stats.hits += 1
            if stats.last_hit_ts is not None:
                self._sample(stats, u.timestamp - stats.last_hit_ts)
            stats.last_hit_ts = u.timestamp

    def _sample(self, stats: PredicateStats, gap: int) -> None:
        stats.gaps_seen += 1
        if len(stats.samples) < self.reservoir_capacity:
            stats.samples.append(gap)
            return
        slot = self._rng.randrange(stats.gaps_seen)
        if slot < self.reservoir_capacity:
            stats.samples[slot] = gap

    def type_stats(self, edge_type: str) -> TypeStats:
        return self._types.get(edge_type, TypeStats())

    def predicate_count(self, qid: int, eid: int) -> int:
        stats = self._predicates.get((qid, eid))
        return 0 if stats is None else stats.hits

    def pooled_gap_samples(self, qid: int) -> list[int]:
        pooled: list[int] = []
        for (q, _), stats in self._predicates.items():
            if q == qid:
                pooled.extend(stats.samples)
        return pooled

    def recommend_cluster_gap(self, qid: int, quantile: float) -> int:
        """Nearest-rank quantile of the pooled gap samples for one query."""
        if not 0 < quantile <= 1:
            raise ValueError(f"quantile must be in (0, 1], got {quantile}")
        samples = sorted(self.pooled_gap_samples(qid))
        if not samples:
            raise InsufficientData(
                f"no gap samples recorded for query id {qid}"
            )
        rank = math.ceil(quantile * len(samples))
        return samples[rank - 1]
