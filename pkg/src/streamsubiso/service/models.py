"""Pydantic request/response bodies for the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class EngineConfigIn(BaseModel):
    ordered_pruning: bool = True
    dedup: bool = True
    reorder_slack: int = Field(default=0, ge=0)
    track_history: bool = True
    synopsis_seed: int = 0


class EngineCreated(BaseModel):
    engine_id: str


class QueryInfo(BaseModel):
    qid: int
    name: str
    edges: int
    window: int | None
    cluster_gap: int | None
    cluster_gap_unit: str


class RegisterResponse(BaseModel):
    queries: list[QueryInfo]


class QueryStatsOut(BaseModel):
    live: int
    peak: int
    emitted: int
    expired: int


class StatsOut(BaseModel):
    updates: int
    live_partials: int
    peak_partials: int
    emitted: int
    expired: int
    predicate_evals: int
    per_query: dict[str, QueryStatsOut]


class EpochOut(BaseModel):
    epoch: int
    row: str
    stats: StatsOut


class GateModeIn(BaseModel):
    mode: Literal["off", "auto"]


class GateOut(BaseModel):
    applied: dict[str, list[int]]


class AdaptIn(BaseModel):
    mode: Literal["advisory", "auto"]
    quantile: float = Field(default=0.95, gt=0.0, le=1.0)


class AdaptNote(BaseModel):
    query: str
    old_gap: int | None
    old_unit: str | None
    recommended: int | None
    applied: bool
    error: str | None = None


class AdaptOut(BaseModel):
    notes: list[AdaptNote]


class OracleQueryCheck(BaseModel):
    emitted: int
    oracle: int
    missing: int
    extra: int
    missing_examples: list[str] = []
    extra_examples: list[str] = []


class OracleCheckOut(BaseModel):
    ok: bool
    per_query: dict[str, OracleQueryCheck]


class BackfillIn(BaseModel):
    queries: str
    stream: str
    as_of: int = Field(ge=0)


class HealthOut(BaseModel):
    status: str
    version: str
