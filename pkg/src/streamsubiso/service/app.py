"""FastAPI service wrapping the matching engine.

Engines are created per client and addressed by id; queries are posted
as DSL text and stream updates as the tab-separated wire format, so the
CLI can stay a thin client of this API. Parse problems map to 400 with
line/column detail, unknown ids to 404, and stream violations (bad
ordering, duplicate or unknown edge ids) to 409 with the line number.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException, Query, Request, Response

from .. import __version__
from ..engine import ADVISORY, AUTO, Engine, EngineConfig
from ..errors import (
    DuplicateQueryName,
    GraphStoreError,
    InsufficientData,
    InvalidQuery,
    OutOfOrderTimestamp,
    QueryError,
    WireFormatError,
)
from ..graph import INSERT, GraphStore
from ..dsl import parse_many
from ..oracle import Embedding, find_all_matches_temporal
from ..query import validate
from ..wire import (
    format_result,
    format_result_fields,
    format_stats_row,
    iter_stream_lines,
)
from .models import (
    AdaptIn,
    AdaptNote,
    AdaptOut,
    BackfillIn,
    EngineConfigIn,
    EngineCreated,
    EpochOut,
    GateModeIn,
    GateOut,
    HealthOut,
    OracleCheckOut,
    OracleQueryCheck,
    QueryInfo,
    QueryStatsOut,
    RegisterResponse,
    StatsOut,
)


@dataclass
class _Box:
    engine: Engine
    lock: threading.Lock = field(default_factory=threading.Lock)
    epoch: int = 0


def _embedding_key(emb: Embedding) -> tuple:
    return tuple((eid, e[0], e[1]) for eid, e in sorted(emb.emap.items()))


def _key_text(key: tuple) -> str:
    return " ".join(f"e{eid}={edge_id}@{ts}" for eid, edge_id, ts in key)


def _parse_error(exc: QueryError | InvalidQuery) -> HTTPException:
    detail: dict = {"message": getattr(exc, "message", None) or str(exc)}
    span = getattr(exc, "span", None)
    if span is not None:
        detail["line"] = span.line + 1
        detail["column"] = span.column + 1
    return HTTPException(status_code=400, detail=detail)


def create_app() -> FastAPI:
    app = FastAPI(title="streamsubiso", version=__version__)
    engines: dict[str, _Box] = {}
    state_lock = threading.Lock()
    counter = iter(range(1, 1_000_000_000))

    def box_of(engine_id: str) -> _Box:
        box = engines.get(engine_id)
        if box is None:
            raise HTTPException(
                status_code=404, detail={"message": f"unknown engine {engine_id!r}"}
            )
        return box

    def stats_out(engine: Engine) -> StatsOut:
        st = engine.stats()
        return StatsOut(
            updates=st.updates,
            live_partials=st.live_partials,
            peak_partials=st.peak_partials,
            emitted=st.emitted,
            expired=st.expired,
            predicate_evals=st.predicate_evals,
            per_query={
                qs.name: QueryStatsOut(
                    live=qs.live, peak=qs.peak, emitted=qs.emitted, expired=qs.expired
                )
                for qs in st.per_query.values()
            },
        )

    @app.get("/healthz", response_model=HealthOut)
    def healthz() -> HealthOut:
        return HealthOut(status="ok", version=__version__)

    @app.post("/engines", response_model=EngineCreated, status_code=201)
    def create_engine(cfg: EngineConfigIn) -> EngineCreated:
        engine = Engine(
            EngineConfig(
                ordered_pruning=cfg.ordered_pruning,
                dedup=cfg.dedup,
                reorder_slack=cfg.reorder_slack,
                track_history=cfg.track_history,
                synopsis_seed=cfg.synopsis_seed,
            )
        )
        with state_lock:
            engine_id = f"eng-{next(counter)}"
            engines[engine_id] = _Box(engine=engine)
        return EngineCreated(engine_id=engine_id)

    @app.delete("/engines/{engine_id}", status_code=204)
    def drop_engine(engine_id: str) -> Response:
        box_of(engine_id)
        with state_lock:
            engines.pop(engine_id, None)
        return Response(status_code=204)

    def query_info(engine: Engine, qid: int) -> QueryInfo:
        q = engine.query_graph(qid)
        gap, unit, window = engine.effective_constraints(qid)
        return QueryInfo(
            qid=qid,
            name=q.name,
            edges=len(q.edges),
            window=window,
            cluster_gap=gap,
            cluster_gap_unit=unit,
        )

    @app.post("/engines/{engine_id}/queries", response_model=RegisterResponse)
    async def register_queries(engine_id: str, request: Request) -> RegisterResponse:
        box = box_of(engine_id)
        text = (await request.body()).decode("utf-8", errors="replace")
        try:
            parsed = parse_many(text)
        except (QueryError, InvalidQuery) as exc:
            raise _parse_error(exc) from exc
        with box.lock:
            registered: list[QueryInfo] = []
            for q in parsed:
                try:
                    qid = box.engine.register_query(q)
                except DuplicateQueryName as exc:
                    raise HTTPException(
                        status_code=409, detail={"message": str(exc)}
                    ) from exc
                except InvalidQuery as exc:
                    raise _parse_error(exc) from exc
                registered.append(query_info(box.engine, qid))
        return RegisterResponse(queries=registered)

    @app.get("/engines/{engine_id}/queries", response_model=RegisterResponse)
    def list_queries(engine_id: str) -> RegisterResponse:
        box = box_of(engine_id)
        with box.lock:
            infos = [query_info(box.engine, qid) for qid in box.engine.query_ids()]
        return RegisterResponse(queries=infos)

    @app.post("/engines/{engine_id}/ingest")
    async def ingest(
        engine_id: str,
        request: Request,
        first_line: int = Query(default=1, ge=1),
        final: bool = Query(default=False),
    ) -> Response:
        box = box_of(engine_id)
        text = (await request.body()).decode("utf-8", errors="replace")
        lines: list[str] = []
        with box.lock:
            try:
                for lineno, update in iter_stream_lines(text, first_line):
                    try:
                        for m in box.engine.process_update(update):
                            lines.append(format_result(m))
                    except (OutOfOrderTimestamp, GraphStoreError) as exc:
                        raise HTTPException(
                            status_code=409,
                            detail={"message": str(exc), "line": lineno},
                        ) from exc
            except WireFormatError as exc:
                raise HTTPException(
                    status_code=400,
                    detail={
                        "message": exc.message,
                        "line": exc.line,
                        "column": exc.column + 1,
                    },
                ) from exc
            if final:
                for m in box.engine.flush():
                    lines.append(format_result(m))
        body = "\n".join(lines)
        if body:
            body += "\n"
        return Response(content=body, media_type="text/plain; charset=utf-8")

    @app.post("/engines/{engine_id}/epoch", response_model=EpochOut)
    def close_epoch(engine_id: str) -> EpochOut:
        box = box_of(engine_id)
        with box.lock:
            engine = box.engine
            engine.expire(engine.processed_ts)
            box.epoch += 1
            st = engine.stats()
            row = format_stats_row(
                box.epoch,
                st.updates,
                st.live_partials,
                st.peak_partials,
                st.emitted,
                st.expired,
                st.predicate_evals,
            )
            return EpochOut(epoch=box.epoch, row=row, stats=stats_out(engine))

    @app.get("/engines/{engine_id}/stats", response_model=StatsOut)
    def get_stats(engine_id: str) -> StatsOut:
        box = box_of(engine_id)
        with box.lock:
            return stats_out(box.engine)

    @app.post("/engines/{engine_id}/gates", response_model=GateOut)
    def set_gates(engine_id: str, body: GateModeIn) -> GateOut:
        box = box_of(engine_id)
        with box.lock:
            engine = box.engine
            if body.mode == "off":
                for qid in engine.query_ids():
                    engine.set_spawn_gate(qid, None)
                return GateOut(applied={})
            applied = engine.auto_apply_gates()
            return GateOut(
                applied={
                    engine.query_name(qid): sorted(eids)
                    for qid, eids in applied.items()
                }
            )

    @app.post("/engines/{engine_id}/adapt", response_model=AdaptOut)
    def adapt(engine_id: str, body: AdaptIn) -> AdaptOut:
        box = box_of(engine_id)
        mode = ADVISORY if body.mode == "advisory" else AUTO
        notes: list[AdaptNote] = []
        with box.lock:
            engine = box.engine
            for qid in engine.query_ids():
                name = engine.query_name(qid)
                gap, unit, _window = engine.effective_constraints(qid)
                try:
                    old, recommended = engine.apply_recommendation(
                        qid, mode, body.quantile
                    )
                except InsufficientData as exc:
                    notes.append(
                        AdaptNote(
                            query=name,
                            old_gap=gap,
                            old_unit=unit,
                            recommended=None,
                            applied=False,
                            error=str(exc),
                        )
                    )
                    continue
                notes.append(
                    AdaptNote(
                        query=name,
                        old_gap=old,
                        old_unit=unit,
                        recommended=recommended,
                        applied=mode == AUTO,
                    )
                )
        return AdaptOut(notes=notes)

    @app.post("/engines/{engine_id}/oracle-check", response_model=OracleCheckOut)
    def oracle_check(engine_id: str) -> OracleCheckOut:
        box = box_of(engine_id)
        with box.lock:
            engine = box.engine
            if not engine.config.track_history:
                raise HTTPException(
                    status_code=400,
                    detail={"message": "oracle check requires history tracking"},
                )
            history = engine.store.history
            seq_by_edge: dict[str, int] = {}
            for seq, update in enumerate(history, start=1):
                if update.op == INSERT:
                    seq_by_edge[update.edge_id] = seq
            snapshot = engine.store.current()
            check_order = engine.config.ordered_pruning
            per_query: dict[str, OracleQueryCheck] = {}
            ok = True
            for qid in engine.query_ids():
                q = engine.query_graph(qid)
                expected = {
                    _embedding_key(emb)
                    for emb in find_all_matches_temporal(
                        snapshot, q, seq_by_edge=seq_by_edge, check_order=check_order
                    )
                }
                emitted = engine.emitted_match_keys(qid)
                missing = sorted(expected - emitted)
                extra = sorted(emitted - expected)
                if missing or extra:
                    ok = False
                per_query[q.name] = OracleQueryCheck(
                    emitted=len(emitted),
                    oracle=len(expected),
                    missing=len(missing),
                    extra=len(extra),
                    missing_examples=[_key_text(k) for k in missing[:5]],
                    extra_examples=[_key_text(k) for k in extra[:5]],
                )
        return OracleCheckOut(ok=ok, per_query=per_query)

    @app.post("/backfill")
    def backfill(body: BackfillIn) -> Response:
        try:
            queries = parse_many(body.queries)
        except (QueryError, InvalidQuery) as exc:
            err = _parse_error(exc)
            err.detail["source"] = "queries"
            raise err from exc
        for q in queries:
            report = validate(q)
            if not report.ok:
                raise HTTPException(
                    status_code=400,
                    detail={
                        "message": "; ".join(v.message for v in report.violations),
                        "source": "queries",
                    },
                )
        store = GraphStore(track_history=False)
        seq_by_edge: dict[str, int] = {}
        seq = 0
        try:
            for lineno, update in iter_stream_lines(body.stream):
                if update.timestamp > body.as_of:
                    continue
                seq += 1
                try:
                    store.apply_update(update)
                except GraphStoreError as exc:
                    raise HTTPException(
                        status_code=409,
                        detail={"message": str(exc), "line": lineno, "source": "stream"},
                    ) from exc
                if update.op == INSERT:
                    seq_by_edge[update.edge_id] = seq
        except WireFormatError as exc:
            raise HTTPException(
                status_code=400,
                detail={
                    "message": exc.message,
                    "line": exc.line,
                    "column": exc.column + 1,
                    "source": "stream",
                },
            ) from exc
        snapshot = store.current()
        lines: list[str] = []
        for q in queries:
            embs = find_all_matches_temporal(snapshot, q, seq_by_edge=seq_by_edge)
            for emb in embs:
                lines.append(
                    format_result_fields(
                        q.name, emb.completion_ts, 0, emb.vmap,
                        {eid: e for eid, e in emb.emap.items()},
                    )
                )
        body_text = "\n".join(lines)
        if body_text:
            body_text += "\n"
        return Response(content=body_text, media_type="text/plain; charset=utf-8")

    return app
