"""Command-line interface.

``run`` and ``backfill`` are thin clients of the HTTP service; by
default the service runs in process, and ``--server`` points them at a
remote instance instead. Results go to standard output, operator notes
to standard error. Exit codes: 1 parse error, 2 stream constraint
violation, 3 oracle mismatch.
"""

from __future__ import annotations

import random
import sys
from typing import NoReturn

import click

from . import __version__
from .client import ServiceClient, ServiceError
from .dsl import unparse
from .synth import (
    env_seed,
    overlap_case,
    pair_query,
    paired_sites,
    random_case,
    star_query,
    star_stream,
    throughput_case,
)
from .wire import format_stream_update, stats_header


@click.group()
@click.version_option(version=__version__, prog_name="streamsubiso")
def main() -> None:
    """Continuous subgraph matching over streaming graph updates."""


def _read_text(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _fail_parse(path: str, err: ServiceError) -> NoReturn:
    loc = path
    if err.line is not None:
        loc = f"{loc}:{err.line}"
        if err.column is not None:
            loc = f"{loc}:{err.column}"
    click.echo(f"{loc}: {err.detail.get('message', 'parse error')}", err=True)
    raise SystemExit(1)


def _fail_stream(path: str, err: ServiceError) -> NoReturn:
    loc = path if err.line is None else f"{path}:{err.line}"
    click.echo(f"{loc}: {err.detail.get('message', 'stream violation')}", err=True)
    raise SystemExit(2)


def _is_record(line: str) -> bool:
    stripped = line.strip()
    return bool(stripped) and not stripped.startswith("#")


def _batches(
    lines: list[str], batch_size: int | None, epoch_t: int | None
) -> list[tuple[int, list[str]]]:
    """Group raw stream lines into batches, remembering each batch's
    1-based first line number."""
    if not lines:
        return []
    if batch_size is None and epoch_t is None:
        return [(1, lines)]
    out: list[tuple[int, list[str]]] = []
    current: list[str] = []
    first = 1
    count = 0
    bucket: int | None = None
    for lineno, line in enumerate(lines, start=1):
        if _is_record(line):
            if batch_size is not None and count == batch_size:
                out.append((first, current))
                current, first, count = [], lineno, 0
            if epoch_t is not None:
                try:
                    ts = int(line.split("\t", 1)[0])
                    this_bucket = ts // epoch_t
                except ValueError:
                    this_bucket = bucket
                if bucket is not None and this_bucket != bucket and current:
                    out.append((first, current))
                    current, first, count = [], lineno, 0
                bucket = this_bucket
            count += 1
        if not current:
            first = lineno
        current.append(line)
    if current:
        out.append((first, current))
    return out


@main.command()
@click.option("--queries", "queries_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--stream", "stream_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--batch-size", type=click.IntRange(min=1), default=None)
@click.option("--epoch", "epoch_t", type=click.IntRange(min=1), default=None)
@click.option("--ordered-pruning", type=click.Choice(["on", "off"]), default="on")
@click.option("--gates", type=click.Choice(["off", "auto"]), default="off")
@click.option("--adapt", "adapt_mode",
              type=click.Choice(["off", "advisory", "auto"]), default="off")
@click.option("--adapt-quantile", type=click.FloatRange(min=0, max=1, min_open=True),
              default=0.95, show_default=True)
@click.option("--dedup", type=click.Choice(["on", "off"]), default="on")
@click.option("--reorder-slack", type=click.IntRange(min=0), default=0)
@click.option("--oracle-check", is_flag=True)
@click.option("--stats-out", type=click.Path(dir_okay=False), default=None)
@click.option("--server", default=None, help="Base URL of a running service.")
def run(
    queries_path: str,
    stream_path: str,
    batch_size: int | None,
    epoch_t: int | None,
    ordered_pruning: str,
    gates: str,
    adapt_mode: str,
    adapt_quantile: float,
    dedup: str,
    reorder_slack: int,
    oracle_check: bool,
    stats_out: str | None,
    server: str | None,
) -> None:
    """Replay a stream file against registered queries."""
    if batch_size is not None and epoch_t is not None:
        raise click.UsageError("--batch-size and --epoch are mutually exclusive")
    queries_text = _read_text(queries_path)
    stream_lines = _read_text(stream_path).splitlines()

    with ServiceClient(server) as client:
        engine_id = client.create_engine(
            ordered_pruning=ordered_pruning == "on",
            dedup=dedup == "on",
            reorder_slack=reorder_slack,
        )
        try:
            client.register_queries(engine_id, queries_text)
        except ServiceError as err:
            if err.status_code in (400, 409):
                _fail_parse(queries_path, err)
            raise
        if gates == "auto":
            applied = client.set_gates(engine_id, "auto")["applied"]
            for name in sorted(applied):
                click.echo(f"gate {name}: edges {applied[name]}", err=True)

        rows: list[str] = []

        def boundary() -> None:
            rows.append(client.close_epoch(engine_id)["row"])
            if adapt_mode == "off":
                return
            for note in client.adapt(engine_id, adapt_mode, adapt_quantile)["notes"]:
                if note.get("error"):
                    click.echo(f"adapt {note['query']}: {note['error']}", err=True)
                    continue
                action = "applied" if note["applied"] else "advisory"
                click.echo(
                    f"adapt {note['query']}: cluster_gap {note['old_gap']}"
                    f" -> {note['recommended']} ({action})",
                    err=True,
                )

        batches = _batches(stream_lines, batch_size, epoch_t)
        for index, (first_line, chunk) in enumerate(batches):
            try:
                emitted = client.ingest(
                    engine_id,
                    "\n".join(chunk),
                    first_line=first_line,
                    final=index == len(batches) - 1,
                )
            except ServiceError as err:
                if err.status_code == 400:
                    _fail_parse(stream_path, err)
                if err.status_code == 409:
                    _fail_stream(stream_path, err)
                raise
            if emitted:
                sys.stdout.write(emitted)
            boundary()
        if not batches:
            boundary()

        if stats_out is not None:
            with open(stats_out, "w", encoding="utf-8") as fh:
                fh.write(stats_header() + "\n")
                for row in rows:
                    fh.write(row + "\n")

        if oracle_check:
            report = client.oracle_check(engine_id)
            if not report["ok"]:
                for name in sorted(report["per_query"]):
                    check = report["per_query"][name]
                    if check["missing"] or check["extra"]:
                        click.echo(
                            f"oracle mismatch {name}:"
                            f" missing={check['missing']} extra={check['extra']}",
                            err=True,
                        )
                        for example in check["missing_examples"]:
                            click.echo(f"  missing {example}", err=True)
                        for example in check["extra_examples"]:
                            click.echo(f"  extra {example}", err=True)
                raise SystemExit(3)


@main.command()
@click.option("--queries", "queries_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--stream", "stream_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--as-of", required=True, type=click.IntRange(min=0))
@click.option("--server", default=None, help="Base URL of a running service.")
def backfill(
    queries_path: str, stream_path: str, as_of: int, server: str | None
) -> None:
    """Print the matches present in the graph as of a timestamp."""
    with ServiceClient(server) as client:
        try:
            out = client.backfill(
                _read_text(queries_path), _read_text(stream_path), as_of
            )
        except ServiceError as err:
            path = stream_path if err.source == "stream" else queries_path
            if err.status_code == 400:
                _fail_parse(path, err)
            if err.status_code == 409:
                _fail_stream(path, err)
            raise
    if out:
        sys.stdout.write(out)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


@main.command()
@click.option("--kind",
              type=click.Choice(["random", "star", "pairs", "overlap", "throughput"]),
              default="random", show_default=True)
@click.option("--seed", type=int, default=None,
              help="Defaults to $STREAMSUBISO_SEED, else 0.")
@click.option("--n", "size", type=click.IntRange(min=1), default=None,
              help="Size knob; meaning depends on --kind.")
@click.option("--queries-out", required=True, type=click.Path(dir_okay=False))
@click.option("--stream-out", required=True, type=click.Path(dir_okay=False))
def synth(
    kind: str,
    seed: int | None,
    size: int | None,
    queries_out: str,
    stream_out: str,
) -> None:
    """Generate a reproducible synthetic workload."""
    rng = random.Random(env_seed() if seed is None else seed)
    if kind == "random":
        case = random_case(rng, n_queries=size or 2)
        queries, updates = case.queries, case.updates
    elif kind == "star":
        queries, updates = [star_query()], star_stream(size or 16)
    elif kind == "pairs":
        updates, _gaps = paired_sites(rng, size or 50)
        queries = [pair_query()]
    elif kind == "overlap":
        case = overlap_case(rng, n_updates=size or 10_000)
        queries, updates = case.queries, case.updates
    else:
        case = throughput_case(rng, size or 100_000)
        queries, updates = case.queries, case.updates

    with open(queries_out, "w", encoding="utf-8") as fh:
        for q in queries:
            fh.write(unparse(q))
            fh.write("\n")
    with open(stream_out, "w", encoding="utf-8") as fh:
        for u in updates:
            fh.write(format_stream_update(u) + "\n")
    click.echo(
        f"wrote {len(queries)} queries to {queries_out},"
        f" {len(updates)} updates to {stream_out}",
        err=True,
    )
