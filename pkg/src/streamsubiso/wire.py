"""Text wire formats: stream records in, result and stats records out.

Stream records are one update per line, tab-separated:

    timestamp  op  edge_id  src_id  src_label  edge_type  dst_id  dst_label  [attrs]

``op`` is ``+`` (insert) or ``-`` (delete). The optional ninth field holds
semicolon-separated ``k=v`` attribute pairs; a bare integer value is typed
as an integer, anything else as a string, and double quotes (with
backslash escapes) cover strings containing whitespace or separators.
Keys prefixed ``src.`` or ``dst.`` set endpoint vertex attributes, which
take effect when the update implicitly creates that vertex; unprefixed
keys are edge attributes.

Blank lines and lines starting with ``#`` are skipped.
"""

from __future__ import annotations

import re

from .engine import MatchResult
from .errors import WireFormatError
from .graph import DELETE, INSERT, Scalar, StreamUpdate

_INT_RE = re.compile(r"-?[0-9]+\Z")
_OPS = {"+": INSERT, "-": DELETE}
_OP_CHARS = {INSERT: "+", DELETE: "-"}

STATS_COLUMNS = (
    "epoch",
    "updates",
    "live_partials",
    "peak_partials",
    "emitted",
    "expired",
    "predicate_evals",
)


def _unquote(raw: str, line: int, column: int) -> str:
    if len(raw) < 2 or not raw.endswith('"'):
        raise WireFormatError("unterminated quoted value", line, column)
    out: list[str] = []
    i = 1
    while i < len(raw) - 1:
        ch = raw[i]
        if ch == "\\":
            i += 1
            if i >= len(raw) - 1:
                raise WireFormatError("dangling escape in value", line, column)
            esc = raw[i]
            mapped = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r"}.get(esc)
            if mapped is None:
                raise WireFormatError(f"unknown escape \\{esc}", line, column)
            out.append(mapped)
        elif ch == '"':
            raise WireFormatError("unescaped quote inside value", line, column)
        else:
            out.append(ch)
        i += 1
    return "".join(out)


def _split_pairs(raw: str) -> list[tuple[int, str]]:
    """Split the attrs field on semicolons that sit outside quoted values."""
    pairs: list[tuple[int, str]] = []
    start = 0
    in_quote = False
    i = 0
    while i < len(raw):
        ch = raw[i]
        if in_quote:
            if ch == "\\":
                i += 1
            elif ch == '"':
                in_quote = False
        elif ch == '"':
            in_quote = True
        elif ch == ";":
            pairs.append((start, raw[start:i]))
            start = i + 1
        i += 1
    pairs.append((start, raw[start:]))
    return pairs


def _parse_attrs(
    raw: str, line: int, column: int
) -> tuple[dict[str, Scalar], dict[str, Scalar], dict[str, Scalar]]:
    edge: dict[str, Scalar] = {}
    src: dict[str, Scalar] = {}
    dst: dict[str, Scalar] = {}
    for offset, pair in _split_pairs(raw):
        at = column + offset
        if not pair:
            continue
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise WireFormatError(f"malformed attribute pair {pair!r}", line, at)
        if value.startswith('"'):
            typed: Scalar = _unquote(value, line, at)
        elif '"' in value:
            raise WireFormatError("unescaped quote in value", line, at)
        elif _INT_RE.match(value):
            typed = int(value)
        else:
            typed = value
        if key.startswith("src."):
            src[key[4:]] = typed
        elif key.startswith("dst."):
            dst[key[4:]] = typed
        else:
            edge[key] = typed
    return edge, src, dst


def parse_stream_line(line_text: str, line: int = 1) -> StreamUpdate:
    """Parse one stream record; raises WireFormatError with the offending
    line (as given) and column."""
    fields = line_text.rstrip("\n").split("\t")
    if len(fields) not in (8, 9):
        raise WireFormatError(
            f"expected 8 or 9 tab-separated fields, found {len(fields)}", line, 0
        )
    columns = [0]
    for f in fields[:-1]:
        columns.append(columns[-1] + len(f) + 1)

    ts_raw = fields[0]
    if not ts_raw.isdigit():
        raise WireFormatError(
            f"timestamp must be a non-negative integer, got {ts_raw!r}", line, 0
        )
    op_raw = fields[1]
    if op_raw not in _OPS:
        raise WireFormatError(
            f"op must be '+' or '-', got {op_raw!r}", line, columns[1]
        )
    names = ("edge_id", "src_id", "src_label", "edge_type", "dst_id", "dst_label")
    for idx, what in zip((2, 3, 4, 5, 6, 7), names):
        if not fields[idx]:
            raise WireFormatError(f"empty {what}", line, columns[idx])

    edge_attrs: dict[str, Scalar] = {}
    src_attrs: dict[str, Scalar] = {}
    dst_attrs: dict[str, Scalar] = {}
    if len(fields) == 9:
        edge_attrs, src_attrs, dst_attrs = _parse_attrs(fields[8], line, columns[8])

    return StreamUpdate(
        op=_OPS[op_raw],
        edge_id=fields[2],
        src=fields[3],
        src_label=fields[4],
        dst=fields[6],
        dst_label=fields[7],
        edge_type=fields[5],
        timestamp=int(ts_raw),
        attrs=edge_attrs,
        src_attrs=src_attrs,
        dst_attrs=dst_attrs,
    )


def iter_stream_lines(text: str, first_line: int = 1):
    """Yield (line number, StreamUpdate) for every record in ``text``."""
    for offset, raw in enumerate(text.splitlines()):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield first_line + offset, parse_stream_line(raw, first_line + offset)


_NEEDS_QUOTES = re.compile(r'[\s;="\\]')


def _format_value(value: Scalar) -> str:
    if isinstance(value, int):
        return str(value)
    text = str(value)
    if not text or _NEEDS_QUOTES.search(text) or _INT_RE.match(text):
        escaped = (
            text.replace("\\", "\\\\")
            .replace('"', '\\"')
            .replace("\n", "\\n")
            .replace("\t", "\\t")
            .replace("\r", "\\r")
        )
        return f'"{escaped}"'
    return text


_KEY_FORBIDDEN = re.compile(r'[;="\t\n\r]')


def _check_key(key: str, endpoint: bool) -> str:
    if not key or _KEY_FORBIDDEN.search(key):
        raise ValueError(f"attribute key {key!r} cannot be serialized")
    if not endpoint and (key.startswith("src.") or key.startswith("dst.")):
        raise ValueError(
            f"edge attribute key {key!r} would parse as an endpoint attribute"
        )
    return key


def _check_field(name: str, value: str) -> str:
    if not value or "\t" in value or "\n" in value or "\r" in value:
        raise ValueError(f"{name} {value!r} cannot be serialized")
    return value


def format_stream_update(u: StreamUpdate) -> str:
    pairs: list[str] = []
    for key in sorted(u.attrs):
        pairs.append(f"{_check_key(key, False)}={_format_value(u.attrs[key])}")
    for key in sorted(u.src_attrs):
        pairs.append(f"src.{_check_key(key, True)}={_format_value(u.src_attrs[key])}")
    for key in sorted(u.dst_attrs):
        pairs.append(f"dst.{_check_key(key, True)}={_format_value(u.dst_attrs[key])}")
    fields = [
        str(u.timestamp),
        _OP_CHARS[u.op],
        _check_field("edge id", u.edge_id),
        _check_field("source id", u.src),
        _check_field("source label", u.src_label),
        _check_field("edge type", u.edge_type),
        _check_field("destination id", u.dst),
        _check_field("destination label", u.dst_label),
    ]
    if pairs:
        fields.append(";".join(pairs))
    return "\t".join(fields)


def format_result_fields(
    query_name: str,
    completion_ts: int,
    emit_seq: int,
    vmap: dict[str, str],
    emap: dict[int, tuple[str, int]],
) -> str:
    fields = [query_name, str(completion_ts), str(emit_seq)]
    fields.extend(f"{var}={vmap[var]}" for var in sorted(vmap))
    fields.extend(f"e{eid}={emap[eid][0]}@{emap[eid][1]}" for eid in sorted(emap))
    return "\t".join(fields)


def format_result(m: MatchResult) -> str:
    return format_result_fields(
        m.query, m.completion_ts, m.emit_seq, m.vmap, m.emap
    )


def stats_header() -> str:
    return "\t".join(STATS_COLUMNS)


def format_stats_row(
    epoch: int,
    updates: int,
    live_partials: int,
    peak_partials: int,
    emitted: int,
    expired: int,
    predicate_evals: int,
) -> str:
    return "\t".join(
        str(v)
        for v in (
            epoch,
            updates,
            live_partials,
            peak_partials,
            emitted,
            expired,
            predicate_evals,
        )
    )
