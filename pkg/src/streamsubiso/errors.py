"""Exception types shared across the engine, parser, and stream front end."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    """Zero-based location of a construct in query text.

    ``line`` and ``column`` locate the first character; ``offset`` is the
    absolute character offset into the input.
    """

    line: int
    column: int
    offset: int

    def display(self) -> str:
        """One-based human-readable ``line:column`` rendering."""
        return f"{self.line + 1}:{self.column + 1}"


class StreamSubisoError(Exception):
    """Base class for every error raised by this package."""


# --- graph store -------------------------------------------------------------


class GraphStoreError(StreamSubisoError):
    pass


class DuplicateEdgeId(GraphStoreError):
    """An insert reused an edge id that is currently live."""


class UnknownEdgeId(GraphStoreError):
    """A delete referenced an edge id that is not live."""


class LabelConflict(GraphStoreError):
    """An update referenced an existing vertex under a different label."""


# --- query parsing and validation --------------------------------------------


class QueryError(StreamSubisoError):
    """Base class for query text errors; carries a source span."""

    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span.display()}: {message}")
        self.message = message
        self.span = span


class QuerySyntaxError(QueryError):
    pass


class UndefinedVariable(QueryError):
    pass


class DuplicateName(QueryError):
    pass


class InvalidQuery(StreamSubisoError):
    """A structurally well-formed query failed semantic validation."""

    def __init__(self, violations, span: SourceSpan | None = None):
        self.violations = list(violations)
        self.span = span
        detail = "; ".join(v.message for v in self.violations)
        super().__init__(f"invalid query: {detail}")


# --- engine ------------------------------------------------------------------


class EngineError(StreamSubisoError):
    pass


class DuplicateQueryName(EngineError):
    """A query was registered under a name already in use."""


class OutOfOrderTimestamp(EngineError):
    """An update arrived with a timestamp below the reorder horizon."""

    def __init__(self, timestamp: int, watermark: int, slack: int):
        super().__init__(
            f"timestamp {timestamp} is older than watermark {watermark} "
            f"minus slack {slack}"
        )
        self.timestamp = timestamp
        self.watermark = watermark
        self.slack = slack


class UnknownQueryState(EngineError):
    """Internal consistency failure; indicates a bug, not bad input."""


# --- synopsis ----------------------------------------------------------------


class InsufficientData(StreamSubisoError):
    """A recommendation was requested before any samples were collected."""


class ClusterGapUnitUnsupported(StreamSubisoError):
    """The requested operation cannot honor an update-count cluster gap."""


# --- wire format --------------------------------------------------------------


class WireFormatError(StreamSubisoError):
    """A stream record line failed to parse.

    ``line`` is one-based, ``column`` zero-based (offset within the line).
    """

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column
