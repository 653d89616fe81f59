"""Text syntax for pattern queries.

Grammar (one or more query blocks per input; ``#`` starts a line comment):

    query      := "query" IDENT "{" decl* "}"
    decl       := vertexDecl | edgeDecl | constraintDecl
    vertexDecl := "vertex" IDENT ":" IDENT [ "(" predList ")" ] ";"
    edgeDecl   := "edge" IDENT ":" IDENT "-" IDENT "->" IDENT
                  [ "(" predList ")" ] [ "order" INT ] ";"
    predList   := pred ( "," pred )*
    pred       := IDENT cmpOp literal
    cmpOp      := "=" | "!=" | "<" | "<=" | ">" | ">="
    literal    := [ "-" ] INT | STRING
    constraintDecl := "constraint" body ";"
    body       := "window" INT
                | "cluster_gap" INT ( "time" | "updates" )
                | "before" IDENT IDENT

Edge declaration names (``e1`` in ``edge e1: ...``) scope to the block and
are referenced by ``before``. ``order N`` assigns an arrival rank; every
pair of edges with distinct ranks becomes an ordered pair, lower rank
first. Edges sharing a rank stay mutually unordered.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    DuplicateName,
    InvalidQuery,
    QuerySyntaxError,
    SourceSpan,
    UndefinedVariable,
)
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

_ASCII_DIGITS = "0123456789"

_PUNCT_KINDS = {
    "{": "LBRACE",
    "}": "RBRACE",
    "(": "LPAREN",
    ")": "RPAREN",
    ";": "SEMI",
    ":": "COLON",
    ",": "COMMA",
}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: SourceSpan
    value: object = None


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 0
        self.col = 0

    def _span(self) -> SourceSpan:
        return SourceSpan(self.line, self.col, self.pos)

    def _advance(self, n: int = 1) -> None:
        for _ in range(n):
            if self.pos < len(self.text) and self.text[self.pos] == "\n":
                self.line += 1
                self.col = 0
            else:
                self.col += 1
            self.pos += 1

    def tokens(self) -> list[Token]:
        out: list[Token] = []
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch in " \t\r\n":
                self._advance()
                continue
            if ch == "#":
                while self.pos < len(text) and text[self.pos] != "\n":
                    self._advance()
                continue
            span = self._span()
            if ch.isalpha() or ch == "_":
                start = self.pos
                while self.pos < len(text) and (
                    text[self.pos].isalnum() or text[self.pos] == "_"
                ):
                    self._advance()
                out.append(Token("IDENT", text[start : self.pos], span))
                continue
            if ch in _ASCII_DIGITS:
                # str.isdigit also accepts superscripts and other Unicode
                # digits that int() rejects; keep the token grammar ASCII.
                start = self.pos
                while self.pos < len(text) and text[self.pos] in _ASCII_DIGITS:
                    self._advance()
                word = text[start : self.pos]
                out.append(Token("INT", word, span, int(word)))
                continue
            if ch == '"':
                out.append(self._string(span))
                continue
            if ch in _PUNCT_KINDS:
                out.append(Token(_PUNCT_KINDS[ch], ch, span))
                self._advance()
                continue
            two = text[self.pos : self.pos + 2]
            if two == "->":
                out.append(Token("ARROW", two, span))
                self._advance(2)
                continue
            if two in ("!=", "<=", ">="):
                out.append(Token("CMP", two, span))
                self._advance(2)
                continue
            if ch in "=<>":
                out.append(Token("CMP", ch, span))
                self._advance()
                continue
            if ch == "-":
                out.append(Token("MINUS", ch, span))
                self._advance()
                continue
            raise QuerySyntaxError(f"unexpected character {ch!r}", span)
        out.append(Token("EOF", "", self._span()))
        return out

    _ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r"}

    def _string(self, span: SourceSpan) -> Token:
        self._advance()  # opening quote
        parts: list[str] = []
        text = self.text
        while True:
            if self.pos >= len(text):
                raise QuerySyntaxError("unterminated string literal", span)
            ch = text[self.pos]
            if ch == '"':
                self._advance()
                return Token("STRING", "".join(parts), span, "".join(parts))
            if ch == "\n":
                raise QuerySyntaxError("unterminated string literal", span)
            if ch == "\\":
                esc_span = self._span()
                self._advance()
                if self.pos >= len(text):
                    raise QuerySyntaxError("unterminated string literal", span)
                esc = text[self.pos]
                if esc not in self._ESCAPES:
                    raise QuerySyntaxError(f"unknown escape \\{esc}", esc_span)
                parts.append(self._ESCAPES[esc])
                self._advance()
                continue
            parts.append(ch)
            self._advance()


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.idx = 0

    def peek(self) -> Token:
        return self.tokens[self.idx]

    def advance(self) -> Token:
        tok = self.tokens[self.idx]
        if tok.kind != "EOF":
            self.idx += 1
        return tok

    def expect(self, kind: str, what: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            want = what or kind
            shown = tok.text or "end of input"
            raise QuerySyntaxError(f"expected {want}, found {shown!r}", tok.span)
        return self.advance()

    def keyword(self, word: str) -> Token:
        tok = self.peek()
        if tok.kind != "IDENT" or tok.text != word:
            shown = tok.text or "end of input"
            raise QuerySyntaxError(f"expected {word!r}, found {shown!r}", tok.span)
        return self.advance()

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "IDENT" and tok.text == word

    # --- grammar ---------------------------------------------------------

    def parse_queries(self) -> list[QueryGraph]:
        queries: list[QueryGraph] = []
        names: dict[str, SourceSpan] = {}
        while self.peek().kind != "EOF":
            header = self.peek()
            q = self.parse_query()
            if q.name in names:
                raise DuplicateName(f"query {q.name!r} declared twice", header.span)
            names[q.name] = header.span
            queries.append(q)
        return queries

    def parse_query(self) -> QueryGraph:
        header = self.keyword("query")
        name = self.expect("IDENT", "query name")
        self.expect("LBRACE")
        vertices: list[QueryVertex] = []
        vertex_spans: dict[str, SourceSpan] = {}
        edges: list[QueryEdge] = []
        edge_names: dict[str, int] = {}
        ranks: list[tuple[int, int]] = []  # (eid, rank)
        before: list[tuple[int, int]] = []
        window: int | None = None
        gap: int | None = None
        gap_unit = GAP_TIME
        while self.peek().kind != "RBRACE":
            tok = self.peek()
            if tok.kind != "IDENT":
                shown = tok.text or "end of input"
                raise QuerySyntaxError(
                    f"expected a declaration, found {shown!r}", tok.span
                )
            if tok.text == "vertex":
                self._vertex_decl(vertices, vertex_spans)
            elif tok.text == "edge":
                self._edge_decl(edges, edge_names, vertex_spans, ranks)
            elif tok.text == "constraint":
                window, gap, gap_unit = self._constraint_decl(
                    edge_names, before, window, gap, gap_unit
                )
            else:
                raise QuerySyntaxError(
                    f"expected 'vertex', 'edge', or 'constraint', found {tok.text!r}",
                    tok.span,
                )
        self.expect("RBRACE")

        pairs = set(before)
        for i, (eid_a, rank_a) in enumerate(ranks):
            for eid_b, rank_b in ranks[i + 1 :]:
                if rank_a < rank_b:
                    pairs.add((eid_a, eid_b))
                elif rank_b < rank_a:
                    pairs.add((eid_b, eid_a))
        constraints = TemporalConstraints(
            arrival_order=frozenset(pairs),
            cluster_gap=gap,
            cluster_gap_unit=gap_unit,
            window=window,
        )
        q = QueryGraph(name.text, tuple(vertices), tuple(edges), constraints)
        report = validate(q)
        if not report.ok:
            raise InvalidQuery(report.violations, header.span)
        return q

    def _vertex_decl(self, vertices, vertex_spans) -> None:
        self.keyword("vertex")
        var = self.expect("IDENT", "vertex variable")
        if var.text in vertex_spans:
            raise DuplicateName(f"vertex {var.text!r} declared twice", var.span)
        self.expect("COLON")
        label = self.expect("IDENT", "vertex label")
        preds = self._opt_predicates()
        self.expect("SEMI")
        vertex_spans[var.text] = var.span
        vertices.append(QueryVertex(var.text, label.text, preds))

    def _edge_decl(self, edges, edge_names, vertex_spans, ranks) -> None:
        self.keyword("edge")
        name = self.expect("IDENT", "edge name")
        if name.text in edge_names:
            raise DuplicateName(f"edge {name.text!r} declared twice", name.span)
        self.expect("COLON")
        src = self.expect("IDENT", "source variable")
        if src.text not in vertex_spans:
            raise UndefinedVariable(f"unknown vertex {src.text!r}", src.span)
        self.expect("MINUS")
        etype = self.expect("IDENT", "edge type")
        self.expect("ARROW")
        dst = self.expect("IDENT", "destination variable")
        if dst.text not in vertex_spans:
            raise UndefinedVariable(f"unknown vertex {dst.text!r}", dst.span)
        preds = self._opt_predicates()
        eid = len(edges)
        if self.at_keyword("order"):
            self.advance()
            rank = self.expect("INT", "order rank")
            ranks.append((eid, rank.value))
        self.expect("SEMI")
        edge_names[name.text] = eid
        edges.append(QueryEdge(eid, src.text, dst.text, etype.text, preds))

    def _constraint_decl(
        self, edge_names, before, window, gap, gap_unit
    ) -> tuple[int | None, int | None, str]:
        self.keyword("constraint")
        kind = self.expect("IDENT", "constraint kind")
        if kind.text == "window":
            value = self.expect("INT", "window length")
            window = value.value
        elif kind.text == "cluster_gap":
            value = self.expect("INT", "gap length")
            unit = self.expect("IDENT", "'time' or 'updates'")
            if unit.text not in (GAP_TIME, GAP_UPDATES):
                raise QuerySyntaxError(
                    f"expected 'time' or 'updates', found {unit.text!r}", unit.span
                )
            gap = value.value
            gap_unit = unit.text
        elif kind.text == "before":
            first = self.expect("IDENT", "edge name")
            second = self.expect("IDENT", "edge name")
            for tok in (first, second):
                if tok.text not in edge_names:
                    raise UndefinedVariable(f"unknown edge {tok.text!r}", tok.span)
            before.append((edge_names[first.text], edge_names[second.text]))
        else:
            raise QuerySyntaxError(
                f"expected 'window', 'cluster_gap', or 'before', found {kind.text!r}",
                kind.span,
            )
        self.expect("SEMI")
        return window, gap, gap_unit

    def _opt_predicates(self) -> tuple[AttributePredicate, ...]:
        if self.peek().kind != "LPAREN":
            return ()
        self.advance()
        preds: list[AttributePredicate] = []
        while True:
            attr = self.expect("IDENT", "attribute name")
            op = self.expect("CMP", "comparator")
            preds.append(AttributePredicate(attr.text, op.text, self._literal()))
            if self.peek().kind == "COMMA":
                self.advance()
                continue
            self.expect("RPAREN")
            return tuple(preds)

    def _literal(self):
        tok = self.peek()
        if tok.kind == "MINUS":
            self.advance()
            value = self.expect("INT", "integer literal")
            return -value.value
        if tok.kind == "INT":
            self.advance()
            return tok.value
        if tok.kind == "STRING":
            self.advance()
            return tok.value
        shown = tok.text or "end of input"
        raise QuerySyntaxError(f"expected a literal, found {shown!r}", tok.span)


def parse_many(text: str) -> list[QueryGraph]:
    """Parse query text into one QueryGraph per block."""
    return _Parser(_Lexer(text).tokens()).parse_queries()


def parse(text: str) -> QueryGraph:
    """Parse text expected to contain exactly one query block."""
    queries = parse_many(text)
    if len(queries) != 1:
        span = SourceSpan(0, 0, 0)
        raise QuerySyntaxError(
            f"expected exactly one query block, found {len(queries)}", span
        )
    return queries[0]


def parse_bytes(data: bytes) -> list[QueryGraph]:
    """Parse raw bytes, replacing undecodable sequences first."""
    return parse_many(data.decode("utf-8", errors="replace"))


def _escape(s: str) -> str:
    out = s.replace("\\", "\\\\").replace('"', '\\"')
    return out.replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r")


def _literal_text(value) -> str:
    if isinstance(value, str):
        return f'"{_escape(value)}"'
    return str(value)


def _pred_text(preds) -> str:
    if not preds:
        return ""
    inner = ", ".join(f"{p.attr} {p.cmp} {_literal_text(p.value)}" for p in preds)
    return f" ({inner})"


def unparse(q: QueryGraph) -> str:
    """Render a query back to canonical text.

    Canonical edge names are ``e0``, ``e1``, ... in declaration order, and
    the arrival order is emitted as explicit ``before`` constraints, so
    ``parse(unparse(q))`` reproduces ``q`` exactly.
    """
    lines = [f"query {q.name} {{"]
    for v in q.vertices:
        lines.append(f"  vertex {v.var}: {v.label}{_pred_text(v.predicates)};")
    for e in q.edges:
        lines.append(
            f"  edge e{e.eid}: {e.src_var} -{e.edge_type}-> "
            f"{e.dst_var}{_pred_text(e.predicates)};"
        )
    c = q.constraints
    if c.window is not None:
        lines.append(f"  constraint window {c.window};")
    if c.cluster_gap is not None:
        lines.append(f"  constraint cluster_gap {c.cluster_gap} {c.cluster_gap_unit};")
    for a, b in sorted(c.arrival_order):
        lines.append(f"  constraint before e{a} e{b};")
    lines.append("}")
    return "\n".join(lines) + "\n"
