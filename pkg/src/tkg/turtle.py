"""Turtle subset: @prefix, prefixed names, `a`, predicate/object lists,
anonymous blank nodes, collections, and plain/typed/language-tagged literals.
Integer and boolean shorthand is accepted for shape authoring; no base IRIs,
no decimal/double shorthand, no multi-line strings.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .rdf import (
    DEFAULT_GRAPH,
    RDF_FIRST,
    RDF_NIL,
    RDF_REST,
    RDF_TYPE,
    XSD_BOOLEAN,
    XSD_INTEGER,
    XSD_STRING,
    Graph,
    Quad,
    SyntaxError_,
    Term,
    UnknownPrefix,
    _unescape,
    bnode,
    iri,
    literal,
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<iriref><[^<>\x00-\x20]*>)
  | (?P<literal>"(?:[^"\\\n\r]|\\.)*")
  | (?P<prefix_decl>@prefix\b)
  | (?P<langtag>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
  | (?P<dtype>\^\^)
  | (?P<bnode_label>_:[A-Za-z0-9_]+)
  | (?P<pname>[A-Za-z][A-Za-z0-9_.-]*)?:(?P<local>[A-Za-z0-9_](?:[A-Za-z0-9_.-]*[A-Za-z0-9_])?)?
  | (?P<boolean>\b(?:true|false)\b)
  | (?P<integer>[+-]?[0-9]+)
  | (?P<kw_a>\ba\b)
  | (?P<punct>[;,.\[\]()])
    """,
    re.VERBOSE,
)


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list:
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise SyntaxError_(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup if m.lastgroup not in (None, "local") else None
        if m.group("ws") is not None or m.group("comment") is not None:
            chunk = m.group(0)
            nl = chunk.count("\n")
            if nl:
                line += nl
                line_start = pos + chunk.rindex("\n") + 1
            pos = m.end()
            continue
        col = pos - line_start + 1
        if m.group("pname") is not None or (m.group(0).find(":") >= 0 and kind in (None, "local")):
            # fell into the pname alternative
            tokens.append(_Token("pname", m.group(0), line, col))
        elif m.group("kw_a") is not None:
            tokens.append(_Token("a", "a", line, col))
        elif m.group("punct") is not None:
            tokens.append(_Token(m.group(0), m.group(0), line, col))
        else:
            tokens.append(_Token(kind, m.group(0), line, col))
        pos = m.end()
    tokens.append(_Token("eof", "", line, n - line_start + 1))
    return tokens


class _TurtleParser:
    def __init__(self, text: str, graph: Term):
        self.tokens = _tokenize(text)
        self.i = 0
        self.graph = graph
        self.prefixes: dict = {}
        self.quads: list = []
        self.bnode_labels: dict = {}
        self.counter = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok: _Token):
        raise SyntaxError_(message, tok.line, tok.column)

    def expect(self, kind: str) -> _Token:
        tok = self.next()
        if tok.kind != kind:
            self.error(f"expected {kind!r}, got {tok.text!r}", tok)
        return tok

    def fresh_bnode(self) -> Term:
        t = bnode(f"b{self.counter}")
        self.counter += 1
        return t

    def mapped_bnode(self, label: str) -> Term:
        if label not in self.bnode_labels:
            self.bnode_labels[label] = self.fresh_bnode()
        return self.bnode_labels[label]

    def parse(self) -> Graph:
        while self.peek().kind != "eof":
            if self.peek().kind == "prefix_decl":
                self.prefix_decl()
            else:
                self.triples()
                self.expect(".")
        return Graph(self.quads)

    def prefix_decl(self):
        self.expect("prefix_decl")
        tok = self.expect("pname")
        if not tok.text.endswith(":"):
            self.error("expected a prefix name ending in ':'", tok)
        prefix = tok.text[:-1]
        iritok = self.expect("iriref")
        self.prefixes[prefix] = _unescape(iritok.text[1:-1], iritok.line, iritok.column)
        self.expect(".")

    def triples(self):
        tok = self.peek()
        if tok.kind == "[":
            subject = self.bnode_property_list()
            if self.peek().kind != ".":
                self.predicate_object_list(subject)
        else:
            subject = self.subject()
            self.predicate_object_list(subject)

    def subject(self) -> Term:
        tok = self.next()
        if tok.kind == "iriref":
            return self.make_iri(tok)
        if tok.kind == "pname":
            return self.resolve_pname(tok)
        if tok.kind == "bnode_label":
            return self.mapped_bnode(tok.text[2:])
        if tok.kind == "(":
            self.i -= 1
            return self.collection()
        self.error(f"expected subject, got {tok.text!r}", tok)

    def make_iri(self, tok: _Token) -> Term:
        value = _unescape(tok.text[1:-1], tok.line, tok.column)
        try:
            return iri(value)
        except ValueError as exc:
            self.error(str(exc), tok)

    def resolve_pname(self, tok: _Token) -> Term:
        prefix, _, local = tok.text.partition(":")
        if prefix not in self.prefixes:
            raise UnknownPrefix(prefix, tok.line)
        return iri(self.prefixes[prefix] + local)

    def predicate_object_list(self, subject: Term):
        while True:
            predicate = self.predicate()
            self.object_list(subject, predicate)
            if self.peek().kind == ";":
                self.next()
                # tolerate trailing ';' before '.'
                if self.peek().kind in (".", "]"):
                    return
                continue
            return

    def predicate(self) -> Term:
        tok = self.next()
        if tok.kind == "a":
            return iri(RDF_TYPE)
        if tok.kind == "iriref":
            return self.make_iri(tok)
        if tok.kind == "pname":
            return self.resolve_pname(tok)
        self.error(f"expected predicate, got {tok.text!r}", tok)

    def object_list(self, subject: Term, predicate: Term):
        while True:
            obj = self.object()
            self.quads.append(Quad(subject, predicate, obj, self.graph))
            if self.peek().kind == ",":
                self.next()
                continue
            return

    def object(self) -> Term:
        tok = self.peek()
        if tok.kind == "[":
            return self.bnode_property_list()
        if tok.kind == "(":
            return self.collection()
        if tok.kind == "literal":
            return self.literal_term()
        tok = self.next()
        if tok.kind == "integer":
            return literal(tok.text, XSD_INTEGER)
        if tok.kind == "boolean":
            return literal(tok.text, XSD_BOOLEAN)
        if tok.kind == "iriref":
            return self.make_iri(tok)
        if tok.kind == "pname":
            return self.resolve_pname(tok)
        if tok.kind == "bnode_label":
            return self.mapped_bnode(tok.text[2:])
        self.error(f"expected object, got {tok.text!r}", tok)

    def literal_term(self) -> Term:
        tok = self.expect("literal")
        lexical = _unescape(tok.text[1:-1], tok.line, tok.column)
        nxt = self.peek()
        if nxt.kind == "dtype":
            self.next()
            dtok = self.next()
            if dtok.kind == "iriref":
                dt = self.make_iri(dtok)
            elif dtok.kind == "pname":
                dt = self.resolve_pname(dtok)
            else:
                self.error("expected datatype IRI", dtok)
            return literal(lexical, dt.value)
        if nxt.kind == "langtag":
            self.next()
            return literal(lexical, language=nxt.text[1:])
        return literal(lexical)

    def bnode_property_list(self) -> Term:
        self.expect("[")
        node = self.fresh_bnode()
        if self.peek().kind != "]":
            self.predicate_object_list(node)
        self.expect("]")
        return node

    def collection(self) -> Term:
        self.expect("(")
        items = []
        while self.peek().kind != ")":
            if self.peek().kind == "eof":
                self.error("unterminated collection", self.peek())
            items.append(self.object())
        self.expect(")")
        if not items:
            return iri(RDF_NIL)
        head = self.fresh_bnode()
        node = head
        for idx, item in enumerate(items):
            self.quads.append(Quad(node, iri(RDF_FIRST), item, self.graph))
            if idx + 1 < len(items):
                nxt = self.fresh_bnode()
                self.quads.append(Quad(node, iri(RDF_REST), nxt, self.graph))
                node = nxt
            else:
                self.quads.append(Quad(node, iri(RDF_REST), iri(RDF_NIL), self.graph))
        return head


def parse_turtle(text: str, graph: Term = DEFAULT_GRAPH) -> Graph:
    """Parse the supported Turtle subset; blank nodes get fresh ``b<n>`` labels
    deterministic within one call."""
    return _TurtleParser(text, graph).parse()


def serialize_turtle(graph: Graph, prefixes: dict | None = None) -> str:
    """Deterministic Turtle: sorted subjects, `;`-grouped predicates, `,`-grouped
    objects. Output reparses to an isomorphic graph."""
    prefixes = dict(prefixes or {})
    lines = []
    for prefix, ns in sorted(prefixes.items()):
        lines.append(f"@prefix {prefix}: <{ns}> .")
    if lines:
        lines.append("")

    def term_str(t: Term) -> str:
        if t.is_iri:
            if t.value == RDF_TYPE:
                return "a"
            for prefix, ns in prefixes.items():
                if t.value.startswith(ns):
                    local = t.value[len(ns):]
                    if re.fullmatch(r"[A-Za-z0-9_](?:[A-Za-z0-9_.-]*[A-Za-z0-9_])?", local or ""):
                        return f"{prefix}:{local}"
            return t.ntriples()
        return t.ntriples()

    by_subject: dict = {}
    for q in graph:
        by_subject.setdefault(q.subject, {}).setdefault(q.predicate, []).append(q.object)
    for subject in sorted(by_subject, key=Term.ntriples):
        preds = by_subject[subject]
        pred_parts = []
        for predicate in sorted(preds, key=Term.ntriples):
            objs = ", ".join(term_str(o) for o in sorted(preds[predicate], key=Term.ntriples))
            pred_parts.append(f"{term_str(predicate)} {objs}")
        body = " ;\n    ".join(pred_parts)
        lines.append(f"{term_str(subject)} {body} .")
    return "\n".join(lines) + ("\n" if lines else "")
