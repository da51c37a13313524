"""Core RDF data model: terms, quads, graphs, and N-Triples I/O.

Graphs are immutable sets of quads; every statement carries a named-graph
component so provider data stays partitioned.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

IRI_KIND = "iri"
BNODE_KIND = "bnode"
LITERAL_KIND = "literal"

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"
SH_NS = "http://www.w3.org/ns/shacl#"
SCHEMA_NS = "http://schema.org/"

RDF_TYPE = RDF_NS + "type"
RDF_FIRST = RDF_NS + "first"
RDF_REST = RDF_NS + "rest"
RDF_NIL = RDF_NS + "nil"
RDF_LANGSTRING = RDF_NS + "langString"

XSD_STRING = XSD_NS + "string"
XSD_INTEGER = XSD_NS + "integer"
XSD_DOUBLE = XSD_NS + "double"
XSD_BOOLEAN = XSD_NS + "boolean"

DEFAULT_GRAPH_IRI = "urn:tkg:default"
ENRICHMENT_GRAPH_IRI = "urn:tkg:enrichment"

_BNODE_LABEL_RE = re.compile(r"^[A-Za-z0-9_]+$")
_LANG_TAG_RE = re.compile(r"^[A-Za-z]+(-[A-Za-z0-9]+)*$")


class RdfError(Exception):
    pass


class SyntaxError_(RdfError):
    """Malformed input; carries the position of the first error."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}" if line else message)
        self.message = message
        self.line = line
        self.column = column


class UnknownPrefix(SyntaxError_):
    def __init__(self, prefix: str, line: int = 0):
        super().__init__(f"unknown prefix '{prefix}'", line, 0)
        self.prefix = prefix


class ProfileViolation(RdfError):
    def __init__(self, feature: str):
        super().__init__(f"unsupported JSON-LD feature: {feature}")
        self.feature = feature


class MissingContext(RdfError):
    def __init__(self, key: str):
        super().__init__(f"key '{key}' cannot be expanded (no @vocab or prefix)")
        self.key = key


@dataclass(frozen=True, slots=True)
class Term:
    """An RDF term: IRI, blank node, or literal.

    ``value`` holds the IRI string, the blank-node label, or the literal's
    lexical form depending on ``kind``.
    """

    kind: str
    value: str
    datatype: Optional[str] = None
    language: Optional[str] = None

    def __post_init__(self):
        if self.kind == IRI_KIND:
            if ":" not in self.value:
                raise ValueError(f"IRI must be absolute: {self.value!r}")
        elif self.kind == BNODE_KIND:
            if not _BNODE_LABEL_RE.match(self.value):
                raise ValueError(f"bad blank node label: {self.value!r}")
        elif self.kind == LITERAL_KIND:
            if self.language is not None:
                if self.datatype != RDF_LANGSTRING:
                    raise ValueError("language-tagged literal must use rdf:langString")
                if not _LANG_TAG_RE.match(self.language):
                    raise ValueError(f"bad language tag: {self.language!r}")
            elif not self.datatype:
                raise ValueError("literal needs a datatype")
        else:
            raise ValueError(f"unknown term kind: {self.kind!r}")

    @property
    def is_iri(self) -> bool:
        return self.kind == IRI_KIND

    @property
    def is_bnode(self) -> bool:
        return self.kind == BNODE_KIND

    @property
    def is_literal(self) -> bool:
        return self.kind == LITERAL_KIND

    def ntriples(self) -> str:
        """This term as an N-Triples token."""
        if self.kind == IRI_KIND:
            return f"<{_escape_iri(self.value)}>"
        if self.kind == BNODE_KIND:
            return f"_:{self.value}"
        out = f'"{_escape_literal(self.value)}"'
        if self.language is not None:
            return f"{out}@{self.language}"
        if self.datatype != XSD_STRING:
            return f"{out}^^<{_escape_iri(self.datatype)}>"
        return out


def iri(value: str) -> Term:
    return Term(IRI_KIND, value)


def bnode(label: str) -> Term:
    return Term(BNODE_KIND, label)


def literal(lexical: str, datatype: str = XSD_STRING, language: Optional[str] = None) -> Term:
    if language is not None:
        return Term(LITERAL_KIND, lexical, RDF_LANGSTRING, language)
    return Term(LITERAL_KIND, lexical, datatype)


DEFAULT_GRAPH = iri(DEFAULT_GRAPH_IRI)
ENRICHMENT_GRAPH = iri(ENRICHMENT_GRAPH_IRI)
A = iri(RDF_TYPE)


@dataclass(frozen=True, slots=True)
class Quad:
    subject: Term
    predicate: Term
    object: Term
    graph: Term

    def __post_init__(self):
        if self.subject.is_literal:
            raise ValueError("subject must not be a literal")
        if not self.predicate.is_iri:
            raise ValueError("predicate must be an IRI")
        if not self.graph.is_iri:
            raise ValueError("graph must be an IRI")

    def sort_key(self):
        return (
            self.graph.ntriples(),
            self.subject.ntriples(),
            self.predicate.ntriples(),
            self.object.ntriples(),
        )


class Graph:
    """A duplicate-free, immutable collection of quads."""

    __slots__ = ("_quads",)

    def __init__(self, quads: Iterable[Quad] = ()):
        self._quads = frozenset(quads)

    @property
    def quads(self) -> frozenset:
        return self._quads

    def __len__(self) -> int:
        return len(self._quads)

    def __iter__(self) -> Iterator[Quad]:
        return iter(self._quads)

    def __contains__(self, q: Quad) -> bool:
        return q in self._quads

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self._quads == other._quads

    def __hash__(self) -> int:
        return hash(self._quads)

    def __repr__(self) -> str:
        return f"Graph({len(self._quads)} quads)"

    def union(self, other: "Graph") -> "Graph":
        return Graph(self._quads | other._quads)

    def sorted(self) -> list:
        return sorted(self._quads, key=Quad.sort_key)

    def subjects(self) -> set:
        return {q.subject for q in self._quads}

    def objects_of(self, subject: Term, predicate: Term) -> list:
        found = [q.object for q in self._quads if q.subject == subject and q.predicate == predicate]
        found.sort(key=Term.ntriples)
        return found


# --- N-Triples ---

_UCHAR_RE = re.compile(r"\\u([0-9A-Fa-f]{4})|\\U([0-9A-Fa-f]{8})")
_STRING_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


def _unescape(text: str, line: int, col: int) -> str:
    out = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        if i + 1 >= n:
            raise SyntaxError_("dangling escape", line, col + i)
        e = text[i + 1]
        if e in _STRING_ESCAPES:
            out.append(_STRING_ESCAPES[e])
            i += 2
        elif e == "u":
            hexs = text[i + 2 : i + 6]
            if len(hexs) != 4 or not re.fullmatch(r"[0-9A-Fa-f]{4}", hexs):
                raise SyntaxError_("bad \\u escape", line, col + i)
            out.append(chr(int(hexs, 16)))
            i += 6
        elif e == "U":
            hexs = text[i + 2 : i + 10]
            if len(hexs) != 8 or not re.fullmatch(r"[0-9A-Fa-f]{8}", hexs):
                raise SyntaxError_("bad \\U escape", line, col + i)
            out.append(chr(int(hexs, 16)))
            i += 10
        else:
            raise SyntaxError_(f"bad escape \\{e}", line, col + i)
    return "".join(out)


def _escape_literal(s: str) -> str:
    out = []
    for c in s:
        if c == "\\":
            out.append("\\\\")
        elif c == '"':
            out.append('\\"')
        elif c == "\n":
            out.append("\\n")
        elif c == "\r":
            out.append("\\r")
        elif c == "\t":
            out.append("\\t")
        elif ord(c) < 0x20:
            out.append("\\u%04X" % ord(c))
        else:
            out.append(c)
    return "".join(out)


def _escape_iri(s: str) -> str:
    out = []
    for c in s:
        cp = ord(c)
        if cp <= 0x20 or c in '<>"{}|^`\\':
            out.append("\\u%04X" % cp)
        else:
            out.append(c)
    return "".join(out)


_IRIREF_RE = re.compile(r"<([^<>\x00-\x20]*)>")
_BNODE_RE = re.compile(r"_:([A-Za-z0-9_]+)")
_LITERAL_RE = re.compile(r'"((?:[^"\\\n\r]|\\.)*)"')
_LANGTAG_RE = re.compile(r"@([A-Za-z]+(?:-[A-Za-z0-9]+)*)")


class _LineScanner:
    """Scans one N-Triples / N-Quads statement line."""

    def __init__(self, text: str, line: int):
        self.text = text
        self.line = line
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def error(self, message: str):
        raise SyntaxError_(message, self.line, self.pos + 1)

    def expect_dot(self):
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ".":
            self.error("expected '.'")
        self.pos += 1
        self.skip_ws()
        if self.pos < len(self.text) and not self.text[self.pos] == "#":
            self.error("trailing content after '.'")

    def term(self, position: str) -> Term:
        self.skip_ws()
        if self.pos >= len(self.text):
            self.error(f"expected {position}")
        c = self.text[self.pos]
        if c == "<":
            m = _IRIREF_RE.match(self.text, self.pos)
            if not m:
                self.error("malformed IRI")
            self.pos = m.end()
            return iri(_unescape(m.group(1), self.line, m.start(1)))
        if c == "_":
            m = _BNODE_RE.match(self.text, self.pos)
            if not m:
                self.error("malformed blank node label")
            self.pos = m.end()
            return bnode(m.group(1))
        if c == '"':
            m = _LITERAL_RE.match(self.text, self.pos)
            if not m:
                self.error("malformed literal")
            lexical = _unescape(m.group(1), self.line, m.start(1))
            self.pos = m.end()
            if self.text[self.pos : self.pos + 2] == "^^":
                self.pos += 2
                m2 = _IRIREF_RE.match(self.text, self.pos)
                if not m2:
                    self.error("malformed datatype IRI")
                self.pos = m2.end()
                return literal(lexical, _unescape(m2.group(1), self.line, m2.start(1)))
            if self.pos < len(self.text) and self.text[self.pos] == "@":
                m2 = _LANGTAG_RE.match(self.text, self.pos)
                if not m2:
                    self.error("malformed language tag")
                self.pos = m2.end()
                return literal(lexical, language=m2.group(1))
            return literal(lexical)
        self.error(f"expected {position}")


def parse_ntriples(text: str, graph: Term = DEFAULT_GRAPH) -> Graph:
    """Parse an N-Triples document; every triple is tagged with ``graph``.

    All-or-nothing: the first malformed line aborts the whole parse.
    """
    quads = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        sc = _LineScanner(raw, lineno)
        try:
            s = sc.term("subject")
            if s.is_literal:
                raise SyntaxError_("subject must not be a literal", lineno, 1)
            p = sc.term("predicate")
            if not p.is_iri:
                raise SyntaxError_("predicate must be an IRI", lineno, 1)
            o = sc.term("object")
            sc.expect_dot()
            quads.append(Quad(s, p, o, graph))
        except ValueError as exc:
            if isinstance(exc, SyntaxError_):
                raise
            raise SyntaxError_(str(exc), lineno, 1)
    return Graph(quads)


def serialize_ntriples(graph: Graph) -> str:
    """Sorted, deterministic N-Triples (graph component dropped)."""
    lines = sorted(
        f"{q.subject.ntriples()} {q.predicate.ntriples()} {q.object.ntriples()} ."
        for q in graph
    )
    return "".join(line + "\n" for line in lines)


def parse_nquads(text: str) -> Graph:
    """Parse an N-Quads document (the snapshot format); graph term per line."""
    quads = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        sc = _LineScanner(raw, lineno)
        try:
            s = sc.term("subject")
            if s.is_literal:
                raise SyntaxError_("subject must not be a literal", lineno, 1)
            p = sc.term("predicate")
            if not p.is_iri:
                raise SyntaxError_("predicate must be an IRI", lineno, 1)
            o = sc.term("object")
            sc.skip_ws()
            if sc.pos < len(sc.text) and sc.text[sc.pos] == "<":
                g = sc.term("graph")
                if not g.is_iri:
                    raise SyntaxError_("graph must be an IRI", lineno, 1)
            else:
                g = DEFAULT_GRAPH
            sc.expect_dot()
            quads.append(Quad(s, p, o, g))
        except ValueError as exc:
            if isinstance(exc, SyntaxError_):
                raise
            raise SyntaxError_(str(exc), lineno, 1)
    return Graph(quads)


def serialize_nquads(graph: Graph) -> str:
    lines = sorted(
        f"{q.subject.ntriples()} {q.predicate.ntriples()} {q.object.ntriples()} "
        f"{q.graph.ntriples()} ."
        for q in graph
    )
    return "".join(line + "\n" for line in lines)


# --- isomorphism ---

def _bnode_signature(g: Graph, b: Term) -> tuple:
    """Label-independent fingerprint of a blank node's neighbourhood."""
    out = []
    for q in g:
        s = q.subject
        o = q.object
        if s == b:
            out.append(("s", q.predicate.value, "B" if o.is_bnode else o.ntriples(), q.graph.value))
        if o == b:
            out.append(("o", q.predicate.value, "B" if s.is_bnode else s.ntriples(), q.graph.value))
    return tuple(sorted(out))


def isomorphic(g1: Graph, g2: Graph) -> bool:
    """Graph equality up to blank-node relabeling (brute-force bijection search).

    Intended for small graphs (tens of quads); signature grouping prunes the
    search space.
    """
    if len(g1) != len(g2):
        return False
    b1 = sorted({t.value for q in g1 for t in (q.subject, q.object) if t.is_bnode})
    b2 = sorted({t.value for q in g2 for t in (q.subject, q.object) if t.is_bnode})
    if len(b1) != len(b2):
        return False
    if not b1:
        return g1 == g2
    ground1 = {q for q in g1 if not q.subject.is_bnode and not q.object.is_bnode}
    ground2 = {q for q in g2 if not q.subject.is_bnode and not q.object.is_bnode}
    if ground1 != ground2:
        return False
    sig1 = {lbl: _bnode_signature(g1, bnode(lbl)) for lbl in b1}
    sig2 = {lbl: _bnode_signature(g2, bnode(lbl)) for lbl in b2}
    if sorted(sig1.values()) != sorted(sig2.values()):
        return False

    def rename(q: Quad, mapping: dict) -> Quad:
        s = bnode(mapping[q.subject.value]) if q.subject.is_bnode else q.subject
        o = bnode(mapping[q.object.value]) if q.object.is_bnode else q.object
        return Quad(s, q.predicate, o, q.graph)

    target = g2.quads

    def backtrack(remaining: list, mapping: dict, used: set) -> bool:
        if not remaining:
            return all(rename(q, mapping) in target for q in g1 if q.subject.is_bnode or q.object.is_bnode)
        lbl = remaining[0]
        for cand in b2:
            if cand in used or sig2[cand] != sig1[lbl]:
                continue
            mapping[lbl] = cand
            used.add(cand)
            if backtrack(remaining[1:], mapping, used):
                return True
            del mapping[lbl]
            used.remove(cand)
        return False

    return backtrack(b1, {}, set())
