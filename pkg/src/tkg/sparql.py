"""SPARQL subset: SELECT queries with basic graph patterns, non-nested
OPTIONAL groups, comparison/REGEX/CONTAINS filters, ORDER BY, LIMIT/OFFSET.

Queries read the union of all named graphs. Unknown constructs raise
UnsupportedFeature, never a wrong answer. Evaluation pipeline: join,
filters, ORDER BY (stable), DISTINCT (first occurrence), OFFSET, LIMIT.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .rdf import (
    RDF_TYPE,
    XSD_BOOLEAN,
    XSD_DOUBLE,
    XSD_INTEGER,
    XSD_STRING,
    RDF_LANGSTRING,
    Quad,
    Term,
    iri,
    literal,
)

DEFAULT_EVALUATION_BUDGET = 1_000_000

_UNSUPPORTED_KEYWORDS = {
    "UNION", "GROUP", "HAVING", "MINUS", "BIND", "VALUES", "SERVICE", "GRAPH",
    "CONSTRUCT", "ASK", "DESCRIBE", "EXISTS", "INSERT", "DELETE", "FROM",
    "REDUCED", "NAMED", "COUNT", "SUM", "AVG", "MIN", "MAX", "SAMPLE",
}

_NUMERIC_DATATYPES = {XSD_INTEGER, XSD_DOUBLE,
                      "http://www.w3.org/2001/XMLSchema#decimal",
                      "http://www.w3.org/2001/XMLSchema#float"}


class SparqlError(Exception):
    pass


class QuerySyntaxError(SparqlError):
    def __init__(self, message: str, position: int = 0):
        super().__init__(f"position {position}: {message}")
        self.message = message
        self.position = position


class UnsupportedFeature(SparqlError):
    def __init__(self, name: str):
        super().__init__(f"unsupported SPARQL feature: {name}")
        self.name = name


class QueryTooExpensive(SparqlError):
    def __init__(self, budget: int):
        super().__init__(f"evaluation exceeded the budget of {budget} intermediate bindings")
        self.budget = budget


@dataclass(frozen=True)
class Var:
    name: str


Operand = Union[Var, Term, "FuncCall"]


@dataclass(frozen=True)
class FuncCall:
    name: str  # REGEX | CONTAINS | LCASE
    args: tuple


@dataclass(frozen=True)
class Comparison:
    op: str
    left: Operand
    right: Operand


FilterExpr = Union[Comparison, FuncCall]


@dataclass(frozen=True)
class TriplePattern:
    subject: Union[Var, Term]
    predicate: Union[Var, Term]
    object: Union[Var, Term]

    def variables(self) -> set:
        return {t.name for t in (self.subject, self.predicate, self.object) if isinstance(t, Var)}


@dataclass
class OptionalGroup:
    patterns: list = field(default_factory=list)
    filters: list = field(default_factory=list)

    def variables(self) -> set:
        out = set()
        for p in self.patterns:
            out |= p.variables()
        return out


@dataclass
class Query:
    prefixes: dict = field(default_factory=dict)
    select_vars: Optional[list] = None  # None means *
    distinct: bool = False
    patterns: list = field(default_factory=list)
    optionals: list = field(default_factory=list)
    filters: list = field(default_factory=list)
    order_by: Optional[tuple] = None  # (var name, "asc" | "desc")
    limit: Optional[int] = None
    offset: Optional[int] = None

    def pattern_variables(self) -> set:
        out = set()
        for p in self.patterns:
            out |= p.variables()
        for g in self.optionals:
            out |= g.variables()
        return out

    def projected(self) -> list:
        if self.select_vars is not None:
            return self.select_vars
        return sorted(self.pattern_variables())


# --- tokenizer ---

_Q_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<iriref><[^<>\s]*>)
  | (?P<var>\?[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<langtag>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
  | (?P<dtype>\^\^)
  | (?P<number>[+-]?[0-9]+(?:\.[0-9]+)?)
  | (?P<op><=|>=|!=|=|<|>)
  | (?P<pname>[A-Za-z][A-Za-z0-9_-]*:[A-Za-z0-9_](?:[A-Za-z0-9_.-]*[A-Za-z0-9_])?|[A-Za-z][A-Za-z0-9_-]*:|:[A-Za-z0-9_]+)
  | (?P<word>[A-Za-z][A-Za-z0-9_]*)
  | (?P<punct>[{}().,;*/|+])
    """,
    re.VERBOSE,
)


@dataclass
class _QToken:
    kind: str
    text: str
    pos: int


def _tokenize_query(text: str) -> list:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _Q_TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup not in ("ws", "comment"):
            kind = m.lastgroup
            if kind == "punct":
                kind = m.group(0)
            tokens.append(_QToken(kind, m.group(0), pos))
        pos = m.end()
    tokens.append(_QToken("eof", "", len(text)))
    return tokens


class _QueryParser:
    def __init__(self, text: str):
        self.tokens = _tokenize_query(text)
        self.i = 0
        self.query = Query()

    def peek(self) -> _QToken:
        return self.tokens[self.i]

    def next(self) -> _QToken:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok: Optional[_QToken] = None):
        tok = tok or self.peek()
        raise QuerySyntaxError(message, tok.pos)

    def keyword(self, tok: _QToken) -> Optional[str]:
        return tok.text.upper() if tok.kind == "word" else None

    def check_unsupported(self, tok: _QToken):
        kw = self.keyword(tok)
        if kw in _UNSUPPORTED_KEYWORDS:
            if kw == "GROUP":
                raise UnsupportedFeature("GROUP BY")
            raise UnsupportedFeature(kw)

    def expect_keyword(self, word: str):
        tok = self.next()
        if self.keyword(tok) != word:
            self.check_unsupported(tok)
            self.error(f"expected {word}", tok)

    def parse(self) -> Query:
        while self.keyword(self.peek()) == "PREFIX":
            self.next()
            name = self.next()
            if name.kind != "pname" or not name.text.endswith(":"):
                self.error("expected a prefix name", name)
            iriref = self.next()
            if iriref.kind != "iriref":
                self.error("expected an IRI", iriref)
            self.query.prefixes[name.text[:-1]] = iriref.text[1:-1]

        self.check_unsupported(self.peek())
        self.expect_keyword("SELECT")
        if self.keyword(self.peek()) == "DISTINCT":
            self.next()
            self.query.distinct = True
        if self.peek().kind == "*":
            self.next()
        else:
            sel = []
            while self.peek().kind == "var":
                sel.append(self.next().text[1:])
            if not sel:
                self.check_unsupported(self.peek())
                self.error("expected projection variables or *")
            self.query.select_vars = sel

        self.expect_keyword("WHERE")
        self.group()

        while True:
            kw = self.keyword(self.peek())
            if kw == "ORDER":
                self.next()
                self.expect_keyword("BY")
                direction = "asc"
                if self.keyword(self.peek()) in ("ASC", "DESC"):
                    direction = self.keyword(self.next()).lower()
                    self.expect_punct("(")
                    var = self.expect_var()
                    self.expect_punct(")")
                else:
                    var = self.expect_var()
                self.query.order_by = (var, direction)
            elif kw == "LIMIT":
                self.next()
                self.query.limit = self.expect_nonneg_int()
            elif kw == "OFFSET":
                self.next()
                self.query.offset = self.expect_nonneg_int()
            elif self.peek().kind == "eof":
                break
            else:
                self.check_unsupported(self.peek())
                self.error(f"unexpected {self.peek().text!r}")

        self.validate()
        return self.query

    def expect_punct(self, p: str):
        tok = self.next()
        if tok.kind != p:
            self.error(f"expected {p!r}", tok)

    def expect_var(self) -> str:
        tok = self.next()
        if tok.kind != "var":
            self.error("expected a variable", tok)
        return tok.text[1:]

    def expect_nonneg_int(self) -> int:
        tok = self.next()
        if tok.kind != "number" or "." in tok.text or tok.text.startswith("-"):
            self.error("expected a non-negative integer", tok)
        return int(tok.text)

    def group(self):
        self.expect_punct("{")
        while self.peek().kind != "}":
            kw = self.keyword(self.peek())
            if self.peek().kind == "{":
                if any(t.kind == "word" and t.text.upper() == "UNION"
                       for t in self.tokens[self.i:]):
                    raise UnsupportedFeature("UNION")
                raise UnsupportedFeature("nested group graph pattern")
            if kw == "OPTIONAL":
                self.next()
                self.optional_group()
            elif kw == "FILTER":
                self.next()
                self.query.filters.append(self.filter_expr())
            elif self.peek().kind == "eof":
                self.error("unterminated group")
            else:
                self.check_unsupported(self.peek())
                self.query.patterns.append(self.triple_pattern())
                if self.peek().kind == ".":
                    self.next()
        self.next()

    def optional_group(self):
        opt = OptionalGroup()
        self.expect_punct("{")
        while self.peek().kind != "}":
            kw = self.keyword(self.peek())
            if kw == "OPTIONAL":
                raise UnsupportedFeature("nested OPTIONAL")
            if kw == "FILTER":
                self.next()
                opt.filters.append(self.filter_expr())
                continue
            if self.peek().kind == "eof":
                self.error("unterminated OPTIONAL group")
            self.check_unsupported(self.peek())
            opt.patterns.append(self.triple_pattern())
            if self.peek().kind == ".":
                self.next()
        self.next()
        self.query.optionals.append(opt)

    def triple_pattern(self) -> TriplePattern:
        s = self.term(position="subject")
        p = self.term(position="predicate")
        if self.peek().kind in ("/", "|", "+"):
            raise UnsupportedFeature("property paths")
        o = self.term(position="object")
        return TriplePattern(s, p, o)

    def term(self, position: str):
        tok = self.next()
        if tok.kind == "var":
            return Var(tok.text[1:])
        if tok.kind == "iriref":
            return iri(tok.text[1:-1])
        if tok.kind == "pname":
            return self.resolve_pname(tok)
        if tok.kind == "word" and tok.text == "a" and position == "predicate":
            return iri(RDF_TYPE)
        if position == "object":
            if tok.kind == "string":
                return self.string_literal(tok)
            if tok.kind == "number":
                return _number_literal(tok.text)
            if tok.kind == "word" and tok.text in ("true", "false"):
                return literal(tok.text, XSD_BOOLEAN)
        self.check_unsupported(tok)
        self.error(f"expected {position}, got {tok.text!r}", tok)

    def resolve_pname(self, tok: _QToken) -> Term:
        prefix, _, local = tok.text.partition(":")
        if prefix not in self.query.prefixes:
            self.error(f"unknown prefix {prefix!r}", tok)
        return iri(self.query.prefixes[prefix] + local)

    def string_literal(self, tok: _QToken) -> Term:
        raw = tok.text[1:-1]
        lexical = re.sub(
            r'\\(["\\tnr])',
            lambda m: {"t": "\t", "n": "\n", "r": "\r", '"': '"', "\\": "\\"}[m.group(1)],
            raw,
        )
        nxt = self.peek()
        if nxt.kind == "langtag":
            self.next()
            return literal(lexical, language=nxt.text[1:])
        if nxt.kind == "dtype":
            self.next()
            dtok = self.next()
            if dtok.kind == "iriref":
                return literal(lexical, dtok.text[1:-1])
            if dtok.kind == "pname":
                return literal(lexical, self.resolve_pname(dtok).value)
            self.error("expected a datatype IRI", dtok)
        return literal(lexical)

    def filter_expr(self) -> FilterExpr:
        self.expect_punct("(")
        expr = self.expression()
        self.expect_punct(")")
        return expr

    def expression(self) -> FilterExpr:
        left = self.operand()
        if self.peek().kind == "op":
            op = self.next().text
            right = self.operand()
            return Comparison(op, left, right)
        if isinstance(left, FuncCall) and left.name in ("REGEX", "CONTAINS"):
            return left
        self.error("expected a boolean filter expression")

    def operand(self) -> Operand:
        tok = self.next()
        if tok.kind == "var":
            return Var(tok.text[1:])
        if tok.kind == "string":
            return self.string_literal(tok)
        if tok.kind == "number":
            return _number_literal(tok.text)
        if tok.kind == "iriref":
            return iri(tok.text[1:-1])
        if tok.kind == "pname":
            return self.resolve_pname(tok)
        if tok.kind == "word":
            name = tok.text.upper()
            if name in ("REGEX", "CONTAINS", "LCASE"):
                self.expect_punct("(")
                args = [self.operand()]
                while self.peek().kind == ",":
                    self.next()
                    args.append(self.operand())
                self.expect_punct(")")
                arity = {"REGEX": 2, "CONTAINS": 2, "LCASE": 1}[name]
                if len(args) != arity:
                    self.error(f"{name} takes {arity} argument(s)", tok)
                return FuncCall(name, tuple(args))
            if tok.text in ("true", "false"):
                return literal(tok.text, XSD_BOOLEAN)
            self.check_unsupported(tok)
        self.error(f"expected a filter operand, got {tok.text!r}", tok)

    def validate(self):
        available = self.query.pattern_variables()
        if not self.query.patterns and not self.query.optionals:
            self.error("empty WHERE clause")
        for v in self.query.select_vars or []:
            if v not in available:
                raise QuerySyntaxError(f"projected variable ?{v} not bound in any pattern", 0)
        if self.query.order_by and self.query.order_by[0] not in available:
            raise QuerySyntaxError(
                f"ORDER BY variable ?{self.query.order_by[0]} not bound in any pattern", 0)
        for f in self.query.filters + [f for g in self.query.optionals for f in g.filters]:
            for v in _filter_variables(f):
                if v not in available:
                    raise QuerySyntaxError(f"filter variable ?{v} not bound in any pattern", 0)


def _number_literal(text: str) -> Term:
    if "." in text:
        return literal(text, XSD_DOUBLE)
    return literal(text, XSD_INTEGER)


def _filter_variables(expr) -> set:
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, Comparison):
        return _filter_variables(expr.left) | _filter_variables(expr.right)
    if isinstance(expr, FuncCall):
        out = set()
        for a in expr.args:
            out |= _filter_variables(a)
        return out
    return set()


def parse_query(text: str) -> Query:
    return _QueryParser(text).parse()


# --- evaluation ---

class _FilterFailure(Exception):
    """A filter evaluated to error; the binding is dropped."""


def _substitute(term, binding: dict):
    if isinstance(term, Var):
        return binding.get(term.name)
    return term


def _match_pattern(store, pattern: TriplePattern, binding: dict):
    s = _substitute(pattern.subject, binding)
    p = _substitute(pattern.predicate, binding)
    o = _substitute(pattern.object, binding)
    if s is not None and s.is_literal:
        return
    if p is not None and not p.is_iri:
        return
    for quad in store.match(s, p, o):
        extension = dict(binding)
        ok = True
        for var, value in (
            (pattern.subject, quad.subject),
            (pattern.predicate, quad.predicate),
            (pattern.object, quad.object),
        ):
            if isinstance(var, Var):
                bound = extension.get(var.name)
                if bound is None:
                    extension[var.name] = value
                elif bound != value:
                    ok = False
                    break
        if ok:
            yield extension


def _estimate(store, pattern: TriplePattern) -> int:
    s = pattern.subject if isinstance(pattern.subject, Term) else None
    p = pattern.predicate if isinstance(pattern.predicate, Term) else None
    o = pattern.object if isinstance(pattern.object, Term) else None
    return store.count(s, p, o)


def _string_value(term: Term):
    if term.is_literal:
        return term.value
    if term.is_iri:
        return term.value
    raise _FilterFailure()


def _eval_operand(operand, binding: dict):
    if isinstance(operand, Var):
        value = binding.get(operand.name)
        if value is None:
            raise _FilterFailure()
        return value
    if isinstance(operand, FuncCall):
        if operand.name == "LCASE":
            inner = _eval_operand(operand.args[0], binding)
            return literal(_string_value(inner).lower())
        raise _FilterFailure()
    return operand


def _numeric(term: Term):
    if term.is_literal and term.datatype in _NUMERIC_DATATYPES:
        try:
            return float(term.value)
        except ValueError:
            raise _FilterFailure()
    return None


def _compare(op: str, left: Term, right: Term) -> bool:
    ln, rn = _numeric(left), _numeric(right)
    if ln is not None and rn is not None:
        pairs = {"=": ln == rn, "!=": ln != rn, "<": ln < rn, "<=": ln <= rn,
                 ">": ln > rn, ">=": ln >= rn}
        return pairs[op]
    if op in ("=", "!="):
        return (left == right) if op == "=" else (left != right)
    if left.is_literal and right.is_literal and _numeric(left) is None and _numeric(right) is None:
        ls, rs = left.value, right.value
        pairs = {"<": ls < rs, "<=": ls <= rs, ">": ls > rs, ">=": ls >= rs}
        return pairs[op]
    raise _FilterFailure()


def _eval_filter(expr, binding: dict) -> bool:
    try:
        if isinstance(expr, Comparison):
            return _compare(expr.op, _eval_operand(expr.left, binding),
                            _eval_operand(expr.right, binding))
        if isinstance(expr, FuncCall):
            if expr.name == "REGEX":
                value = _string_value(_eval_operand(expr.args[0], binding))
                pattern = _string_value(_eval_operand(expr.args[1], binding))
                try:
                    return re.search(pattern, value) is not None
                except re.error:
                    raise _FilterFailure()
            if expr.name == "CONTAINS":
                haystack = _string_value(_eval_operand(expr.args[0], binding))
                needle = _string_value(_eval_operand(expr.args[1], binding))
                return needle in haystack
        raise _FilterFailure()
    except _FilterFailure:
        return False


def order_key(term: Optional[Term]) -> tuple:
    """Total order for ORDER BY: unbound < blank nodes < IRIs < numeric
    literals (by value) < other literals (by lexical form)."""
    if term is None:
        return (0,)
    if term.is_bnode:
        return (1, term.value)
    if term.is_iri:
        return (2, term.value)
    try:
        n = _numeric(term)
    except _FilterFailure:
        n = None
    if n is not None:
        return (3, n, term.ntriples())
    return (4, term.value, term.ntriples())


def _row_key(row: dict) -> tuple:
    return tuple(sorted((v, t.ntriples()) for v, t in row.items()))


def evaluate(store, query: Query, budget: int = DEFAULT_EVALUATION_BUDGET) -> list:
    """Evaluate over the union of all named graphs; returns a list of
    variable-name -> Term dicts."""
    ordered_patterns = sorted(query.patterns, key=lambda p: _estimate(store, p))

    bindings = [{}]
    produced = 0
    for pattern in ordered_patterns:
        nxt = []
        for binding in bindings:
            for extension in _match_pattern(store, pattern, binding):
                nxt.append(extension)
                produced += 1
                if produced > budget:
                    raise QueryTooExpensive(budget)
        bindings = nxt
        if not bindings:
            break

    for group in query.optionals:
        nxt = []
        for binding in bindings:
            extensions = [binding]
            for pattern in group.patterns:
                step = []
                for b in extensions:
                    step.extend(_match_pattern(store, pattern, b))
                extensions = step
                if not extensions:
                    break
            extensions = [b for b in extensions if all(_eval_filter(f, b) for f in group.filters)]
            if extensions:
                nxt.extend(extensions)
            else:
                nxt.append(binding)
            produced += len(extensions) or 1
            if produced > budget:
                raise QueryTooExpensive(budget)
        bindings = nxt

    bindings = [b for b in bindings if all(_eval_filter(f, b) for f in query.filters)]

    projected = query.projected()
    rows = [{v: b[v] for v in projected if v in b} for b in bindings]

    if query.order_by:
        var, direction = query.order_by
        # ties broken by the canonical form of the whole row, so the order
        # (and any LIMIT prefix of it) is fully deterministic
        rows.sort(key=lambda r: (order_key(r.get(var)), _row_key(r)),
                  reverse=(direction == "desc"))

    if query.distinct:
        seen = set()
        unique = []
        for r in rows:
            key = _row_key(r)
            if key not in seen:
                seen.add(key)
                unique.append(r)
        rows = unique

    if query.offset:
        rows = rows[query.offset:]
    if query.limit is not None:
        rows = rows[: query.limit]
    return rows


# --- result serialization ---

def _term_json(term: Term) -> dict:
    if term.is_iri:
        return {"type": "uri", "value": term.value}
    if term.is_bnode:
        return {"type": "bnode", "value": term.value}
    out = {"type": "literal", "value": term.value}
    if term.language is not None:
        out["xml:lang"] = term.language
    elif term.datatype != XSD_STRING:
        out["datatype"] = term.datatype
    return out


def results_to_json(variables: list, bindings: list) -> str:
    doc = {
        "head": {"vars": list(variables)},
        "results": {
            "bindings": [
                {v: _term_json(row[v]) for v in variables if v in row}
                for row in bindings
            ]
        },
    }
    return json.dumps(doc, ensure_ascii=False)


def results_to_csv(variables: list, bindings: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(variables)
    for row in bindings:
        writer.writerow([row[v].value if v in row else "" for v in variables])
    return buf.getvalue()
