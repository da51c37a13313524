"""Restricted JSON-LD profile used for provider payloads.

Supported: a top-level object or array of objects, @context as a prefix map
plus @vocab, @id, @type, nested objects, arrays, @value/@type/@language
value objects, and blank node identifiers. Everything else is a hard error.
"""

from __future__ import annotations

import json
from typing import Any, Optional

from .rdf import (
    DEFAULT_GRAPH,
    RDF_TYPE,
    XSD_BOOLEAN,
    XSD_DOUBLE,
    XSD_INTEGER,
    XSD_STRING,
    Graph,
    MissingContext,
    ProfileViolation,
    Quad,
    SyntaxError_,
    Term,
    bnode,
    iri,
    literal,
)

_FORBIDDEN_KEYWORDS = ("@graph", "@reverse", "@list", "@set", "@base", "@container",
                       "@index", "@nest", "@included", "@json")
_KNOWN_KEYWORDS = {"@context", "@id", "@type", "@value", "@language"}


def _is_absolute_iri(s: str) -> bool:
    scheme, sep, _ = s.partition(":")
    return bool(sep) and scheme.replace("+", "").replace("-", "").replace(".", "").isalnum() \
        and scheme[:1].isalpha()


class _Context:
    def __init__(self, raw: Any):
        self.vocab: Optional[str] = None
        self.prefixes: dict = {}
        if raw is None:
            return
        if not isinstance(raw, dict):
            raise ProfileViolation("non-map @context (remote contexts unsupported)")
        for key, value in raw.items():
            if key == "@vocab":
                if not isinstance(value, str):
                    raise ProfileViolation("@vocab must be a string")
                self.vocab = value
            elif key.startswith("@"):
                raise ProfileViolation(f"@context key {key}")
            else:
                if not isinstance(value, str):
                    raise ProfileViolation(f"non-string @context term {key}")
                self.prefixes[key] = value

    def expand_key(self, key: str) -> str:
        prefix, sep, local = key.partition(":")
        if sep and prefix in self.prefixes:
            return self.prefixes[prefix] + local
        if _is_absolute_iri(key):
            return key
        if self.vocab is not None:
            return self.vocab + key
        raise MissingContext(key)

    def expand_iri(self, value: str) -> Term:
        """Expand an @id / @type position string to an IRI or blank node."""
        if value.startswith("_:"):
            return bnode(value[2:])
        prefix, sep, local = value.partition(":")
        if sep and prefix in self.prefixes:
            return iri(self.prefixes[prefix] + local)
        if _is_absolute_iri(value):
            return iri(value)
        if self.vocab is not None:
            return iri(self.vocab + value)
        raise MissingContext(value)


class _JsonLdParser:
    def __init__(self, graph: Term):
        self.graph = graph
        self.quads: list = []
        self.counter = 0
        self.label_map: dict = {}

    def fresh_bnode(self) -> Term:
        t = bnode(f"b{self.counter}")
        self.counter += 1
        return t

    def mapped_bnode(self, label: str) -> Term:
        if label not in self.label_map:
            self.label_map[label] = self.fresh_bnode()
        return self.label_map[label]

    def node(self, obj: dict, ctx: _Context) -> Term:
        if "@context" in obj:
            ctx = _Context(obj["@context"])
        for kw in _FORBIDDEN_KEYWORDS:
            if kw in obj:
                raise ProfileViolation(kw)
        if "@id" in obj:
            if not isinstance(obj["@id"], str):
                raise ProfileViolation("non-string @id")
            subject = ctx.expand_iri(obj["@id"])
            if subject.is_bnode:
                subject = self.mapped_bnode(obj["@id"][2:])
        else:
            subject = self.fresh_bnode()
        for key, value in obj.items():
            if key in ("@context", "@id"):
                continue
            if key == "@type":
                types = value if isinstance(value, list) else [value]
                for t in types:
                    if not isinstance(t, str):
                        raise ProfileViolation("non-string @type")
                    self.quads.append(Quad(subject, iri(RDF_TYPE), ctx.expand_iri(t), self.graph))
                continue
            if key.startswith("@"):
                raise ProfileViolation(key)
            predicate = iri(ctx.expand_key(key))
            values = value if isinstance(value, list) else [value]
            for v in values:
                self.quads.append(Quad(subject, predicate, self.value(v, ctx), self.graph))
        return subject

    def value(self, v: Any, ctx: _Context) -> Term:
        if isinstance(v, dict):
            if "@value" in v:
                return self.value_object(v, ctx)
            if set(v.keys()) == {"@id"}:
                target = ctx.expand_iri(v["@id"])
                if target.is_bnode:
                    return self.mapped_bnode(v["@id"][2:])
                return target
            return self.node(v, ctx)
        if isinstance(v, bool):
            return literal("true" if v else "false", XSD_BOOLEAN)
        if isinstance(v, int):
            return literal(str(v), XSD_INTEGER)
        if isinstance(v, float):
            return literal(repr(v), XSD_DOUBLE)
        if isinstance(v, str):
            return literal(v)
        if v is None:
            raise ProfileViolation("null value")
        raise ProfileViolation(f"unsupported value {type(v).__name__}")

    def value_object(self, v: dict, ctx: _Context) -> Term:
        extra = set(v.keys()) - {"@value", "@type", "@language"}
        if extra:
            raise ProfileViolation(sorted(extra)[0])
        raw = v["@value"]
        if "@language" in v:
            if "@type" in v:
                raise ProfileViolation("@value with both @type and @language")
            if not isinstance(raw, str):
                raise ProfileViolation("language-tagged non-string @value")
            return literal(raw, language=v["@language"])
        if "@type" in v:
            dt = ctx.expand_iri(v["@type"])
            if not dt.is_iri:
                raise ProfileViolation("non-IRI @type on @value")
            if not isinstance(raw, str):
                raise ProfileViolation("typed @value must be a string")
            return literal(raw, dt.value)
        lit = self.value(raw, ctx)
        if not lit.is_literal:
            raise ProfileViolation("@value must be scalar")
        return lit


def parse_jsonld(text: str, graph: Term = DEFAULT_GRAPH) -> Graph:
    """Parse a document in the restricted JSON-LD profile."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SyntaxError_(exc.msg, exc.lineno, exc.colno)
    parser = _JsonLdParser(graph)
    top = doc if isinstance(doc, list) else [doc]
    ctx = _Context(None)
    for item in top:
        if not isinstance(item, dict):
            raise ProfileViolation("top-level value must be an object")
        parser.node(item, ctx)
    return Graph(parser.quads)


def serialize_jsonld(graph: Graph) -> str:
    """Flat, deterministic JSON-LD: one node object per subject, blank nodes
    as ``_:label`` identifiers, typed literals as @value objects."""

    def term_id(t: Term) -> str:
        return t.value if t.is_iri else f"_:{t.value}"

    def value_json(t: Term):
        if t.is_literal:
            if t.language is not None:
                return {"@value": t.value, "@language": t.language}
            if t.datatype == XSD_STRING:
                return t.value
            return {"@value": t.value, "@type": t.datatype}
        return {"@id": term_id(t)}

    by_subject: dict = {}
    for q in graph:
        by_subject.setdefault(q.subject, {}).setdefault(q.predicate, []).append(q.object)
    nodes = []
    for subject in sorted(by_subject, key=Term.ntriples):
        node: dict = {"@id": term_id(subject)}
        preds = by_subject[subject]
        types = preds.pop(iri(RDF_TYPE), None)
        if types:
            ids = sorted(term_id(t) for t in types if t.is_iri)
            non_iri = [t for t in types if not t.is_iri]
            if ids:
                node["@type"] = ids if len(ids) > 1 else ids[0]
            if non_iri:
                # rdf:type pointing at a blank node cannot use @type syntax
                node[RDF_TYPE] = [value_json(t) for t in sorted(non_iri, key=Term.ntriples)]
        for predicate in sorted(preds, key=Term.ntriples):
            vals = [value_json(o) for o in sorted(preds[predicate], key=Term.ntriples)]
            node[predicate.value] = vals if len(vals) > 1 else vals[0]
        nodes.append(node)
    return json.dumps(nodes, indent=2, ensure_ascii=False, sort_keys=False) + "\n"
