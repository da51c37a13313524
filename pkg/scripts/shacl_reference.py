"""Self-contained reference validator used to produce golden verdicts for
the differential shape-validation corpus.

Deliberately independent of the package: it has its own N-Triples reader
and its own constraint evaluation, written directly from the constraint
definitions. Do not import anything from ``tkg`` here.
"""

from __future__ import annotations

import re

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
SH = "http://www.w3.org/ns/shacl#"
XSD = "http://www.w3.org/2001/XMLSchema#"
SHAPE_REF = "urn:tkg:shape"

# Terms are tuples: ("iri", v) | ("bnode", label) | ("lit", lex, datatype, lang)

_TERM_RE = re.compile(
    r"""\s*(?:
        <(?P<iri>[^>]*)>
      | _:(?P<bnode>[A-Za-z0-9][A-Za-z0-9._-]*)
      | "(?P<lit>(?:[^"\\]|\\.)*)"
        (?:\^\^<(?P<dt>[^>]*)>|@(?P<lang>[A-Za-z0-9-]+))?
    )""",
    re.VERBOSE,
)

_UNESCAPES = {"t": "\t", "n": "\n", "r": "\r", '"': '"', "\\": "\\"}


def _unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        c = text[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        nxt = text[i + 1]
        if nxt in _UNESCAPES:
            out.append(_UNESCAPES[nxt])
            i += 2
        elif nxt == "u":
            out.append(chr(int(text[i + 2:i + 6], 16)))
            i += 6
        elif nxt == "U":
            out.append(chr(int(text[i + 2:i + 10], 16)))
            i += 10
        else:
            raise ValueError(f"bad escape \\{nxt}")
    return "".join(out)


def parse_ntriples(text: str) -> list:
    triples = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        terms = []
        pos = 0
        while len(terms) < 3:
            m = _TERM_RE.match(line, pos)
            if not m:
                raise ValueError(f"cannot parse: {raw!r}")
            pos = m.end()
            if m.group("iri") is not None:
                terms.append(("iri", _unescape(m.group("iri"))))
            elif m.group("bnode") is not None:
                terms.append(("bnode", m.group("bnode")))
            else:
                lex = _unescape(m.group("lit"))
                lang = m.group("lang")
                if lang:
                    terms.append(("lit", lex, RDF + "langString", lang.lower()))
                else:
                    terms.append(("lit", lex, m.group("dt") or XSD + "string", None))
        if not line[pos:].strip().startswith("."):
            raise ValueError(f"missing terminator: {raw!r}")
        triples.append(tuple(terms))
    return triples


def objects(triples, subject, predicate):
    return [o for s, p, o in triples if s == subject and p == ("iri", predicate)]


def rdf_list(triples, head) -> list:
    items = []
    node = head
    while node != ("iri", RDF + "nil"):
        firsts = objects(triples, node, RDF + "first")
        rests = objects(triples, node, RDF + "rest")
        if not firsts or not rests:
            break
        items.append(firsts[0])
        node = rests[0]
    return items


def _shapes_for(shape_triples, data_triples, focus):
    """Explicit shape references plus target-class matches."""
    shape_ids = sorted(
        s[1] for s, p, o in shape_triples
        if p == ("iri", RDF + "type") and o == ("iri", SH + "NodeShape")
        and s[0] == "iri")
    applicable = []
    for ref in objects(data_triples, focus, SHAPE_REF):
        if ref[0] == "iri" and ref[1] in shape_ids:
            applicable.append(ref[1])
    focus_types = set(objects(data_triples, focus, RDF + "type"))
    for shape_id in shape_ids:
        targets = set(objects(shape_triples, ("iri", shape_id), SH + "targetClass"))
        if targets & focus_types and shape_id not in applicable:
            applicable.append(shape_id)
    return applicable


def _check_node(shape_triples, data_triples, focus, shape_id, violated, seen):
    key = (focus, shape_id)
    if key in seen:
        return
    seen.add(key)
    shape = ("iri", shape_id)
    prop_nodes = objects(shape_triples, shape, SH + "property")

    permitted = {RDF + "type", SHAPE_REF}
    for prop in prop_nodes:
        paths = objects(shape_triples, prop, SH + "path")
        path = paths[0][1]
        permitted.add(path)
        values = objects(data_triples, focus, path)

        for t in objects(shape_triples, prop, SH + "minCount"):
            if len(values) < int(t[1]):
                violated.add("minCount")
        for t in objects(shape_triples, prop, SH + "maxCount"):
            if len(values) > int(t[1]):
                violated.add("maxCount")
        for t in objects(shape_triples, prop, SH + "datatype"):
            for v in values:
                if v[0] != "lit" or v[2] != t[1]:
                    violated.add("datatype")
        for t in objects(shape_triples, prop, SH + "class"):
            for v in values:
                if v[0] == "lit" or ("iri", t[1]) not in objects(
                        data_triples, v, RDF + "type"):
                    violated.add("class")
        for t in objects(shape_triples, prop, SH + "nodeKind"):
            kind = t[1]
            for v in values:
                ok = ((kind == SH + "IRI" and v[0] == "iri")
                      or (kind == SH + "Literal" and v[0] == "lit")
                      or (kind == SH + "BlankNodeOrIRI" and v[0] != "lit"))
                if not ok:
                    violated.add("nodeKind")
        for t in objects(shape_triples, prop, SH + "in"):
            allowed = rdf_list(shape_triples, t)
            for v in values:
                if v not in allowed:
                    violated.add("in")
        for t in objects(shape_triples, prop, SH + "pattern"):
            for v in values:
                if v[0] == "bnode" or not re.search(t[1], v[1]):
                    violated.add("pattern")
        for t in objects(shape_triples, prop, SH + "node"):
            for v in values:
                if v[0] == "lit":
                    violated.add("node")
                else:
                    _check_node(shape_triples, data_triples, v, t[1],
                                violated, seen)

    closed = any(t == ("lit", "true", XSD + "boolean", None)
                 for t in objects(shape_triples, shape, SH + "closed"))
    if closed:
        for s, p, o in data_triples:
            if s == focus and p[1] not in permitted:
                violated.add("closed")


def validate(shapes_nt: str, data_nt: str, focus_iri: str) -> dict:
    shape_triples = parse_ntriples(shapes_nt)
    data_triples = parse_ntriples(data_nt)
    focus = ("iri", focus_iri)
    violated: set = set()
    seen: set = set()
    for shape_id in _shapes_for(shape_triples, data_triples, focus):
        _check_node(shape_triples, data_triples, focus, shape_id, violated, seen)
    return {"conforms": not violated,
            "violatedConstraints": sorted(violated)}
