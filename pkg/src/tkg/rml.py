"""Declarative feed mapping: JSON/CSV records to RDF instances.

The mapping document is a JSON dialect of the used RML subset (see
docs/mapping.md). Missing optional fields skip the single quad; a missing
subject field skips the whole record. Both are counted, never errors.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from typing import Any, Optional
from urllib.parse import quote

from .rdf import (
    DEFAULT_GRAPH,
    RDF_TYPE,
    XSD_BOOLEAN,
    XSD_DOUBLE,
    XSD_INTEGER,
    Graph,
    Quad,
    Term,
    bnode,
    iri,
    literal,
)

TERMTYPE_IRI = "iri"
TERMTYPE_LITERAL = "literal"
TERMTYPE_BNODE = "bnode"


class MappingError(Exception):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class SourceError(Exception):
    pass


@dataclass(frozen=True)
class LogicalSource:
    source_id: str
    format: str  # "json" | "csv"
    iterator: str = ""


@dataclass(frozen=True)
class TermMap:
    kind: str  # "constant" | "reference" | "template"
    constant: Optional[Term] = None
    reference: Optional[str] = None
    template: Optional[tuple] = None  # alternating literal text / field path parts
    term_type: str = TERMTYPE_LITERAL
    datatype: Optional[str] = None
    language: Optional[str] = None


@dataclass(frozen=True)
class PredicateObjectMap:
    predicate: str
    object_map: TermMap


@dataclass(frozen=True)
class TriplesMap:
    id: str
    logical_source: LogicalSource
    subject_map: TermMap
    type_iris: tuple = ()
    predicate_object_maps: tuple = ()


@dataclass
class MappingResult:
    graph: Graph
    records_seen: int = 0
    records_skipped: int = 0
    values_skipped: int = 0


_FIELD_PATH_RE = re.compile(r"^[^.\[\]{}]+(\[\d+\])*(\.[^.\[\]{}]+(\[\d+\])*)*$")


def parse_template(template: str, path: str) -> tuple:
    """Split a `{field}` template into (text, path, text, ...) parts.

    Literal braces are escaped as `{{` / `}}`.
    """
    parts = []
    buf = []
    i = 0
    n = len(template)
    while i < n:
        c = template[i]
        if c == "{":
            if template[i + 1 : i + 2] == "{":
                buf.append("{")
                i += 2
                continue
            end = template.find("}", i)
            if end < 0:
                raise MappingError(path, f"unbalanced brace in template {template!r}")
            fieldpath = template[i + 1 : end]
            if not fieldpath or not _FIELD_PATH_RE.match(fieldpath):
                raise MappingError(path, f"bad template placeholder {{{fieldpath}}}")
            parts.append(("text", "".join(buf)))
            buf = []
            parts.append(("field", fieldpath))
            i = end + 1
        elif c == "}":
            if template[i + 1 : i + 2] == "}":
                buf.append("}")
                i += 2
                continue
            raise MappingError(path, f"unbalanced brace in template {template!r}")
        else:
            buf.append(c)
            i += 1
    parts.append(("text", "".join(buf)))
    return tuple(parts)


def _parse_constant(spec: Any, path: str) -> Term:
    if isinstance(spec, dict) and "iri" in spec:
        return iri(spec["iri"])
    if isinstance(spec, dict) and "value" in spec:
        if spec.get("language"):
            return literal(str(spec["value"]), language=spec["language"])
        if spec.get("datatype"):
            return literal(str(spec["value"]), spec["datatype"])
        return literal(str(spec["value"]))
    if isinstance(spec, str):
        return literal(spec)
    raise MappingError(path, f"bad constant {spec!r}")


def _parse_term_map(spec: Any, path: str, default_template_type: str = TERMTYPE_IRI) -> TermMap:
    if not isinstance(spec, dict):
        raise MappingError(path, "term map must be an object")
    keys = [k for k in ("constant", "reference", "template") if k in spec]
    if len(keys) != 1:
        raise MappingError(path, "exactly one of constant/reference/template required")
    kind = keys[0]
    term_type = spec.get("termType")
    if term_type is not None and term_type not in (TERMTYPE_IRI, TERMTYPE_LITERAL, TERMTYPE_BNODE):
        raise MappingError(path, f"unknown termType {term_type!r}")
    datatype = spec.get("datatype")
    language = spec.get("language")
    if kind == "constant":
        return TermMap(kind="constant", constant=_parse_constant(spec["constant"], path),
                       term_type=term_type or TERMTYPE_LITERAL)
    if kind == "reference":
        ref = spec["reference"]
        if not isinstance(ref, str) or not _FIELD_PATH_RE.match(ref):
            raise MappingError(path, f"bad field path {ref!r}")
        return TermMap(kind="reference", reference=ref,
                       term_type=term_type or TERMTYPE_LITERAL,
                       datatype=datatype, language=language)
    template = spec["template"]
    if not isinstance(template, str):
        raise MappingError(path, "template must be a string")
    return TermMap(kind="template", template=parse_template(template, path),
                   term_type=term_type or default_template_type,
                   datatype=datatype, language=language)


def parse_mapping(text: str) -> list:
    """Parse and validate a mapping document; returns the triples maps."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MappingError("$", f"invalid JSON: {exc.msg}")
    if not isinstance(doc, dict):
        raise MappingError("$", "mapping document must be an object")

    if not isinstance(doc.get("sources", []), list):
        raise MappingError("$.sources", "sources must be an array")
    if not isinstance(doc.get("maps", []), list):
        raise MappingError("$.maps", "maps must be an array")

    sources = {}
    for i, src in enumerate(doc.get("sources", [])):
        path = f"$.sources[{i}]"
        if not isinstance(src, dict) or "id" not in src:
            raise MappingError(path, "source needs an id")
        fmt = src.get("format")
        if fmt not in ("json", "csv"):
            raise MappingError(path, f"unknown source format {fmt!r}")
        iterator = src.get("iterator", "")
        if fmt == "json" and not iterator:
            raise MappingError(path, "JSON source needs a non-empty iterator")
        if fmt == "csv" and iterator:
            raise MappingError(path, "CSV source must not declare an iterator")
        sources[src["id"]] = LogicalSource(src["id"], fmt, iterator)

    maps = []
    for i, m in enumerate(doc.get("maps", [])):
        path = f"$.maps[{i}]"
        if not isinstance(m, dict) or "id" not in m:
            raise MappingError(path, "map needs an id")
        src_id = m.get("source")
        if src_id not in sources:
            raise MappingError(path, f"undeclared source {src_id!r}")
        subject = _parse_term_map(m.get("subject"), path + ".subject")
        if subject.term_type == TERMTYPE_LITERAL and subject.kind != "constant":
            raise MappingError(path + ".subject", "subject must produce IRIs or blank nodes")
        if subject.kind == "constant" and subject.constant.is_literal:
            raise MappingError(path + ".subject", "subject must produce IRIs or blank nodes")
        poms = []
        for j, pom in enumerate(m.get("properties", [])):
            ppath = f"{path}.properties[{j}]"
            if not isinstance(pom, dict) or "predicate" not in pom:
                raise MappingError(ppath, "property needs a predicate IRI")
            obj = _parse_term_map(pom.get("object"), ppath + ".object",
                                  default_template_type=TERMTYPE_LITERAL)
            poms.append(PredicateObjectMap(pom["predicate"], obj))
        maps.append(TriplesMap(
            id=m["id"],
            logical_source=sources[src_id],
            subject_map=subject,
            type_iris=tuple(m.get("types", [])),
            predicate_object_maps=tuple(poms),
        ))
    return maps


def resolve_field(record: Any, path: str):
    """Resolve a dot/bracket field path; returns None when any step is absent."""
    current = record
    for step in path.split("."):
        m = re.match(r"^([^\[\]]+)((\[\d+\])*)$", step)
        if not m:
            return None
        key, indexes = m.group(1), m.group(2)
        if not isinstance(current, dict) or key not in current:
            return None
        current = current[key]
        for idx in re.findall(r"\[(\d+)\]", indexes):
            if not isinstance(current, list) or int(idx) >= len(current):
                return None
            current = current[int(idx)]
    return current


def _iterate_json(data: bytes, iterator: str) -> list:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SourceError(f"unparseable JSON source: {exc}")
    path = iterator.lstrip("$").lstrip(".")
    target = doc if not path else resolve_field(doc, path)
    if target is None:
        return []
    if not isinstance(target, list):
        raise SourceError(f"iterator {iterator!r} does not select an array")
    return [r for r in target if isinstance(r, dict)]


def _iterate_csv(data: bytes) -> list:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise SourceError(f"unparseable CSV source: {exc}")
    return list(csv.DictReader(io.StringIO(text)))


def _scalar_literal(value: Any, datatype: Optional[str], language: Optional[str]) -> Optional[Term]:
    if value is None or isinstance(value, (dict, list)):
        return None
    if language:
        return literal(str(value), language=language)
    if datatype:
        return literal(str(value), datatype)
    if isinstance(value, bool):
        return literal("true" if value else "false", XSD_BOOLEAN)
    if isinstance(value, int):
        return literal(str(value), XSD_INTEGER)
    if isinstance(value, float):
        return literal(repr(value), XSD_DOUBLE)
    return literal(str(value))


def _apply_term_map(tm: TermMap, record: Any) -> Optional[Term]:
    """Produce a term for one record, or None when a referenced field is absent."""
    if tm.kind == "constant":
        return tm.constant
    if tm.kind == "reference":
        value = resolve_field(record, tm.reference)
        if value is None:
            return None
        if tm.term_type == TERMTYPE_IRI:
            return iri(str(value))
        if tm.term_type == TERMTYPE_BNODE:
            return bnode(re.sub(r"[^A-Za-z0-9_]", "_", str(value)))
        return _scalar_literal(value, tm.datatype, tm.language)
    pieces = []
    for part_kind, part in tm.template:
        if part_kind == "text":
            pieces.append(part)
        else:
            value = resolve_field(record, part)
            if value is None or isinstance(value, (dict, list)):
                return None
            text = str(value)
            if tm.term_type == TERMTYPE_IRI:
                text = quote(text, safe="")
            pieces.append(text)
    joined = "".join(pieces)
    if tm.term_type == TERMTYPE_IRI:
        return iri(joined)
    if tm.term_type == TERMTYPE_BNODE:
        return bnode(re.sub(r"[^A-Za-z0-9_]", "_", joined))
    return _scalar_literal(joined, tm.datatype, tm.language)


def execute(tmap: TriplesMap, source_data: bytes, graph: Term = DEFAULT_GRAPH) -> MappingResult:
    """Run one triples map over raw source bytes.

    Output has set semantics; skip counts cover dropped values and records.
    """
    if tmap.logical_source.format == "json":
        records = _iterate_json(source_data, tmap.logical_source.iterator)
    else:
        records = _iterate_csv(source_data)

    quads = []
    result = MappingResult(graph=Graph())
    for record in records:
        result.records_seen += 1
        try:
            subject = _apply_term_map(tmap.subject_map, record)
        except ValueError:
            subject = None
        if subject is None or subject.is_literal:
            result.records_skipped += 1
            continue
        for type_iri in tmap.type_iris:
            quads.append(Quad(subject, iri(RDF_TYPE), iri(type_iri), graph))
        for pom in tmap.predicate_object_maps:
            try:
                obj = _apply_term_map(pom.object_map, record)
            except ValueError:
                obj = None
            if obj is None:
                result.values_skipped += 1
                continue
            quads.append(Quad(subject, iri(pom.predicate), obj, graph))
    result.graph = Graph(quads)
    return result


def execute_all(maps: list, source_bytes: dict, graph: Term = DEFAULT_GRAPH) -> MappingResult:
    """Run every map against its named source payload; graphs are unioned."""
    combined = MappingResult(graph=Graph())
    for tmap in maps:
        data = source_bytes.get(tmap.logical_source.source_id)
        if data is None:
            raise SourceError(f"no data for source {tmap.logical_source.source_id!r}")
        one = execute(tmap, data, graph)
        combined.graph = combined.graph.union(one.graph)
        combined.records_seen += one.records_seen
        combined.records_skipped += one.records_skipped
        combined.values_skipped += one.values_skipped
    return combined
