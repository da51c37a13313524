"""Domain-specification engine: load shape catalogs from RDF and validate
instance graphs before admission.

Supported vocabulary: sh:targetClass, sh:property, sh:path, sh:minCount,
sh:maxCount, sh:datatype, sh:class, sh:nodeKind, sh:in, sh:pattern, sh:node,
sh:closed. Anything else in the sh: namespace is reported as a warning.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .rdf import (
    RDF_FIRST,
    RDF_NIL,
    RDF_REST,
    RDF_TYPE,
    SH_NS,
    XSD_INTEGER,
    Graph,
    Term,
    iri,
)

SHAPE_REF_PREDICATE = "urn:tkg:shape"

SH_NODE_SHAPE = SH_NS + "NodeShape"
SH_PROPERTY_SHAPE = SH_NS + "PropertyShape"
_SUPPORTED = {
    "targetClass", "property", "path", "minCount", "maxCount", "datatype",
    "class", "nodeKind", "in", "pattern", "node", "closed",
}

NODEKIND_IRI = "IRI"
NODEKIND_LITERAL = "Literal"
NODEKIND_BLANK_OR_IRI = "BlankNodeOrIRI"
_NODEKIND_MAP = {
    SH_NS + "IRI": NODEKIND_IRI,
    SH_NS + "Literal": NODEKIND_LITERAL,
    SH_NS + "BlankNodeOrIRI": NODEKIND_BLANK_OR_IRI,
}


class ShaclError(Exception):
    pass


class ShapeError(ShaclError):
    def __init__(self, shape_iri: str, message: str):
        super().__init__(f"{shape_iri}: {message}")
        self.shape_iri = shape_iri
        self.message = message


class UnknownShapeReference(ShaclError):
    def __init__(self, ref: str):
        super().__init__(f"referenced shape not in catalog: {ref}")
        self.iri = ref


@dataclass
class PropertyShape:
    path: str
    min_count: Optional[int] = None
    max_count: Optional[int] = None
    datatype: Optional[str] = None
    class_constraint: Optional[str] = None
    node_kind: Optional[str] = None
    in_values: Optional[list] = None
    pattern: Optional[str] = None
    node_shape: Optional["Shape"] = None


@dataclass
class Shape:
    id: str
    target_classes: set = field(default_factory=set)
    property_shapes: list = field(default_factory=list)
    closed: bool = False

    def permitted_predicates(self) -> set:
        return {ps.path for ps in self.property_shapes} | {RDF_TYPE}


@dataclass
class ShapeCatalog:
    shapes: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.shapes)

    def get(self, shape_iri: str) -> Optional[Shape]:
        return self.shapes.get(shape_iri)


@dataclass(frozen=True)
class Violation:
    focus_node: Term
    path: Optional[str]
    constraint: str
    message: str
    value: Optional[Term] = None


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def conforms(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "conforms": self.conforms,
            "violations": [
                {
                    "focusNode": v.focus_node.ntriples(),
                    "path": v.path,
                    "constraint": v.constraint,
                    "message": v.message,
                    "value": v.value.ntriples() if v.value is not None else None,
                }
                for v in self.violations
            ],
        }


def _collection_items(g: Graph, head: Term) -> list:
    items = []
    seen = set()
    node = head
    while node != iri(RDF_NIL):
        if node in seen:
            break
        seen.add(node)
        firsts = g.objects_of(node, iri(RDF_FIRST))
        rests = g.objects_of(node, iri(RDF_REST))
        if not firsts or not rests:
            break
        items.append(firsts[0])
        node = rests[0]
    return items


def _int_value(term: Term, shape_iri: str, what: str) -> int:
    if not term.is_literal:
        raise ShapeError(shape_iri, f"{what} must be an integer literal")
    try:
        return int(term.value)
    except ValueError:
        raise ShapeError(shape_iri, f"{what} is not an integer: {term.value!r}")


def load_shapes(shape_graph: Graph) -> ShapeCatalog:
    """Build a catalog from every sh:NodeShape in the graph.

    Unsupported sh: terms become catalog warnings; structural defects raise
    ShapeError.
    """
    catalog = ShapeCatalog()
    sh = lambda local: iri(SH_NS + local)
    shape_nodes = [
        q.subject
        for q in shape_graph
        if q.predicate == iri(RDF_TYPE) and q.object == iri(SH_NODE_SHAPE)
    ]
    for q in shape_graph:
        if q.predicate.value.startswith(SH_NS):
            local = q.predicate.value[len(SH_NS):]
            if local not in _SUPPORTED:
                catalog.warnings.append(f"unsupported SHACL term sh:{local}")

    node_refs = {}  # property shape -> referenced shape IRI, patched after load
    for node in sorted(set(shape_nodes), key=Term.ntriples):
        if not node.is_iri:
            raise ShapeError(node.ntriples(), "shape must be named by an IRI")
        shape = Shape(id=node.value)
        shape.target_classes = {
            t.value for t in shape_graph.objects_of(node, sh("targetClass")) if t.is_iri
        }
        for closed in shape_graph.objects_of(node, sh("closed")):
            shape.closed = closed.is_literal and closed.value == "true"
        for pnode in shape_graph.objects_of(node, sh("property")):
            paths = shape_graph.objects_of(pnode, sh("path"))
            if not paths:
                raise ShapeError(shape.id, "property shape without sh:path")
            if not paths[0].is_iri:
                raise ShapeError(shape.id, "sh:path must be a single predicate IRI")
            ps = PropertyShape(path=paths[0].value)
            for t in shape_graph.objects_of(pnode, sh("minCount")):
                ps.min_count = _int_value(t, shape.id, "sh:minCount")
            for t in shape_graph.objects_of(pnode, sh("maxCount")):
                ps.max_count = _int_value(t, shape.id, "sh:maxCount")
            for t in shape_graph.objects_of(pnode, sh("datatype")):
                if not t.is_iri:
                    raise ShapeError(shape.id, "sh:datatype must be an IRI")
                ps.datatype = t.value
            for t in shape_graph.objects_of(pnode, sh("class")):
                if not t.is_iri:
                    raise ShapeError(shape.id, "sh:class must be an IRI")
                ps.class_constraint = t.value
            for t in shape_graph.objects_of(pnode, sh("nodeKind")):
                if not t.is_iri or t.value not in _NODEKIND_MAP:
                    raise ShapeError(shape.id, f"unsupported sh:nodeKind {t.ntriples()}")
                ps.node_kind = _NODEKIND_MAP[t.value]
            for t in shape_graph.objects_of(pnode, sh("in")):
                ps.in_values = _collection_items(shape_graph, t)
            for t in shape_graph.objects_of(pnode, sh("pattern")):
                if not t.is_literal:
                    raise ShapeError(shape.id, "sh:pattern must be a string literal")
                if re.search(r"\\[1-9]", t.value):
                    raise ShapeError(shape.id, "backreferences not allowed in sh:pattern")
                try:
                    re.compile(t.value)
                except re.error as exc:
                    raise ShapeError(shape.id, f"bad sh:pattern: {exc}")
                ps.pattern = t.value
            for t in shape_graph.objects_of(pnode, sh("node")):
                if not t.is_iri:
                    raise ShapeError(shape.id, "sh:node must reference a shape IRI")
                node_refs[id(ps)] = (ps, t.value, shape.id)
            if ps.min_count is not None and ps.max_count is not None and ps.min_count > ps.max_count:
                raise ShapeError(shape.id, "sh:minCount greater than sh:maxCount")
            if ps.datatype is not None and ps.class_constraint is not None:
                raise ShapeError(shape.id, "sh:datatype and sh:class are mutually exclusive")
            shape.property_shapes.append(ps)
        catalog.shapes[shape.id] = shape

    for ps, ref, owner in node_refs.values():
        target = catalog.shapes.get(ref)
        if target is None:
            raise ShapeError(owner, f"sh:node references unknown shape {ref}")
        ps.node_shape = target
    return catalog


def resolve_shape(instance: Term, instance_graph: Graph, catalog: ShapeCatalog) -> list:
    """Shapes applying to an instance: explicit `urn:tkg:shape` references
    first, then target-class matches, each block sorted by shape IRI."""
    explicit = []
    for ref in instance_graph.objects_of(instance, iri(SHAPE_REF_PREDICATE)):
        if not ref.is_iri:
            continue
        shape = catalog.get(ref.value)
        if shape is None:
            raise UnknownShapeReference(ref.value)
        explicit.append(shape)
    explicit.sort(key=lambda s: s.id)

    types = {t.value for t in instance_graph.objects_of(instance, iri(RDF_TYPE)) if t.is_iri}
    by_target = [s for s in catalog.shapes.values() if s.target_classes & types]
    by_target.sort(key=lambda s: s.id)

    seen = set()
    out = []
    for shape in explicit + by_target:
        if shape.id not in seen:
            seen.add(shape.id)
            out.append(shape)
    return out


def validate(instance: Term, instance_graph: Graph, shape: Shape) -> ValidationReport:
    """Check one focus node against a shape; nested sh:node constraints
    recurse, each (node, shape) pair at most once per call."""
    report = ValidationReport()
    _validate_node(instance, instance_graph, shape, report, set())
    return report


def validate_all(instance: Term, instance_graph: Graph, shapes: list) -> ValidationReport:
    """Conformance requires every applicable shape to pass."""
    merged = ValidationReport()
    for shape in shapes:
        merged.violations.extend(validate(instance, instance_graph, shape).violations)
    return merged


def _validate_node(node: Term, g: Graph, shape: Shape, report: ValidationReport, visited: set):
    key = (node, shape.id)
    if key in visited:
        return
    visited.add(key)

    for ps in shape.property_shapes:
        values = g.objects_of(node, iri(ps.path))
        if ps.min_count is not None and len(values) < ps.min_count:
            report.violations.append(Violation(
                node, ps.path, "minCount",
                f"expected at least {ps.min_count} value(s) for <{ps.path}>, found {len(values)}",
            ))
        if ps.max_count is not None and len(values) > ps.max_count:
            report.violations.append(Violation(
                node, ps.path, "maxCount",
                f"expected at most {ps.max_count} value(s) for <{ps.path}>, found {len(values)}",
            ))
        for value in values:
            _check_value(node, value, ps, g, report, visited)

    if shape.closed:
        permitted = shape.permitted_predicates() | {SHAPE_REF_PREDICATE}
        for q in g:
            if q.subject == node and q.predicate.value not in permitted:
                report.violations.append(Violation(
                    node, q.predicate.value, "closed",
                    f"predicate <{q.predicate.value}> not permitted by closed shape",
                    q.object,
                ))


def _check_value(node: Term, value: Term, ps: PropertyShape, g: Graph,
                 report: ValidationReport, visited: set):
    def violate(constraint: str, message: str):
        report.violations.append(Violation(node, ps.path, constraint, message, value))

    if ps.datatype is not None:
        if not value.is_literal or value.datatype != ps.datatype:
            violate("datatype", f"value {value.ntriples()} is not a literal of <{ps.datatype}>")
    if ps.class_constraint is not None:
        if value.is_literal:
            violate("class", f"literal {value.ntriples()} cannot be an instance of <{ps.class_constraint}>")
        elif iri(ps.class_constraint) not in set(g.objects_of(value, iri(RDF_TYPE))):
            violate("class", f"value {value.ntriples()} lacks rdf:type <{ps.class_constraint}>")
    if ps.node_kind is not None:
        ok = (
            (ps.node_kind == NODEKIND_IRI and value.is_iri)
            or (ps.node_kind == NODEKIND_LITERAL and value.is_literal)
            or (ps.node_kind == NODEKIND_BLANK_OR_IRI and not value.is_literal)
        )
        if not ok:
            violate("nodeKind", f"value {value.ntriples()} violates nodeKind {ps.node_kind}")
    if ps.in_values is not None and value not in ps.in_values:
        allowed = ", ".join(t.ntriples() for t in ps.in_values)
        violate("in", f"value {value.ntriples()} not in [{allowed}]")
    if ps.pattern is not None:
        text = value.value if not value.is_bnode else None
        if text is None or not re.search(ps.pattern, text):
            violate("pattern", f"value {value.ntriples()} does not match /{ps.pattern}/")
    if ps.node_shape is not None:
        if value.is_literal:
            violate("node", f"literal {value.ntriples()} cannot conform to shape <{ps.node_shape.id}>")
        else:
            _validate_node(value, g, ps.node_shape, report, visited)
