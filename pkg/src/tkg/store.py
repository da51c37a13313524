"""Indexed quad storage with per-provider named graphs, instance-closure
upsert semantics for daily batches, and sorted N-Quads snapshots.

Three orderings (GSPO, POSG, OSPG) are kept coherent at every externally
observable point; `match` picks the index whose prefix covers the bound
positions and falls back to a scan otherwise.
"""

from __future__ import annotations

import hashlib
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Optional

from . import shacl
from .formats import RdfFormat, parse
from .rdf import (
    DEFAULT_GRAPH_IRI,
    ENRICHMENT_GRAPH_IRI,
    RDF_TYPE,
    SCHEMA_NS,
    Graph,
    Quad,
    Term,
    bnode,
    iri,
    parse_nquads,
    serialize_nquads,
)

PROVIDER_GRAPH_PREFIX = "urn:tkg:provider:"
SCHEMA_LICENSE = SCHEMA_NS + "license"
SCHEMA_NAME = SCHEMA_NS + "name"

POLICY_REJECT_UNSHAPED = "RejectUnshaped"
POLICY_ADMIT_UNSHAPED = "AdmitUnshaped"


class StoreError(Exception):
    pass


class UnknownProvider(StoreError):
    def __init__(self, provider_id: str):
        super().__init__(f"provider not registered: {provider_id}")
        self.provider_id = provider_id


@dataclass
class IngestBatch:
    provider_id: str
    format: RdfFormat
    payload: bytes
    received_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))


@dataclass
class IngestReport:
    accepted: list = field(default_factory=list)
    rejected: list = field(default_factory=list)  # (instance IRI, ValidationReport)
    skipped_no_shape: list = field(default_factory=list)
    quads_written: int = 0
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "rejected": [
                {"instance": instance, "report": report.to_dict()}
                for instance, report in self.rejected
            ],
            "skippedNoShape": self.skipped_no_shape,
            "quadsWritten": self.quads_written,
            "warnings": self.warnings,
        }


def instance_closure(root: Term, g: Graph) -> Graph:
    """All quads with subject ``root`` plus quads reachable through blank-node
    objects; IRIs are independent instances and not traversed."""
    by_subject: dict = {}
    for q in g:
        by_subject.setdefault(q.subject, []).append(q)
    out = []
    stack = [root]
    seen = set()
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        for q in by_subject.get(node, ()):
            out.append(q)
            if q.object.is_bnode:
                stack.append(q.object)
    return Graph(out)


def _relabel_closure(root: Term, closure: Graph) -> Graph:
    """Rename blank nodes so closures of distinct instances never collide in
    the store; deterministic in (root, original label)."""
    labels = sorted({t.value for q in closure for t in (q.subject, q.object) if t.is_bnode})
    if not labels:
        return closure
    mapping = {}
    for label in labels:
        digest = hashlib.sha1(f"{root.ntriples()}|{label}".encode()).hexdigest()[:16]
        mapping[label] = bnode(f"n{digest}")
    out = []
    for q in closure:
        s = mapping[q.subject.value] if q.subject.is_bnode else q.subject
        o = mapping[q.object.value] if q.object.is_bnode else q.object
        out.append(Quad(s, q.predicate, o, q.graph))
    return Graph(out)


class Store:
    """In-memory quad store. Writes serialize through one lock; readers take
    it briefly to copy result lists, so they never observe a partial upsert."""

    def __init__(self):
        self._gspo: dict = {}
        self._posg: dict = {}
        self._ospg: dict = {}
        self._quads: set = set()
        self.provider_graphs: dict = {}
        self.license_cache: dict = {}
        self.name_cache: dict = {}
        self._lock = threading.RLock()

    # --- provider registry ---

    def register_provider(self, provider_id: str) -> Term:
        with self._lock:
            g = iri(PROVIDER_GRAPH_PREFIX + provider_id)
            self.provider_graphs[provider_id] = g
            return g

    def provider_graph(self, provider_id: str) -> Term:
        g = self.provider_graphs.get(provider_id)
        if g is None:
            raise UnknownProvider(provider_id)
        return g

    # --- index maintenance ---

    def _index_add(self, q: Quad):
        self._gspo.setdefault(q.graph, {}).setdefault(q.subject, {}).setdefault(q.predicate, set()).add(q.object)
        self._posg.setdefault(q.predicate, {}).setdefault(q.object, {}).setdefault(q.subject, set()).add(q.graph)
        self._ospg.setdefault(q.object, {}).setdefault(q.subject, {}).setdefault(q.predicate, set()).add(q.graph)

    @staticmethod
    def _prune(index: dict, k1, k2, k3, k4):
        leaf = index[k1][k2][k3]
        leaf.discard(k4)
        if not leaf:
            del index[k1][k2][k3]
            if not index[k1][k2]:
                del index[k1][k2]
                if not index[k1]:
                    del index[k1]

    def _index_remove(self, q: Quad):
        self._prune(self._gspo, q.graph, q.subject, q.predicate, q.object)
        self._prune(self._posg, q.predicate, q.object, q.subject, q.graph)
        self._prune(self._ospg, q.object, q.subject, q.predicate, q.graph)

    def add(self, q: Quad):
        with self._lock:
            if q in self._quads:
                return
            self._quads.add(q)
            self._index_add(q)
            self._caches_add(q)

    def remove(self, q: Quad):
        with self._lock:
            if q not in self._quads:
                return
            self._quads.discard(q)
            self._index_remove(q)
            self._caches_remove(q)

    def _caches_add(self, q: Quad):
        if not q.subject.is_iri:
            return
        if q.predicate.value == SCHEMA_LICENSE and q.object.is_iri:
            self.license_cache[q.subject.value] = q.object.value
        if q.predicate.value == SCHEMA_NAME and q.object.is_literal:
            self.name_cache.setdefault(q.subject.value, set()).add(q.object.value)

    def _caches_remove(self, q: Quad):
        if not q.subject.is_iri:
            return
        if q.predicate.value == SCHEMA_LICENSE and self.license_cache.get(q.subject.value) == q.object.value:
            remaining = [m for m in self.match(s=q.subject, p=q.predicate) if m.object.is_iri]
            if remaining:
                self.license_cache[q.subject.value] = remaining[0].object.value
            else:
                self.license_cache.pop(q.subject.value, None)
        if q.predicate.value == SCHEMA_NAME and q.object.is_literal:
            still = any(m.object == q.object for m in self.match(s=q.subject, p=q.predicate))
            if not still:
                names = self.name_cache.get(q.subject.value)
                if names:
                    names.discard(q.object.value)
                    if not names:
                        del self.name_cache[q.subject.value]

    # --- queries ---

    def __len__(self) -> int:
        return len(self._quads)

    def all_quads(self) -> Graph:
        with self._lock:
            return Graph(self._quads)

    def match(self, s: Optional[Term] = None, p: Optional[Term] = None,
              o: Optional[Term] = None, g: Optional[Term] = None) -> list:
        """Quads matching all bound positions, in deterministic sorted order."""
        with self._lock:
            candidates: Iterable[Quad]
            if g is not None:
                candidates = self._scan_gspo(g, s, p, o)
            elif p is not None:
                candidates = self._scan_posg(p, o, s)
            elif o is not None:
                candidates = self._scan_ospg(o, s)
            else:
                candidates = list(self._quads)
            result = [
                q for q in candidates
                if (s is None or q.subject == s)
                and (p is None or q.predicate == p)
                and (o is None or q.object == o)
                and (g is None or q.graph == g)
            ]
        result.sort(key=Quad.sort_key)
        return result

    def _scan_gspo(self, g, s, p, o):
        level_s = self._gspo.get(g, {})
        for subj in ([s] if s is not None else level_s):
            level_p = level_s.get(subj, {})
            for pred in ([p] if p is not None else level_p):
                for obj in level_p.get(pred, ()):
                    yield Quad(subj, pred, obj, g)

    def _scan_posg(self, p, o, s):
        level_o = self._posg.get(p, {})
        for obj in ([o] if o is not None else level_o):
            level_s = level_o.get(obj, {})
            for subj in ([s] if s is not None else level_s):
                for g in level_s.get(subj, ()):
                    yield Quad(subj, p, obj, g)

    def _scan_ospg(self, o, s):
        level_s = self._ospg.get(o, {})
        for subj in ([s] if s is not None else level_s):
            level_p = level_s.get(subj, {})
            for pred in level_p:
                for g in level_p[pred]:
                    yield Quad(subj, pred, o, g)

    def count(self, s=None, p=None, o=None, g=None) -> int:
        return len(self.match(s, p, o, g))

    def index_views(self) -> tuple:
        """Quad sets enumerated independently from each index (coherence checks)."""
        gspo = {
            Quad(s, p, o, g)
            for g, sm in self._gspo.items() for s, pm in sm.items()
            for p, objs in pm.items() for o in objs
        }
        posg = {
            Quad(s, p, o, g)
            for p, om in self._posg.items() for o, sm in om.items()
            for s, gs in sm.items() for g in gs
        }
        ospg = {
            Quad(s, p, o, g)
            for o, sm in self._ospg.items() for s, pm in sm.items()
            for p, gs in pm.items() for g in gs
        }
        return gspo, posg, ospg

    def closure_in_graph(self, root: Term, graph: Term) -> Graph:
        """Instance closure restricted to one named graph."""
        out = []
        stack = [root]
        seen = set()
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            for q in self.match(s=node, g=graph):
                out.append(q)
                if q.object.is_bnode:
                    stack.append(q.object)
        return Graph(out)

    def instance_roots(self, graph: Optional[Term] = None) -> list:
        """IRI subjects in provider graphs (or one graph), sorted."""
        with self._lock:
            graphs = [graph] if graph is not None else list(self.provider_graphs.values())
            roots = set()
            for g in graphs:
                for subj in self._gspo.get(g, {}):
                    if subj.is_iri:
                        roots.add(subj.value)
        return sorted(roots)

    def type_counts(self) -> dict:
        """Distinct typed instance roots per type IRI, across provider graphs."""
        with self._lock:
            provider_graphs = set(self.provider_graphs.values())
            seen = {}
            for q in self._quads:
                if (q.graph in provider_graphs and q.predicate.value == RDF_TYPE
                        and q.subject.is_iri and q.object.is_iri):
                    seen.setdefault(q.object.value, set()).add(q.subject.value)
        return {t: len(roots) for t, roots in seen.items()}

    # --- ingestion ---

    def upsert_instances(self, batch: IngestBatch, catalog: shacl.ShapeCatalog,
                         policy: str = POLICY_REJECT_UNSHAPED) -> IngestReport:
        graph_term = self.provider_graph(batch.provider_id)
        payload_graph = parse(batch.payload.decode("utf-8"), batch.format, graph_term)

        report = IngestReport()
        roots = sorted({q.subject.value for q in payload_graph if q.subject.is_iri})
        with self._lock:
            for root_iri in roots:
                root = iri(root_iri)
                closure = instance_closure(root, payload_graph)
                try:
                    shapes = shacl.resolve_shape(root, closure, catalog)
                except shacl.UnknownShapeReference as exc:
                    violation = shacl.Violation(root, shacl.SHAPE_REF_PREDICATE, "shapeReference",
                                                f"unknown shape reference {exc.iri}")
                    report.rejected.append((root_iri, shacl.ValidationReport([violation])))
                    continue
                if not shapes:
                    report.skipped_no_shape.append(root_iri)
                    if policy == POLICY_ADMIT_UNSHAPED:
                        report.quads_written += self._replace_closure(root, graph_term, closure)
                    continue
                result = shacl.validate_all(root, closure, shapes)
                if result.conforms:
                    report.accepted.append(root_iri)
                    report.quads_written += self._replace_closure(root, graph_term, closure)
                    self._collision_warning(root, graph_term, report)
                else:
                    report.rejected.append((root_iri, result))
        return report

    def _replace_closure(self, root: Term, graph_term: Term, closure: Graph) -> int:
        for q in self.closure_in_graph(root, graph_term):
            self.remove(q)
        relabeled = _relabel_closure(root, closure)
        for q in relabeled:
            self.add(q)
        return len(relabeled)

    def _collision_warning(self, root: Term, graph_term: Term, report: IngestReport):
        for g in self.provider_graphs.values():
            if g != graph_term and root in self._gspo.get(g, {}):
                report.warnings.append(
                    f"instance {root.value} also present in graph {g.value}"
                )

    def remove_instance(self, provider_id: str, instance: Term) -> int:
        """Delete the instance closure from the provider graph plus any
        enrichment quads mentioning the instance; returns quads removed."""
        graph_term = self.provider_graph(provider_id)
        enrichment = iri(ENRICHMENT_GRAPH_IRI)
        with self._lock:
            removed = 0
            for q in self.closure_in_graph(instance, graph_term):
                self.remove(q)
                removed += 1
            # enrichment link nodes hanging off the instance
            for q in list(self.match(s=instance, g=enrichment)):
                removed += self._remove_with_bnode_closure(q, enrichment)
            for q in list(self.match(o=instance, g=enrichment)):
                if q in self._quads:
                    self.remove(q)
                    removed += 1
        return removed

    def _remove_with_bnode_closure(self, q: Quad, graph_term: Term) -> int:
        removed = 0
        if q in self._quads:
            self.remove(q)
            removed += 1
        if q.object.is_bnode:
            for sub in self.closure_in_graph(q.object, graph_term):
                if sub in self._quads:
                    self.remove(sub)
                    removed += 1
        return removed

    # --- persistence ---

    def snapshot(self, path: str) -> int:
        """Write a sorted N-Quads snapshot; returns quads written."""
        with self._lock:
            text = serialize_nquads(Graph(self._quads))
            count = len(self._quads)
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
        return count

    @classmethod
    def load_snapshot(cls, path: str, providers: Iterable[str] = ()) -> "Store":
        """All-or-nothing snapshot load; provider graphs are re-registered from
        the given ids plus any provider graph IRIs found in the data."""
        with open(path, "r", encoding="utf-8") as fh:
            graph = parse_nquads(fh.read())
        store = cls()
        for provider_id in providers:
            store.register_provider(provider_id)
        for q in graph:
            if q.graph.value.startswith(PROVIDER_GRAPH_PREFIX):
                store.register_provider(q.graph.value[len(PROVIDER_GRAPH_PREFIX):])
        for q in graph:
            store.add(q)
        return store


def write_batch_log(batch: IngestBatch, root_dir: str) -> str:
    """Append-only raw payload log: one file per batch under the provider dir."""
    ts = batch.received_at.astimezone(timezone.utc).strftime("%Y-%m-%dT%H%M%SZ")
    directory = os.path.join(root_dir, batch.provider_id)
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, f"{ts}.{batch.format.extension}")
    with open(path, "wb") as fh:
        fh.write(batch.payload)
    return path
