import json
import random

import pytest

from tkg.rdf import Quad, iri, literal
from tkg.sparql import (
    QuerySyntaxError,
    QueryTooExpensive,
    UnsupportedFeature,
    evaluate,
    parse_query,
    results_to_csv,
    results_to_json,
)
from tkg.store import Store

from .gen import random_graph, random_query_text
from .oracle_sparql import nested_loop_evaluate, row_multiset

SCHEMA = "http://schema.org/"


def fixture_store():
    store = Store()
    g = store.register_provider("by")
    rdf_type = iri("http://www.w3.org/1999/02/22-rdf-syntax-ns#type")
    quads = [
        Quad(iri("http://ex/e1"), rdf_type, iri(SCHEMA + "Event"), g),
        Quad(iri("http://ex/e1"), iri(SCHEMA + "name"), literal("Oktoberfest"), g),
        Quad(iri("http://ex/e2"), rdf_type, iri(SCHEMA + "Event"), g),
        Quad(iri("http://ex/e2"), iri(SCHEMA + "name"), literal("Messe"), g),
        Quad(iri("http://ex/p1"), rdf_type, iri("https://odta.io/voc/PointOfInterest"), g),
    ]
    for q in quads:
        store.add(q)
    return store


class TestParse:
    def test_simple_select(self):
        q = parse_query("SELECT ?s WHERE { ?s a <http://schema.org/Event> } LIMIT 10")
        assert q.select_vars == ["s"]
        assert len(q.patterns) == 1
        assert q.limit == 10

    def test_group_by_unsupported(self):
        with pytest.raises(UnsupportedFeature) as exc:
            parse_query("SELECT ?s WHERE { ?s ?p ?o } GROUP BY ?s")
        assert exc.value.name == "GROUP BY"

    def test_union_unsupported(self):
        with pytest.raises(UnsupportedFeature):
            parse_query("SELECT ?s WHERE { { ?s ?p ?o } UNION { ?s ?p ?o } }")

    def test_unbound_projection(self):
        with pytest.raises(QuerySyntaxError):
            parse_query("SELECT ?x WHERE { ?s ?p ?o }")

    def test_prefixes(self):
        q = parse_query(
            "PREFIX s: <http://schema.org/> SELECT ?x WHERE { ?x a s:Event }")
        assert q.patterns[0].object == iri(SCHEMA + "Event")

    def test_optional_and_filter(self):
        q = parse_query(
            "SELECT ?s ?n WHERE { ?s a <http://schema.org/Event> "
            "OPTIONAL { ?s <http://schema.org/name> ?n } FILTER(?s != <http://ex/e1>) }")
        assert len(q.optionals) == 1 and len(q.filters) == 1

    def test_nested_optional_unsupported(self):
        with pytest.raises(UnsupportedFeature):
            parse_query(
                "SELECT ?s WHERE { ?s ?p ?o OPTIONAL { ?s ?p ?o OPTIONAL { ?s ?p ?o } } }")

    def test_syntax_error_position(self):
        with pytest.raises(QuerySyntaxError) as exc:
            parse_query("SELECT ?s WHERE { ?s }")
        assert exc.value.position > 0

    def test_order_by_forms(self):
        assert parse_query("SELECT ?s WHERE { ?s ?p ?o } ORDER BY DESC(?s)").order_by == ("s", "desc")
        assert parse_query("SELECT ?s WHERE { ?s ?p ?o } ORDER BY ?s").order_by == ("s", "asc")


class TestEvaluate:
    def test_typed_listing(self):
        store = fixture_store()
        rows = evaluate(store, parse_query(
            "SELECT ?s WHERE { ?s a <http://schema.org/Event> }"))
        assert {r["s"].value for r in rows} == {"http://ex/e1", "http://ex/e2"}

    def test_join(self):
        store = fixture_store()
        rows = evaluate(store, parse_query(
            "PREFIX s: <http://schema.org/> "
            "SELECT ?n WHERE { ?s a s:Event . ?s s:name ?n } ORDER BY ?n"))
        assert [r["n"].value for r in rows] == ["Messe", "Oktoberfest"]

    def test_optional_left_outer(self):
        store = fixture_store()
        rows = evaluate(store, parse_query(
            "PREFIX s: <http://schema.org/> "
            "SELECT ?s ?n WHERE { ?s a <https://odta.io/voc/PointOfInterest> "
            "OPTIONAL { ?s s:name ?n } }"))
        assert len(rows) == 1 and "n" not in rows[0]

    def test_filter_type_error_is_false(self):
        store = fixture_store()
        rows = evaluate(store, parse_query(
            "PREFIX s: <http://schema.org/> "
            "SELECT ?n WHERE { ?s s:name ?n FILTER(?n < 10) }"))
        assert rows == []

    def test_budget(self):
        store = fixture_store()
        with pytest.raises(QueryTooExpensive):
            evaluate(store, parse_query("SELECT ?s WHERE { ?s ?p ?o . ?x ?y ?z }"), budget=3)

    def test_join_order_independence(self):
        store = fixture_store()
        q1 = parse_query(
            "PREFIX s: <http://schema.org/> SELECT ?s ?n WHERE { ?s a s:Event . ?s s:name ?n }")
        q2 = parse_query(
            "PREFIX s: <http://schema.org/> SELECT ?s ?n WHERE { ?s s:name ?n . ?s a s:Event }")
        assert row_multiset(evaluate(store, q1)) == row_multiset(evaluate(store, q2))

    def test_limit_prefix_property(self):
        store = fixture_store()
        base = "PREFIX s: <http://schema.org/> SELECT ?s WHERE { ?s ?p ?o } ORDER BY ?s "
        small = evaluate(store, parse_query(base + "LIMIT 2"))
        big = evaluate(store, parse_query(base + "LIMIT 5"))
        assert big[:2] == small

    def test_distinct(self):
        store = fixture_store()
        rows = evaluate(store, parse_query("SELECT DISTINCT ?p WHERE { ?s ?p ?o }"))
        assert len(rows) == len({r["p"] for r in rows})


class TestOracleEquivalence:
    def test_randomized_against_nested_loop(self):
        rng = random.Random(99)
        mismatches = 0
        for round_no in range(10):
            store = Store()
            g = store.register_provider(f"p{round_no}")
            quads = list(random_graph(rng, max_quads=120, graph=g))
            for quad in quads:
                store.add(quad)
            for _ in range(20):
                text = random_query_text(rng)
                try:
                    query = parse_query(text)
                except QuerySyntaxError:
                    continue
                got = evaluate(store, query)
                want = nested_loop_evaluate(quads, query)
                if query.order_by:
                    ok = [sorted(r.items()) for r in got] == [sorted(r.items()) for r in want]
                else:
                    ok = row_multiset(got) == row_multiset(want)
                if not ok:
                    mismatches += 1
        assert mismatches == 0


class TestResultsSerialization:
    def test_empty_json(self):
        assert results_to_json(["s"], []) == '{"head": {"vars": ["s"]}, "results": {"bindings": []}}'

    def test_uri_binding(self):
        doc = json.loads(results_to_json(["s"], [{"s": iri("http://ex/e1")}]))
        assert doc["results"]["bindings"][0]["s"] == {"type": "uri", "value": "http://ex/e1"}

    def test_language_literal(self):
        doc = json.loads(results_to_json(["n"], [{"n": literal("Fest", language="de")}]))
        assert doc["results"]["bindings"][0]["n"]["xml:lang"] == "de"

    def test_typed_literal_datatype(self):
        doc = json.loads(results_to_json(["d"], [{
            "d": literal("5", "http://www.w3.org/2001/XMLSchema#integer")}]))
        assert doc["results"]["bindings"][0]["d"]["datatype"].endswith("integer")

    def test_csv(self):
        out = results_to_csv(["s", "n"], [{"s": iri("http://ex/e1"), "n": literal("Fest")}])
        assert out == "s,n\nhttp://ex/e1,Fest\n"
