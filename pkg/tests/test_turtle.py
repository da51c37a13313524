import random

import pytest

from tkg.rdf import (
    DEFAULT_GRAPH,
    RDF_FIRST,
    RDF_NIL,
    RDF_REST,
    RDF_TYPE,
    Graph,
    Quad,
    SyntaxError_,
    UnknownPrefix,
    bnode,
    iri,
    isomorphic,
    literal,
)
from tkg.turtle import parse_turtle, serialize_turtle


def q(s, p, o):
    return Quad(s, p, o, DEFAULT_GRAPH)


class TestParse:
    def test_a_keyword(self):
        g = parse_turtle("@prefix s: <http://schema.org/> . <http://ex/e1> a s:Event .")
        assert g == Graph([q(iri("http://ex/e1"), iri(RDF_TYPE), iri("http://schema.org/Event"))])

    def test_object_list(self):
        g = parse_turtle('@prefix s: <http://schema.org/> . <http://ex/e1> s:name "A", "B" .')
        assert len(g) == 2
        assert {quad.object for quad in g} == {literal("A"), literal("B")}

    def test_unknown_prefix(self):
        with pytest.raises(UnknownPrefix) as exc:
            parse_turtle("<http://ex/e1> a x:Event .")
        assert exc.value.prefix == "x"

    def test_predicate_list(self):
        g = parse_turtle(
            '@prefix s: <http://schema.org/> .\n'
            '<http://ex/e1> a s:Event ; s:name "Fest" .'
        )
        assert len(g) == 2

    def test_anonymous_bnode(self):
        g = parse_turtle(
            '@prefix s: <http://schema.org/> .\n'
            '<http://ex/p1> s:geo [ s:latitude "48.0" ; s:longitude "11.0" ] .'
        )
        assert len(g) == 3
        geo = [quad.object for quad in g if quad.predicate.value.endswith("geo")][0]
        assert geo.is_bnode

    def test_collection(self):
        g = parse_turtle('<http://ex/a> <http://ex/p> ("x" "y") .')
        firsts = [quad for quad in g if quad.predicate.value == RDF_FIRST]
        rests = [quad for quad in g if quad.predicate.value == RDF_REST]
        assert len(firsts) == 2 and len(rests) == 2
        assert any(quad.object == iri(RDF_NIL) for quad in rests)

    def test_empty_collection(self):
        g = parse_turtle("<http://ex/a> <http://ex/p> () .")
        assert g == Graph([q(iri("http://ex/a"), iri("http://ex/p"), iri(RDF_NIL))])

    def test_typed_literal_with_pname_datatype(self):
        g = parse_turtle(
            '@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .\n'
            '<http://ex/a> <http://ex/p> "5"^^xsd:integer .'
        )
        (quad,) = g
        assert quad.object.datatype.endswith("integer")

    def test_language_literal(self):
        g = parse_turtle('<http://ex/a> <http://ex/p> "Fest"@de .')
        (quad,) = g
        assert quad.object.language == "de"

    def test_bnode_labels_deterministic(self):
        text = '<http://ex/a> <http://ex/p> [ <http://ex/q> "x" ] .'
        assert parse_turtle(text) == parse_turtle(text)

    def test_syntax_error_position(self):
        with pytest.raises(SyntaxError_) as exc:
            parse_turtle("<http://ex/a> <http://ex/p>\n!")
        assert exc.value.line == 2

    def test_missing_dot(self):
        with pytest.raises(SyntaxError_):
            parse_turtle('<http://ex/a> <http://ex/p> "x"')


class TestSerialize:
    def test_empty(self):
        assert parse_turtle(serialize_turtle(Graph())) == Graph()

    def test_round_trip_with_prefixes(self):
        g = parse_turtle(
            '@prefix s: <http://schema.org/> .\n'
            '<http://ex/e1> a s:Event ; s:name "Fest"@de, "Fest"@en .'
        )
        out = serialize_turtle(g, {"s": "http://schema.org/"})
        assert "s:name" in out
        assert isomorphic(parse_turtle(out), g)

    def test_randomized_round_trip(self):
        from .gen import random_graph

        rng = random.Random(11)
        for _ in range(200):
            g = random_graph(rng)
            assert isomorphic(parse_turtle(serialize_turtle(g)), g)
