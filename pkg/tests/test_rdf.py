import random

import pytest

from tkg.rdf import (
    DEFAULT_GRAPH,
    RDF_TYPE,
    XSD_STRING,
    Graph,
    Quad,
    SyntaxError_,
    bnode,
    iri,
    isomorphic,
    literal,
    parse_nquads,
    parse_ntriples,
    serialize_nquads,
    serialize_ntriples,
)


def q(s, p, o, g=DEFAULT_GRAPH):
    return Quad(s, p, o, g)


class TestTerm:
    def test_iri_must_be_absolute(self):
        with pytest.raises(ValueError):
            iri("relative/path")

    def test_bad_bnode_label(self):
        with pytest.raises(ValueError):
            bnode("has space")

    def test_language_forces_langstring(self):
        t = literal("Fest", language="de")
        assert t.datatype.endswith("langString")

    def test_plain_literal_is_xsd_string(self):
        assert literal("x").datatype == XSD_STRING

    def test_ntriples_token_escaping(self):
        t = literal('say "hi"\n')
        assert t.ntriples() == '"say \\"hi\\"\\n"'


class TestQuad:
    def test_literal_subject_rejected(self):
        with pytest.raises(ValueError):
            q(literal("x"), iri("http://ex/p"), literal("y"))

    def test_bnode_predicate_rejected(self):
        with pytest.raises(ValueError):
            q(iri("http://ex/a"), bnode("b0"), literal("y"))


class TestGraph:
    def test_set_semantics(self):
        quad = q(iri("http://ex/a"), iri("http://ex/p"), literal("x"))
        assert len(Graph([quad, quad])) == 1


class TestParseNTriples:
    def test_single_statement(self):
        g = parse_ntriples('<http://ex/a> <http://ex/p> "x" .')
        assert len(g) == 1
        (quad,) = g
        assert quad.object == literal("x")
        assert quad.graph == DEFAULT_GRAPH

    def test_empty_input(self):
        assert len(parse_ntriples("")) == 0

    def test_missing_object_is_syntax_error(self):
        with pytest.raises(SyntaxError_) as exc:
            parse_ntriples("<http://ex/a> <http://ex/p>")
        assert exc.value.line == 1

    def test_all_or_nothing(self):
        text = '<http://ex/a> <http://ex/p> "x" .\ngarbage\n'
        with pytest.raises(SyntaxError_) as exc:
            parse_ntriples(text)
        assert exc.value.line == 2

    def test_comments_and_blank_lines(self):
        g = parse_ntriples('# hi\n\n<http://ex/a> <http://ex/p> "x" .\n')
        assert len(g) == 1

    def test_typed_and_lang_literals(self):
        g = parse_ntriples(
            '<http://ex/a> <http://ex/p> "5"^^<http://www.w3.org/2001/XMLSchema#integer> .\n'
            '<http://ex/a> <http://ex/p> "Fest"@de .\n'
        )
        objs = {quad.object for quad in g}
        assert literal("5", "http://www.w3.org/2001/XMLSchema#integer") in objs
        assert literal("Fest", language="de") in objs

    def test_uchar_escape(self):
        g = parse_ntriples('<http://ex/a> <http://ex/p> "\\u00E9" .')
        (quad,) = g
        assert quad.object.value == "é"


class TestSerializeNTriples:
    def test_empty(self):
        assert serialize_ntriples(Graph()) == ""

    def test_sorted_and_order_insensitive(self):
        a = q(iri("http://ex/a"), iri("http://ex/p"), literal("x"))
        b = q(iri("http://ex/b"), iri("http://ex/p"), literal("y"))
        assert serialize_ntriples(Graph([a, b])) == serialize_ntriples(Graph([b, a]))

    def test_round_trip_single(self):
        g = Graph([q(iri("http://ex/a"), iri("http://ex/p"), literal("x"))])
        assert parse_ntriples(serialize_ntriples(g)) == g


class TestNQuads:
    def test_graph_component_round_trip(self):
        g = Graph([q(iri("http://ex/a"), iri("http://ex/p"), literal("x"), iri("urn:tkg:provider:by"))])
        text = serialize_nquads(g)
        assert "urn:tkg:provider:by" in text
        assert parse_nquads(text) == g


class TestIsomorphic:
    def test_ground_graphs(self):
        g = Graph([q(iri("http://ex/a"), iri("http://ex/p"), literal("x"))])
        assert isomorphic(g, g)

    def test_bnode_relabeling(self):
        p = iri("http://ex/p")
        g1 = Graph([q(iri("http://ex/a"), p, bnode("b0")), q(bnode("b0"), p, literal("x"))])
        g2 = Graph([q(iri("http://ex/a"), p, bnode("zz")), q(bnode("zz"), p, literal("x"))])
        assert isomorphic(g1, g2)

    def test_structure_difference_detected(self):
        p = iri("http://ex/p")
        g1 = Graph([q(iri("http://ex/a"), p, bnode("b0")), q(bnode("b0"), p, literal("x"))])
        g2 = Graph([q(iri("http://ex/a"), p, bnode("b0")), q(bnode("b0"), p, literal("y"))])
        assert not isomorphic(g1, g2)

    def test_bnode_cycle(self):
        p = iri("http://ex/p")
        g1 = Graph([q(bnode("x"), p, bnode("y")), q(bnode("y"), p, bnode("x"))])
        g2 = Graph([q(bnode("u"), p, bnode("v")), q(bnode("v"), p, bnode("u"))])
        assert isomorphic(g1, g2)


class TestRandomizedRoundTrip:
    def test_ntriples_round_trip_200(self):
        from .gen import random_graph

        rng = random.Random(7)
        for _ in range(200):
            g = random_graph(rng)
            assert isomorphic(parse_ntriples(serialize_ntriples(g)), g)

    def test_parse_determinism(self):
        text = '<http://ex/a> <http://ex/p> _:b0 .\n_:b0 <http://ex/p> "x" .\n'
        assert parse_ntriples(text) == parse_ntriples(text)
