import json
import random

import pytest

from tkg.rdf import DEFAULT_GRAPH, RDF_TYPE, Graph, Quad, iri, literal
from tkg.rml import (
    MappingError,
    SourceError,
    execute,
    parse_mapping,
    parse_template,
    resolve_field,
)

EVENT_MAPPING = json.dumps({
    "sources": [{"id": "events.json", "format": "json", "iterator": "$.events"}],
    "maps": [{
        "id": "event-map",
        "source": "events.json",
        "subject": {"template": "http://ex/event/{id}"},
        "types": ["http://schema.org/Event"],
        "properties": [
            {"predicate": "http://schema.org/name", "object": {"reference": "title"}},
        ],
    }],
})


class TestParseMapping:
    def test_event_mapping(self):
        maps = parse_mapping(EVENT_MAPPING)
        assert len(maps) == 1
        m = maps[0]
        assert m.logical_source.iterator == "$.events"
        assert m.type_iris == ("http://schema.org/Event",)
        assert m.subject_map.kind == "template"

    def test_unbalanced_template(self):
        bad = json.loads(EVENT_MAPPING)
        bad["maps"][0]["subject"]["template"] = "http://ex/{"
        with pytest.raises(MappingError):
            parse_mapping(json.dumps(bad))

    def test_empty_map_list(self):
        assert parse_mapping('{"sources": [], "maps": []}') == []

    def test_undeclared_source(self):
        bad = json.loads(EVENT_MAPPING)
        bad["maps"][0]["source"] = "nope"
        with pytest.raises(MappingError) as exc:
            parse_mapping(json.dumps(bad))
        assert "nope" in str(exc.value)

    def test_literal_subject_rejected(self):
        bad = json.loads(EVENT_MAPPING)
        bad["maps"][0]["subject"] = {"reference": "id"}
        with pytest.raises(MappingError):
            parse_mapping(json.dumps(bad))

    def test_csv_source_with_iterator_rejected(self):
        with pytest.raises(MappingError):
            parse_mapping('{"sources":[{"id":"x","format":"csv","iterator":"$.a"}],"maps":[]}')

    def test_brace_escapes(self):
        parts = parse_template("a{{b}}c{d}", "$")
        assert parts == (("text", "a{b}c"), ("field", "d"), ("text", ""))


class TestResolveField:
    def test_nested_bracket_path(self):
        record = {"a": {"b": [{"c": 5}]}}
        assert resolve_field(record, "a.b[0].c") == 5

    def test_missing_field(self):
        assert resolve_field({"a": 1}, "b") is None

    def test_index_out_of_range(self):
        assert resolve_field({"a": [1]}, "a[3]") is None


class TestExecute:
    def test_basic_record(self):
        (tmap,) = parse_mapping(EVENT_MAPPING)
        data = json.dumps({"events": [{"id": "7", "title": "Messe"}]}).encode()
        result = execute(tmap, data)
        assert result.graph == Graph([
            Quad(iri("http://ex/event/7"), iri(RDF_TYPE), iri("http://schema.org/Event"), DEFAULT_GRAPH),
            Quad(iri("http://ex/event/7"), iri("http://schema.org/name"), literal("Messe"), DEFAULT_GRAPH),
        ])

    def test_missing_optional_field_skips_quad(self):
        (tmap,) = parse_mapping(EVENT_MAPPING)
        data = json.dumps({"events": [{"id": "7"}]}).encode()
        result = execute(tmap, data)
        assert len(result.graph) == 1
        assert result.values_skipped == 1

    def test_missing_subject_field_skips_record(self):
        (tmap,) = parse_mapping(EVENT_MAPPING)
        data = json.dumps({"events": [{"title": "NoId"}, {"id": "1", "title": "Ok"}]}).encode()
        result = execute(tmap, data)
        assert result.records_skipped == 1
        assert len(result.graph) == 2

    def test_csv_percent_encoding(self):
        mapping = json.dumps({
            "sources": [{"id": "pois.csv", "format": "csv"}],
            "maps": [{
                "id": "poi-map",
                "source": "pois.csv",
                "subject": {"template": "http://ex/poi/{ref}"},
                "types": ["http://schema.org/Place"],
                "properties": [],
            }],
        })
        (tmap,) = parse_mapping(mapping)
        data = b"ref\na b\nx\ny/z\n"
        result = execute(tmap, data)
        subjects = {q.subject.value for q in result.graph}
        # expected IRIs frozen from RFC 3986 percent-encoding applied by hand
        assert subjects == {"http://ex/poi/a%20b", "http://ex/poi/x", "http://ex/poi/y%2Fz"}
        assert result.records_seen == 3

    def test_unparseable_source(self):
        (tmap,) = parse_mapping(EVENT_MAPPING)
        with pytest.raises(SourceError):
            execute(tmap, b"{nope")

    def test_duplicates_collapse(self):
        (tmap,) = parse_mapping(EVENT_MAPPING)
        data = json.dumps({"events": [{"id": "7", "title": "A"}, {"id": "7", "title": "A"}]}).encode()
        assert len(execute(tmap, data).graph) == 2

    def test_record_independence(self):
        (tmap,) = parse_mapping(EVENT_MAPPING)
        rng = random.Random(3)
        records = [{"id": str(i), "title": f"T{rng.randint(0, 5)}"} for i in range(20)]
        whole = execute(tmap, json.dumps({"events": records}).encode()).graph
        parts = Graph()
        for chunk in (records[:7], records[7:]):
            parts = parts.union(execute(tmap, json.dumps({"events": chunk}).encode()).graph)
        assert whole == parts

    def test_determinism(self):
        (tmap,) = parse_mapping(EVENT_MAPPING)
        data = json.dumps({"events": [{"id": "1", "title": "x"}]}).encode()
        assert execute(tmap, data).graph == execute(tmap, data).graph

    def test_typed_reference(self):
        mapping = json.dumps({
            "sources": [{"id": "s", "format": "json", "iterator": "$.rows"}],
            "maps": [{
                "id": "m", "source": "s",
                "subject": {"template": "http://ex/{id}"},
                "properties": [
                    {"predicate": "http://schema.org/latitude",
                     "object": {"reference": "lat", "datatype": "http://www.w3.org/2001/XMLSchema#double"}},
                ],
            }],
        })
        (tmap,) = parse_mapping(mapping)
        data = json.dumps({"rows": [{"id": "1", "lat": 48.1}]}).encode()
        (quad,) = [q for q in execute(tmap, data).graph]
        assert quad.object == literal("48.1", "http://www.w3.org/2001/XMLSchema#double")
