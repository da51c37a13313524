import json
import math
import os

import pytest
from click.testing import CliRunner

from tkg.cli import main

SCHEMA = "http://schema.org/"
ODTA = "https://odta.io/voc/"

SHAPES_TTL = """
@prefix sh: <http://www.w3.org/ns/shacl#> .
@prefix schema: <http://schema.org/> .
@prefix odta: <https://odta.io/voc/> .
<urn:shape:Event> a sh:NodeShape ;
  sh:targetClass schema:Event ;
  sh:property [ sh:path schema:name ; sh:minCount 1 ] .
<urn:shape:Poi> a sh:NodeShape ;
  sh:targetClass odta:PointOfInterest ;
  sh:property [ sh:path schema:name ; sh:minCount 1 ] .
"""

VALID_NT = """\
<http://ex/e1> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://schema.org/Event> .
<http://ex/e1> <http://schema.org/name> "Oktoberfest" .
"""

INVALID_NT = VALID_NT + """\
<http://ex/e2> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://schema.org/Event> .
"""

POI_NT = """\
<http://ex/p1> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <https://odta.io/voc/PointOfInterest> .
<http://ex/p1> <http://schema.org/name> "Marienplatz" .
<http://ex/p1> <http://schema.org/geo> _:g .
_:g <http://schema.org/latitude> "48.0"^^<http://www.w3.org/2001/XMLSchema#double> .
_:g <http://schema.org/longitude> "11.0"^^<http://www.w3.org/2001/XMLSchema#double> .
"""

MAPPING = {
    "sources": [{"id": "feed", "format": "json", "iterator": "items"}],
    "maps": [{
        "id": "events",
        "source": "feed",
        "subject": {"template": "http://ex/event/{id}"},
        "types": ["http://schema.org/Event"],
        "properties": [
            {"predicate": "http://schema.org/name",
             "object": {"reference": "name"}},
        ],
    }],
}

FEED = {"items": [{"id": "1", "name": "Fest"}, {"id": "2", "name": "Markt"}]}


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def ws(tmp_path):
    """Workspace with config, shapes, dataset, and data files."""
    shapes = tmp_path / "shapes"
    shapes.mkdir()
    (shapes / "shapes.ttl").write_text(SHAPES_TTL)
    dlon = math.degrees(100.0 / (6_371_000.0 * math.cos(math.radians(48.0))))
    (tmp_path / "stations.csv").write_text(
        f"iri,name,lat,lon\nhttp://ex/s1,Station 1,48.0,{11.0 + dlon}\n")
    config = {
        "listenAddress": "127.0.0.1:8099",
        "apiKeys": [{"key": "admin-key-0123456789", "role": "admin"}],
        "providers": ["by", "bw"],
        "shapesDir": "shapes",
        "snapshotPath": "store.nq",
        "prefixes": {"schema": SCHEMA, "odta": ODTA},
        "datasets": [{"id": "stations", "path": "stations.csv",
                      "kindIri": "http://schema.org/Place", "format": "csv"}],
        "enrichment": {"by": {
            "datasetIds": ["stations"],
            "targetTypeIris": [ODTA + "PointOfInterest"],
            "radiusMeters": 1000,
            "maxLinksPerPoi": 5,
            "detourFactor": 1.3,
        }},
    }
    (tmp_path / "config.json").write_text(json.dumps(config))
    (tmp_path / "valid.nt").write_text(VALID_NT)
    (tmp_path / "invalid.nt").write_text(INVALID_NT)
    (tmp_path / "poi.nt").write_text(POI_NT)
    (tmp_path / "garbage.nt").write_text("not rdf at all\n")
    (tmp_path / "mapping.json").write_text(json.dumps(MAPPING))
    (tmp_path / "feed.json").write_text(json.dumps(FEED))
    (tmp_path / "query.rq").write_text(
        "SELECT ?s ?n WHERE { ?s a <http://schema.org/Event> . "
        "?s <http://schema.org/name> ?n } ORDER BY ?s")
    return tmp_path


def cfg(ws):
    return str(ws / "config.json")


class TestValidate:
    def test_all_valid_exit_0(self, runner, ws):
        r = runner.invoke(main, ["validate", "--shapes", str(ws / "shapes"),
                                 "--data", str(ws / "valid.nt")])
        assert r.exit_code == 0
        line = json.loads(r.stdout.strip().splitlines()[0])
        assert line == {"instance": "http://ex/e1", "shaped": True,
                        "conforms": True, "violations": []}

    def test_one_invalid_exit_1(self, runner, ws):
        r = runner.invoke(main, ["validate", "--shapes", str(ws / "shapes"),
                                 "--data", str(ws / "invalid.nt")])
        assert r.exit_code == 1
        lines = [json.loads(l) for l in r.stdout.strip().splitlines()]
        bad = [l for l in lines if not l["conforms"]]
        assert len(bad) == 1 and bad[0]["instance"] == "http://ex/e2"
        assert bad[0]["violations"][0]["constraint"] == "minCount"

    def test_garbage_exit_2(self, runner, ws):
        r = runner.invoke(main, ["validate", "--shapes", str(ws / "shapes"),
                                 "--data", str(ws / "garbage.nt")])
        assert r.exit_code == 2


class TestIngest:
    def test_valid_batch(self, runner, ws):
        r = runner.invoke(main, ["ingest", "--config", cfg(ws),
                                 "--provider", "by", "--data", str(ws / "valid.nt")])
        assert r.exit_code == 0, r.output
        report = json.loads(r.stdout)
        assert report["accepted"] == ["http://ex/e1"]
        assert (ws / "store.nq").exists()

    def test_idempotent_snapshot_bytes(self, runner, ws):
        runner.invoke(main, ["ingest", "--config", cfg(ws),
                             "--provider", "by", "--data", str(ws / "valid.nt")])
        first = (ws / "store.nq").read_bytes()
        runner.invoke(main, ["ingest", "--config", cfg(ws),
                             "--provider", "by", "--data", str(ws / "valid.nt")])
        assert (ws / "store.nq").read_bytes() == first

    def test_invalid_instance_exit_1(self, runner, ws):
        r = runner.invoke(main, ["ingest", "--config", cfg(ws),
                                 "--provider", "by", "--data", str(ws / "invalid.nt")])
        assert r.exit_code == 1
        report = json.loads(r.stdout)
        assert report["rejected"][0]["instance"] == "http://ex/e2"

    def test_unknown_provider_exit_3(self, runner, ws):
        r = runner.invoke(main, ["ingest", "--config", cfg(ws),
                                 "--provider", "xx", "--data", str(ws / "valid.nt")])
        assert r.exit_code == 3

    def test_garbage_exit_2(self, runner, ws):
        r = runner.invoke(main, ["ingest", "--config", cfg(ws),
                                 "--provider", "by", "--data", str(ws / "garbage.nt")])
        assert r.exit_code == 2

    def test_held_lock_exit_3(self, runner, ws):
        (ws / "store.nq.lock").write_text("held")
        r = runner.invoke(main, ["ingest", "--config", cfg(ws),
                                 "--provider", "by", "--data", str(ws / "valid.nt")])
        assert r.exit_code == 3


class TestMap:
    def test_maps_feed(self, runner, ws):
        out = ws / "out.nt"
        r = runner.invoke(main, ["map", "--mapping", str(ws / "mapping.json"),
                                 "--source", str(ws / "feed.json"),
                                 "--out", str(out)])
        assert r.exit_code == 0, r.output
        counts = json.loads(r.stdout)
        assert counts["recordsSeen"] == 2 and counts["quads"] == 4
        text = out.read_text()
        assert "<http://ex/event/1> <http://schema.org/name> \"Fest\" ." in text

    def test_bad_mapping_exit_2(self, runner, ws):
        (ws / "bad.json").write_text("{\"maps\": 3}")
        r = runner.invoke(main, ["map", "--mapping", str(ws / "bad.json"),
                                 "--source", str(ws / "feed.json"),
                                 "--out", str(ws / "out.nt")])
        assert r.exit_code == 2


class TestEnrich:
    def test_one_link(self, runner, ws):
        runner.invoke(main, ["ingest", "--config", cfg(ws),
                             "--provider", "by", "--data", str(ws / "poi.nt")])
        r = runner.invoke(main, ["enrich", "--config", cfg(ws), "--provider", "by"])
        assert r.exit_code == 0, r.output
        assert json.loads(r.stdout)["links"] == 1
        assert "1 link" in r.stderr
        assert "urn:tkg:enrichment" in (ws / "store.nq").read_text()

    def test_no_pois_zero_links(self, runner, ws):
        r = runner.invoke(main, ["enrich", "--config", cfg(ws), "--provider", "by"])
        assert r.exit_code == 0
        assert json.loads(r.stdout)["links"] == 0

    def test_unknown_dataset_exit_3(self, runner, ws):
        doc = json.loads((ws / "config.json").read_text())
        doc["enrichment"]["by"]["datasetIds"] = ["nope"]
        doc["datasets"] = []
        (ws / "config.json").write_text(json.dumps(doc))
        r = runner.invoke(main, ["enrich", "--config", cfg(ws), "--provider", "by"])
        assert r.exit_code == 3

    def test_missing_enrichment_config_exit_3(self, runner, ws):
        r = runner.invoke(main, ["enrich", "--config", cfg(ws), "--provider", "bw"])
        assert r.exit_code == 3


class TestQuery:
    def test_json_rows(self, runner, ws):
        runner.invoke(main, ["ingest", "--config", cfg(ws),
                             "--provider", "by", "--data", str(ws / "valid.nt")])
        r = runner.invoke(main, ["query", "--config", cfg(ws),
                                 "--query", str(ws / "query.rq")])
        assert r.exit_code == 0, r.output
        doc = json.loads(r.stdout)
        assert doc["results"]["bindings"][0]["n"]["value"] == "Oktoberfest"

    def test_csv(self, runner, ws):
        runner.invoke(main, ["ingest", "--config", cfg(ws),
                             "--provider", "by", "--data", str(ws / "valid.nt")])
        r = runner.invoke(main, ["query", "--config", cfg(ws),
                                 "--query", str(ws / "query.rq"),
                                 "--format", "csv"])
        assert r.stdout == "s,n\nhttp://ex/e1,Oktoberfest\n"

    def test_deterministic_stdout(self, runner, ws):
        runner.invoke(main, ["ingest", "--config", cfg(ws),
                             "--provider", "by", "--data", str(ws / "valid.nt")])
        args = ["query", "--config", cfg(ws), "--query", str(ws / "query.rq")]
        assert runner.invoke(main, args).stdout == runner.invoke(main, args).stdout

    def test_unsupported_exit_2(self, runner, ws):
        (ws / "bad.rq").write_text("SELECT ?s WHERE { ?s ?p ?o } GROUP BY ?s")
        r = runner.invoke(main, ["query", "--config", cfg(ws),
                                 "--query", str(ws / "bad.rq")])
        assert r.exit_code == 2

    def test_empty_result_valid_document(self, runner, ws):
        r = runner.invoke(main, ["query", "--config", cfg(ws),
                                 "--query", str(ws / "query.rq")])
        assert json.loads(r.stdout)["results"]["bindings"] == []


class TestExport:
    def test_deterministic_and_round_trip(self, runner, ws):
        runner.invoke(main, ["ingest", "--config", cfg(ws),
                             "--provider", "by", "--data", str(ws / "valid.nt")])
        out1, out2 = ws / "dump1.nq", ws / "dump2.nq"
        assert runner.invoke(main, ["export", "--config", cfg(ws),
                                    "--out", str(out1)]).exit_code == 0
        assert runner.invoke(main, ["export", "--config", cfg(ws),
                                    "--out", str(out2)]).exit_code == 0
        assert out1.read_bytes() == out2.read_bytes()
        assert out1.read_bytes() == (ws / "store.nq").read_bytes()

    def test_empty_store(self, runner, ws):
        out = ws / "dump.nq"
        r = runner.invoke(main, ["export", "--config", cfg(ws), "--out", str(out)])
        assert r.exit_code == 0 and out.read_text() == ""


class TestServe:
    def test_missing_config_exit_3(self, runner, tmp_path):
        r = runner.invoke(main, ["serve", "--config", str(tmp_path / "none.json")])
        assert r.exit_code == 3
