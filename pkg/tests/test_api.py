import json
import math

import pytest
from fastapi.testclient import TestClient

from tkg.api import AppState, create_app
from tkg.config import ApiKey, ServerConfig
from tkg.formats import RdfFormat, parse
from tkg.geo import EnrichmentDataset, EnrichmentEntity, GeoPoint, build_index
from tkg.rdf import ENRICHMENT_GRAPH, Graph, Quad, RDF_TYPE, bnode, iri, isomorphic, literal
from tkg.shacl import load_shapes
from tkg.store import Store
from tkg.turtle import parse_turtle

SCHEMA = "http://schema.org/"
ODTA = "https://odta.io/voc/"
CC = "https://creativecommons.org/licenses/by-sa/4.0/"

CONSUMER_KEY = "consumer-key-0123456789"
PROVIDER_KEY = "provider-by-0123456789"
ADMIN_KEY = "admin-key-0123456789ab"

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

XSD_DOUBLE = "http://www.w3.org/2001/XMLSchema#double"


def seed_store() -> Store:
    store = Store()
    g_by = store.register_provider("by")
    store.register_provider("bw")
    rdf_type = iri(RDF_TYPE)
    quads = [
        Quad(iri("http://ex/e1"), rdf_type, iri(SCHEMA + "Event"), g_by),
        Quad(iri("http://ex/e1"), iri(SCHEMA + "name"), literal("Oktoberfest"), g_by),
        Quad(iri("http://ex/e1"), iri(SCHEMA + "license"), iri(CC), g_by),
        Quad(iri("http://ex/e2"), rdf_type, iri(SCHEMA + "Event"), g_by),
        Quad(iri("http://ex/e2"), iri(SCHEMA + "name"), literal("Festival X"), g_by),
        Quad(iri("http://ex/p1"), rdf_type, iri(ODTA + "PointOfInterest"), g_by),
        Quad(iri("http://ex/p1"), iri(SCHEMA + "name"), literal("Marienplatz"), g_by),
        Quad(iri("http://ex/p1"), iri(SCHEMA + "license"), iri(CC), g_by),
        Quad(iri("http://ex/p1"), iri(SCHEMA + "geo"), bnode("g1"), g_by),
        Quad(bnode("g1"), iri(SCHEMA + "latitude"), literal("48.0", XSD_DOUBLE), g_by),
        Quad(bnode("g1"), iri(SCHEMA + "longitude"), literal("11.0", XSD_DOUBLE), g_by),
    ]
    for q in quads:
        store.add(q)
    return store


def make_state(tmp_path=None) -> AppState:
    store = seed_store()
    catalog = load_shapes(parse_turtle(SHAPES_TTL))
    config = ServerConfig(
        api_keys=[
            ApiKey(CONSUMER_KEY, "consumer"),
            ApiKey(PROVIDER_KEY, "provider", "by"),
            ApiKey(ADMIN_KEY, "admin"),
        ],
        providers=["by", "bw"],
        prefixes={"schema": SCHEMA, "odta": ODTA},
        snapshot_path=str(tmp_path / "store.nq") if tmp_path else None,
        base_dir=str(tmp_path) if tmp_path else ".",
    )
    dlon = math.degrees(100.0 / (6_371_000.0 * math.cos(math.radians(48.0))))
    station = EnrichmentEntity("http://ex/s1", "Station 1", GeoPoint(48.0, 11.0 + dlon))
    dataset = EnrichmentDataset("stations", SCHEMA + "Place", [station])
    return AppState(store, catalog, config, {"stations": build_index(dataset)})


@pytest.fixture()
def state():
    return make_state()


@pytest.fixture()
def client(state):
    return TestClient(create_app(state))


def h(key=CONSUMER_KEY):
    return {"X-API-Key": key}


class TestAuth:
    @pytest.mark.parametrize("method,path", [
        ("POST", "/sparql"), ("GET", "/search?q=fest"),
        ("GET", "/instance?uri=http://ex/e1"), ("POST", "/ingest"),
        ("GET", "/enrichment/config"), ("PUT", "/enrichment/config"),
        ("GET", "/stats"),
    ])
    def test_401_without_key(self, client, method, path):
        r = client.request(method, path)
        assert r.status_code == 401
        assert r.json()["code"] == "unauthorized"
        assert "http://ex" not in r.text

    def test_401_with_bad_key(self, client):
        r = client.get("/stats", headers=h("wrong-key-0123456789"))
        assert r.status_code == 401


class TestSparql:
    def test_select_json(self, client):
        r = client.post(
            "/sparql", headers=h(),
            content="SELECT ?s WHERE { ?s a <http://schema.org/Event> } LIMIT 10")
        assert r.status_code == 200
        doc = r.json()
        assert doc["head"]["vars"] == ["s"]
        assert len(doc["results"]["bindings"]) <= 10

    def test_csv_format(self, client):
        r = client.post(
            "/sparql?format=csv", headers=h(),
            content="SELECT ?s WHERE { ?s a <http://schema.org/Event> }")
        assert r.status_code == 200
        assert r.headers["content-type"].startswith("text/csv")
        assert r.text.startswith("s\n")

    def test_unsupported_feature(self, client):
        r = client.post("/sparql", headers=h(),
                        content="SELECT ?s WHERE { ?s ?p ?o } GROUP BY ?s")
        assert r.status_code == 400
        assert r.json()["code"] == "UnsupportedFeature"

    def test_syntax_error_position(self, client):
        r = client.post("/sparql", headers=h(), content="SELECT ?s WHERE { ?s }")
        assert r.status_code == 400
        body = r.json()
        assert body["code"] == "SyntaxError"
        assert body["details"]["position"] > 0

    def test_payload_cap(self, client):
        r = client.post("/sparql", headers=h(), content="#" * (64 * 1024 + 1))
        assert r.status_code == 413


class TestSearch:
    def test_ranking_prefix_before_substring(self, client):
        r = client.get("/search?q=fest", headers=h())
        names = [hit["name"] for hit in r.json()["hits"]]
        assert names == ["Festival X", "Oktoberfest"]

    def test_type_filter_curie(self, client):
        r = client.get("/search?q=fest&type=schema:Event", headers=h())
        assert {hit["instance"] for hit in r.json()["hits"]} == {
            "http://ex/e1", "http://ex/e2"}

    def test_type_filter_excludes(self, client):
        r = client.get("/search?q=marien&type=schema:Event", headers=h())
        assert r.json()["hits"] == []

    def test_unknown_prefix(self, client):
        r = client.get("/search?q=fest&type=nope:Event", headers=h())
        assert r.status_code == 400
        assert r.json()["code"] == "unknownPrefix"

    def test_empty_query(self, client):
        r = client.get("/search?q=%20", headers=h())
        assert r.status_code == 400

    def test_no_hits(self, client):
        r = client.get("/search?q=zzzz", headers=h())
        assert r.status_code == 200 and r.json()["hits"] == []

    def test_license_attached(self, client):
        r = client.get("/search?q=oktoberfest", headers=h())
        assert r.json()["hits"][0]["license"] == CC

    def test_deterministic_without_writes(self, client):
        a = client.get("/search?q=fest", headers=h()).json()
        b = client.get("/search?q=fest", headers=h()).json()
        assert a == b

    def test_limit(self, client):
        r = client.get("/search?q=fest&limit=1", headers=h())
        assert len(r.json()["hits"]) == 1


class TestInstance:
    def test_html_contains_name_types_license(self, client):
        r = client.get("/instance?uri=http://ex/p1", headers=h())
        assert r.status_code == 200
        assert "Marienplatz" in r.text
        assert ODTA + "PointOfInterest" in r.text
        assert CC in r.text

    def test_rdf_round_trip(self, client, state):
        r = client.get("/instance?uri=http://ex/p1&format=ntriples", headers=h())
        assert r.status_code == 200
        got = parse(r.text, RdfFormat.NTRIPLES)
        expected = Graph(
            [Quad(q.subject, q.predicate, q.object, iri("urn:tkg:default")) for q in
             state.store.closure_in_graph(iri("http://ex/p1"),
                                          state.store.provider_graphs["by"])])
        assert isomorphic(got, expected)

    def test_accept_negotiation(self, client):
        r = client.get("/instance?uri=http://ex/e1", headers=h(),
                       params=None)
        assert r.headers["content-type"].startswith("text/html")
        r = client.get("/instance?uri=http://ex/e1",
                       headers={**h(), "Accept": "text/turtle"})
        assert r.headers["content-type"].startswith("text/turtle")

    def test_404_unknown(self, client):
        r = client.get("/instance?uri=http://ex/nothing", headers=h())
        assert r.status_code == 404

    def test_400_relative(self, client):
        r = client.get("/instance?uri=not-absolute", headers=h())
        assert r.status_code == 400


NEW_BATCH = """
<http://ex/e9> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://schema.org/Event> .
<http://ex/e9> <http://schema.org/name> "Herbstmarkt" .
<http://ex/e10> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://schema.org/Event> .
"""


class TestIngest:
    def test_batch_with_one_invalid(self, client):
        r = client.post("/ingest", headers={**h(PROVIDER_KEY),
                                            "Content-Type": "application/n-triples"},
                        content=NEW_BATCH)
        assert r.status_code == 200
        doc = r.json()
        assert doc["accepted"] == ["http://ex/e9"]
        assert len(doc["rejected"]) == 1
        assert doc["rejected"][0]["instance"] == "http://ex/e10"
        violations = doc["rejected"][0]["report"]["violations"]
        assert violations[0]["constraint"] == "minCount"

    def test_provider_mismatch_403(self, client):
        r = client.post("/ingest?provider=bw",
                        headers={**h(PROVIDER_KEY),
                                 "Content-Type": "application/n-triples"},
                        content=NEW_BATCH)
        assert r.status_code == 403

    def test_consumer_forbidden(self, client):
        r = client.post("/ingest", headers={**h(),
                                            "Content-Type": "application/n-triples"},
                        content=NEW_BATCH)
        assert r.status_code == 403

    def test_admin_any_provider(self, client):
        r = client.post("/ingest?provider=bw",
                        headers={**h(ADMIN_KEY),
                                 "Content-Type": "application/n-triples"},
                        content='<http://ex/e9> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://schema.org/Event> .\n'
                                '<http://ex/e9> <http://schema.org/name> "X" .\n')
        assert r.status_code == 200
        assert r.json()["accepted"] == ["http://ex/e9"]

    def test_malformed_payload(self, client):
        r = client.post("/ingest", headers={**h(PROVIDER_KEY),
                                            "Content-Type": "application/n-triples"},
                        content="this is not ntriples")
        assert r.status_code == 400
        body = r.json()
        assert body["code"] == "SyntaxError"
        assert "line" in body["details"]

    def test_unsupported_content_type(self, client):
        r = client.post("/ingest", headers={**h(PROVIDER_KEY),
                                            "Content-Type": "text/plain"},
                        content=NEW_BATCH)
        assert r.status_code == 415

    def test_unknown_provider(self, client):
        r = client.post("/ingest?provider=xx",
                        headers={**h(ADMIN_KEY),
                                 "Content-Type": "application/n-triples"},
                        content=NEW_BATCH)
        assert r.status_code == 404


VALID_ENRICH = {
    "datasetIds": ["stations"],
    "targetTypeIris": [ODTA + "PointOfInterest"],
    "radiusMeters": 2000,
    "maxLinksPerPoi": 5,
    "detourFactor": 1.3,
}


class TestEnrichmentConfig:
    def test_get_defaults(self, client):
        r = client.get("/enrichment/config", headers=h(PROVIDER_KEY))
        assert r.status_code == 200
        doc = r.json()
        assert doc["providerId"] == "by"
        assert doc["radiusMeters"] == 1000.0

    def test_put_then_get(self, client):
        r = client.put("/enrichment/config", headers=h(PROVIDER_KEY),
                       json=VALID_ENRICH)
        assert r.status_code == 200
        r = client.get("/enrichment/config", headers=h(PROVIDER_KEY))
        assert r.json()["radiusMeters"] == 2000

    def test_put_materializes_links(self, client, state):
        client.put("/enrichment/config", headers=h(PROVIDER_KEY),
                   json=VALID_ENRICH)
        enrichment = state.store.match(g=ENRICHMENT_GRAPH)
        assert len(enrichment) == 4

    def test_detour_change_rescales_walking(self, client, state):
        client.put("/enrichment/config", headers=h(PROVIDER_KEY), json=VALID_ENRICH)
        def walking():
            for q in state.store.match(g=ENRICHMENT_GRAPH):
                if q.predicate.value.endswith("walkingDistanceMeters"):
                    return int(q.object.value)
        w13 = walking()
        client.put("/enrichment/config", headers=h(PROVIDER_KEY),
                   json={**VALID_ENRICH, "detourFactor": 1.5})
        w15 = walking()
        assert abs(w15 - w13 * 1.5 / 1.3) <= 1

    def test_negative_radius_422(self, client):
        r = client.put("/enrichment/config", headers=h(PROVIDER_KEY),
                       json={**VALID_ENRICH, "radiusMeters": -5})
        assert r.status_code == 422
        assert "radiusMeters" in r.json()["details"]

    def test_radius_cap_422(self, client):
        r = client.put("/enrichment/config", headers=h(PROVIDER_KEY),
                       json={**VALID_ENRICH, "radiusMeters": 60000})
        assert r.status_code == 422

    def test_unknown_dataset_422(self, client):
        r = client.put("/enrichment/config", headers=h(PROVIDER_KEY),
                       json={**VALID_ENRICH, "datasetIds": ["nope"]})
        assert r.status_code == 422
        assert "datasetIds" in r.json()["details"]

    def test_consumer_forbidden(self, client):
        r = client.get("/enrichment/config", headers=h())
        assert r.status_code == 403


class TestStats:
    def test_counts(self, client):
        r = client.get("/stats", headers=h())
        assert r.status_code == 200
        assert r.json()["typeCounts"] == {
            SCHEMA + "Event": 2, ODTA + "PointOfInterest": 1}

    def test_empty_store(self):
        state = make_state()
        state.store = Store()
        client = TestClient(create_app(state))
        r = client.get("/stats", headers=h())
        assert r.json()["typeCounts"] == {}
