"""Geo-linking of POIs to nearby enrichment entities (charging stations,
transit stops) with straight-line and estimated walking distances.

Distances are great-circle on a spherical earth; walking distance is the
straight-line distance times a configurable detour factor, rounded to
integer meters.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

from .rdf import (
    ENRICHMENT_GRAPH,
    RDF_TYPE,
    SCHEMA_NS,
    XSD_INTEGER,
    Graph,
    Quad,
    Term,
    bnode,
    iri,
    literal,
)
from .jsonld import parse_jsonld
import hashlib

EARTH_RADIUS_M = 6_371_000.0

NEARBY_PREDICATE = "urn:tkg:nearby"
ENTITY_PREDICATE = "urn:tkg:entity"
DISTANCE_PREDICATE = "urn:tkg:distanceMeters"
WALKING_PREDICATE = "urn:tkg:walkingDistanceMeters"

MAX_RADIUS_M = 50_000.0

_NUMERIC_DATATYPES = {
    "http://www.w3.org/2001/XMLSchema#integer",
    "http://www.w3.org/2001/XMLSchema#double",
    "http://www.w3.org/2001/XMLSchema#decimal",
    "http://www.w3.org/2001/XMLSchema#float",
}


class GeoError(Exception):
    pass


class DatasetError(GeoError):
    pass


class UnknownDataset(GeoError):
    def __init__(self, dataset_id: str):
        super().__init__(f"unknown enrichment dataset: {dataset_id}")
        self.dataset_id = dataset_id


class ConfigError(GeoError):
    def __init__(self, errors: dict):
        super().__init__("; ".join(f"{k}: {v}" for k, v in errors.items()))
        self.errors = errors


@dataclass(frozen=True)
class GeoPoint:
    latitude_deg: float
    longitude_deg: float

    def __post_init__(self):
        if not (-90.0 <= self.latitude_deg <= 90.0):
            raise ValueError(f"latitude out of range: {self.latitude_deg}")
        if not (-180.0 <= self.longitude_deg < 180.0):
            raise ValueError(f"longitude out of range: {self.longitude_deg}")


@dataclass(frozen=True)
class EnrichmentEntity:
    iri: str
    name: str
    location: GeoPoint


@dataclass
class EnrichmentDataset:
    dataset_id: str
    kind_iri: str
    entities: list = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for e in self.entities:
            if e.iri in seen:
                raise DatasetError(f"duplicate entity IRI in dataset {self.dataset_id}: {e.iri}")
            seen.add(e.iri)


@dataclass
class EnrichmentConfig:
    provider_id: str
    dataset_ids: list = field(default_factory=list)
    target_type_iris: list = field(default_factory=list)
    radius_m: float = 1000.0
    max_links_per_poi: int = 5
    detour_factor: float = 1.3

    def validation_errors(self) -> dict:
        errors = {}
        if self.radius_m <= 0:
            errors["radiusMeters"] = "must be positive"
        elif self.radius_m > MAX_RADIUS_M:
            errors["radiusMeters"] = f"must be at most {int(MAX_RADIUS_M)}"
        if self.max_links_per_poi <= 0:
            errors["maxLinksPerPoi"] = "must be a positive integer"
        if self.detour_factor < 1.0:
            errors["detourFactor"] = "must be at least 1"
        return errors

    def validate(self):
        errors = self.validation_errors()
        if errors:
            raise ConfigError(errors)

    def to_dict(self) -> dict:
        return {
            "providerId": self.provider_id,
            "datasetIds": list(self.dataset_ids),
            "targetTypeIris": list(self.target_type_iris),
            "radiusMeters": self.radius_m,
            "maxLinksPerPoi": self.max_links_per_poi,
            "detourFactor": self.detour_factor,
        }

    @classmethod
    def from_dict(cls, doc: dict, provider_id: Optional[str] = None) -> "EnrichmentConfig":
        return cls(
            provider_id=provider_id or doc.get("providerId", ""),
            dataset_ids=list(doc.get("datasetIds", [])),
            target_type_iris=list(doc.get("targetTypeIris", [])),
            radius_m=float(doc.get("radiusMeters", 1000.0)),
            max_links_per_poi=int(doc.get("maxLinksPerPoi", 5)),
            detour_factor=float(doc.get("detourFactor", 1.3)),
        )


@dataclass(frozen=True)
class GeoLink:
    poi: str
    entity: str
    distance_m: float
    walking_m: int


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters on a sphere of radius 6,371,000 m."""
    lat1 = math.radians(a.latitude_deg)
    lat2 = math.radians(b.latitude_deg)
    dlat = lat2 - lat1
    dlon = math.radians(b.longitude_deg - a.longitude_deg)
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


class SpatialIndex:
    """Uniform lat/lon degree grid; lookups return candidate supersets."""

    def __init__(self, dataset: EnrichmentDataset, cell_size_deg: float = 0.01):
        if cell_size_deg <= 0:
            raise ValueError("cell size must be positive")
        self.dataset = dataset
        self.cell = cell_size_deg
        self.cells: dict = {}
        for entity in dataset.entities:
            key = (math.floor(entity.location.latitude_deg / self.cell),
                   math.floor(entity.location.longitude_deg / self.cell))
            self.cells.setdefault(key, []).append(entity)

    def __len__(self) -> int:
        return len(self.cells)

    def candidates(self, center: GeoPoint, radius_m: float) -> list:
        """Every entity whose cell intersects the query circle's bounding box;
        never misses an in-radius entity."""
        dlat = math.degrees(radius_m / EARTH_RADIUS_M)
        cos_lat = math.cos(math.radians(center.latitude_deg))
        near_pole = abs(center.latitude_deg) + dlat >= 89.0 or cos_lat < 1e-6
        dlon = 360.0 if near_pole else dlat / cos_lat
        lon_lo = center.longitude_deg - dlon
        lon_hi = center.longitude_deg + dlon
        if near_pole or lon_lo < -180.0 or lon_hi >= 180.0:
            # wrap-around: fall back to every entity (still a superset)
            return list(self.dataset.entities)
        lat_lo = math.floor((center.latitude_deg - dlat) / self.cell)
        lat_hi = math.floor((center.latitude_deg + dlat) / self.cell)
        out = []
        for lat_idx in range(lat_lo, lat_hi + 1):
            for lon_idx in range(math.floor(lon_lo / self.cell), math.floor(lon_hi / self.cell) + 1):
                out.extend(self.cells.get((lat_idx, lon_idx), ()))
        return out


def build_index(dataset: EnrichmentDataset, cell_size_deg: float = 0.01) -> SpatialIndex:
    return SpatialIndex(dataset, cell_size_deg)


def load_dataset_csv(data: bytes, dataset_id: str, kind_iri: str) -> EnrichmentDataset:
    """Columns: iri,name,lat,lon. Out-of-range coordinates are rejected."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DatasetError(f"dataset {dataset_id} is not UTF-8: {exc}")
    entities = []
    for row_no, row in enumerate(csv.DictReader(io.StringIO(text)), start=2):
        missing = [c for c in ("iri", "name", "lat", "lon") if row.get(c) in (None, "")]
        if missing:
            raise DatasetError(f"dataset {dataset_id} row {row_no}: missing {missing[0]}")
        try:
            point = GeoPoint(float(row["lat"]), float(row["lon"]))
        except ValueError as exc:
            raise DatasetError(f"dataset {dataset_id} row {row_no}: {exc}")
        entities.append(EnrichmentEntity(row["iri"], row["name"], point))
    return EnrichmentDataset(dataset_id, kind_iri, entities)


def load_dataset_jsonld(data: bytes, dataset_id: str, kind_iri: str) -> EnrichmentDataset:
    """Entities from a JSON-LD profile document with schema:geo coordinates."""
    graph = parse_jsonld(data.decode("utf-8"))
    entities = []
    for root in sorted({q.subject for q in graph if q.subject.is_iri}, key=Term.ntriples):
        point = extract_point(root, graph)
        if point is None:
            raise DatasetError(f"dataset {dataset_id}: entity {root.value} lacks coordinates")
        names = [t.value for t in graph.objects_of(root, iri(SCHEMA_NS + "name")) if t.is_literal]
        entities.append(EnrichmentEntity(root.value, names[0] if names else "", point))
    return EnrichmentDataset(dataset_id, kind_iri, entities)


def _numeric_literal(term: Term) -> Optional[float]:
    if term.is_literal and term.datatype in _NUMERIC_DATATYPES:
        try:
            return float(term.value)
        except ValueError:
            return None
    return None


def extract_point(node: Term, graph: Graph) -> Optional[GeoPoint]:
    """schema:geo -> node with numeric schema:latitude / schema:longitude."""
    for geo in graph.objects_of(node, iri(SCHEMA_NS + "geo")):
        if geo.is_literal:
            continue
        lats = [_numeric_literal(t) for t in graph.objects_of(geo, iri(SCHEMA_NS + "latitude"))]
        lons = [_numeric_literal(t) for t in graph.objects_of(geo, iri(SCHEMA_NS + "longitude"))]
        lats = [v for v in lats if v is not None]
        lons = [v for v in lons if v is not None]
        if lats and lons:
            try:
                return GeoPoint(lats[0], lons[0])
            except ValueError:
                return None
    return None


@dataclass
class LinkResult:
    links: list = field(default_factory=list)
    pois_seen: int = 0
    pois_skipped: int = 0


def link(store, config: EnrichmentConfig, indexes: dict) -> LinkResult:
    """Produce GeoLinks for every located POI of the configured types.

    ``indexes`` maps dataset id to SpatialIndex; candidates pass an exact
    haversine filter (distance == radius included), sorted by distance then
    entity IRI, truncated to the per-POI cap.
    """
    config.validate()
    for dataset_id in config.dataset_ids:
        if dataset_id not in indexes:
            raise UnknownDataset(dataset_id)
    graph_term = store.provider_graph(config.provider_id)
    targets = set(config.target_type_iris)

    result = LinkResult()
    for root_iri in store.instance_roots(graph_term):
        root = iri(root_iri)
        types = {q.object.value for q in store.match(s=root, g=graph_term)
                 if q.predicate.value == RDF_TYPE and q.object.is_iri}
        if not (types & targets):
            continue
        result.pois_seen += 1
        closure = store.closure_in_graph(root, graph_term)
        point = extract_point(root, closure)
        if point is None:
            result.pois_skipped += 1
            continue
        found = []
        for dataset_id in config.dataset_ids:
            for entity in indexes[dataset_id].candidates(point, config.radius_m):
                d = haversine_m(point, entity.location)
                if d <= config.radius_m:
                    found.append((d, entity.iri))
        found.sort(key=lambda pair: (pair[0], pair[1]))
        for d, entity_iri in found[: config.max_links_per_poi]:
            result.links.append(GeoLink(
                poi=root_iri,
                entity=entity_iri,
                distance_m=d,
                walking_m=round(d * config.detour_factor),
            ))
    return result


def _link_node(poi: str, entity: str) -> Term:
    digest = hashlib.sha1(f"{poi}|{entity}".encode()).hexdigest()[:16]
    return bnode(f"link{digest}")


def clear_provider_links(store, provider_id: str) -> int:
    """Remove prior enrichment link nodes of a provider's instances."""
    graph_term = store.provider_graph(provider_id)
    removed = 0
    for root_iri in store.instance_roots(graph_term):
        root = iri(root_iri)
        for q in list(store.match(s=root, p=iri(NEARBY_PREDICATE), g=ENRICHMENT_GRAPH)):
            for sub in store.closure_in_graph(q.object, ENRICHMENT_GRAPH):
                store.remove(sub)
                removed += 1
            store.remove(q)
            removed += 1
    return removed


def materialize(store, provider_id: str, links: list) -> int:
    """Write links into the enrichment graph (4 quads per link); re-running
    with identical inputs leaves the store unchanged."""
    clear_provider_links(store, provider_id)
    written = 0
    for lk in links:
        node = _link_node(lk.poi, lk.entity)
        quads = [
            Quad(iri(lk.poi), iri(NEARBY_PREDICATE), node, ENRICHMENT_GRAPH),
            Quad(node, iri(ENTITY_PREDICATE), iri(lk.entity), ENRICHMENT_GRAPH),
            Quad(node, iri(DISTANCE_PREDICATE),
                 literal(str(round(lk.distance_m)), XSD_INTEGER), ENRICHMENT_GRAPH),
            Quad(node, iri(WALKING_PREDICATE),
                 literal(str(lk.walking_m), XSD_INTEGER), ENRICHMENT_GRAPH),
        ]
        for q in quads:
            store.add(q)
        written += len(quads)
    return written
