"""Authenticated HTTP surface: SPARQL endpoint, name search, instance
dereferencing (HTML or RDF), batch ingestion, enrichment configuration,
and per-type statistics.

Auth is a static ``X-API-Key`` header checked against the server config;
roles are consumer (read), provider (read + write for its own provider id),
and admin (read + write for any provider). Error bodies are uniform JSON
``{"code", "message", "details"?}``.
"""

from __future__ import annotations

import html as html_mod
import re
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import HTMLResponse, JSONResponse, Response

from . import geo, shacl, sparql
from .config import ROLE_ADMIN, ROLE_PROVIDER, ApiKey, ServerConfig
from .formats import RdfFormat, serialize
from .rdf import (
    ENRICHMENT_GRAPH,
    Graph,
    ProfileViolation,
    Quad,
    RDF_TYPE,
    SyntaxError_,
    iri,
)
from .store import IngestBatch, Store, write_batch_log

MAX_QUERY_BYTES = 64 * 1024
SEARCH_LIMIT_DEFAULT = 20
SEARCH_LIMIT_MAX = 100

_ABSOLUTE_IRI_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.-]*:")


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.details = details

    def response(self) -> JSONResponse:
        body = {"code": self.code, "message": self.message}
        if self.details is not None:
            body["details"] = self.details
        return JSONResponse(body, status_code=self.status)


@dataclass
class AppState:
    store: Store
    catalog: shacl.ShapeCatalog
    config: ServerConfig
    indexes: dict = field(default_factory=dict)  # dataset id -> SpatialIndex
    enrichment_configs: dict = field(default_factory=dict)  # provider -> cfg
    write_lock: threading.Lock = field(default_factory=threading.Lock)

    def __post_init__(self):
        self.enrichment_configs.update(self.config.enrichment)


# --- auth ---


def authenticate(state: AppState, request: Request) -> ApiKey:
    key = request.headers.get("x-api-key")
    entry = state.config.key_for(key) if key else None
    if entry is None:
        raise ApiError(401, "unauthorized", "missing or invalid API key")
    return entry


def require_provider_access(key: ApiKey, provider_id: str):
    if key.role == ROLE_ADMIN:
        return
    if key.role == ROLE_PROVIDER and key.provider_id == provider_id:
        return
    raise ApiError(403, "forbidden",
                   f"key does not grant write access to provider {provider_id!r}")


def provider_from_request(state: AppState, key: ApiKey, request: Request) -> str:
    provider_id = request.query_params.get("provider") or key.provider_id
    if not provider_id:
        raise ApiError(400, "missingProvider",
                       "provider query parameter required for this key")
    require_provider_access(key, provider_id)
    if provider_id not in state.store.provider_graphs:
        raise ApiError(404, "unknownProvider",
                       f"provider not registered: {provider_id}")
    return provider_id


# --- search ---


def resolve_type_iri(value: str, prefixes: dict) -> str:
    """Absolute IRI passed through; CURIE resolved against the prefix map."""
    if _ABSOLUTE_IRI_RE.match(value) and "://" in value or value.startswith("urn:"):
        return value
    if ":" in value:
        prefix, _, local = value.partition(":")
        if prefix not in prefixes:
            raise ApiError(400, "unknownPrefix", f"unknown CURIE prefix: {prefix!r}")
        return prefixes[prefix] + local
    raise ApiError(400, "badType", f"type must be an IRI or CURIE: {value!r}")


def instance_types(store: Store, subject: str) -> list:
    types = set()
    for g in store.provider_graphs.values():
        for q in store.match(s=iri(subject), p=iri(RDF_TYPE), g=g):
            if q.object.is_iri:
                types.add(q.object.value)
    return sorted(types)


def search_instances(store: Store, q: str, type_iri: Optional[str],
                     limit: int) -> list:
    """Case-insensitive substring search over schema:name values. Ranking:
    exact (3) > prefix (2) > substring (1), ties by shorter name then IRI."""
    needle = q.lower()
    hits = []
    for subject, names in store.name_cache.items():
        best = None
        for name in names:
            lowered = name.lower()
            if lowered == needle:
                score = 3
            elif lowered.startswith(needle):
                score = 2
            elif needle in lowered:
                score = 1
            else:
                continue
            rank = (-score, len(name), name)
            if best is None or rank < best[0]:
                best = (rank, score, name)
        if best is None:
            continue
        types = instance_types(store, subject)
        if type_iri is not None and type_iri not in types:
            continue
        _, score, name = best
        hit = {"instance": subject, "name": name, "typeIris": types, "score": score}
        license_iri = store.license_cache.get(subject)
        if license_iri:
            hit["license"] = license_iri
        hits.append(hit)
    hits.sort(key=lambda h: (-h["score"], len(h["name"]), h["instance"]))
    return hits[:limit]


# --- instance dereferencing ---


def instance_document(store: Store, subject: str) -> Optional[Graph]:
    """Closure across provider graphs plus materialized enrichment links;
    None when the IRI is not a stored instance root."""
    root = iri(subject)
    quads = []
    found = False
    for g in store.provider_graphs.values():
        closure = store.closure_in_graph(root, g)
        if len(closure):
            found = True
            quads.extend(closure)
    if not found:
        return None
    quads.extend(store.closure_in_graph(root, ENRICHMENT_GRAPH))
    return Graph(quads)


def _term_html(term) -> str:
    if term.is_iri:
        return f'<a href="?uri={html_mod.escape(term.value)}">{html_mod.escape(term.value)}</a>'
    if term.is_bnode:
        return html_mod.escape("_:" + term.value)
    return html_mod.escape(term.value)


def render_instance_html(store: Store, subject: str, doc: Graph) -> str:
    root = iri(subject)
    names = sorted(store.name_cache.get(subject, ()))
    title = names[0] if names else subject
    types = instance_types(store, subject)
    license_iri = store.license_cache.get(subject)

    rows = []
    for q in doc.sorted():
        if q.graph == ENRICHMENT_GRAPH:
            continue
        if q.subject == root:
            rows.append(
                f"<tr><td>{html_mod.escape(q.predicate.value)}</td>"
                f"<td>{_term_html(q.object)}</td></tr>")

    links = []
    enrichment = [q for q in doc if q.graph == ENRICHMENT_GRAPH]
    link_nodes = [q.object for q in enrichment
                  if q.subject == root and q.predicate.value == geo.NEARBY_PREDICATE]
    for node in sorted(link_nodes, key=lambda t: t.value):
        entity = walking = None
        for q in enrichment:
            if q.subject != node:
                continue
            if q.predicate.value == geo.ENTITY_PREDICATE:
                entity = q.object.value
            elif q.predicate.value == geo.WALKING_PREDICATE:
                walking = q.object.value
        if entity is not None:
            links.append(
                f"<li>{html_mod.escape(entity)} — walking distance "
                f"{html_mod.escape(walking or '?')} m</li>")

    parts = [
        "<!DOCTYPE html>",
        f"<html><head><meta charset='utf-8'><title>{html_mod.escape(title)}</title></head><body>",
        f"<h1>{html_mod.escape(title)}</h1>",
        f"<p class='iri'>{html_mod.escape(subject)}</p>",
    ]
    if types:
        parts.append("<p class='types'>Types: "
                     + ", ".join(html_mod.escape(t) for t in types) + "</p>")
    parts.append("<table>" + "".join(rows) + "</table>")
    if links:
        parts.append("<h2>Nearby</h2><ul>" + "".join(links) + "</ul>")
    if license_iri:
        parts.append(f"<p class='license'>License: {html_mod.escape(license_iri)}</p>")
    formats_links = "".join(
        f"<a href='?uri={html_mod.escape(subject)}&format={f.value}'>{f.value}</a> "
        for f in RdfFormat)
    parts.append(f"<p class='downloads'>Download: {formats_links}</p>")
    parts.append("</body></html>")
    return "\n".join(parts)


# --- app factory ---


def create_app(state: AppState, widget_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(openapi_url=None, docs_url=None, redoc_url=None)
    app.state.tkg = state

    @app.exception_handler(ApiError)
    async def handle_api_error(_request, exc: ApiError):
        return exc.response()

    @app.post("/sparql")
    async def sparql_endpoint(request: Request):
        authenticate(state, request)
        body = await request.body()
        if len(body) > MAX_QUERY_BYTES:
            raise ApiError(413, "payloadTooLarge",
                           f"query exceeds {MAX_QUERY_BYTES} bytes")
        try:
            query = sparql.parse_query(body.decode("utf-8", errors="replace"))
            rows = sparql.evaluate(state.store, query)
        except sparql.QuerySyntaxError as exc:
            raise ApiError(400, "SyntaxError", str(exc),
                           {"position": exc.position})
        except sparql.UnsupportedFeature as exc:
            raise ApiError(400, "UnsupportedFeature", str(exc),
                           {"feature": exc.name})
        except sparql.QueryTooExpensive as exc:
            raise ApiError(400, "QueryTooExpensive", str(exc),
                           {"budget": exc.budget})
        variables = query.projected()
        fmt = request.query_params.get("format")
        accept = request.headers.get("accept", "")
        if fmt == "csv" or (fmt is None and "text/csv" in accept):
            return Response(sparql.results_to_csv(variables, rows),
                            media_type="text/csv; charset=utf-8")
        return Response(sparql.results_to_json(variables, rows),
                        media_type="application/sparql-results+json")

    @app.get("/search")
    async def search_endpoint(request: Request):
        authenticate(state, request)
        q = (request.query_params.get("q") or "").strip()
        if not q:
            raise ApiError(400, "emptyQuery", "q must be non-empty")
        type_param = request.query_params.get("type")
        type_iri = (resolve_type_iri(type_param, state.config.prefixes)
                    if type_param else None)
        limit_param = request.query_params.get("limit")
        limit = SEARCH_LIMIT_DEFAULT
        if limit_param is not None:
            try:
                limit = int(limit_param)
            except ValueError:
                raise ApiError(400, "badLimit", "limit must be an integer")
            if limit < 0:
                raise ApiError(400, "badLimit", "limit must be non-negative")
            limit = min(limit, SEARCH_LIMIT_MAX)
        return JSONResponse(
            {"hits": search_instances(state.store, q, type_iri, limit)})

    @app.get("/instance")
    async def instance_endpoint(request: Request):
        authenticate(state, request)
        subject = request.query_params.get("uri")
        if not subject or not _ABSOLUTE_IRI_RE.match(subject):
            raise ApiError(400, "badIri", "uri must be an absolute IRI")
        doc = instance_document(state.store, subject)
        if doc is None:
            raise ApiError(404, "notFound", f"no stored instance: {subject}")
        fmt_param = request.query_params.get("format")
        if fmt_param is None:
            accept = request.headers.get("accept", "")
            for fmt in RdfFormat:
                if fmt.media_type in accept:
                    fmt_param = fmt.value
                    break
        if fmt_param is None or fmt_param == "html":
            return HTMLResponse(render_instance_html(state.store, subject, doc))
        try:
            fmt = RdfFormat.from_name(fmt_param)
        except ValueError:
            raise ApiError(400, "badFormat", f"unknown format: {fmt_param!r}")
        return Response(serialize(doc, fmt), media_type=fmt.media_type)

    @app.post("/ingest")
    async def ingest_endpoint(request: Request):
        key = authenticate(state, request)
        if key.role not in (ROLE_PROVIDER, ROLE_ADMIN):
            raise ApiError(403, "forbidden", "ingestion requires a provider or admin key")
        provider_id = provider_from_request(state, key, request)
        content_type = request.headers.get("content-type", "").split(";")[0].strip()
        try:
            fmt = RdfFormat.from_name(content_type or "")
        except ValueError:
            raise ApiError(415, "unsupportedFormat",
                           f"unsupported content type: {content_type!r}")
        payload = await request.body()
        batch = IngestBatch(provider_id, fmt, payload,
                            datetime.now(timezone.utc))
        with state.write_lock:
            if state.config.batch_log_dir:
                write_batch_log(batch, state.config.resolve(state.config.batch_log_dir))
            try:
                report = state.store.upsert_instances(batch, state.catalog)
            except (SyntaxError_, ProfileViolation) as exc:
                details = {}
                if isinstance(exc, SyntaxError_):
                    details = {"line": exc.line, "column": exc.column}
                raise ApiError(400, "SyntaxError", str(exc), details or None)
            except UnicodeDecodeError as exc:
                raise ApiError(400, "SyntaxError", f"payload is not UTF-8: {exc}")
            if state.config.snapshot_path:
                state.store.snapshot(state.config.resolve(state.config.snapshot_path))
        return JSONResponse(report.to_dict())

    @app.get("/enrichment/config")
    async def get_enrichment_config(request: Request):
        key = authenticate(state, request)
        if key.role not in (ROLE_PROVIDER, ROLE_ADMIN):
            raise ApiError(403, "forbidden",
                           "enrichment config requires a provider or admin key")
        provider_id = provider_from_request(state, key, request)
        cfg = state.enrichment_configs.get(provider_id)
        if cfg is None:
            cfg = geo.EnrichmentConfig(provider_id, [], [])
        return JSONResponse(cfg.to_dict())

    @app.put("/enrichment/config")
    async def put_enrichment_config(request: Request):
        key = authenticate(state, request)
        if key.role not in (ROLE_PROVIDER, ROLE_ADMIN):
            raise ApiError(403, "forbidden",
                           "enrichment config requires a provider or admin key")
        provider_id = provider_from_request(state, key, request)
        try:
            body = await request.json()
        except Exception:
            raise ApiError(400, "badJson", "body must be a JSON object")
        if not isinstance(body, dict):
            raise ApiError(400, "badJson", "body must be a JSON object")
        try:
            cfg = geo.EnrichmentConfig.from_dict(body, provider_id)
        except (KeyError, TypeError) as exc:
            raise ApiError(422, "invalidConfig", "malformed enrichment config",
                           {"body": str(exc)})
        errors = cfg.validation_errors()
        unknown = [d for d in cfg.dataset_ids if d not in state.indexes]
        if unknown:
            errors["datasetIds"] = f"unknown dataset ids: {', '.join(unknown)}"
        if errors:
            raise ApiError(422, "invalidConfig", "enrichment config invalid", errors)
        with state.write_lock:
            state.enrichment_configs[provider_id] = cfg
            result = geo.link(state.store, cfg, state.indexes)
            geo.materialize(state.store, provider_id, result.links)
            if state.config.snapshot_path:
                state.store.snapshot(state.config.resolve(state.config.snapshot_path))
        return JSONResponse(cfg.to_dict())

    @app.get("/stats")
    async def stats_endpoint(request: Request):
        authenticate(state, request)
        return JSONResponse({"typeCounts": state.store.type_counts()})

    if widget_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/widget", StaticFiles(directory=widget_dir, html=True),
                  name="widget")

    return app
