"""Operator command line for the full pipeline without the HTTP layer.

Exit codes: 0 success; 1 validation failures present; 2 input/syntax error;
3 I/O or config error. Machine-readable output (JSON lines, CSV) goes to
stdout; human diagnostics go to stderr.

Commands that write the snapshot take an exclusive lock file
(``<snapshot>.lock``); a held lock is an I/O error (exit 3).
"""

from __future__ import annotations

import contextlib
import json
import os
import sys
from datetime import datetime, timezone

import click

from . import geo, shacl, sparql
from .api import AppState, create_app
from .config import (
    ConfigFileError,
    ServerConfig,
    config_path,
    load_datasets,
    load_shape_catalog,
)
from .formats import RdfFormat, parse
from .rdf import Graph, ProfileViolation, SyntaxError_, iri, serialize_ntriples
from .store import IngestBatch, Store, instance_closure, write_batch_log

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SYNTAX = 2
EXIT_IO = 3


def _fail(code: int, message: str):
    click.echo(message, err=True)
    sys.exit(code)


@contextlib.contextmanager
def snapshot_lock(snapshot_path: str):
    lock_path = snapshot_path + ".lock"
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        _fail(EXIT_IO, f"snapshot is locked by another writer: {lock_path}")
    except OSError as exc:
        _fail(EXIT_IO, f"cannot create lock {lock_path}: {exc}")
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        with contextlib.suppress(OSError):
            os.remove(lock_path)


def _load_config(path: str) -> ServerConfig:
    try:
        return ServerConfig.from_file(config_path(path))
    except ConfigFileError as exc:
        _fail(EXIT_IO, str(exc))


def _load_store(config: ServerConfig) -> Store:
    path = config.resolve(config.snapshot_path) if config.snapshot_path else None
    if path and os.path.exists(path):
        try:
            store = Store.load_snapshot(path, config.providers)
        except (OSError, SyntaxError_) as exc:
            _fail(EXIT_IO, f"cannot load snapshot {path}: {exc}")
        return store
    store = Store()
    for provider_id in config.providers:
        store.register_provider(provider_id)
    return store


def _load_catalog(config: ServerConfig) -> shacl.ShapeCatalog:
    if not config.shapes_dir:
        return shacl.ShapeCatalog()
    try:
        return load_shape_catalog(config.resolve(config.shapes_dir))
    except ConfigFileError as exc:
        _fail(EXIT_IO, str(exc))
    except (SyntaxError_, ProfileViolation, shacl.ShaclError) as exc:
        _fail(EXIT_SYNTAX, f"bad shapes: {exc}")


def _read_file(path: str, binary: bool = False):
    try:
        with open(path, "rb" if binary else "r",
                  encoding=None if binary else "utf-8") as fh:
            return fh.read()
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read {path}: {exc}")


@click.group()
def main():
    """Knowledge-graph pipeline operations."""


@main.command()
@click.option("--config", "config_file", required=True, type=str)
def serve(config_file):
    """Run the HTTP API until terminated."""
    config = _load_config(config_file)
    store = _load_store(config)
    catalog = _load_catalog(config)
    try:
        indexes = load_datasets(config)
    except (ConfigFileError, geo.DatasetError) as exc:
        _fail(EXIT_IO, str(exc))
    state = AppState(store, catalog, config, indexes)
    widget_dir = os.path.join(config.base_dir, "widget")
    app = create_app(state, widget_dir if os.path.isdir(widget_dir) else None)
    host, _, port = config.listen_address.rpartition(":")
    try:
        import uvicorn
        click.echo(f"listening on {config.listen_address}", err=True)
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
    except (OSError, ValueError) as exc:
        _fail(EXIT_IO, f"cannot listen on {config.listen_address}: {exc}")


@main.command()
@click.option("--shapes", "shapes_dir", required=True, type=str)
@click.option("--data", "data_file", required=True, type=str)
@click.option("--format", "format_name", default="ntriples", show_default=True)
def validate(shapes_dir, data_file, format_name):
    """Validate every instance in a file; one JSON report line each."""
    try:
        catalog = load_shape_catalog(shapes_dir)
    except ConfigFileError as exc:
        _fail(EXIT_IO, str(exc))
    except (SyntaxError_, ProfileViolation, shacl.ShaclError) as exc:
        _fail(EXIT_SYNTAX, f"bad shapes: {exc}")
    text = _read_file(data_file)
    try:
        fmt = RdfFormat.from_name(format_name)
    except ValueError as exc:
        _fail(EXIT_IO, str(exc))
    try:
        graph = parse(text, fmt)
    except (SyntaxError_, ProfileViolation) as exc:
        _fail(EXIT_SYNTAX, f"{data_file}: {exc}")

    any_invalid = False
    roots = sorted({q.subject.value for q in graph if q.subject.is_iri})
    for root_iri in roots:
        root = iri(root_iri)
        closure = instance_closure(root, graph)
        line = {"instance": root_iri}
        try:
            shapes = shacl.resolve_shape(root, closure, catalog)
        except shacl.UnknownShapeReference as exc:
            any_invalid = True
            line.update(conforms=False, violations=[{
                "constraint": "shapeReference", "message": str(exc)}])
            click.echo(json.dumps(line, sort_keys=True))
            continue
        if not shapes:
            line.update(shaped=False, conforms=True)
        else:
            report = shacl.validate_all(root, closure, shapes)
            line.update(shaped=True, conforms=report.conforms,
                        violations=report.to_dict()["violations"])
            if not report.conforms:
                any_invalid = True
        click.echo(json.dumps(line, sort_keys=True))
    sys.exit(EXIT_VALIDATION if any_invalid else EXIT_OK)


@main.command()
@click.option("--config", "config_file", required=True, type=str)
@click.option("--provider", "provider_id", required=True, type=str)
@click.option("--data", "data_file", required=True, type=str)
@click.option("--format", "format_name", default="ntriples", show_default=True)
def ingest(config_file, provider_id, data_file, format_name):
    """Apply a provider batch against the snapshot store."""
    config = _load_config(config_file)
    if not config.snapshot_path:
        _fail(EXIT_IO, "config needs snapshotPath for ingestion")
    if provider_id not in config.providers:
        _fail(EXIT_IO, f"unknown provider: {provider_id}")
    try:
        fmt = RdfFormat.from_name(format_name)
    except ValueError as exc:
        _fail(EXIT_IO, str(exc))
    payload = _read_file(data_file, binary=True)
    catalog = _load_catalog(config)
    snapshot = config.resolve(config.snapshot_path)
    with snapshot_lock(snapshot):
        store = _load_store(config)
        batch = IngestBatch(provider_id, fmt, payload, datetime.now(timezone.utc))
        if config.batch_log_dir:
            write_batch_log(batch, config.resolve(config.batch_log_dir))
        try:
            report = store.upsert_instances(batch, catalog)
        except (SyntaxError_, ProfileViolation, UnicodeDecodeError) as exc:
            _fail(EXIT_SYNTAX, f"{data_file}: {exc}")
        store.snapshot(snapshot)
    click.echo(json.dumps(report.to_dict(), sort_keys=True))
    sys.exit(EXIT_VALIDATION if report.rejected else EXIT_OK)


@main.command(name="map")
@click.option("--mapping", "mapping_file", required=True, type=str)
@click.option("--source", "sources", multiple=True, required=True,
              help="data file, or id=file when the mapping has several sources")
@click.option("--out", "out_file", required=True, type=str)
def map_cmd(mapping_file, sources, out_file):
    """Run a mapping over raw feed files; writes N-Triples."""
    from . import rml

    try:
        maps = rml.parse_mapping(_read_file(mapping_file))
    except rml.MappingError as exc:
        _fail(EXIT_SYNTAX, f"{mapping_file}: {exc}")
    source_ids = sorted({m.logical_source.source_id for m in maps})
    source_bytes = {}
    for entry in sources:
        if "=" in entry:
            source_id, _, path = entry.partition("=")
        elif len(source_ids) == 1 and len(sources) == 1:
            source_id, path = source_ids[0], entry
        else:
            _fail(EXIT_IO, "use --source id=file when the mapping has several sources")
        source_bytes[source_id] = _read_file(path, binary=True)
    try:
        result = rml.execute_all(maps, source_bytes)
    except (rml.SourceError, rml.MappingError) as exc:
        _fail(EXIT_SYNTAX, str(exc))
    try:
        with open(out_file, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(serialize_ntriples(result.graph))
    except OSError as exc:
        _fail(EXIT_IO, f"cannot write {out_file}: {exc}")
    click.echo(json.dumps({
        "quads": len(result.graph),
        "recordsSeen": result.records_seen,
        "recordsSkipped": result.records_skipped,
        "valuesSkipped": result.values_skipped,
    }, sort_keys=True))


@main.command()
@click.option("--config", "config_file", required=True, type=str)
@click.option("--provider", "provider_id", required=True, type=str)
def enrich(config_file, provider_id):
    """Link points of interest to configured geo datasets."""
    config = _load_config(config_file)
    if not config.snapshot_path:
        _fail(EXIT_IO, "config needs snapshotPath for enrichment")
    enrichment = config.enrichment.get(provider_id)
    if enrichment is None:
        _fail(EXIT_IO, f"no enrichment config for provider: {provider_id}")
    try:
        enrichment.validate()
    except geo.ConfigError as exc:
        _fail(EXIT_IO, f"enrichment config invalid: {exc.errors}")
    try:
        indexes = load_datasets(config)
    except (ConfigFileError, geo.DatasetError) as exc:
        _fail(EXIT_IO, str(exc))
    snapshot = config.resolve(config.snapshot_path)
    with snapshot_lock(snapshot):
        store = _load_store(config)
        try:
            result = geo.link(store, enrichment, indexes)
        except geo.UnknownDataset as exc:
            _fail(EXIT_IO, str(exc))
        geo.materialize(store, provider_id, result.links)
        store.snapshot(snapshot)
    n = len(result.links)
    click.echo(json.dumps({"links": n, "poisSeen": result.pois_seen,
                           "poisSkipped": result.pois_skipped}, sort_keys=True))
    click.echo(f"{n} link" + ("" if n == 1 else "s"), err=True)


@main.command()
@click.option("--config", "config_file", required=True, type=str)
@click.option("--query", "query_file", required=True, type=str)
@click.option("--format", "format_name", default="json", show_default=True,
              type=click.Choice(["json", "csv"]))
def query(config_file, query_file, format_name):
    """Evaluate a query against the snapshot store."""
    config = _load_config(config_file)
    store = _load_store(config)
    text = _read_file(query_file)
    try:
        parsed = sparql.parse_query(text)
        rows = sparql.evaluate(store, parsed)
    except (sparql.QuerySyntaxError, sparql.UnsupportedFeature) as exc:
        _fail(EXIT_SYNTAX, f"{query_file}: {exc}")
    except sparql.QueryTooExpensive as exc:
        _fail(EXIT_SYNTAX, str(exc))
    variables = parsed.projected()
    if format_name == "csv":
        click.echo(sparql.results_to_csv(variables, rows), nl=False)
    else:
        click.echo(sparql.results_to_json(variables, rows))


@main.command()
@click.option("--config", "config_file", required=True, type=str)
@click.option("--out", "out_file", required=True, type=str)
def export(config_file, out_file):
    """Deterministic sorted N-Quads dump of all graphs."""
    config = _load_config(config_file)
    store = _load_store(config)
    try:
        store.snapshot(out_file)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot write {out_file}: {exc}")
    click.echo(f"exported {len(store)} quads to {out_file}", err=True)


if __name__ == "__main__":
    main()
