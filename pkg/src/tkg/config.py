"""Server configuration: API keys, providers, shapes, datasets, prefixes.

The config file is JSON::

    {
      "listenAddress": "127.0.0.1:8080",
      "apiKeys": [{"key": "...", "role": "provider", "providerId": "by"}],
      "providers": ["by", "bw"],
      "shapesDir": "shapes/",
      "snapshotPath": "store.nq",
      "batchLogDir": "batches/",
      "prefixes": {"schema": "http://schema.org/"},
      "datasets": [{"id": "charging", "path": "charging.csv",
                    "kindIri": "http://schema.org/Place", "format": "csv"}],
      "enrichment": {"by": { ... saved enrichment config ... }}
    }

The ``TKG_CONFIG`` environment variable overrides the config file path for
``tkg serve``. Relative paths inside the file resolve against the file's
directory.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

from . import formats, geo, shacl
from .formats import RdfFormat
from .rdf import Graph

ROLE_CONSUMER = "consumer"
ROLE_PROVIDER = "provider"
ROLE_ADMIN = "admin"
ROLES = {ROLE_CONSUMER, ROLE_PROVIDER, ROLE_ADMIN}

MIN_KEY_LENGTH = 16


class ConfigFileError(Exception):
    pass


@dataclass(frozen=True)
class ApiKey:
    key: str
    role: str
    provider_id: Optional[str] = None

    def __post_init__(self):
        if len(self.key) < MIN_KEY_LENGTH:
            raise ConfigFileError(f"API key shorter than {MIN_KEY_LENGTH} characters")
        if self.role not in ROLES:
            raise ConfigFileError(f"unknown API key role: {self.role!r}")
        if self.role == ROLE_PROVIDER and not self.provider_id:
            raise ConfigFileError("provider keys require providerId")


@dataclass(frozen=True)
class DatasetSpec:
    dataset_id: str
    path: str
    kind_iri: str
    format: str = "csv"  # csv | jsonld

    def __post_init__(self):
        if self.format not in ("csv", "jsonld"):
            raise ConfigFileError(f"unknown dataset format: {self.format!r}")


@dataclass
class ServerConfig:
    listen_address: str = "127.0.0.1:8080"
    api_keys: list = field(default_factory=list)
    providers: list = field(default_factory=list)
    shapes_dir: Optional[str] = None
    snapshot_path: Optional[str] = None
    batch_log_dir: Optional[str] = None
    prefixes: dict = field(default_factory=dict)
    datasets: list = field(default_factory=list)
    enrichment: dict = field(default_factory=dict)  # providerId -> EnrichmentConfig
    base_dir: str = "."

    def resolve(self, path: str) -> str:
        if os.path.isabs(path):
            return path
        return os.path.join(self.base_dir, path)

    def key_for(self, key: str) -> Optional[ApiKey]:
        for entry in self.api_keys:
            if entry.key == key:
                return entry
        return None

    @classmethod
    def from_dict(cls, doc: dict, base_dir: str = ".") -> "ServerConfig":
        if not isinstance(doc, dict):
            raise ConfigFileError("config root must be a JSON object")
        keys = [
            ApiKey(k["key"], k["role"], k.get("providerId"))
            for k in doc.get("apiKeys", [])
        ]
        datasets = [
            DatasetSpec(d["id"], d["path"], d["kindIri"], d.get("format", "csv"))
            for d in doc.get("datasets", [])
        ]
        enrichment = {
            provider_id: geo.EnrichmentConfig.from_dict(body, provider_id)
            for provider_id, body in doc.get("enrichment", {}).items()
        }
        providers = doc.get("providers", [])
        if not all(isinstance(p, str) and p for p in providers):
            raise ConfigFileError("providers must be non-empty strings")
        return cls(
            listen_address=doc.get("listenAddress", "127.0.0.1:8080"),
            api_keys=keys,
            providers=providers,
            shapes_dir=doc.get("shapesDir"),
            snapshot_path=doc.get("snapshotPath"),
            batch_log_dir=doc.get("batchLogDir"),
            prefixes=dict(doc.get("prefixes", {})),
            datasets=datasets,
            enrichment=enrichment,
            base_dir=base_dir,
        )

    @classmethod
    def from_file(cls, path: str) -> "ServerConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigFileError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigFileError(f"config {path} is not valid JSON: {exc}") from exc
        try:
            return cls.from_dict(doc, base_dir=os.path.dirname(os.path.abspath(path)))
        except (KeyError, TypeError) as exc:
            raise ConfigFileError(f"config {path} malformed: {exc}") from exc


def config_path(explicit: Optional[str] = None) -> Optional[str]:
    """TKG_CONFIG overrides an explicitly passed path."""
    return os.environ.get("TKG_CONFIG") or explicit


def load_shape_catalog(shapes_dir: str) -> shacl.ShapeCatalog:
    """Parse every shape file in the directory into one catalog."""
    merged: list = []
    try:
        names = sorted(os.listdir(shapes_dir))
    except OSError as exc:
        raise ConfigFileError(f"cannot read shapes dir {shapes_dir}: {exc}") from exc
    for name in names:
        ext = name.rsplit(".", 1)[-1].lower()
        if ext not in ("ttl", "nt", "jsonld"):
            continue
        fmt = {"ttl": RdfFormat.TURTLE, "nt": RdfFormat.NTRIPLES,
               "jsonld": RdfFormat.JSONLD}[ext]
        with open(os.path.join(shapes_dir, name), "r", encoding="utf-8") as fh:
            merged.extend(formats.parse(fh.read(), fmt))
    return shacl.load_shapes(Graph(merged))


def load_datasets(config: ServerConfig) -> dict:
    """dataset id -> SpatialIndex, built from the configured dataset files."""
    indexes = {}
    for spec in config.datasets:
        path = config.resolve(spec.path)
        try:
            with open(path, "rb") as fh:
                data = fh.read()
        except OSError as exc:
            raise ConfigFileError(f"cannot read dataset {path}: {exc}") from exc
        if spec.format == "csv":
            dataset = geo.load_dataset_csv(data, spec.dataset_id, spec.kind_iri)
        else:
            dataset = geo.load_dataset_jsonld(data, spec.dataset_id, spec.kind_iri)
        indexes[spec.dataset_id] = geo.build_index(dataset)
    return indexes
