"""Self-contained tourism knowledge graph pipeline: RDF ingestion with
shape validation, declarative feed mapping, geo-enrichment, and a query
and search serving layer."""

__version__ = "0.1.0"
