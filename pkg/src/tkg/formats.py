"""Format dispatch for the three interchange serializations."""

from __future__ import annotations

from enum import Enum

from . import jsonld, turtle
from .rdf import DEFAULT_GRAPH, Graph, Term, parse_ntriples, serialize_ntriples


class RdfFormat(str, Enum):
    NTRIPLES = "ntriples"
    TURTLE = "turtle"
    JSONLD = "jsonld"

    @classmethod
    def from_name(cls, name: str) -> "RdfFormat":
        aliases = {
            "ntriples": cls.NTRIPLES, "nt": cls.NTRIPLES, "application/n-triples": cls.NTRIPLES,
            "turtle": cls.TURTLE, "ttl": cls.TURTLE, "text/turtle": cls.TURTLE,
            "jsonld": cls.JSONLD, "json-ld": cls.JSONLD, "application/ld+json": cls.JSONLD,
        }
        key = name.strip().lower()
        if key not in aliases:
            raise ValueError(f"unknown RDF format: {name!r}")
        return aliases[key]

    @property
    def extension(self) -> str:
        return {RdfFormat.NTRIPLES: "nt", RdfFormat.TURTLE: "ttl", RdfFormat.JSONLD: "jsonld"}[self]

    @property
    def media_type(self) -> str:
        return {
            RdfFormat.NTRIPLES: "application/n-triples",
            RdfFormat.TURTLE: "text/turtle",
            RdfFormat.JSONLD: "application/ld+json",
        }[self]


def parse(text: str, fmt: RdfFormat, graph: Term = DEFAULT_GRAPH) -> Graph:
    if fmt is RdfFormat.NTRIPLES:
        return parse_ntriples(text, graph)
    if fmt is RdfFormat.TURTLE:
        return turtle.parse_turtle(text, graph)
    return jsonld.parse_jsonld(text, graph)


def serialize(graph: Graph, fmt: RdfFormat) -> str:
    if fmt is RdfFormat.NTRIPLES:
        return serialize_ntriples(graph)
    if fmt is RdfFormat.TURTLE:
        return turtle.serialize_turtle(graph)
    return jsonld.serialize_jsonld(graph)
