"""Generate the differential shape-validation corpus.

Writes instance/shape fixture pairs under tests/fixtures/shacl/: six
instance types with conforming and violating variants across every
supported constraint. Deterministic; re-running overwrites in place.
"""

from __future__ import annotations

import os
import sys

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
OUT_DIR = os.path.join(ROOT, "tests", "fixtures", "shacl")

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
SH = "http://www.w3.org/ns/shacl#"
XSD = "http://www.w3.org/2001/XMLSchema#"
SCHEMA = "http://schema.org/"
ODTA = "https://odta.io/voc/"
INST = "http://ex/inst"

FOCUS = f"<{INST}>"


def t(s, p, o):
    return f"{s} {p} {o} ."


def i(v):
    return f"<{v}>"


def lit(lex, dt=None):
    if dt:
        return f'"{lex}"^^<{dt}>'
    return f'"{lex}"'


def intlit(n):
    return lit(str(n), XSD + "integer")


def sh_list(label, items):
    """rdf:first/rest chain; returns (head_token, lines)."""
    lines = []
    nodes = [f"_:{label}{k}" for k in range(len(items))]
    for k, item in enumerate(items):
        lines.append(t(nodes[k], i(RDF + "first"), item))
        rest = nodes[k + 1] if k + 1 < len(items) else i(RDF + "nil")
        lines.append(t(nodes[k], i(RDF + "rest"), rest))
    return nodes[0] if nodes else i(RDF + "nil"), lines


def shape_doc(shape_id, target, props, closed=False, extra_lines=()):
    """props: list of (bnode_label, [(sh_local, value_token), ...])"""
    lines = [t(i(shape_id), i(RDF + "type"), i(SH + "NodeShape"))]
    if target:
        lines.append(t(i(shape_id), i(SH + "targetClass"), i(target)))
    if closed:
        lines.append(t(i(shape_id), i(SH + "closed"), lit("true", XSD + "boolean")))
    for label, constraints in props:
        node = f"_:{label}"
        lines.append(t(i(shape_id), i(SH + "property"), node))
        for local, value in constraints:
            lines.append(t(node, i(SH + local), value))
    lines.extend(extra_lines)
    return "\n".join(lines) + "\n"


def data_doc(lines):
    return "\n".join(lines) + "\n"


def typed(type_iri):
    return t(FOCUS, i(RDF + "type"), i(type_iri))


def named(name="Beispiel"):
    return t(FOCUS, i(SCHEMA + "name"), lit(name))


# --- per-type shape documents ---

EVENT_SHAPES = shape_doc("urn:shape:Event", SCHEMA + "Event", [
    ("name", [("path", i(SCHEMA + "name")), ("minCount", intlit(1)),
              ("datatype", i(XSD + "string"))]),
    ("start", [("path", i(SCHEMA + "startDate")), ("maxCount", intlit(1)),
               ("pattern", lit("^[0-9]{4}-[0-9]{2}-[0-9]{2}$"))]),
])

_geo_head, _geo_lines = [], []
POI_SHAPES = (
    shape_doc("urn:shape:Poi", ODTA + "PointOfInterest", [
        ("name", [("path", i(SCHEMA + "name")), ("minCount", intlit(1)),
                  ("datatype", i(XSD + "string"))]),
        ("geo", [("path", i(SCHEMA + "geo")), ("maxCount", intlit(1)),
                 ("nodeKind", i(SH + "BlankNodeOrIRI")),
                 ("node", i("urn:shape:Geo"))]),
    ], closed=True)
    + shape_doc("urn:shape:Geo", None, [
        ("lat", [("path", i(SCHEMA + "latitude")), ("minCount", intlit(1)),
                 ("datatype", i(XSD + "double"))]),
        ("lon", [("path", i(SCHEMA + "longitude")), ("minCount", intlit(1)),
                 ("datatype", i(XSD + "double"))]),
    ])
)

_diff_head, _diff_lines = sh_list("diff", [
    i(ODTA + "Easy"), i(ODTA + "Moderate"), i(ODTA + "Hard")])
TRAIL_SHAPES = shape_doc("urn:shape:Trail", ODTA + "Trail", [
    ("name", [("path", i(SCHEMA + "name")), ("minCount", intlit(1)),
              ("datatype", i(XSD + "string"))]),
    ("diff", [("path", i(ODTA + "difficulty")), ("in", _diff_head)]),
    ("len", [("path", i(SCHEMA + "length")), ("maxCount", intlit(1)),
             ("datatype", i(XSD + "double"))]),
], extra_lines=_diff_lines)

LODGING_SHAPES = shape_doc("urn:shape:Lodging", SCHEMA + "LodgingBusiness", [
    ("name", [("path", i(SCHEMA + "name")), ("minCount", intlit(1)),
              ("datatype", i(XSD + "string"))]),
    ("addr", [("path", i(SCHEMA + "address")), ("minCount", intlit(1)),
              ("nodeKind", i(SH + "IRI"))]),
    ("rooms", [("path", i(SCHEMA + "numberOfRooms")),
               ("datatype", i(XSD + "integer"))]),
])

_price_head, _price_lines = sh_list("price", [lit("$"), lit("$$"), lit("$$$")])
LOCAL_SHAPES = shape_doc("urn:shape:LocalBusiness", SCHEMA + "LocalBusiness", [
    ("name", [("path", i(SCHEMA + "name")), ("minCount", intlit(1)),
              ("datatype", i(XSD + "string"))]),
    ("price", [("path", i(SCHEMA + "priceRange")), ("in", _price_head)]),
    ("tel", [("path", i(SCHEMA + "telephone")),
             ("pattern", lit("^[+0-9][0-9 ]*$"))]),
], extra_lines=_price_lines)

FOOD_SHAPES = shape_doc("urn:shape:Food", SCHEMA + "FoodEstablishment", [
    ("name", [("path", i(SCHEMA + "name")), ("minCount", intlit(1)),
              ("datatype", i(XSD + "string"))]),
    ("cuisine", [("path", i(SCHEMA + "servesCuisine")), ("minCount", intlit(1)),
                 ("maxCount", intlit(3)), ("datatype", i(XSD + "string"))]),
    ("addr", [("path", i(SCHEMA + "address")),
              ("class", i(SCHEMA + "PostalAddress"))]),
])


# --- fixture pairs: (slug, shapes_nt, data_lines) ---

PAIRS = [
    # schema:Event
    ("event-valid-minimal", EVENT_SHAPES,
     [typed(SCHEMA + "Event"), named("Stadtfest")]),
    ("event-missing-name", EVENT_SHAPES,
     [typed(SCHEMA + "Event")]),
    ("event-name-not-string", EVENT_SHAPES,
     [typed(SCHEMA + "Event"),
      t(FOCUS, i(SCHEMA + "name"), intlit(7))]),
    ("event-valid-startdate", EVENT_SHAPES,
     [typed(SCHEMA + "Event"), named("Stadtfest"),
      t(FOCUS, i(SCHEMA + "startDate"), lit("2026-06-01"))]),
    ("event-bad-startdate-pattern", EVENT_SHAPES,
     [typed(SCHEMA + "Event"), named("Stadtfest"),
      t(FOCUS, i(SCHEMA + "startDate"), lit("next week"))]),
    ("event-two-startdates-maxcount", EVENT_SHAPES,
     [typed(SCHEMA + "Event"), named("Stadtfest"),
      t(FOCUS, i(SCHEMA + "startDate"), lit("2026-06-01")),
      t(FOCUS, i(SCHEMA + "startDate"), lit("2026-06-02"))]),

    # odta:PointOfInterest (closed shape, nested geo shape)
    ("poi-valid-minimal", POI_SHAPES,
     [typed(ODTA + "PointOfInterest"), named("Marienplatz")]),
    ("poi-missing-name", POI_SHAPES,
     [typed(ODTA + "PointOfInterest")]),
    ("poi-valid-geo", POI_SHAPES,
     [typed(ODTA + "PointOfInterest"), named("Marienplatz"),
      t(FOCUS, i(SCHEMA + "geo"), "_:g"),
      t("_:g", i(SCHEMA + "latitude"), lit("48.1372", XSD + "double")),
      t("_:g", i(SCHEMA + "longitude"), lit("11.5756", XSD + "double"))]),
    ("poi-extra-predicate-closed", POI_SHAPES,
     [typed(ODTA + "PointOfInterest"), named("Marienplatz"),
      t(FOCUS, i("http://ex/undeclared"), lit("x"))]),
    ("poi-geo-missing-longitude", POI_SHAPES,
     [typed(ODTA + "PointOfInterest"), named("Marienplatz"),
      t(FOCUS, i(SCHEMA + "geo"), "_:g"),
      t("_:g", i(SCHEMA + "latitude"), lit("48.1372", XSD + "double"))]),
    ("poi-geo-literal-nodekind", POI_SHAPES,
     [typed(ODTA + "PointOfInterest"), named("Marienplatz"),
      t(FOCUS, i(SCHEMA + "geo"), lit("48.1,11.5"))]),

    # odta:Trail
    ("trail-valid-minimal", TRAIL_SHAPES,
     [typed(ODTA + "Trail"), named("Panoramaweg")]),
    ("trail-missing-name", TRAIL_SHAPES,
     [typed(ODTA + "Trail"),
      t(FOCUS, i(ODTA + "difficulty"), i(ODTA + "Easy"))]),
    ("trail-valid-full", TRAIL_SHAPES,
     [typed(ODTA + "Trail"), named("Panoramaweg"),
      t(FOCUS, i(ODTA + "difficulty"), i(ODTA + "Moderate")),
      t(FOCUS, i(SCHEMA + "length"), lit("12.5", XSD + "double"))]),
    ("trail-difficulty-not-in", TRAIL_SHAPES,
     [typed(ODTA + "Trail"), named("Panoramaweg"),
      t(FOCUS, i(ODTA + "difficulty"), i(ODTA + "Extreme"))]),
    ("trail-length-wrong-datatype", TRAIL_SHAPES,
     [typed(ODTA + "Trail"), named("Panoramaweg"),
      t(FOCUS, i(SCHEMA + "length"), intlit(12))]),
    ("trail-two-lengths-maxcount", TRAIL_SHAPES,
     [typed(ODTA + "Trail"), named("Panoramaweg"),
      t(FOCUS, i(SCHEMA + "length"), lit("12.5", XSD + "double")),
      t(FOCUS, i(SCHEMA + "length"), lit("13.0", XSD + "double"))]),

    # schema:LodgingBusiness
    ("lodging-valid", LODGING_SHAPES,
     [typed(SCHEMA + "LodgingBusiness"), named("Alpenhof"),
      t(FOCUS, i(SCHEMA + "address"), i("http://ex/addr1")),
      t(FOCUS, i(SCHEMA + "numberOfRooms"), intlit(24))]),
    ("lodging-missing-name-and-address", LODGING_SHAPES,
     [typed(SCHEMA + "LodgingBusiness")]),
    ("lodging-address-bnode-nodekind", LODGING_SHAPES,
     [typed(SCHEMA + "LodgingBusiness"), named("Alpenhof"),
      t(FOCUS, i(SCHEMA + "address"), "_:a"),
      t("_:a", i(SCHEMA + "streetAddress"), lit("Hauptstr. 1"))]),
    ("lodging-rooms-not-integer", LODGING_SHAPES,
     [typed(SCHEMA + "LodgingBusiness"), named("Alpenhof"),
      t(FOCUS, i(SCHEMA + "address"), i("http://ex/addr1")),
      t(FOCUS, i(SCHEMA + "numberOfRooms"), lit("viele"))]),
    ("lodging-name-langstring-datatype", LODGING_SHAPES,
     [typed(SCHEMA + "LodgingBusiness"),
      t(FOCUS, i(SCHEMA + "name"), '"Alpenhof"@de'),
      t(FOCUS, i(SCHEMA + "address"), i("http://ex/addr1"))]),
    ("lodging-valid-no-rooms", LODGING_SHAPES,
     [typed(SCHEMA + "LodgingBusiness"), named("Alpenhof"),
      t(FOCUS, i(SCHEMA + "address"), i("http://ex/addr1"))]),

    # schema:LocalBusiness
    ("local-valid", LOCAL_SHAPES,
     [typed(SCHEMA + "LocalBusiness"), named("Buchladen"),
      t(FOCUS, i(SCHEMA + "priceRange"), lit("$$")),
      t(FOCUS, i(SCHEMA + "telephone"), lit("+49 89 123456"))]),
    ("local-missing-name", LOCAL_SHAPES,
     [typed(SCHEMA + "LocalBusiness")]),
    ("local-price-not-in", LOCAL_SHAPES,
     [typed(SCHEMA + "LocalBusiness"), named("Buchladen"),
      t(FOCUS, i(SCHEMA + "priceRange"), lit("billig"))]),
    ("local-telephone-bad-pattern", LOCAL_SHAPES,
     [typed(SCHEMA + "LocalBusiness"), named("Buchladen"),
      t(FOCUS, i(SCHEMA + "telephone"), lit("ruf mich an"))]),
    ("local-two-violations", LOCAL_SHAPES,
     [typed(SCHEMA + "LocalBusiness"),
      t(FOCUS, i(SCHEMA + "priceRange"), lit("moderat")),
      t(FOCUS, i(SCHEMA + "telephone"), lit("n/a"))]),
    ("local-valid-minimal", LOCAL_SHAPES,
     [typed(SCHEMA + "LocalBusiness"), named("Kiosk")]),

    # schema:FoodEstablishment
    ("food-valid", FOOD_SHAPES,
     [typed(SCHEMA + "FoodEstablishment"), named("Gasthaus"),
      t(FOCUS, i(SCHEMA + "servesCuisine"), lit("bayerisch")),
      t(FOCUS, i(SCHEMA + "address"), i("http://ex/addr1")),
      t(i("http://ex/addr1"), i(RDF + "type"), i(SCHEMA + "PostalAddress"))]),
    ("food-missing-cuisine", FOOD_SHAPES,
     [typed(SCHEMA + "FoodEstablishment"), named("Gasthaus")]),
    ("food-address-untyped-class", FOOD_SHAPES,
     [typed(SCHEMA + "FoodEstablishment"), named("Gasthaus"),
      t(FOCUS, i(SCHEMA + "servesCuisine"), lit("bayerisch")),
      t(FOCUS, i(SCHEMA + "address"), i("http://ex/addr1"))]),
    ("food-four-cuisines-maxcount", FOOD_SHAPES,
     [typed(SCHEMA + "FoodEstablishment"), named("Gasthaus")]
     + [t(FOCUS, i(SCHEMA + "servesCuisine"), lit(c))
        for c in ("bayerisch", "schwäbisch", "fränkisch", "hessisch")]),
    ("food-address-literal-class", FOOD_SHAPES,
     [typed(SCHEMA + "FoodEstablishment"), named("Gasthaus"),
      t(FOCUS, i(SCHEMA + "servesCuisine"), lit("bayerisch")),
      t(FOCUS, i(SCHEMA + "address"), lit("Hauptstr. 1"))]),
    ("food-cuisine-langstring-datatype", FOOD_SHAPES,
     [typed(SCHEMA + "FoodEstablishment"), named("Gasthaus"),
      t(FOCUS, i(SCHEMA + "servesCuisine"), '"bayerisch"@de')]),

    # explicit shape references on untyped nodes
    ("explicit-ref-valid", EVENT_SHAPES,
     [t(FOCUS, i("urn:tkg:shape"), i("urn:shape:Event")),
      named("Stadtfest")]),
    ("explicit-ref-invalid", EVENT_SHAPES,
     [t(FOCUS, i("urn:tkg:shape"), i("urn:shape:Event"))]),
]


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    slugs = [slug for slug, _, _ in PAIRS]
    assert len(slugs) == len(set(slugs)), "duplicate fixture slugs"
    for n, (slug, shapes_nt, data_lines) in enumerate(PAIRS, start=1):
        pair_dir = os.path.join(OUT_DIR, f"{n:02d}-{slug}")
        os.makedirs(pair_dir, exist_ok=True)
        with open(os.path.join(pair_dir, "shapes.nt"), "w", encoding="utf-8") as fh:
            fh.write(shapes_nt)
        with open(os.path.join(pair_dir, "data.nt"), "w", encoding="utf-8") as fh:
            fh.write(data_doc(data_lines))
    print(f"wrote {len(PAIRS)} fixture pairs to {OUT_DIR}")


if __name__ == "__main__":
    sys.exit(main())
