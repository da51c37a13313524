/** Turn the API's flat JSON-LD node array into a displayable detail view. */

import type { GeoLink, InstanceDetail } from "./types.js";

const SCHEMA = "http://schema.org/";
const NEARBY = "urn:tkg:nearby";
const ENTITY = "urn:tkg:entity";
const WALKING = "urn:tkg:walkingDistanceMeters";
const DISTANCE = "urn:tkg:distanceMeters";

type Node = Record<string, unknown>;

function asArray(value: unknown): unknown[] {
  if (value === undefined) return [];
  return Array.isArray(value) ? value : [value];
}

/** Display string for one JSON-LD value (scalar, @value object, @id ref). */
function displayValue(value: unknown): string {
  if (value !== null && typeof value === "object") {
    const obj = value as Node;
    if ("@value" in obj) return String(obj["@value"]);
    if ("@id" in obj) return String(obj["@id"]);
    return JSON.stringify(value);
  }
  return String(value);
}

function idOf(value: unknown): string | null {
  if (value !== null && typeof value === "object" && "@id" in (value as Node)) {
    return String((value as Node)["@id"]);
  }
  return null;
}

function intOf(value: unknown): number | null {
  const raw = value !== null && typeof value === "object" && "@value" in (value as Node)
    ? (value as Node)["@value"]
    : value;
  const n = Number(raw);
  return Number.isFinite(n) ? n : null;
}

export function parseInstanceDetail(doc: unknown[], iri: string): InstanceDetail {
  const nodes = doc as Node[];
  const byId = new Map<string, Node>();
  for (const node of nodes) byId.set(String(node["@id"]), node);

  const root = byId.get(iri) ?? {};
  const types = asArray(root["@type"]).map(String);

  const names = asArray(root[SCHEMA + "name"]).map(displayValue);
  const licenses = asArray(root[SCHEMA + "license"])
    .map(idOf)
    .filter((v): v is string => v !== null);

  const properties: InstanceDetail["properties"] = [];
  for (const key of Object.keys(root).sort()) {
    if (key.startsWith("@") || key === NEARBY) continue;
    properties.push({ predicate: key, values: asArray(root[key]).map(displayValue) });
  }

  const geoLinks: GeoLink[] = [];
  for (const ref of asArray(root[NEARBY])) {
    const linkId = idOf(ref);
    const link = linkId !== null ? byId.get(linkId) : undefined;
    if (!link) continue;
    const entity = asArray(link[ENTITY]).map(idOf).find((v) => v !== null) ?? null;
    if (entity === null) continue;
    geoLinks.push({
      entity,
      walkingMeters: asArray(link[WALKING]).map(intOf).find((v) => v !== null) ?? null,
      distanceMeters: asArray(link[DISTANCE]).map(intOf).find((v) => v !== null) ?? null,
    });
  }
  geoLinks.sort((a, b) => (a.entity < b.entity ? -1 : a.entity > b.entity ? 1 : 0));

  return {
    iri,
    name: names.length > 0 ? names[0] : null,
    types,
    properties,
    geoLinks,
    license: licenses.length > 0 ? licenses[0] : null,
  };
}
