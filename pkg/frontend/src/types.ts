/** Shared types for the search widget. */

export interface WidgetConfig {
  apiBaseUrl: string;
  defaultTypeFilters: string[];
  /** Milliseconds to wait after the last keystroke before searching. */
  debounceMs?: number;
  /** Queries shorter than this show a hint and issue no request. */
  minQueryLength?: number;
}

export interface SearchHit {
  instance: string;
  name: string;
  typeIris: string[];
  score: number;
  license?: string;
}

export interface GeoLink {
  entity: string;
  walkingMeters: number | null;
  distanceMeters: number | null;
}

export interface InstanceDetail {
  iri: string;
  name: string | null;
  types: string[];
  /** predicate IRI -> display values, root-node properties only. */
  properties: Array<{ predicate: string; values: string[] }>;
  geoLinks: GeoLink[];
  license: string | null;
}

export interface WidgetState {
  query: string;
  selectedType: string | null;
  hits: SearchHit[];
  selectedInstance: string | null;
  detail: InstanceDetail | null;
  loading: boolean;
  /** Non-blocking error banner; prior hits stay rendered. */
  error: string | null;
  /** Shown when the query is non-empty but below the minimum length. */
  hint: string | null;
}

export const initialState = (): WidgetState => ({
  query: "",
  selectedType: null,
  hits: [],
  selectedInstance: null,
  detail: null,
  loading: false,
  error: null,
  hint: null,
});
