/** Thin read-only client for the knowledge-graph HTTP API.
 *
 * Issues only GET requests; the API key lives in memory on this object
 * and is never written to browser storage.
 */

import type { SearchHit } from "./types.js";

export type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  private apiKey: string | null = null;

  constructor(
    private baseUrl: string,
    private fetchFn: FetchFn,
  ) {}

  setApiKey(key: string | null): void {
    this.apiKey = key;
  }

  hasApiKey(): boolean {
    return this.apiKey !== null && this.apiKey.length > 0;
  }

  private async get(path: string): Promise<Response> {
    const headers: Record<string, string> = {};
    if (this.apiKey) headers["X-API-Key"] = this.apiKey;
    return this.fetchFn(`${this.baseUrl}${path}`, { method: "GET", headers });
  }

  private async getJson(path: string): Promise<unknown> {
    const res = await this.get(path);
    if (!res.ok) {
      let code = "error";
      let message = `request failed with status ${res.status}`;
      try {
        const body = (await res.json()) as { code?: string; message?: string };
        if (body.code) code = body.code;
        if (body.message) message = body.message;
      } catch {
        /* non-JSON error body; keep defaults */
      }
      throw new ApiError(res.status, code, message);
    }
    return res.json();
  }

  async search(query: string, typeIri: string | null): Promise<SearchHit[]> {
    let path = `/search?q=${encodeURIComponent(query)}`;
    if (typeIri) path += `&type=${encodeURIComponent(typeIri)}`;
    const doc = (await this.getJson(path)) as { hits: SearchHit[] };
    return doc.hits;
  }

  /** The instance document as the API's flat JSON-LD node array. */
  async instanceJsonLd(iri: string): Promise<unknown[]> {
    const path = `/instance?uri=${encodeURIComponent(iri)}&format=jsonld`;
    return (await this.getJson(path)) as unknown[];
  }

  downloadUrl(iri: string, format: "ntriples" | "turtle" | "jsonld"): string {
    return `${this.baseUrl}/instance?uri=${encodeURIComponent(iri)}&format=${format}`;
  }
}
