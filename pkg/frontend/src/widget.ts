/** Widget core: state machine over /search and /instance.
 *
 * Framework-free and DOM-free so it can be driven by tests with a fake
 * fetch and fake timers; `main.ts` binds it to the page. Behavior:
 *
 * - search input is debounced (default 300 ms); queries shorter than the
 *   minimum length (default 2) show a hint and issue no request;
 * - responses are tagged with a sequence number; anything stale is
 *   discarded, so the rendered hits always belong to the latest query;
 * - hits are rendered exactly in API response order (no re-ranking);
 * - API or network errors show a non-blocking banner and keep the
 *   previous hits on screen; 401 prompts for an API key.
 */

import { ApiClient, ApiError } from "./api.js";
import { parseInstanceDetail } from "./detail.js";
import { initialState, WidgetConfig, WidgetState } from "./types.js";

const DEFAULT_DEBOUNCE_MS = 300;
const DEFAULT_MIN_QUERY_LENGTH = 2;

export class WidgetCore {
  readonly state: WidgetState = initialState();

  private sequence = 0;
  private debounceTimer: ReturnType<typeof setTimeout> | null = null;
  private readonly debounceMs: number;
  private readonly minQueryLength: number;

  constructor(
    private api: ApiClient,
    config: WidgetConfig,
    private onChange: (state: WidgetState) => void = () => {},
  ) {
    this.debounceMs = config.debounceMs ?? DEFAULT_DEBOUNCE_MS;
    this.minQueryLength = config.minQueryLength ?? DEFAULT_MIN_QUERY_LENGTH;
    this.state.selectedType = config.defaultTypeFilters[0] ?? null;
  }

  /** Held in memory only; never persisted. */
  setApiKey(key: string): void {
    this.api.setApiKey(key);
    this.emit();
  }

  setQuery(query: string): void {
    this.state.query = query;
    const trimmed = query.trim();
    if (this.debounceTimer !== null) clearTimeout(this.debounceTimer);
    if (trimmed.length === 0) {
      this.state.hint = null;
      this.state.hits = [];
      this.emit();
      return;
    }
    if (trimmed.length < this.minQueryLength) {
      this.state.hint = `type at least ${this.minQueryLength} characters`;
      this.emit();
      return;
    }
    this.state.hint = null;
    this.debounceTimer = setTimeout(() => {
      this.debounceTimer = null;
      void this.runSearch(trimmed);
    }, this.debounceMs);
    this.emit();
  }

  setTypeFilter(typeIri: string | null): void {
    this.state.selectedType = typeIri;
    const trimmed = this.state.query.trim();
    if (trimmed.length >= this.minQueryLength) void this.runSearch(trimmed);
    else this.emit();
  }

  async openDetail(iri: string): Promise<void> {
    this.state.selectedInstance = iri;
    this.state.detail = null;
    this.state.loading = true;
    this.emit();
    try {
      const doc = await this.api.instanceJsonLd(iri);
      this.state.detail = parseInstanceDetail(doc, iri);
      this.state.error = null;
    } catch (err) {
      this.state.detail = null;
      if (err instanceof ApiError && err.status === 404) {
        this.state.error = "instance not found";
      } else {
        this.state.error = this.describe(err);
      }
    } finally {
      this.state.loading = false;
      this.emit();
    }
  }

  closeDetail(): void {
    this.state.selectedInstance = null;
    this.state.detail = null;
    this.emit();
  }

  downloadUrl(iri: string, format: "ntriples" | "turtle" | "jsonld"): string {
    return this.api.downloadUrl(iri, format);
  }

  private async runSearch(query: string): Promise<void> {
    const seq = ++this.sequence;
    this.state.loading = true;
    this.emit();
    try {
      const hits = await this.api.search(query, this.state.selectedType);
      if (seq !== this.sequence) return; // superseded by a newer query
      this.state.hits = hits; // API order, never re-ranked
      this.state.error = null;
    } catch (err) {
      if (seq !== this.sequence) return;
      // non-blocking: keep the previous hits on screen
      this.state.error = this.describe(err);
    } finally {
      if (seq === this.sequence) {
        this.state.loading = false;
        this.emit();
      }
    }
  }

  private describe(err: unknown): string {
    if (err instanceof ApiError) {
      if (err.status === 401) return "API key missing or invalid — enter a key";
      return `${err.code}: ${err.message}`;
    }
    return "network error — server unreachable";
  }

  private emit(): void {
    this.onChange(this.state);
  }
}
