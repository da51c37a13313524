/** Browser bootstrap: loads the widget config, wires the core to the DOM. */

import { ApiClient } from "./api.js";
import { renderDetail, renderHits } from "./render.js";
import type { WidgetConfig } from "./types.js";
import { WidgetCore } from "./widget.js";

async function loadConfig(): Promise<WidgetConfig> {
  const res = await fetch("widget-config.json");
  if (!res.ok) throw new Error(`failed to load widget-config.json (${res.status})`);
  return (await res.json()) as WidgetConfig;
}

export async function bootstrap(root: HTMLElement): Promise<WidgetCore> {
  const config = await loadConfig();
  const api = new ApiClient(config.apiBaseUrl, (url, init) => fetch(url, init));

  root.innerHTML = `
    <div class="tkg-widget">
      <div class="controls">
        <input type="password" id="tkg-api-key" placeholder="API key" autocomplete="off" />
        <input type="search" id="tkg-query" placeholder="search…" autocomplete="off" />
        <select id="tkg-type">
          <option value="">all types</option>
        </select>
      </div>
      <div id="tkg-hits"></div>
      <div id="tkg-detail"></div>
    </div>`;

  const keyInput = root.querySelector<HTMLInputElement>("#tkg-api-key")!;
  const queryInput = root.querySelector<HTMLInputElement>("#tkg-query")!;
  const typeSelect = root.querySelector<HTMLSelectElement>("#tkg-type")!;
  const hitsEl = root.querySelector<HTMLElement>("#tkg-hits")!;
  const detailEl = root.querySelector<HTMLElement>("#tkg-detail")!;

  for (const typeIri of config.defaultTypeFilters) {
    const option = document.createElement("option");
    option.value = typeIri;
    option.textContent = typeIri;
    typeSelect.append(option);
  }

  const core = new WidgetCore(api, config, (state) => {
    hitsEl.innerHTML = renderHits(state);
    detailEl.innerHTML = renderDetail(state, core);
  });
  if (core.state.selectedType !== null) typeSelect.value = core.state.selectedType;

  // The key stays on the client object only; the input is never persisted.
  keyInput.addEventListener("input", () => core.setApiKey(keyInput.value));
  queryInput.addEventListener("input", () => core.setQuery(queryInput.value));
  typeSelect.addEventListener("change", () =>
    core.setTypeFilter(typeSelect.value === "" ? null : typeSelect.value),
  );
  hitsEl.addEventListener("click", (event) => {
    const anchor = (event.target as HTMLElement).closest("a[data-instance]");
    if (!anchor) return;
    event.preventDefault();
    void core.openDetail(anchor.getAttribute("data-instance")!);
  });

  return core;
}

const rootEl = typeof document !== "undefined" ? document.getElementById("tkg-root") : null;
if (rootEl) {
  bootstrap(rootEl).catch((err) => {
    rootEl.textContent = `widget failed to start: ${String(err)}`;
  });
}
