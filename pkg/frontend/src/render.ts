/** Pure HTML rendering of the widget state (string in, string out, so it
 * is testable without a DOM). */

import type { WidgetCore } from "./widget.js";
import type { WidgetState } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderHits(state: WidgetState): string {
  const parts: string[] = [];
  if (state.hint) parts.push(`<p class="hint">${escapeHtml(state.hint)}</p>`);
  if (state.error) parts.push(`<p class="banner error">${escapeHtml(state.error)}</p>`);
  if (state.loading) parts.push(`<p class="loading">searching…</p>`);
  parts.push('<ol class="hits">');
  for (const hit of state.hits) {
    const types = hit.typeIris.map(escapeHtml).join(", ");
    const license = hit.license
      ? ` <span class="license-badge">${escapeHtml(hit.license)}</span>`
      : "";
    parts.push(
      `<li><a href="#" data-instance="${escapeHtml(hit.instance)}">` +
        `${escapeHtml(hit.name)}</a> <small>${types}</small>${license}</li>`,
    );
  }
  parts.push("</ol>");
  return parts.join("\n");
}

export function renderDetail(state: WidgetState, core: WidgetCore): string {
  if (state.selectedInstance === null) return "";
  if (state.loading) return `<p class="loading">loading…</p>`;
  if (state.detail === null) {
    return `<p class="banner error">${escapeHtml(state.error ?? "instance not found")}</p>`;
  }
  const d = state.detail;
  const parts: string[] = [
    `<h2>${escapeHtml(d.name ?? d.iri)}</h2>`,
    `<p class="iri">${escapeHtml(d.iri)}</p>`,
  ];
  if (d.types.length > 0) {
    parts.push(`<p class="types">${d.types.map(escapeHtml).join(", ")}</p>`);
  }
  parts.push("<table>");
  for (const prop of d.properties) {
    for (const value of prop.values) {
      parts.push(
        `<tr><td>${escapeHtml(prop.predicate)}</td><td>${escapeHtml(value)}</td></tr>`,
      );
    }
  }
  parts.push("</table>");
  if (d.geoLinks.length > 0) {
    parts.push("<h3>Nearby</h3><ul>");
    for (const link of d.geoLinks) {
      const walk = link.walkingMeters !== null ? `${link.walkingMeters} m walking` : "";
      parts.push(`<li>${escapeHtml(link.entity)} ${walk}</li>`);
    }
    parts.push("</ul>");
  }
  if (d.license) {
    parts.push(`<p class="license">License: ${escapeHtml(d.license)}</p>`);
  }
  const downloads = (["ntriples", "turtle", "jsonld"] as const)
    .map((f) => `<a href="${escapeHtml(core.downloadUrl(d.iri, f))}">${f}</a>`)
    .join(" ");
  parts.push(`<p class="downloads">Download: ${downloads}</p>`);
  return parts.join("\n");
}
