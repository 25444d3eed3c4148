/** Typed client for the map server; map fetches are latest-wins. */

import type { Meta, SrtMap } from "./types.js";
import type { UiState } from "./state.js";

export interface MapApi {
  fetchMeta(): Promise<Meta>;
  fetchMap(state: UiState): Promise<SrtMap>;
}

export class HttpMapApi implements MapApi {
  private controller: AbortController | null = null;

  constructor(private baseUrl: string = "") {}

  async fetchMeta(): Promise<Meta> {
    const resp = await fetch(`${this.baseUrl}/api/meta`);
    if (!resp.ok) throw new Error(`meta request failed: ${resp.status}`);
    return resp.json();
  }

  /** In-flight map requests are aborted when a newer one starts. */
  async fetchMap(state: UiState): Promise<SrtMap> {
    this.controller?.abort();
    this.controller = new AbortController();
    const params = new URLSearchParams({
      azimuth: String(state.azimuth),
      tv: String(state.tv),
      door: String(state.door),
      profile: state.profile,
      n: String(state.colorCount),
    });
    const resp = await fetch(`${this.baseUrl}/api/map?${params}`, {
      signal: this.controller.signal,
    });
    if (!resp.ok) throw new Error(`map request failed: ${resp.status}`);
    return resp.json();
  }
}
