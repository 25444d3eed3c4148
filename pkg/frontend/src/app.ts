/** The interactive map application: state, fetching, redrawing.

All interaction is single-click/touch. A click either toggles a noise
source, cycles the listener profile, re-orients the head toward the
clicked position, or adjusts the legend controls; any change refetches
the served map (latest response wins) and redraws.
*/

import type { MapApi } from "./api.js";
import type { Meta, SrtMap } from "./types.js";
import { Ctx2D, drawMap } from "./render.js";
import { computeLayout, hitTest, Layout } from "./layout.js";
import {
  UiState,
  cycleColorCount,
  cycleProfile,
  initialState,
  pinBaseline,
  setAzimuthToward,
  toggleDoor,
  toggleTv,
} from "./state.js";

export class App {
  meta!: Meta;
  state!: UiState;
  layout!: Layout;
  map: SrtMap | null = null;
  lastDrawMs = 0;
  private fetchSeq = 0;

  constructor(private api: MapApi, private ctx: Ctx2D,
              private width = 960, private height = 620) {}

  async init(): Promise<void> {
    this.meta = await this.api.fetchMeta();
    this.layout = computeLayout(this.meta, this.width, this.height);
    this.state = initialState(this.meta);
    await this.refresh();
  }

  /** Fetch the map for the current state; stale responses are dropped. */
  async refresh(): Promise<void> {
    const seq = ++this.fetchSeq;
    const map = await this.api.fetchMap(this.state);
    if (seq !== this.fetchSeq) return; // a newer request superseded this one
    this.map = map;
    this.redraw();
  }

  redraw(): void {
    if (!this.map) return;
    const t0 = now();
    drawMap(this.ctx, this.layout, this.meta, this.map, this.state);
    this.lastDrawMs = now() - t0;
  }

  /** Handle a click/tap at canvas coordinates; returns the region kind. */
  async handleClick(px: number, py: number): Promise<string> {
    const hit = hitTest(this.layout, px, py);
    switch (hit.kind) {
      case "tv":
        this.state = toggleTv(this.state);
        await this.refresh();
        break;
      case "door":
        this.state = toggleDoor(this.state);
        await this.refresh();
        break;
      case "head":
        this.state = cycleProfile(this.state, this.meta.profiles);
        await this.refresh();
        break;
      case "map": {
        const next = setAzimuthToward(this.state, this.meta, hit.wx, hit.wy);
        if (next.azimuth !== this.state.azimuth) {
          this.state = next;
          await this.refresh();
        }
        break;
      }
      case "colors":
        this.state = cycleColorCount(this.state, this.meta.colors.allowed_n);
        await this.refresh();
        break;
      case "pin":
        this.state = pinBaseline(this.state, this.map);
        this.redraw();
        break;
      case "none":
        break;
    }
    return hit.kind;
  }
}

function now(): number {
  return typeof performance !== "undefined" ? performance.now() : Date.now();
}
