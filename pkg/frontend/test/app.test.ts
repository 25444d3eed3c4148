/** Click-driven behavior against the fixture atlas (the acceptance set). */

import { beforeEach, describe, expect, it } from "vitest";

import { App } from "../src/app.js";
import { toCanvas } from "../src/layout.js";
import { FakeApi, RecordingCtx } from "./fixtures.js";

const SOURCE_ON = "#d64533";
const SOURCE_OFF = "#3fa34d";

let api: FakeApi;
let ctx: RecordingCtx;
let app: App;

beforeEach(async () => {
  api = new FakeApi();
  ctx = new RecordingCtx();
  app = new App(api, ctx);
  await app.init();
});

function canvasPoint(wx: number, wy: number): [number, number] {
  return toCanvas(app.layout, wx, wy);
}

function tvCenter(): [number, number] {
  const b = app.layout.tvBox!;
  return canvasPoint((b.x0 + b.x1) / 2, (b.y0 + b.y1) / 2);
}

function tvFill(): string {
  const b = app.layout.tvBox!;
  const [cx0, cy1] = canvasPoint(b.x0, b.y0);
  const [cx1, cy0] = canvasPoint(b.x1, b.y1);
  const fills = ctx.fillsInside(cx0, cy0, cx1, cy1)
    .filter((o) => o.fillStyle === SOURCE_ON || o.fillStyle === SOURCE_OFF);
  return fills[fills.length - 1].fillStyle;
}

describe("clicking the TV box", () => {
  it("toggles red/green and refetches with the flipped state", async () => {
    expect(tvFill()).toBe(SOURCE_ON); // active sources render red
    const callsBefore = api.mapCalls.length;
    const [px, py] = tvCenter();
    const region = await app.handleClick(px, py);
    expect(region).toBe("tv");
    expect(api.mapCalls.length).toBe(callsBefore + 1);
    expect(api.mapCalls.at(-1)!.tv).toBe(0);
    expect(tvFill()).toBe(SOURCE_OFF); // muted sources render green
    await app.handleClick(px, py);
    expect(api.mapCalls.at(-1)!.tv).toBe(1);
    expect(tvFill()).toBe(SOURCE_ON);
  });
});

describe("clicking the head glyph", () => {
  it("cycles white -> orange -> light blue", async () => {
    const [px, py] = canvasPoint(app.layout.headCenter[0],
                                 app.layout.headCenter[1]);
    expect(app.state.profile).toBe("normal"); // white head
    let region = await app.handleClick(px, py);
    expect(region).toBe("head");
    expect(app.state.profile).toBe("impaired_unaided"); // orange
    region = await app.handleClick(px, py);
    expect(app.state.profile).toBe("impaired_aided"); // light blue
    expect(api.mapCalls.at(-1)!.profile).toBe("impaired_aided");
    await app.handleClick(px, py);
    expect(app.state.profile).toBe("normal");
  });
});

describe("clicking the map area", () => {
  it("snaps the head toward the clicked position (bearing 100 -> 90)", async () => {
    // a point at bearing 100 degrees, 1 m from the listener
    const b = (100 * Math.PI) / 180;
    const wx = 2.5 - Math.sin(b);
    const wy = 1.0 + Math.cos(b);
    const [px, py] = canvasPoint(wx, wy);
    const region = await app.handleClick(px, py);
    expect(region).toBe("map");
    expect(app.state.azimuth).toBe(90);
    expect(api.mapCalls.at(-1)!.azimuth).toBe(90);
  });

  it("does not refetch when the snapped orientation is unchanged", async () => {
    const calls = api.mapCalls.length;
    const [px, py] = canvasPoint(2.5, 3.0); // straight ahead, azimuth 0
    await app.handleClick(px, py);
    expect(app.state.azimuth).toBe(0);
    expect(api.mapCalls.length).toBe(calls);
  });
});

describe("map rendering", () => {
  it("renders a constant map as one uniform color field", async () => {
    api.srtOf = () => 40.0; // all SRTs below the scale -> grade 0 everywhere
    await app.refresh();
    const half = 0.25;
    const cellPx = 0.5 * app.layout.scale;
    const fills = new Set<string>();
    for (const cell of app.map!.cells) {
      const [cx0, cy1] = canvasPoint(cell.x - half, cell.y - half);
      const [cx1, cy0] = canvasPoint(cell.x + half, cell.y + half);
      for (const op of ctx.fillsInside(cx0 + 1, cy0 + 1, cx1 - 1, cy1 - 1)) {
        const [, , w, h] = op.args;
        if (Math.abs(Math.abs(w) - cellPx) < 2 &&
            Math.abs(Math.abs(h) - cellPx) < 2) {
          fills.add(op.fillStyle);
        }
      }
    }
    expect(fills.size).toBe(1);
    expect([...fills][0]).toBe("#00007f"); // dark blue bottom grade
  });

  it("re-renders with finer banding when the color count changes", async () => {
    api.srtOf = (ix, iy) => 45 + (ix + iy); // a gradient across the room
    await app.refresh();
    const [px, py] = [
      (app.layout.countButton.x0 + app.layout.countButton.x1) / 2,
      (app.layout.countButton.y0 + app.layout.countButton.y1) / 2,
    ];
    const region = await app.handleClick(px, py);
    expect(region).toBe("colors");
    expect(app.state.colorCount).toBe(16);
    expect(api.mapCalls.at(-1)!.colorCount).toBe(16);
  });

  it("redraws well under the 50 ms budget", async () => {
    await app.refresh();
    expect(app.lastDrawMs).toBeLessThan(50);
  });
});

describe("latest-wins fetching", () => {
  it("drops stale responses when clicks race", async () => {
    let release: (() => void) | null = null;
    const slowFirst = new Promise<void>((res) => { release = res; });
    const origFetch = api.fetchMap.bind(api);
    let call = 0;
    api.fetchMap = async (state) => {
      call += 1;
      if (call === 1) await slowFirst;
      return origFetch(state);
    };
    const p1 = app.refresh();           // will resolve late
    app.state = { ...app.state, tv: 0 };
    const p2 = app.refresh();           // newer request
    await p2;
    const after = app.map!.tv;
    release!();
    await p1;
    expect(app.map!.tv).toBe(after);    // stale response was dropped
  });
});
