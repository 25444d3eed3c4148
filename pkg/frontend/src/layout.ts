/** World-to-canvas geometry and clickable regions. */

import type { Meta } from "./types.js";

export interface Rect {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export interface Layout {
  width: number;
  height: number;
  scale: number;
  offsetX: number;
  offsetY: number;
  legend: Rect;           // canvas coordinates
  countButton: Rect;
  pinButton: Rect;
  tvBox: Rect | null;     // world coordinates
  doorBox: Rect | null;
  headCenter: number[];
  headRadius: number;     // metres
  mapArea: Rect;          // world coordinates, walkable + half mesh
}

const LEGEND_W = 170;
const PAD = 24;

export function computeLayout(meta: Meta, width = 960, height = 620): Layout {
  const xs: number[] = [];
  const ys: number[] = [];
  for (const room of meta.scene.rooms) {
    xs.push(room.origin[0], room.origin[0] + room.size[0]);
    ys.push(room.origin[1], room.origin[1] + room.size[1]);
  }
  const margin = 0.25;
  const wx0 = Math.min(...xs) - margin;
  const wx1 = Math.max(...xs) + margin;
  const wy0 = Math.min(...ys) - margin;
  const wy1 = Math.max(...ys) + margin;
  const scale = Math.min(
    (width - LEGEND_W - 2 * PAD) / (wx1 - wx0),
    (height - 2 * PAD) / (wy1 - wy0),
  );

  const tv = meta.scene.furniture.find((f) => f.name === "tv");
  const half = meta.grid.mesh_m / 2;
  const walk = meta.scene.walkable;

  let doorBox: Rect | null = null;
  const door = meta.scene.apertures.find((a) => a.name === "door");
  const living = meta.scene.rooms[0];
  if (door && door.from !== undefined && door.to !== undefined) {
    const lo = parseFloat(door.from);
    const hi = parseFloat(door.to);
    const wallX = living.origin[0]; // the bundled door sits on the west wall
    doorBox = { x0: wallX - 0.14, y0: lo, x1: wallX + 0.14, y1: hi };
  }

  return {
    width,
    height,
    scale,
    offsetX: PAD - wx0 * scale,
    offsetY: height - PAD + wy0 * scale,
    legend: { x0: width - LEGEND_W, y0: PAD, x1: width - PAD, y1: height - PAD },
    countButton: { x0: width - LEGEND_W, y0: height - 74, x1: width - PAD, y1: height - 50 },
    pinButton: { x0: width - LEGEND_W, y0: height - 44, x1: width - PAD, y1: height - 20 },
    tvBox: tv ? { x0: tv.box[0], y0: tv.box[1], x1: tv.box[2], y1: tv.box[3] } : null,
    doorBox,
    headCenter: meta.scene.listener.position.slice(0, 2),
    headRadius: 0.28,
    mapArea: {
      x0: walk.x0 - half, y0: walk.y0 - half,
      x1: walk.x1 + half, y1: walk.y1 + half,
    },
  };
}

export function toCanvas(layout: Layout, wx: number, wy: number): [number, number] {
  return [layout.offsetX + wx * layout.scale, layout.offsetY - wy * layout.scale];
}

export function toWorld(layout: Layout, px: number, py: number): [number, number] {
  return [(px - layout.offsetX) / layout.scale, (layout.offsetY - py) / layout.scale];
}

function inRect(r: Rect, x: number, y: number): boolean {
  return x >= r.x0 && x <= r.x1 && y >= r.y0 && y <= r.y1;
}

export type HitRegion =
  | { kind: "tv" }
  | { kind: "door" }
  | { kind: "head" }
  | { kind: "map"; wx: number; wy: number }
  | { kind: "colors" }
  | { kind: "pin" }
  | { kind: "none" };

/** Hit-test priority: source boxes, then head glyph, then the map area. */
export function hitTest(layout: Layout, px: number, py: number): HitRegion {
  if (inRect(layout.countButton, px, py)) return { kind: "colors" };
  if (inRect(layout.pinButton, px, py)) return { kind: "pin" };
  const [wx, wy] = toWorld(layout, px, py);
  if (layout.tvBox && inRect(layout.tvBox, wx, wy)) return { kind: "tv" };
  if (layout.doorBox && inRect(layout.doorBox, wx, wy)) return { kind: "door" };
  const dx = wx - layout.headCenter[0];
  const dy = wy - layout.headCenter[1];
  if (Math.hypot(dx, dy) <= layout.headRadius) return { kind: "head" };
  if (inRect(layout.mapArea, wx, wy)) return { kind: "map", wx, wy };
  return { kind: "none" };
}
