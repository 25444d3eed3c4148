/** Canvas drawing of the spatial speech recognition map.

Cells are uniform squares (nearest-neighbor, the sample sits at the square
center), noise sources are red when active and green when muted, and the
head glyph is colored by listener profile. Works against a structural
subset of CanvasRenderingContext2D so tests can record the calls.
*/

import type { Meta, SrtMap } from "./types.js";
import type { UiState } from "./state.js";
import { PROFILE_COLORS } from "./state.js";
import { Layout, toCanvas } from "./layout.js";

export interface Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  textAlign: CanvasTextAlign;
  textBaseline: CanvasTextBaseline;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
}

const SOURCE_ON = "#d64533";
const SOURCE_OFF = "#3fa34d";
const UNAVAILABLE = "#b9b9b9";

function fillWorldRect(ctx: Ctx2D, layout: Layout, x0: number, y0: number,
                       x1: number, y1: number): void {
  const [cx0, cy1] = toCanvas(layout, x0, y0);
  const [cx1, cy0] = toCanvas(layout, x1, y1);
  ctx.fillRect(cx0, cy0, cx1 - cx0, cy1 - cy0);
}

function strokeWorldRect(ctx: Ctx2D, layout: Layout, x0: number, y0: number,
                         x1: number, y1: number): void {
  const [cx0, cy1] = toCanvas(layout, x0, y0);
  const [cx1, cy0] = toCanvas(layout, x1, y1);
  ctx.strokeRect(cx0, cy0, cx1 - cx0, cy1 - cy0);
}

function drawCells(ctx: Ctx2D, layout: Layout, map: SrtMap,
                   baseline: SrtMap | null): void {
  const half = map.mesh_m / 2;
  const baseGrades = new Map<string, number | null>();
  if (baseline) {
    for (const cell of baseline.cells) {
      baseGrades.set(`${cell.ix},${cell.iy}`, cell.grade);
    }
  }
  for (const cell of map.cells) {
    if (cell.grade === null || cell.flag === "error") {
      ctx.fillStyle = UNAVAILABLE;
      fillWorldRect(ctx, layout, cell.x - half, cell.y - half,
                    cell.x + half, cell.y + half);
      // hatch marks a cell with no usable value
      ctx.strokeStyle = "#777777";
      ctx.lineWidth = 1;
      const [cx0, cy0] = toCanvas(layout, cell.x - half, cell.y - half);
      const [cx1, cy1] = toCanvas(layout, cell.x + half, cell.y + half);
      ctx.beginPath();
      ctx.moveTo(cx0, cy0);
      ctx.lineTo(cx1, cy1);
      ctx.moveTo(cx0, cy1);
      ctx.lineTo(cx1, cy0);
      ctx.stroke();
      continue;
    }
    ctx.fillStyle = map.palette[cell.grade];
    fillWorldRect(ctx, layout, cell.x - half, cell.y - half,
                  cell.x + half, cell.y + half);
    const pinned = baseGrades.get(`${cell.ix},${cell.iy}`);
    if (baseline && pinned !== undefined && pinned !== cell.grade) {
      const [cx, cy] = toCanvas(layout, cell.x, cell.y);
      ctx.strokeStyle = "#000000";
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      ctx.arc(cx, cy, 5, 0, 2 * Math.PI);
      ctx.stroke();
    }
  }
}

function drawSourceBox(ctx: Ctx2D, layout: Layout,
                       box: { x0: number; y0: number; x1: number; y1: number },
                       active: boolean, label: string): void {
  ctx.fillStyle = active ? SOURCE_ON : SOURCE_OFF;
  fillWorldRect(ctx, layout, box.x0, box.y0, box.x1, box.y1);
  ctx.strokeStyle = "#222222";
  ctx.lineWidth = 1;
  strokeWorldRect(ctx, layout, box.x0, box.y0, box.x1, box.y1);
  const [cx, cy] = toCanvas(layout, (box.x0 + box.x1) / 2,
                            (box.y0 + box.y1) / 2);
  ctx.fillStyle = "#ffffff";
  ctx.font = "11px sans-serif";
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  ctx.fillText(label, cx, cy);
}

function drawHead(ctx: Ctx2D, layout: Layout, state: UiState): void {
  const [cx, cy] = toCanvas(layout, layout.headCenter[0], layout.headCenter[1]);
  const r = layout.headRadius * layout.scale;
  ctx.fillStyle = PROFILE_COLORS[state.profile] ?? "#cccccc";
  ctx.beginPath();
  ctx.arc(cx, cy, r, 0, 2 * Math.PI);
  ctx.closePath();
  ctx.fill();
  ctx.strokeStyle = "#000000";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  ctx.arc(cx, cy, r, 0, 2 * Math.PI);
  ctx.closePath();
  ctx.stroke();
  // nose line along the look direction (azimuth 0 faces +y, ccw positive)
  const a = (state.azimuth * Math.PI) / 180;
  const nx = cx - Math.sin(a) * r * 1.45;
  const ny = cy - Math.cos(a) * r * 1.45;
  ctx.beginPath();
  ctx.moveTo(cx, cy);
  ctx.lineTo(nx, ny);
  ctx.stroke();
}

function drawLegend(ctx: Ctx2D, layout: Layout, meta: Meta, map: SrtMap,
                    state: UiState): void {
  const lg = layout.legend;
  const { lo_db_spl: lo, hi_db_spl: hi, effort_bands: bands } = meta.colors;
  const n = map.palette.length;
  const swatchH = (lg.y1 - lg.y0 - 110) / n;
  ctx.font = "10px sans-serif";
  ctx.textAlign = "left";
  ctx.textBaseline = "middle";
  for (let g = 0; g < n; g++) {
    const y = lg.y1 - 110 - (g + 1) * swatchH;
    ctx.fillStyle = map.palette[g];
    ctx.fillRect(lg.x0, y, 26, swatchH + 0.5);
    const level = lo + ((hi - lo) * g) / n;
    if (g % Math.max(1, Math.round(n / 8)) === 0) {
      ctx.fillStyle = "#000000";
      ctx.fillText(`${level.toFixed(0)} dB SPL`, lg.x0 + 32, y + swatchH);
    }
  }
  ctx.fillStyle = "#000000";
  for (const [label, blo, bhi] of bands) {
    const mid = (blo + bhi) / 2;
    const frac = (mid - lo) / (hi - lo);
    const y = lg.y1 - 110 - frac * (lg.y1 - lg.y0 - 110);
    ctx.fillText(label, lg.x0 + 100, y);
  }
  ctx.strokeStyle = "#444444";
  ctx.lineWidth = 1;
  ctx.strokeRect(layout.countButton.x0, layout.countButton.y0,
                 layout.countButton.x1 - layout.countButton.x0,
                 layout.countButton.y1 - layout.countButton.y0);
  ctx.fillText(`colors: ${state.colorCount}`, layout.countButton.x0 + 8,
               (layout.countButton.y0 + layout.countButton.y1) / 2);
  ctx.strokeRect(layout.pinButton.x0, layout.pinButton.y0,
                 layout.pinButton.x1 - layout.pinButton.x0,
                 layout.pinButton.y1 - layout.pinButton.y0);
  ctx.fillText(state.baseline ? "unpin baseline" : "pin baseline",
               layout.pinButton.x0 + 8,
               (layout.pinButton.y0 + layout.pinButton.y1) / 2);
}

export function drawMap(ctx: Ctx2D, layout: Layout, meta: Meta,
                        map: SrtMap, state: UiState): void {
  ctx.clearRect(0, 0, layout.width, layout.height);
  ctx.fillStyle = "#f4f1ea";
  ctx.fillRect(0, 0, layout.width, layout.height);

  drawCells(ctx, layout, map, state.baseline);

  ctx.strokeStyle = "#222222";
  ctx.lineWidth = 2;
  for (const room of meta.scene.rooms) {
    strokeWorldRect(ctx, layout, room.origin[0], room.origin[1],
                    room.origin[0] + room.size[0],
                    room.origin[1] + room.size[1]);
  }
  for (const item of meta.scene.furniture) {
    if (item.name === "tv") continue; // drawn as an interactive box below
    ctx.strokeStyle = "#888888";
    ctx.lineWidth = 1;
    strokeWorldRect(ctx, layout, item.box[0], item.box[1], item.box[2],
                    item.box[3]);
  }

  if (layout.tvBox) {
    drawSourceBox(ctx, layout, layout.tvBox, state.tv === 1, "TV");
  }
  if (layout.doorBox) {
    drawSourceBox(ctx, layout, layout.doorBox, state.door === 1, "door");
  }
  drawHead(ctx, layout, state);
  drawLegend(ctx, layout, meta, map, state);
}
