/** Fixture atlas mirroring the map server's JSON for tests. */

import type { Meta, SrtMap, MapCell } from "../src/types.js";
import type { UiState } from "../src/state.js";
import type { MapApi } from "../src/api.js";

export const PALETTE_12 = [
  "#00007f", "#0000e0", "#0060ff", "#00c8ff", "#00ffd0", "#40ff80",
  "#a0ff40", "#e8f000", "#ffc000", "#ff8000", "#e83000", "#7f0000",
];

export function fixtureMeta(): Meta {
  return {
    scene: {
      name: "living-room-demo",
      rooms: [
        { name: "living", origin: [0, 0, 0], size: [5, 4, 2.6] },
        { name: "neighbor", origin: [-3.5, 0, 0], size: [3.5, 4, 2.6] },
      ],
      walkable: { x0: 0.75, y0: 0.75, x1: 4.25, y1: 3.25 },
      furniture: [
        { name: "tv", box: [1.9, 3.55, 3.1, 3.95] },
        { name: "couch", box: [1.3, 0.2, 3.7, 1.1] },
      ],
      apertures: [{ name: "door", wall: "west", from: "2.30", to: "3.20" }],
      sources: [
        { name: "tv", position: [2.5, 3.6, 1.0] },
        { name: "conversation", position: [0.05, 2.95, 1.5] },
        { name: "dishwasher", position: [0.05, 2.45, 0.8] },
      ],
      listener: { position: [2.5, 1.0, 1.2] },
    },
    grid: { mesh_m: 0.5, origin: [0.75, 0.75], nx: 8, ny: 6, z: 1.5 },
    orientations: [-90, -45, 0, 45, 90],
    profiles: ["normal", "impaired_unaided", "impaired_aided"],
    colors: {
      n: 12,
      allowed_n: [8, 12, 16, 24],
      lo_db_spl: 45,
      hi_db_spl: 85,
      palette: PALETTE_12,
      effort_bands: [
        ["casual", 45, 52], ["normal", 52, 60], ["raised", 60, 66],
        ["loud", 66, 75], ["shouted", 75, 85],
      ],
    },
    atlas_meta: { scene_hash: "fixture" },
  };
}

export function fixtureMap(state: UiState, srtOf?: (ix: number, iy: number) => number): SrtMap {
  const meta = fixtureMeta();
  const cells: MapCell[] = [];
  for (let iy = 0; iy < meta.grid.ny; iy++) {
    for (let ix = 0; ix < meta.grid.nx; ix++) {
      const srt = srtOf ? srtOf(ix, iy) : 40.0;
      const width = (85 - 45) / state.colorCount;
      const grade = Math.min(Math.max(Math.floor((srt - 45) / width), 0),
                             state.colorCount - 1);
      cells.push({
        ix, iy,
        x: 0.75 + ix * 0.5,
        y: 0.75 + iy * 0.5,
        srt_db_spl: srt,
        grade,
        effort: "casual",
        flag: "ok",
      });
    }
  }
  return {
    azimuth: state.azimuth, tv: state.tv, door: state.door,
    profile: state.profile, mesh_m: 0.5, nx: 8, ny: 6,
    n_colors: state.colorCount,
    palette: PALETTE_12.slice(0, Math.min(12, state.colorCount)),
    cells,
  };
}

export class FakeApi implements MapApi {
  mapCalls: UiState[] = [];
  srtOf?: (ix: number, iy: number) => number;

  async fetchMeta(): Promise<Meta> {
    return fixtureMeta();
  }

  async fetchMap(state: UiState): Promise<SrtMap> {
    this.mapCalls.push({ ...state });
    return fixtureMap(state, this.srtOf);
  }
}

interface DrawOp {
  op: string;
  args: number[];
  fillStyle: string;
  strokeStyle: string;
  text?: string;
}

/** Records draw calls with the styles active at call time. */
export class RecordingCtx {
  fillStyle: string | CanvasGradient | CanvasPattern = "#000000";
  strokeStyle: string | CanvasGradient | CanvasPattern = "#000000";
  lineWidth = 1;
  font = "";
  textAlign: CanvasTextAlign = "left";
  textBaseline: CanvasTextBaseline = "alphabetic";
  ops: DrawOp[] = [];

  private log(op: string, args: number[], text?: string): void {
    this.ops.push({ op, args, fillStyle: String(this.fillStyle),
                    strokeStyle: String(this.strokeStyle), text });
  }

  fillRect(...args: number[]): void { this.log("fillRect", args); }
  strokeRect(...args: number[]): void { this.log("strokeRect", args); }
  clearRect(...args: number[]): void { this.ops = []; this.log("clearRect", args); }
  beginPath(): void { this.log("beginPath", []); }
  moveTo(...args: number[]): void { this.log("moveTo", args); }
  lineTo(...args: number[]): void { this.log("lineTo", args); }
  arc(...args: number[]): void { this.log("arc", args); }
  closePath(): void { this.log("closePath", []); }
  fill(): void { this.log("fill", []); }
  stroke(): void { this.log("stroke", []); }
  fillText(text: string, x: number, y: number): void {
    this.log("fillText", [x, y], text);
  }

  fillsInside(x0: number, y0: number, x1: number, y1: number): DrawOp[] {
    return this.ops.filter((o) => {
      if (o.op !== "fillRect") return false;
      const [x, y, w, h] = o.args;
      const cx = x + w / 2;
      const cy = y + h / 2;
      return cx >= x0 && cx <= x1 && cy >= y0 && cy <= y1;
    });
  }
}
