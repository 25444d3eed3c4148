/** Shapes of the JSON served by the map server. */

export interface RoomMeta {
  name: string;
  origin: number[];
  size: number[];
}

export interface FurnitureMeta {
  name: string;
  box: number[]; // x0 y0 x1 y1 (metres)
}

export interface ApertureMeta {
  name: string;
  wall?: string;
  from?: string;
  to?: string;
}

export interface SceneMeta {
  name: string;
  rooms: RoomMeta[];
  walkable: { x0: number; y0: number; x1: number; y1: number };
  furniture: FurnitureMeta[];
  apertures: ApertureMeta[];
  sources: { name: string; position: number[] }[];
  listener: { position: number[] };
}

export interface ColorsMeta {
  n: number;
  allowed_n: number[];
  lo_db_spl: number;
  hi_db_spl: number;
  palette: string[];
  effort_bands: [string, number, number][];
}

export interface Meta {
  scene: SceneMeta;
  grid: { mesh_m: number; origin: number[]; nx: number; ny: number; z: number };
  orientations: number[];
  profiles: string[];
  colors: ColorsMeta;
  atlas_meta: Record<string, string>;
}

export interface MapCell {
  ix: number;
  iy: number;
  x: number;
  y: number;
  srt_db_spl: number | null;
  grade: number | null;
  effort: string | null;
  flag: string;
}

export interface SrtMap {
  azimuth: number;
  tv: number;
  door: number;
  profile: string;
  mesh_m: number;
  nx: number;
  ny: number;
  n_colors: number;
  palette: string[];
  cells: MapCell[];
}
