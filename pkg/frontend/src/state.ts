/** UI state and its transitions. Pure functions, no DOM. */

import type { Meta, SrtMap } from "./types.js";

export const PROFILE_ORDER = ["normal", "impaired_unaided", "impaired_aided"];

export const PROFILE_COLORS: Record<string, string> = {
  normal: "#ffffff",
  impaired_unaided: "#ff9d2e",
  impaired_aided: "#9ecfff",
};

export interface UiState {
  azimuth: number;
  tv: number;
  door: number;
  profile: string;
  colorCount: number;
  baseline: SrtMap | null; // pinned snapshot, never mutated
}

export function initialState(meta: Meta): UiState {
  return {
    azimuth: meta.orientations.includes(0) ? 0 : meta.orientations[0],
    tv: 1,
    door: 1,
    profile: meta.profiles[0] ?? "normal",
    colorCount: meta.colors.n,
    baseline: null,
  };
}

export function toggleTv(state: UiState): UiState {
  return { ...state, tv: state.tv ? 0 : 1 };
}

export function toggleDoor(state: UiState): UiState {
  return { ...state, door: state.door ? 0 : 1 };
}

/** normal -> impaired (orange) -> aided (light blue) -> normal ... */
export function cycleProfile(state: UiState, profiles: string[]): UiState {
  const order = PROFILE_ORDER.filter((p) => profiles.includes(p));
  const idx = order.indexOf(state.profile);
  return { ...state, profile: order[(idx + 1) % order.length] };
}

export function cycleColorCount(state: UiState, allowed: number[]): UiState {
  const idx = allowed.indexOf(state.colorCount);
  return { ...state, colorCount: allowed[(idx + 1) % allowed.length] };
}

export function pinBaseline(state: UiState, map: SrtMap | null): UiState {
  if (state.baseline !== null) return { ...state, baseline: null };
  if (map === null) return state;
  return { ...state, baseline: Object.freeze(structuredClone(map)) };
}

function wrapDeg(a: number): number {
  let w = ((a + 180) % 360 + 360) % 360 - 180;
  return w;
}

/**
 * Bearing of a world point as seen from the listener, in the scene's
 * azimuth convention: 0 degrees faces +y, positive turns counterclockwise
 * (toward the listener's left).
 */
export function bearingDeg(listener: number[], wx: number, wy: number): number {
  const dx = wx - listener[0];
  const dy = wy - listener[1];
  return (Math.atan2(-dx, dy) * 180) / Math.PI;
}

/** Served orientation whose look direction is closest to the bearing. */
export function snapAzimuth(bearing: number, served: number[]): number {
  let best = served[0];
  let bestDist = Infinity;
  for (const az of served) {
    const d = Math.abs(wrapDeg(bearing - az));
    if (d < bestDist) {
      bestDist = d;
      best = az;
    }
  }
  return best;
}

export function setAzimuthToward(
  state: UiState,
  meta: Meta,
  wx: number,
  wy: number,
): UiState {
  const bearing = bearingDeg(meta.scene.listener.position, wx, wy);
  return { ...state, azimuth: snapAzimuth(bearing, meta.orientations) };
}
