/**
 * Pure geometry for the quiver plot and markers: everything here is plain
 * math on the payload so it can be unit-tested without a canvas.
 */

import type { GridMeta, MarkerPoint, StudyItemPayload } from "./types.js";

export const CELL_PX = 16;
export const MARGIN_PX = 8;

export interface Segment {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface MarkerShape {
  kind: "plus" | "x";
  cx: number;
  cy: number;
  arms: Segment[];
  /** true when the other marker overlaps and a halo ring should be drawn */
  halo: boolean;
}

export function canvasSize(grid: GridMeta): { width: number; height: number } {
  return {
    width: 2 * MARGIN_PX + grid.width * CELL_PX,
    height: 2 * MARGIN_PX + grid.height * CELL_PX,
  };
}

/** Pixel center of a cell; row 0 is the southernmost, drawn at the bottom. */
export function cellPixel(grid: GridMeta, row: number, col: number): { x: number; y: number } {
  return {
    x: MARGIN_PX + (col + 0.5) * CELL_PX,
    y: MARGIN_PX + (grid.height - 1 - row + 0.5) * CELL_PX,
  };
}

export function markerPixel(grid: GridMeta, m: MarkerPoint): { x: number; y: number } {
  const row = (m.lat - grid.lat0) / grid.dlat;
  const col = (m.lon - grid.lon0) / grid.dlon;
  return {
    x: MARGIN_PX + (col + 0.5) * CELL_PX,
    y: MARGIN_PX + (grid.height - 1 - row + 0.5) * CELL_PX,
  };
}

/**
 * One arrow per grid cell, scaled so the strongest wind in the scene spans
 * just under one cell. Zero wind degenerates to zero-length segments.
 */
export function arrowSegments(payload: StudyItemPayload): Segment[] {
  const { grid, u, v } = payload;
  let peak = 0;
  for (let r = 0; r < grid.height; r++) {
    const ur = u[r]!;
    const vr = v[r]!;
    for (let c = 0; c < grid.width; c++) {
      peak = Math.max(peak, Math.hypot(ur[c]!, vr[c]!));
    }
  }
  const scale = peak > 0 ? (0.45 * CELL_PX) / peak : 0;
  const out: Segment[] = [];
  for (let r = 0; r < grid.height; r++) {
    for (let c = 0; c < grid.width; c++) {
      const { x, y } = cellPixel(grid, r, c);
      const dx = u[r]![c]! * scale;
      const dy = -v[r]![c]! * scale; // canvas y grows downward
      out.push({ x1: x - dx, y1: y - dy, x2: x + dx, y2: y + dy });
    }
  }
  return out;
}

/** FNV-1a hash; stable across sessions so styling is a pure payload function. */
export function hashString(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h >>> 0;
}

/**
 * Which shape goes on which marker slot. Derived from the item id only, so
 * the mapping is randomized per item yet carries no information about the
 * hidden assignment (which the client never has).
 */
export function styleForSlot(itemId: string, slot: 0 | 1): "plus" | "x" {
  const firstIsPlus = (hashString(itemId) & 1) === 0;
  return (slot === 0) === firstIsPlus ? "plus" : "x";
}

export function markersCoincide(markers: MarkerPoint[]): boolean {
  if (markers.length < 2) return false;
  const [a, b] = markers as [MarkerPoint, MarkerPoint];
  return a.lat === b.lat && a.lon === b.lon;
}

export function markerShapes(payload: StudyItemPayload): MarkerShape[] {
  const halo = markersCoincide(payload.markers);
  const r = 0.9 * CELL_PX;
  const d = r * Math.SQRT1_2;
  return payload.markers.map((m, slot) => {
    const { x, y } = markerPixel(payload.grid, m);
    const kind = styleForSlot(payload.item_id, slot as 0 | 1);
    const arms: Segment[] =
      kind === "plus"
        ? [
            { x1: x - r, y1: y, x2: x + r, y2: y },
            { x1: x, y1: y - r, x2: x, y2: y + r },
          ]
        : [
            { x1: x - d, y1: y - d, x2: x + d, y2: y + d },
            { x1: x - d, y1: y + d, x2: x + d, y2: y - d },
          ];
    return { kind, cx: x, cy: y, arms, halo };
  });
}
