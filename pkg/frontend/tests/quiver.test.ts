import { describe, expect, it } from "vitest";

import {
  arrowSegments,
  canvasSize,
  cellPixel,
  hashString,
  markerPixel,
  markerShapes,
  markersCoincide,
  styleForSlot,
  CELL_PX,
  MARGIN_PX,
} from "../src/quiver.js";
import type { StudyItemPayload } from "../src/types.js";

function payload(
  height: number,
  width: number,
  fill: (r: number, c: number) => [number, number],
  itemId = "test-000",
): StudyItemPayload {
  const u: number[][] = [];
  const v: number[][] = [];
  for (let r = 0; r < height; r++) {
    u.push([]);
    v.push([]);
    for (let c = 0; c < width; c++) {
      const [uu, vv] = fill(r, c);
      u[r]!.push(uu);
      v[r]!.push(vv);
    }
  }
  return {
    item_id: itemId,
    grid: { lat0: 0, lon0: 44, dlat: 1, dlon: 1, height, width },
    u,
    v,
    markers: [
      { lat: 1, lon: 45 },
      { lat: 2, lon: 46 },
    ],
    progress: { completed: 0, total: 20 },
  };
}

describe("arrowSegments", () => {
  it("renders one arrow per grid cell", () => {
    const p = payload(32, 56, () => [1, 1]);
    expect(arrowSegments(p)).toHaveLength(1792);
  });

  it("zero wind gives zero-length segments", () => {
    const p = payload(4, 4, () => [0, 0]);
    for (const seg of arrowSegments(p)) {
      expect(seg.x1).toBe(seg.x2);
      expect(seg.y1).toBe(seg.y2);
    }
  });

  it("scales the strongest arrow to just under a cell", () => {
    const p = payload(4, 4, (r, c) => (r === 1 && c === 2 ? [10, 0] : [1, 0]));
    const segs = arrowSegments(p);
    const longest = Math.max(...segs.map((s) => Math.hypot(s.x2 - s.x1, s.y2 - s.y1)));
    expect(longest).toBeCloseTo(0.9 * CELL_PX, 6);
  });

  it("points north-up: positive v decreases canvas y", () => {
    const p = payload(4, 4, () => [0, 5]);
    const seg = arrowSegments(p)[0]!;
    expect(seg.y2).toBeLessThan(seg.y1);
    expect(seg.x1).toBe(seg.x2);
  });
});

describe("geometry", () => {
  it("row 0 draws at the bottom of the canvas", () => {
    const grid = { lat0: 0, lon0: 44, dlat: 1, dlon: 1, height: 4, width: 4 };
    const bottom = cellPixel(grid, 0, 0);
    const top = cellPixel(grid, 3, 0);
    expect(bottom.y).toBeGreaterThan(top.y);
  });

  it("marker pixels line up with their cell centers", () => {
    const grid = { lat0: 0, lon0: 44, dlat: 1, dlon: 1, height: 4, width: 4 };
    expect(markerPixel(grid, { lat: 2, lon: 46 })).toEqual(cellPixel(grid, 2, 2));
  });

  it("canvas size covers the grid plus margins", () => {
    const grid = { lat0: 0, lon0: 44, dlat: 1, dlon: 1, height: 4, width: 6 };
    expect(canvasSize(grid)).toEqual({
      width: 2 * MARGIN_PX + 6 * CELL_PX,
      height: 2 * MARGIN_PX + 4 * CELL_PX,
    });
  });
});

describe("marker styling", () => {
  it("assigns opposite shapes to the two slots", () => {
    for (const id of ["a", "b", "train-007", "test-123"]) {
      expect(styleForSlot(id, 0)).not.toBe(styleForSlot(id, 1));
    }
  });

  it("is a pure function of the item id", () => {
    expect(styleForSlot("test-001", 0)).toBe(styleForSlot("test-001", 0));
    expect(hashString("test-001")).toBe(hashString("test-001"));
  });

  it("varies across items", () => {
    const ids = Array.from({ length: 64 }, (_, i) => `item-${i}`);
    const styles = new Set(ids.map((id) => styleForSlot(id, 0)));
    expect(styles.size).toBe(2);
  });

  it("draws two arms per marker and no halo when separated", () => {
    const p = payload(4, 4, () => [0, 0]);
    const shapes = markerShapes(p);
    expect(shapes).toHaveLength(2);
    for (const s of shapes) {
      expect(s.arms).toHaveLength(2);
      expect(s.halo).toBe(false);
    }
    expect(shapes[0]!.kind).not.toBe(shapes[1]!.kind);
  });

  it("flags coincident markers for halo rendering", () => {
    const p = payload(4, 4, () => [0, 0]);
    p.markers = [
      { lat: 1, lon: 45 },
      { lat: 1, lon: 45 },
    ];
    expect(markersCoincide(p.markers)).toBe(true);
    for (const s of markerShapes(p)) {
      expect(s.halo).toBe(true);
    }
  });
});
