/**
 * Canvas painter for the quiver scene. The geometry comes from quiver.ts;
 * this file only issues drawing commands, so tests can pass a recording
 * stub in place of a real 2D context.
 */

import { arrowSegments, canvasSize, markerShapes, CELL_PX } from "./quiver.js";
import type { StudyItemPayload } from "./types.js";

/** The subset of CanvasRenderingContext2D the painter needs. */
export interface Paintable {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
}

export function paintScene(ctx: Paintable, payload: StudyItemPayload): void {
  const { width, height } = canvasSize(payload.grid);
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, width, height);

  ctx.strokeStyle = "#667";
  ctx.lineWidth = 1;
  for (const seg of arrowSegments(payload)) {
    ctx.beginPath();
    ctx.moveTo(seg.x1, seg.y1);
    ctx.lineTo(seg.x2, seg.y2);
    const dx = seg.x2 - seg.x1;
    const dy = seg.y2 - seg.y1;
    const len = Math.hypot(dx, dy);
    if (len > 1e-9) {
      // two short barbs as the arrowhead
      const hx = dx / len;
      const hy = dy / len;
      const barb = Math.min(4, len / 2);
      ctx.moveTo(seg.x2, seg.y2);
      ctx.lineTo(seg.x2 - barb * (hx + 0.5 * hy), seg.y2 - barb * (hy - 0.5 * hx));
      ctx.moveTo(seg.x2, seg.y2);
      ctx.lineTo(seg.x2 - barb * (hx - 0.5 * hy), seg.y2 - barb * (hy + 0.5 * hx));
    }
    ctx.stroke();
  }

  // both markers draw in the same neutral color; only the shape differs
  ctx.strokeStyle = "#111";
  ctx.lineWidth = 2.5;
  for (const marker of markerShapes(payload)) {
    for (const arm of marker.arms) {
      ctx.beginPath();
      ctx.moveTo(arm.x1, arm.y1);
      ctx.lineTo(arm.x2, arm.y2);
      ctx.stroke();
    }
    if (marker.halo) {
      // coincident markers: a ring keeps the second one visible
      ctx.beginPath();
      ctx.arc(marker.cx, marker.cy, 1.2 * CELL_PX, 0, 2 * Math.PI);
      ctx.stroke();
    }
  }
}
