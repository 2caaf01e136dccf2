/**
 * Wire types for the study API.
 *
 * Deliberately minimal: the item payload carries the wind field, the grid
 * and two anonymous marker coordinates, nothing else. No field in these
 * types links a marker to its source; the blinding tests assert the wire
 * payloads stay that way.
 */

export interface GridMeta {
  lat0: number;
  lon0: number;
  dlat: number;
  dlon: number;
  height: number;
  width: number;
}

export interface MarkerPoint {
  lat: number;
  lon: number;
}

export interface Progress {
  completed: number;
  total: number;
}

export interface StudyItemPayload {
  item_id: string;
  grid: GridMeta;
  u: number[][];
  v: number[][];
  markers: MarkerPoint[];
  progress: Progress;
}

export interface DonePayload {
  done: true;
  progress: Progress;
}

export type NextResponse = StudyItemPayload | DonePayload;

export function isDone(r: NextResponse): r is DonePayload {
  return (r as DonePayload).done === true;
}

export type Choice = "first" | "second" | "neither";

export interface SubmitAck {
  status: "recorded" | "duplicate";
  item_id: string;
}

export interface Report {
  model: number;
  label: number;
  neither: number;
  total: number;
  p_value: number;
  vacuous: boolean;
}
