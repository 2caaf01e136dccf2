/**
 * DOM wiring for the rater UI: render the current item on a canvas, map the
 * choice buttons and the 1/2/0 keyboard shortcuts to first/second/neither,
 * show progress, and display the live report table after completion.
 */

import { HttpStudyApi, type StudyApi } from "./api.js";
import { canvasSize, styleForSlot } from "./quiver.js";
import { paintScene, type Paintable } from "./render.js";
import { RaterSession } from "./session.js";
import type { Choice, Report } from "./types.js";

export interface MountOptions {
  split?: string;
  rater?: string;
}

const SHAPE_GLYPH = { plus: "+", x: "×" } as const;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function reportTable(report: Report): string {
  const p = report.vacuous ? "n/a (no decided judgments)" : report.p_value.toExponential(2);
  const rows: Array<[string, string]> = [
    ["Model", String(report.model)],
    ["Label", String(report.label)],
    ["Neither", String(report.neither)],
    ["Total", String(report.total)],
    ["p-value", p],
  ];
  const body = rows
    .map(([k, v]) => `<tr><td>${k}</td><td class="num">${v}</td></tr>`)
    .join("");
  return `<table class="report">${body}</table>`;
}

export async function mountApp(
  root: Document = document,
  api: StudyApi = new HttpStudyApi(""),
  opts: MountOptions = {},
): Promise<RaterSession> {
  const params = new URLSearchParams(root.defaultView?.location.search ?? "");
  const split = opts.split ?? params.get("split") ?? "test";
  const rater = opts.rater ?? params.get("rater") ?? "anonymous";

  const session = new RaterSession(api, split, rater);

  const canvas = el<HTMLCanvasElement>("scene");
  const status = el<HTMLElement>("status");
  const buttons: Array<[string, Choice]> = [
    ["choose-first", "first"],
    ["choose-second", "second"],
    ["choose-neither", "neither"],
  ];

  function redraw(): void {
    if (session.state === "rating" && session.current) {
      const item = session.current;
      const size = canvasSize(item.grid);
      canvas.width = size.width;
      canvas.height = size.height;
      const ctx = canvas.getContext("2d") as Paintable | null;
      if (ctx) {
        paintScene(ctx, item);
      }
      const g1 = SHAPE_GLYPH[styleForSlot(item.item_id, 0)];
      const g2 = SHAPE_GLYPH[styleForSlot(item.item_id, 1)];
      el("choose-first").textContent = `1: marker ${g1}`;
      el("choose-second").textContent = `2: marker ${g2}`;
      el("choose-neither").textContent = "0: no preference";
      status.textContent =
        `item ${session.progress.completed + 1} of ${session.progress.total} (${split})`;
    } else if (session.state === "done") {
      status.textContent =
        `session complete: ${session.progress.total} items ` +
        `(you chose first ${session.tally.first}, second ${session.tally.second}, ` +
        `no preference ${session.tally.neither})`;
      void api.report(split).then((report) => {
        el("report").innerHTML = reportTable(report);
      });
    } else if (session.state === "error") {
      status.textContent = `error: ${session.lastError ?? "unknown"} (reload to retry)`;
    } else {
      status.textContent = "loading…";
    }
    const rating = session.state === "rating";
    for (const [id] of buttons) {
      (el<HTMLButtonElement>(id)).disabled = !rating;
    }
  }

  async function choose(choice: Choice): Promise<void> {
    await session.choose(choice);
    redraw();
  }

  for (const [id, choice] of buttons) {
    el(id).addEventListener("click", () => void choose(choice));
  }
  root.addEventListener("keydown", (event) => {
    const key = (event as KeyboardEvent).key;
    if (key === "1") void choose("first");
    else if (key === "2") void choose("second");
    else if (key === "0") void choose("neither");
  });

  await session.start();
  redraw();
  return session;
}

// auto-mount when the page is already loaded (module scripts run after the
// DOM is parsed); tests import mountApp and drive it against their own DOM
if (typeof document !== "undefined" && document.getElementById("scene")) {
  void mountApp();
}
