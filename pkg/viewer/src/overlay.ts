// Overlay scene graph. buildOverlay turns folded session state into a flat
// list of shapes with no canvas involved, so tests can assert on exactly
// what would be drawn; draw() walks the list with plain 2D calls.
//
// Rules the builder enforces:
//  - a bubble is drawn only for proxies whose projection exists, is not
//    behind the camera, and lands inside the frame
//  - at most one context menu is drawn, around the lowest-id proxy whose
//    state is not "bubble"
//  - marked proxies get the comparer's green highlight ring
//  - widgets ride along with their proxy; countdowns show remaining time

import { ACTIONS, BUBBLE_R, MENU_INNER, MENU_OUTER, actionCategory, menuLayout } from "./menu.js";
import type { Category, Sector } from "./menu.js";
import type { ProxyView, Snapshot } from "./protocol.js";

export type Shape =
  | { kind: "bubble"; proxy: string; x: number; y: number; r: number; label: string; marked: boolean }
  | { kind: "menu-sector"; category: Category; cx: number; cy: number; start: number; end: number; active: boolean }
  | { kind: "menu-action"; category: Category; action: string; x: number; y: number; r: number }
  | { kind: "menu-title"; proxy: string; text: string; x: number; y: number }
  | { kind: "widget-text"; widget: string; proxy: string; x: number; y: number; text: string }
  | { kind: "banner"; text: string };

export function formatCountdown(seconds: number): string {
  const whole = Math.max(0, Math.ceil(seconds));
  const m = Math.floor(whole / 60);
  const s = whole % 60;
  return `${m}:${String(s).padStart(2, "0")}`;
}

export function proxyTitle(p: ProxyView): string {
  return p.refined_label ?? p.label;
}

function inFrame(proj: number[] | null | undefined, width: number, height: number): proj is number[] {
  if (!proj) return false;
  const [u, v] = proj;
  return u >= 0 && v >= 0 && u < width && v < height;
}

export function openMenuProxy(state: Snapshot): ProxyView | null {
  // proxies are kept sorted by id, so this is deterministic across reloads
  return state.proxies.find((p) => p.state !== "bubble") ?? null;
}

export function widgetLabel(w: { kind: string; text: string; created_at: number; duration: number; fired: boolean }, clock: number): string {
  if (w.kind === "note") return w.text;
  if (w.kind === "timer") return "timer";
  if (w.fired) return "0:00";
  return formatCountdown(w.duration - (clock - w.created_at));
}

export function buildOverlay(state: Snapshot, width: number, height: number, status = "live"): Shape[] {
  const shapes: Shape[] = [];
  if (status !== "live") shapes.push({ kind: "banner", text: `${status}...` });

  const open = openMenuProxy(state);
  for (const p of state.proxies) {
    const proj = state.projections[p.id];
    if (!inFrame(proj, width, height)) continue;
    const [x, y] = proj;
    shapes.push({ kind: "bubble", proxy: p.id, x, y, r: BUBBLE_R, label: proxyTitle(p), marked: p.marked });

    let line = 0;
    for (const w of state.widgets) {
      if (w.proxy !== p.id) continue;
      shapes.push({
        kind: "widget-text",
        widget: w.id,
        proxy: p.id,
        x,
        y: y + BUBBLE_R + 14 + 14 * line,
        text: widgetLabel(w, state.clock),
      });
      line += 1;
    }
  }

  if (open) {
    const proj = state.projections[open.id];
    if (inFrame(proj, width, height)) {
      const [cx, cy] = proj;
      const activeCategory = open.state.startsWith("action:")
        ? actionCategory(open.state.slice("action:".length))
        : null;
      for (const sector of menuLayout(cx, cy)) {
        shapes.push({
          kind: "menu-sector",
          category: sector.category,
          cx,
          cy,
          start: sector.start,
          end: sector.end,
          active: sector.category === activeCategory,
        });
        for (const spot of sector.actions) {
          shapes.push({ kind: "menu-action", category: spot.category, action: spot.action, x: spot.x, y: spot.y, r: spot.r });
        }
      }
      shapes.push({ kind: "menu-title", proxy: open.id, text: proxyTitle(open), x: cx, y: cy - MENU_OUTER - 10 });
    }
  }
  return shapes;
}

// -- canvas ------------------------------------------------------------------

const BUBBLE_FILL = "rgba(40, 140, 255, 0.35)";
const BUBBLE_EDGE = "rgba(255, 255, 255, 0.8)";
const MARK_EDGE = "#3fa34d";
const SECTOR_FILL = "rgba(20, 20, 30, 0.45)";
const SECTOR_ACTIVE = "rgba(70, 110, 200, 0.6)";

export function draw(ctx: CanvasRenderingContext2D, shapes: Shape[], width: number): void {
  for (const shape of shapes) {
    switch (shape.kind) {
      case "bubble": {
        ctx.beginPath();
        ctx.arc(shape.x, shape.y, shape.r, 0, Math.PI * 2);
        ctx.fillStyle = BUBBLE_FILL;
        ctx.fill();
        ctx.lineWidth = shape.marked ? 4 : 1.5;
        ctx.strokeStyle = shape.marked ? MARK_EDGE : BUBBLE_EDGE;
        ctx.stroke();
        break;
      }
      case "menu-sector": {
        ctx.beginPath();
        ctx.arc(shape.cx, shape.cy, MENU_OUTER, shape.start, shape.end);
        ctx.arc(shape.cx, shape.cy, MENU_INNER, shape.end, shape.start, true);
        ctx.closePath();
        ctx.fillStyle = shape.active ? SECTOR_ACTIVE : SECTOR_FILL;
        ctx.fill();
        ctx.strokeStyle = "rgba(255, 255, 255, 0.5)";
        ctx.lineWidth = 1;
        ctx.stroke();
        break;
      }
      case "menu-action": {
        ctx.beginPath();
        ctx.arc(shape.x, shape.y, shape.r, 0, Math.PI * 2);
        ctx.fillStyle = "rgba(250, 250, 250, 0.9)";
        ctx.fill();
        ctx.fillStyle = "#222";
        ctx.font = "8px sans-serif";
        ctx.textAlign = "center";
        ctx.textBaseline = "middle";
        ctx.fillText(shape.action.replace(/_/g, " "), shape.x, shape.y);
        break;
      }
      case "menu-title": {
        ctx.font = "13px sans-serif";
        ctx.textAlign = "center";
        ctx.textBaseline = "bottom";
        ctx.fillStyle = "#fff";
        ctx.fillText(shape.text, shape.x, shape.y);
        break;
      }
      case "widget-text": {
        ctx.font = "11px sans-serif";
        ctx.textAlign = "center";
        ctx.textBaseline = "top";
        ctx.fillStyle = "#ffd54f";
        ctx.fillText(shape.text, shape.x, shape.y);
        break;
      }
      case "banner": {
        ctx.fillStyle = "rgba(180, 40, 40, 0.85)";
        ctx.fillRect(0, 0, width, 22);
        ctx.font = "12px sans-serif";
        ctx.textAlign = "left";
        ctx.textBaseline = "middle";
        ctx.fillStyle = "#fff";
        ctx.fillText(shape.text, 8, 11);
        break;
      }
    }
  }
}

export { ACTIONS };
