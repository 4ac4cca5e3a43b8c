// Pointer and text input, turned into service commands. Nothing in here
// mutates the overlay model: every visible change waits for the service's
// echoed events, so what you see is always what the session log says.
//
// The only local state is input in flight: which text panel is open, the
// text itself, and the extra proxies gathered for a comparison. Voice input
// is stubbed out behind a flag; a text field stands in for it.

import { BUBBLE_R, hitAction, insideMenu, menuLayout } from "./menu.js";
import { openMenuProxy } from "./overlay.js";
import type { Command, ProxyView, Snapshot } from "./protocol.js";

export const MIC_ENABLED = false; // speech capture not wired up yet

export interface ClientPort {
  state: Snapshot;
  hello: { scene: { width: number; height: number } } | null;
  send(command: Command): boolean;
}

// Actions that need typed input before a command can go out.
export type PanelKind = "ask" | "note" | "countdown" | "send_to_contact" | "compare";
const PANEL_ACTIONS: PanelKind[] = ["ask", "note", "countdown", "send_to_contact", "compare"];

export interface Panel {
  kind: PanelKind;
  proxy: string;
}

export class Controls {
  panel: Panel | null = null;
  compareTargets: string[] = [];
  validationError: string | null = null;

  constructor(private client: ClientPort, private onUi?: () => void) {}

  private frameSize(): [number, number] {
    const scene = this.client.hello?.scene;
    return scene ? [scene.width, scene.height] : [Infinity, Infinity];
  }

  private visibleAt(id: string): number[] | null {
    const proj = this.client.state.projections[id];
    if (!proj) return null;
    const [w, h] = this.frameSize();
    const [u, v] = proj;
    return u >= 0 && v >= 0 && u < w && v < h ? proj : null;
  }

  private bubbleAt(x: number, y: number): ProxyView | null {
    let best: ProxyView | null = null;
    let bestDist = BUBBLE_R;
    for (const p of this.client.state.proxies) {
      const proj = this.visibleAt(p.id);
      if (!proj) continue;
      const d = Math.hypot(x - proj[0], y - proj[1]);
      if (d <= bestDist) {
        best = p;
        bestDist = d;
      }
    }
    return best;
  }

  handleClick(x: number, y: number): void {
    this.validationError = null;
    const open = openMenuProxy(this.client.state);
    if (!open) {
      const bubble = this.bubbleAt(x, y);
      if (bubble) this.dispatchCommand({ kind: "select", proxy: bubble.id });
      this.changed();
      return;
    }

    const proj = this.visibleAt(open.id);
    if (proj) {
      const spot = hitAction(menuLayout(proj[0], proj[1]), x, y);
      if (spot) {
        this.beginAction(open.id, spot.action);
        this.changed();
        return;
      }
    }

    if (this.panel) {
      // gathering mode: clicks on other bubbles extend the comparison set;
      // anything else leaves the typed input alone
      if (this.panel.kind === "compare") {
        const bubble = this.bubbleAt(x, y);
        if (bubble && bubble.id !== this.panel.proxy && !this.compareTargets.includes(bubble.id)) {
          this.compareTargets.push(bubble.id);
        }
      }
      this.changed();
      return;
    }

    if (proj && insideMenu(proj[0], proj[1], x, y)) {
      this.changed();
      return;
    }
    this.dispatchCommand({ kind: "dismiss", proxy: open.id });
    this.changed();
  }

  beginAction(proxy: string, action: string): void {
    if ((PANEL_ACTIONS as string[]).includes(action)) {
      this.panel = { kind: action as PanelKind, proxy };
      if (action === "compare") this.compareTargets = [];
      return;
    }
    this.dispatchCommand({ kind: "dispatch", proxy, action });
  }

  submitText(text: string, extra: { visibility?: string; message?: string } = {}): void {
    const panel = this.panel;
    if (!panel) return;
    const trimmed = text.trim();
    switch (panel.kind) {
      case "ask": {
        if (!trimmed) {
          this.fail("type a question first");
          return;
        }
        this.finishPanel({ kind: "dispatch", proxy: panel.proxy, action: "ask", args: { text: trimmed } });
        return;
      }
      case "note": {
        if (!trimmed) {
          this.fail("a note needs text");
          return;
        }
        const args: Record<string, any> = { text: trimmed };
        if (extra.visibility) args.visibility = extra.visibility;
        this.finishPanel({ kind: "dispatch", proxy: panel.proxy, action: "note", args });
        return;
      }
      case "countdown": {
        const duration = Number(trimmed);
        if (!Number.isFinite(duration) || duration <= 0) {
          this.fail("duration must be a positive number of seconds");
          return;
        }
        this.finishPanel({ kind: "dispatch", proxy: panel.proxy, action: "countdown", args: { duration } });
        return;
      }
      case "send_to_contact": {
        if (!trimmed) {
          this.fail("name a recipient");
          return;
        }
        const args: Record<string, any> = { recipient: trimmed };
        if (extra.message) args.message = extra.message;
        this.finishPanel({ kind: "dispatch", proxy: panel.proxy, action: "send_to_contact", args });
        return;
      }
      case "compare": {
        if (this.compareTargets.length === 0) {
          this.fail("click at least one more object to compare against");
          return;
        }
        if (!trimmed) {
          this.fail("type what to compare");
          return;
        }
        this.finishPanel({ kind: "compare", proxies: [panel.proxy, ...this.compareTargets], prompt: trimmed });
        return;
      }
    }
  }

  cancelPanel(): void {
    this.panel = null;
    this.compareTargets = [];
    this.validationError = null;
    this.changed();
  }

  private finishPanel(command: Command): void {
    if (this.dispatchCommand(command)) {
      this.panel = null;
      this.compareTargets = [];
      this.validationError = null;
    }
    this.changed();
  }

  private fail(reason: string): void {
    this.validationError = reason;
    this.changed();
  }

  private dispatchCommand(command: Command): boolean {
    if (this.client.send(command)) return true;
    this.validationError = "connection lost; nothing was sent";
    return false;
  }

  private changed(): void {
    this.onUi?.();
  }
}
