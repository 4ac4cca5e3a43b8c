// Driving the comparison task through the UI layer must produce exactly the
// command sequence the headless trace sends for frame 1: select the cup,
// compare cup vs oat bottle vs wine glass with the lactose question, then
// dismiss. Every visible state change between clicks comes from folding the
// recorded events, never from the click itself.

import { readFileSync } from "node:fs";
import { beforeEach, describe, expect, it } from "vitest";
import { Controls } from "../src/controls.js";
import { hitAction, menuLayout } from "../src/menu.js";
import type { Command, SessionEvent, Snapshot } from "../src/protocol.js";
import { applyEvent, cloneState } from "../src/state.js";

const doc = JSON.parse(readFileSync(new URL("./fixtures/desk-session.json", import.meta.url), "utf8"));

const traceCommands: Record<number, Command[]> = {};
for (const line of readFileSync(new URL("../../fixtures/traces/desk-tasks.jsonl", import.meta.url), "utf8")
  .split("\n")
  .filter((l) => l.trim())) {
  const row = JSON.parse(line);
  (traceCommands[row.frame] ??= []).push(row.command);
}

class Harness {
  state: Snapshot = cloneState(doc.snapshot_start);
  hello = doc.hello;
  sent: Command[] = [];
  private cursor = 0;

  send(command: Command): boolean {
    this.sent.push(JSON.parse(JSON.stringify(command)));
    return true;
  }

  // fold recorded events up to and including the first one matching pred
  foldUntil(pred: (ev: SessionEvent) => boolean): void {
    while (this.cursor < doc.events.length) {
      const ev = doc.events[this.cursor++];
      applyEvent(this.state, ev);
      if (pred(ev)) return;
    }
    throw new Error("ran out of recorded events");
  }

  projection(id: string): [number, number] {
    const proj = this.state.projections[id];
    if (!proj) throw new Error(`no projection for ${id}`);
    return [proj[0], proj[1]];
  }
}

let h: Harness;
let controls: Controls;

beforeEach(() => {
  h = new Harness();
  controls = new Controls(h);
});

describe("the scripted comparison flow", () => {
  it("reproduces the frame 1 command trace through clicks and typing", () => {
    h.foldUntil((ev) => ev.kind === "FrameProcessed" && ev.payload.frame === 1);

    // click the cup's bubble: exactly one select goes out
    controls.handleClick(...h.projection("p005"));
    expect(h.sent).toStrictEqual([{ kind: "select", proxy: "p005" }]);

    // the service echoes the menu opening; nothing changed optimistically
    expect(h.state.proxies.find((p) => p.id === "p005")?.state).toBe("bubble");
    h.foldUntil((ev) => ev.kind === "StateChanged" && ev.payload.proxy === "p005" && ev.payload.to === "menu");
    h.foldUntil((ev) => ev.kind === "ProxyUpdated" && "conversation" in ev.payload);

    // click the compare button on the open menu: opens the gather panel,
    // sends nothing yet
    const [cx, cy] = h.projection("p005");
    const spot = menuLayout(cx, cy)[1].actions[0];
    expect(spot.action).toBe("compare");
    expect(hitAction(menuLayout(cx, cy), spot.x, spot.y)?.action).toBe("compare");
    controls.handleClick(spot.x, spot.y);
    expect(controls.panel).toStrictEqual({ kind: "compare", proxy: "p005" });
    expect(h.sent).toHaveLength(1);

    // gather the other two drinks by clicking their bubbles
    controls.handleClick(...h.projection("p006"));
    controls.handleClick(...h.projection("p007"));
    expect(controls.compareTargets).toStrictEqual(["p006", "p007"]);
    expect(h.sent).toHaveLength(1);

    // typing the question and submitting emits the compare command
    controls.submitText("Which of these products contain lactose?");
    expect(h.sent).toHaveLength(2);
    expect(controls.panel).toBeNull();

    // fold the comparison cycle: request, reply, marks, back to menu
    h.foldUntil((ev) => ev.kind === "StateChanged" && ev.payload.cause === "complete");
    expect(h.state.proxies.filter((p) => p.marked).map((p) => p.id)).toStrictEqual(["p005", "p007"]);

    // click empty desk: dismiss
    controls.handleClick(620, 20);
    expect(h.sent).toStrictEqual(traceCommands[1]);

    h.foldUntil((ev) => ev.kind === "StateChanged" && ev.payload.cause === "dismiss");
    expect(h.state.proxies.every((p) => p.state === "bubble")).toBe(true);
  });

  it("keeps gathering clicks idempotent and ignores the anchor", () => {
    h.foldUntil((ev) => ev.kind === "StateChanged" && ev.payload.proxy === "p005" && ev.payload.to === "menu");
    const [cx, cy] = h.projection("p005");
    const spot = menuLayout(cx, cy)[1].actions[0];
    controls.handleClick(spot.x, spot.y);
    controls.handleClick(...h.projection("p006"));
    controls.handleClick(...h.projection("p006"));
    controls.handleClick(...h.projection("p005")); // the anchor cannot be its own peer
    expect(controls.compareTargets).toStrictEqual(["p006"]);
    expect(h.sent).toHaveLength(0);
  });

  it("keeps typed input safe from stray clicks while a panel is open", () => {
    h.foldUntil((ev) => ev.kind === "StateChanged" && ev.payload.proxy === "p005" && ev.payload.to === "menu");
    const [cx, cy] = h.projection("p005");
    controls.handleClick(menuLayout(cx, cy)[1].actions[0].x, menuLayout(cx, cy)[1].actions[0].y);
    controls.handleClick(620, 20); // misses everything: no dismiss while typing
    expect(controls.panel).not.toBeNull();
    expect(h.sent).toHaveLength(0);
  });

  it("rejects a comparison without peers or without a prompt, locally", () => {
    h.foldUntil((ev) => ev.kind === "StateChanged" && ev.payload.proxy === "p005" && ev.payload.to === "menu");
    controls.beginAction("p005", "compare");
    controls.submitText("Which of these products contain lactose?");
    expect(controls.validationError).toMatch(/one more object/);
    controls.handleClick(...h.projection("p006"));
    controls.submitText("   ");
    expect(controls.validationError).toMatch(/what to compare/);
    expect(h.sent).toHaveLength(0);
  });
});

describe("local validation for dispatch panels", () => {
  function openMenuOn(proxy: string): void {
    h.foldUntil((ev) => ev.kind === "FrameProcessed" && ev.payload.frame === 1);
    const p = h.state.proxies.find((q) => q.id === proxy)!;
    p.state = "menu"; // stand in for the service echo
  }

  it("an empty question never leaves the page", () => {
    openMenuOn("p005");
    controls.beginAction("p005", "ask");
    controls.submitText("   ");
    expect(h.sent).toHaveLength(0);
    expect(controls.validationError).toMatch(/question/);
    controls.submitText("What is in this cup?");
    expect(h.sent).toStrictEqual([
      { kind: "dispatch", proxy: "p005", action: "ask", args: { text: "What is in this cup?" } },
    ]);
  });

  it("countdowns need a positive number of seconds", () => {
    openMenuOn("p005");
    controls.beginAction("p005", "countdown");
    for (const bad of ["", "abc", "-5", "0"]) {
      controls.submitText(bad);
      expect(controls.validationError).toMatch(/positive number/);
    }
    expect(h.sent).toHaveLength(0);
    controls.submitText("600");
    expect(h.sent).toStrictEqual([
      { kind: "dispatch", proxy: "p005", action: "countdown", args: { duration: 600 } },
    ]);
  });

  it("no-argument actions dispatch immediately without an args field", () => {
    openMenuOn("p005");
    controls.beginAction("p005", "info");
    expect(h.sent).toStrictEqual([{ kind: "dispatch", proxy: "p005", action: "info" }]);
    expect("args" in (h.sent[0] as any)).toBe(false);
  });

  it("sending to a contact needs a recipient; the message rides along", () => {
    openMenuOn("p008");
    controls.beginAction("p008", "send_to_contact");
    controls.submitText("", { message: "hi" });
    expect(h.sent).toHaveLength(0);
    controls.submitText("Alex", { message: "Is this the orange juice you wanted?" });
    expect(h.sent).toStrictEqual([
      {
        kind: "dispatch",
        proxy: "p008",
        action: "send_to_contact",
        args: { recipient: "Alex", message: "Is this the orange juice you wanted?" },
      },
    ]);
  });
});
