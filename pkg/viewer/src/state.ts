// Client-side fold of session events. A snapshot is the starting point;
// applying each pushed event on top has to land on the same state a fresh
// snapshot would report, which is what makes reloading the page safe: the
// overlay is a pure function of this state, never of click history.

import type { ConversationView, ProxyView, SessionEvent, Snapshot, WidgetView } from "./protocol.js";

export function emptyState(): Snapshot {
  return {
    seq: 0,
    clock: 0,
    frame: -1,
    proxies: [],
    projections: {},
    conversations: [],
    widgets: [],
    comparisons: [],
    shopping: [],
    shares: [],
  };
}

export function cloneState(s: Snapshot): Snapshot {
  return JSON.parse(JSON.stringify(s));
}

function proxyById(state: Snapshot, id: string): ProxyView {
  const p = state.proxies.find((p) => p.id === id);
  if (!p) throw new Error(`unknown proxy ${id}`);
  return p;
}

function byId(a: { id: string }, b: { id: string }): number {
  return a.id < b.id ? -1 : a.id > b.id ? 1 : 0;
}

// Conversation ids are derived from proxy ids, so folding and the service
// agree without a handshake.
function ensureConversation(state: Snapshot, proxyId: string): ConversationView {
  const cid = `conv-${proxyId}`;
  let conv = state.conversations.find((c) => c.id === cid);
  if (!conv) {
    conv = { id: cid, proxy: proxyId, turns: [] };
    state.conversations.push(conv);
    state.conversations.sort(byId);
  }
  return conv;
}

function conversationTurns(state: Snapshot, cid: string) {
  const conv = state.conversations.find((c) => c.id === cid);
  if (!conv) throw new Error(`unknown conversation ${cid}`);
  return conv.turns;
}

export function applyEvent(state: Snapshot, ev: SessionEvent): void {
  state.seq = ev.seq;
  state.clock = ev.ts;
  const p = ev.payload;
  switch (ev.kind) {
    case "FrameProcessed": {
      state.frame = p.frame;
      state.projections = { ...p.projections };
      break;
    }
    case "ProxySpawned": {
      state.proxies.push({
        id: p.proxy,
        label: p.label,
        refined_label: null,
        state: "bubble",
        marked: false,
        conversation: null,
        world_pos: p.world_pos.slice(),
        first_seen: p.frame,
        last_seen: p.frame,
        bbox: p.bbox.slice(),
        crop: `crops/${p.proxy}.png`,
      });
      state.proxies.sort(byId);
      break;
    }
    case "ProxyUpdated": {
      if (p.removed) {
        proxyById(state, p.proxy);
        state.proxies = state.proxies.filter((q) => q.id !== p.proxy);
        break;
      }
      const proxy = proxyById(state, p.proxy);
      if ("conversation" in p) {
        proxy.conversation = ensureConversation(state, p.proxy).id;
      } else if ("refined_label" in p) {
        proxy.refined_label = p.refined_label;
      } else {
        proxy.last_seen = Math.max(proxy.last_seen, p.frame);
        if (p.crop_replaced) proxy.bbox = p.bbox.slice();
      }
      break;
    }
    case "StateChanged": {
      proxyById(state, p.proxy).state = p.to;
      break;
    }
    case "MllmRequested": {
      // comparer jobs use their own ids; only proxy conversations are kept
      if (typeof p.conversation === "string" && p.conversation.startsWith("conv-")) {
        conversationTurns(state, p.conversation).push({
          role: "user",
          text: p.prompt,
          images: p.images.slice(),
          error: null,
        });
      }
      break;
    }
    case "MllmReplied": {
      if (typeof p.conversation === "string" && p.conversation.startsWith("conv-")) {
        conversationTurns(state, p.conversation).push({
          role: "assistant",
          text: p.text,
          images: [],
          error: null,
        });
      }
      break;
    }
    case "Error": {
      const cid = p.conversation ?? "";
      if (typeof cid === "string" && cid.startsWith("conv-")) {
        conversationTurns(state, cid).push({ role: "assistant", text: "", images: [], error: p.reason });
      }
      break;
    }
    case "ComparerCompleted": {
      state.comparisons.push({ ...p });
      if (p.indices !== null) {
        // the comparer highlight lands on exactly the listed proxies
        const wanted = new Set<string>(p.marked);
        for (const proxy of state.proxies) proxy.marked = wanted.has(proxy.id);
      }
      break;
    }
    case "WidgetCreated": {
      const w: WidgetView = {
        id: p.widget,
        proxy: p.proxy,
        kind: p.kind,
        created_at: p.created_at,
        text: p.text,
        visibility: p.visibility,
        duration: p.duration,
        fired: false,
      };
      state.widgets.push(w);
      state.widgets.sort(byId);
      break;
    }
    case "WidgetFired": {
      const w = state.widgets.find((w) => w.id === p.widget);
      if (!w) throw new Error(`unknown widget ${p.widget}`);
      w.fired = true;
      break;
    }
    case "Shared": {
      const { channel, ...entry } = p;
      if (channel === "shopping_list") state.shopping.push(entry);
      else state.shares.push(entry);
      break;
    }
    default:
      throw new Error(`unknown event kind ${ev.kind}`);
  }
}

export function applyEvents(state: Snapshot, events: SessionEvent[]): void {
  for (const ev of events) applyEvent(state, ev);
}
