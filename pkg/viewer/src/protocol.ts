// Wire shapes for the session service. Every WebSocket message, both
// directions, is one JSON envelope {seq?, type, payload}; the service sends
// hello, then a snapshot, then one "event" message per session event in seq
// order. See docs/protocol.md in the parent package.

export interface Envelope {
  seq?: number;
  type: string;
  payload: any;
}

export interface HelloPayload {
  session: string;
  protocol: number;
  cadence: number;
  scene: { name: string; frame_count: number; width: number; height: number };
}

// One session event as carried inside an "event" envelope.
export interface SessionEvent {
  seq: number;
  ts: number;
  kind: string;
  payload: any;
}

export interface ProxyView {
  id: string;
  label: string;
  refined_label: string | null;
  // "bubble" | "menu" | "action:<name>"
  state: string;
  marked: boolean;
  conversation: string | null;
  world_pos: number[];
  first_seen: number;
  last_seen: number;
  bbox: number[];
  crop: string;
}

export interface TurnView {
  role: string;
  text: string;
  images: string[];
  error: string | null;
}

export interface ConversationView {
  id: string;
  proxy: string;
  turns: TurnView[];
}

export interface WidgetView {
  id: string;
  proxy: string;
  kind: string;
  created_at: number;
  text: string;
  visibility: string;
  duration: number;
  fired: boolean;
}

// The service's /snapshot document; also the client's folded state.
export interface Snapshot {
  seq: number;
  clock: number;
  frame: number;
  proxies: ProxyView[];
  projections: Record<string, number[] | null>;
  conversations: ConversationView[];
  widgets: WidgetView[];
  comparisons: any[];
  shopping: any[];
  shares: any[];
}

export type Command =
  | { kind: "select"; proxy: string }
  | { kind: "dismiss"; proxy: string }
  | { kind: "dispatch"; proxy: string; action: string; args?: Record<string, any> }
  | { kind: "compare"; proxies: string[]; prompt: string };

export function commandEnvelope(command: Command): Envelope {
  return { type: "command", payload: command };
}

export function parseEnvelope(data: string): Envelope | null {
  let doc: any;
  try {
    doc = JSON.parse(data);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null || typeof doc.type !== "string") return null;
  return doc as Envelope;
}
