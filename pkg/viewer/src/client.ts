// WebSocket client for the session service. Keeps the folded state mirror
// and the connection status in one place; on reconnect the fresh snapshot
// replaces the mirror wholesale, so a dropped connection can never leave
// stale overlay behind.

import type { Command, HelloPayload, SessionEvent, Snapshot } from "./protocol.js";
import { commandEnvelope, parseEnvelope } from "./protocol.js";
import { applyEvent, emptyState } from "./state.js";

export interface SocketLike {
  onopen: ((ev?: any) => void) | null;
  onmessage: ((ev: { data: any }) => void) | null;
  onclose: ((ev?: any) => void) | null;
  onerror: ((ev?: any) => void) | null;
  send(data: string): void;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export type Status = "connecting" | "live" | "reconnecting" | "closed";

export interface ClientOptions {
  socketFactory?: SocketFactory;
  onChange?: (client: SessionClient) => void;
  baseBackoffMs?: number;
  maxBackoffMs?: number;
}

export class SessionClient {
  hello: HelloPayload | null = null;
  state: Snapshot = emptyState();
  status: Status = "connecting";
  lastError: string | null = null;

  private socket: SocketLike | null = null;
  private attempts = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private readonly makeSocket: SocketFactory;

  constructor(private url: string, private opts: ClientOptions = {}) {
    this.makeSocket = opts.socketFactory ?? ((u) => new WebSocket(u) as unknown as SocketLike);
  }

  connect(): void {
    const sock = this.makeSocket(this.url);
    this.socket = sock;
    sock.onopen = () => {
      this.attempts = 0;
    };
    sock.onmessage = (ev) => this.handleMessage(String(ev.data));
    sock.onclose = () => {
      if (this.socket === sock) this.scheduleReconnect();
    };
    sock.onerror = () => {
      // onclose follows and owns the retry
    };
  }

  private scheduleReconnect(): void {
    if (this.status === "closed") return;
    this.status = "reconnecting";
    this.socket = null;
    const base = this.opts.baseBackoffMs ?? 500;
    const cap = this.opts.maxBackoffMs ?? 30000;
    const delay = Math.min(base * 2 ** this.attempts, cap);
    this.attempts += 1;
    this.notify();
    this.timer = setTimeout(() => this.connect(), delay);
  }

  private handleMessage(data: string): void {
    const envelope = parseEnvelope(data);
    if (!envelope) return;
    switch (envelope.type) {
      case "hello":
        this.hello = envelope.payload as HelloPayload;
        break;
      case "snapshot":
        // a full resync; whatever we held before is obsolete
        this.state = envelope.payload as Snapshot;
        this.status = "live";
        break;
      case "event": {
        const ev = envelope.payload as SessionEvent;
        if (ev.seq <= this.state.seq) return; // duplicate after a resync
        applyEvent(this.state, ev);
        break;
      }
      case "error":
        this.lastError = String(envelope.payload?.reason ?? "unknown error");
        break;
      default:
        return;
    }
    this.notify();
  }

  // Returns false when there is no live connection; callers keep the input
  // around and let the user retry rather than queueing silently.
  send(command: Command): boolean {
    if (!this.socket || this.status !== "live") return false;
    this.socket.send(JSON.stringify(commandEnvelope(command)));
    return true;
  }

  close(): void {
    this.status = "closed";
    if (this.timer !== null) clearTimeout(this.timer);
    const sock = this.socket;
    this.socket = null;
    sock?.close();
  }

  private notify(): void {
    this.opts.onChange?.(this);
  }
}
