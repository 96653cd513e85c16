/**
 * Resumable market-event subscription.
 *
 * Applies events to the mirror in arrival (= sequence) order on a single
 * loop. On disconnect it reopens the socket asking for `lastSeq + 1`, so
 * no event is missed or applied twice across reconnects; a detected gap
 * also forces a reconnect from the mirror's position.
 */

import { BookMirror, SequenceGapError } from "./book";
import type { MarketEvent } from "./types";

export interface WebSocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  close(): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export type StreamStatus = "connecting" | "live" | "closed" | "reconnecting";

export interface StreamOptions {
  webSocketFactory?: WebSocketFactory;
  reconnectDelayMs?: number;
  onEvent?: (event: MarketEvent) => void;
  onStatus?: (status: StreamStatus) => void;
}

const defaultFactory: WebSocketFactory = (url) =>
  new (globalThis as { WebSocket: new (url: string) => WebSocketLike }).WebSocket(url);

export class MarketStream {
  private ws: WebSocketLike | null = null;
  private running = false;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private readonly factory: WebSocketFactory;
  private readonly reconnectDelayMs: number;

  constructor(
    private readonly urlFor: (fromSeq: number) => string,
    readonly mirror: BookMirror,
    private readonly options: StreamOptions = {},
  ) {
    this.factory = options.webSocketFactory ?? defaultFactory;
    this.reconnectDelayMs = options.reconnectDelayMs ?? 500;
  }

  start(): void {
    if (this.running) return;
    this.running = true;
    this.connect("connecting");
  }

  stop(): void {
    this.running = false;
    if (this.timer) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    if (this.ws) {
      const ws = this.ws;
      this.ws = null;
      ws.onclose = null;
      ws.close();
    }
    this.options.onStatus?.("closed");
  }

  private connect(status: StreamStatus): void {
    this.options.onStatus?.(status);
    const ws = this.factory(this.urlFor(this.mirror.lastSeq + 1));
    this.ws = ws;
    ws.onopen = () => this.options.onStatus?.("live");
    ws.onmessage = (ev) => {
      const event = JSON.parse(String(ev.data)) as MarketEvent;
      try {
        if (this.mirror.apply(event)) {
          this.options.onEvent?.(event);
        }
      } catch (err) {
        if (err instanceof SequenceGapError) {
          ws.onclose = null;
          ws.close();
          this.scheduleReconnect();
          return;
        }
        throw err;
      }
    };
    ws.onerror = () => {
      /* onclose always follows; reconnect is handled there */
    };
    ws.onclose = () => {
      this.ws = null;
      this.scheduleReconnect();
    };
  }

  private scheduleReconnect(): void {
    if (!this.running || this.timer) return;
    this.timer = setTimeout(() => {
      this.timer = null;
      if (this.running) this.connect("reconnecting");
    }, this.reconnectDelayMs);
  }
}
