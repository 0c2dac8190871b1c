// Ordered, gapless delivery of server events. All events funnel through
// one queue; duplicates (seq <= last seen) are dropped, and reconnects
// resume from the last seen seq so nothing is missed.

import type { EventDoc } from "./types.js";

export type EventHandler = (event: EventDoc) => void;

export interface EventChannel {
  subscribe(handler: EventHandler): () => void;
  lastSeq(): number;
  close(): void;
}

export class OrderedEventQueue {
  private seen = 0;
  private handlers = new Set<EventHandler>();

  subscribe(handler: EventHandler): () => void {
    this.handlers.add(handler);
    return () => this.handlers.delete(handler);
  }

  lastSeq(): number {
    return this.seen;
  }

  push(event: EventDoc): boolean {
    if (event.seq <= this.seen) return false; // duplicate after reconnect
    this.seen = event.seq;
    for (const handler of this.handlers) handler(event);
    return true;
  }
}

/** Test/offline channel: events are pushed by hand. */
export class ManualEventChannel implements EventChannel {
  private queue = new OrderedEventQueue();

  subscribe(handler: EventHandler): () => void {
    return this.queue.subscribe(handler);
  }

  lastSeq(): number {
    return this.queue.lastSeq();
  }

  push(event: EventDoc): boolean {
    return this.queue.push(event);
  }

  close(): void {}
}

/** Live channel over the service websocket, resuming with ?since= on reconnect. */
export class WebSocketEventChannel implements EventChannel {
  private queue = new OrderedEventQueue();
  private socket: WebSocket | null = null;
  private closed = false;
  private retryMs = 500;

  constructor(private readonly baseUrl: string) {
    this.connect();
  }

  private connect(): void {
    if (this.closed) return;
    const ws = this.baseUrl.replace(/^http/, "ws");
    const socket = new WebSocket(`${ws}/api/v1/events?since=${this.queue.lastSeq()}`);
    this.socket = socket;
    socket.onmessage = (message) => {
      try {
        this.queue.push(JSON.parse(String(message.data)) as EventDoc);
      } catch {
        // malformed frame: ignore, the next fetch reconciles state anyway
      }
    };
    socket.onclose = () => {
      this.socket = null;
      if (!this.closed) setTimeout(() => this.connect(), this.retryMs);
    };
    socket.onerror = () => socket.close();
  }

  subscribe(handler: EventHandler): () => void {
    return this.queue.subscribe(handler);
  }

  lastSeq(): number {
    return this.queue.lastSeq();
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }
}
