/**
 * WebSocket link to the gateway with automatic reconnect.
 *
 * Backoff starts at 500 ms and caps at 2 s so a restarted gateway is picked
 * up again comfortably within 5 s.
 */

import type { JoystickMessage, ServerEvent } from "./protocol.js";

const BACKOFF_BASE_MS = 500;
const BACKOFF_MAX_MS = 2000;

export interface GatewaySocketOptions {
  url: string;
  onEvent: (event: ServerEvent) => void;
  onSocketState: (up: boolean) => void;
}

export class GatewaySocket {
  private ws: WebSocket | null = null;
  private attempt = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private closed = false;

  constructor(private options: GatewaySocketOptions) {}

  connect(): void {
    this.closed = false;
    this.open();
  }

  send(message: JoystickMessage): boolean {
    if (this.ws?.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify(message));
      return true;
    }
    return false;
  }

  close(): void {
    this.closed = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.ws?.close();
    this.ws = null;
  }

  private open(): void {
    this.ws = new WebSocket(this.options.url);
    this.ws.onopen = () => {
      this.attempt = 0;
      this.options.onSocketState(true);
    };
    this.ws.onmessage = (event) => {
      try {
        this.options.onEvent(JSON.parse(event.data) as ServerEvent);
      } catch {
        console.error("unparseable gateway event", event.data);
      }
    };
    this.ws.onclose = () => {
      this.ws = null;
      this.options.onSocketState(false);
      if (!this.closed) {
        this.scheduleReconnect();
      }
    };
    this.ws.onerror = () => {
      // onclose follows and handles the retry
    };
  }

  private scheduleReconnect(): void {
    const delay = Math.min(BACKOFF_BASE_MS * 2 ** this.attempt, BACKOFF_MAX_MS);
    this.attempt += 1;
    this.timer = setTimeout(() => {
      this.timer = null;
      this.open();
    }, delay);
  }
}
