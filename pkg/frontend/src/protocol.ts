/**
 * Wire protocol types for the gateway: REST config document plus the
 * WebSocket event stream. This file is the only contract between the
 * dashboard and the backend.
 */

export type ConnectionState = "disconnected" | "connecting" | "connected";

export interface StatusEvent {
  type: "status";
  state: ConnectionState;
  master: string;
  warnings: string[];
}

export interface GridFrameEvent {
  type: "gridmap_frame";
  widget: string;
  width: number;
  height: number;
  resolution: number;
  origin: { x: number; y: number; yaw: number };
  cells_b64: string;
}

export interface LogEvent {
  type: "log";
  level: number;
  name: string;
  msg: string;
  stamp: number;
}

export interface ErrorEvent {
  type: "error";
  reason: string;
}

export type ServerEvent = StatusEvent | GridFrameEvent | LogEvent | ErrorEvent;

export interface JoystickMessage {
  type: "joystick";
  widget: string;
  x: number;
  y: number;
  engaged: boolean;
}

// --- config document (GET/PUT /api/config) ---

export type WidgetKind = "joystick" | "gridmap" | "logger";

export interface WidgetConfig {
  id: string;
  kind: WidgetKind;
  topic: string;
  max_linear?: number;
  max_angular?: number;
  publish_rate_hz?: number;
  min_level?: number;
}

export interface AppConfig {
  version: number;
  name: string;
  master_uri: string;
  widgets: WidgetConfig[];
}

export interface StatusReply {
  state: ConnectionState;
  master: string;
  warnings: string[];
}

const MASTER_URI_RE = /^http:\/\/[\w.-]+(:\d{1,5})?\/?$/;

/** Inline validation for the Master tab; returns an error message or null. */
export function validateMasterUri(text: string): string | null {
  if (!text.trim()) {
    return "master URI is required";
  }
  if (!MASTER_URI_RE.test(text.trim())) {
    return "expected http://host[:port]";
  }
  const port = text.match(/:(\d{1,5})\/?$/);
  if (port && (Number(port[1]) < 1 || Number(port[1]) > 65535)) {
    return "port must be 1..65535";
  }
  return null;
}

/** Decode the base64 cell payload of a gridmap frame. */
export function decodeCells(b64: string): Uint8Array {
  const raw = atob(b64);
  const cells = new Uint8Array(raw.length);
  for (let i = 0; i < raw.length; i++) {
    cells[i] = raw.charCodeAt(i);
  }
  return cells;
}
