/**
 * Dashboard state: the active config plus connection status, reduced from
 * server events. Pure of DOM so the guard rules are unit-testable, most
 * importantly: joystick samples are only ever sent for joystick widgets
 * present in the active config.
 */

import type {
  AppConfig,
  ConnectionState,
  JoystickMessage,
  ServerEvent,
  WidgetConfig,
} from "./protocol.js";
import type { JoystickSample } from "./joystick.js";

export interface DashboardState {
  config: AppConfig | null;
  connection: ConnectionState;
  master: string;
  warnings: string[];
  socketUp: boolean;
  lastError: string | null;
}

export function initialState(): DashboardState {
  return {
    config: null,
    connection: "disconnected",
    master: "",
    warnings: [],
    socketUp: false,
    lastError: null,
  };
}

export function applyServerEvent(state: DashboardState, event: ServerEvent): DashboardState {
  switch (event.type) {
    case "status":
      return {
        ...state,
        connection: event.state,
        master: event.master,
        warnings: event.warnings,
      };
    case "error":
      return { ...state, lastError: event.reason };
    default:
      return state; // frames and logs are handled by their widget views
  }
}

export function widgetById(state: DashboardState, id: string): WidgetConfig | undefined {
  return state.config?.widgets.find((w) => w.id === id);
}

/**
 * Build the wire message for a joystick sample, or null when the widget is
 * not a joystick in the active config (in which case nothing may be sent).
 */
export function joystickMessage(
  state: DashboardState,
  widgetId: string,
  sample: JoystickSample,
): JoystickMessage | null {
  const widget = widgetById(state, widgetId);
  if (!widget || widget.kind !== "joystick") {
    return null;
  }
  return {
    type: "joystick",
    widget: widgetId,
    x: sample.x,
    y: sample.y,
    engaged: sample.engaged,
  };
}

let counter = 0;

export function freshWidgetId(kind: string, config: AppConfig | null): string {
  const taken = new Set((config?.widgets ?? []).map((w) => w.id));
  for (;;) {
    counter += 1;
    const id = `${kind}${counter}`;
    if (!taken.has(id)) {
      return id;
    }
  }
}

export function defaultWidget(kind: WidgetConfig["kind"], config: AppConfig | null): WidgetConfig {
  const id = freshWidgetId(kind, config);
  switch (kind) {
    case "joystick":
      return { id, kind, topic: "/cmd_vel", max_linear: 0.5, max_angular: 1.5, publish_rate_hz: 10 };
    case "gridmap":
      return { id, kind, topic: "/map" };
    case "logger":
      return { id, kind, topic: "/rosout", min_level: 2 };
  }
}
