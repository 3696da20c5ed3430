/**
 * The dashboard: three tabs mirroring the operator workflow.
 *
 * Master  - set the master URI, connect/disconnect, read the status banner.
 * Details - add, edit and remove widgets; saving PUTs the config document.
 * Viz     - one live panel per configured widget (joystick, grid map, log).
 *
 * Served by the gateway itself or opened standalone with
 * index.html?gateway=http://host:port.
 */

import { GatewayApi, ApiError } from "./api.js";
import { JoystickPad } from "./joystick.js";
import { GridmapView } from "./gridmap.js";
import { LogView } from "./logview.js";
import { GatewaySocket } from "./socket.js";
import {
  applyServerEvent,
  defaultWidget,
  initialState,
  joystickMessage,
  type DashboardState,
} from "./state.js";
import {
  decodeCells,
  validateMasterUri,
  type AppConfig,
  type ServerEvent,
  type WidgetConfig,
  type WidgetKind,
} from "./protocol.js";

const TABS = ["master", "details", "viz"] as const;
type Tab = (typeof TABS)[number];

class Dashboard {
  private state: DashboardState = initialState();
  private api: GatewayApi;
  private socket: GatewaySocket;
  private activeTab: Tab = "master";
  private gridViews = new Map<string, GridmapView>();
  private logViews = new Map<string, LogView>();
  private root: HTMLElement;
  private banner!: HTMLDivElement;
  private tabBar!: HTMLDivElement;
  private panes!: Record<Tab, HTMLDivElement>;
  private draft: AppConfig | null = null; // Details tab edits live here until saved

  constructor(root: HTMLElement, base: string) {
    this.root = root;
    this.api = new GatewayApi(base);
    const wsBase = base ? base.replace(/^http/, "ws") : `ws://${location.host}`;
    this.socket = new GatewaySocket({
      url: `${wsBase}/ws`,
      onEvent: (event) => this.onServerEvent(event),
      onSocketState: (up) => {
        this.state = { ...this.state, socketUp: up };
        this.renderBanner();
      },
    });
    this.buildShell();
  }

  async start(): Promise<void> {
    this.socket.connect();
    try {
      const config = await this.api.getConfig();
      const status = await this.api.getStatus();
      this.state = {
        ...this.state,
        config,
        connection: status.state,
        master: status.master,
        warnings: status.warnings,
      };
      this.draft = structuredClone(config);
    } catch {
      this.state = { ...this.state, lastError: "gateway unreachable" };
    }
    this.renderAll();
  }

  // -- events ---------------------------------------------------------------

  private onServerEvent(event: ServerEvent): void {
    this.state = applyServerEvent(this.state, event);
    if (event.type === "gridmap_frame") {
      const view = this.gridViews.get(event.widget);
      view?.draw(
        { width: event.width, height: event.height, cells: decodeCells(event.cells_b64) },
        event.resolution,
      );
    } else if (event.type === "log") {
      for (const view of this.logViews.values()) {
        view.append(event);
      }
    } else {
      this.renderBanner();
      if (event.type === "error") {
        this.flashError(event.reason);
      }
    }
  }

  // -- shell ------------------------------------------------------------------

  private buildShell(): void {
    this.root.innerHTML = "";
    const header = document.createElement("header");
    const title = document.createElement("h1");
    title.textContent = "rosdeck";
    this.banner = document.createElement("div");
    this.banner.className = "status-banner";
    this.tabBar = document.createElement("div");
    this.tabBar.className = "tab-bar";
    header.append(title, this.tabBar, this.banner);
    this.root.appendChild(header);

    this.panes = {} as Record<Tab, HTMLDivElement>;
    for (const tab of TABS) {
      const button = document.createElement("button");
      button.textContent = tab.toUpperCase();
      button.dataset.tab = tab;
      button.addEventListener("click", () => this.showTab(tab));
      this.tabBar.appendChild(button);
      const pane = document.createElement("div");
      pane.className = "pane hidden";
      this.root.appendChild(pane);
      this.panes[tab] = pane;
    }
    this.showTab("master");
  }

  private showTab(tab: Tab): void {
    this.activeTab = tab;
    for (const t of TABS) {
      this.panes[t].classList.toggle("hidden", t !== tab);
      this.tabBar
        .querySelector(`[data-tab="${t}"]`)
        ?.classList.toggle("active", t === tab);
    }
  }

  private renderAll(): void {
    this.renderBanner();
    this.renderMaster();
    this.renderDetails();
    this.renderViz();
    this.showTab(this.activeTab);
  }

  private renderBanner(): void {
    const { connection, master, warnings, socketUp } = this.state;
    const socketNote = socketUp ? "" : " (gateway link down, retrying)";
    this.banner.textContent = `${connection}${master ? " - " + master : ""}${socketNote}`;
    this.banner.className = `status-banner ${connection}${socketUp ? "" : " stale"}`;
    this.banner.title = warnings.join("\n");
  }

  private flashError(reason: string): void {
    this.banner.textContent = `error: ${reason}`;
    setTimeout(() => this.renderBanner(), 2500);
  }

  // -- master tab ----------------------------------------------------------------

  private renderMaster(): void {
    const pane = this.panes.master;
    pane.innerHTML = "";
    const form = document.createElement("div");
    form.className = "master-form";

    const label = document.createElement("label");
    label.textContent = "ROS master URI";
    const input = document.createElement("input");
    input.value = this.state.config?.master_uri ?? "http://127.0.0.1:11311";
    const hint = document.createElement("span");
    hint.className = "field-error";

    const connect = document.createElement("button");
    connect.textContent = "Connect";
    connect.addEventListener("click", async () => {
      const problem = validateMasterUri(input.value);
      if (problem) {
        hint.textContent = problem; // inline validation, no request sent
        return;
      }
      hint.textContent = "";
      try {
        if (this.state.config && input.value.trim() !== this.state.config.master_uri) {
          const updated = { ...this.state.config, master_uri: input.value.trim() };
          this.state = { ...this.state, config: await this.api.putConfig(updated) };
          this.draft = structuredClone(this.state.config);
        }
        await this.api.connect();
      } catch (err) {
        this.flashError((err as Error).message);
      }
    });
    input.addEventListener("input", () => {
      hint.textContent = validateMasterUri(input.value) ?? "";
    });

    const disconnect = document.createElement("button");
    disconnect.textContent = "Disconnect";
    disconnect.addEventListener("click", () => void this.api.disconnect().catch(() => undefined));

    const warnings = document.createElement("ul");
    warnings.className = "warnings";
    for (const warning of this.state.warnings) {
      const item = document.createElement("li");
      item.textContent = warning;
      warnings.appendChild(item);
    }

    form.append(label, input, hint, connect, disconnect);
    pane.append(form, warnings);
  }

  // -- details tab -------------------------------------------------------------------

  private renderDetails(): void {
    const pane = this.panes.details;
    pane.innerHTML = "";
    if (!this.draft) {
      pane.textContent = "no config loaded";
      return;
    }
    const list = document.createElement("div");
    list.className = "widget-list";
    this.draft.widgets.forEach((widget, index) => {
      list.appendChild(this.widgetCard(widget, index));
    });

    const controls = document.createElement("div");
    controls.className = "details-controls";
    for (const kind of ["joystick", "gridmap", "logger"] as WidgetKind[]) {
      const add = document.createElement("button");
      add.textContent = `+ ${kind}`;
      add.addEventListener("click", () => {
        this.draft!.widgets.push(defaultWidget(kind, this.draft));
        this.renderDetails();
      });
      controls.appendChild(add);
    }
    const save = document.createElement("button");
    save.textContent = "Save";
    save.className = "save";
    const problem = document.createElement("span");
    problem.className = "field-error";
    save.addEventListener("click", async () => {
      try {
        const saved = await this.api.putConfig(this.draft!);
        this.state = { ...this.state, config: saved };
        this.draft = structuredClone(saved);
        problem.textContent = "";
        this.renderAll(); // new widgets appear in Viz
      } catch (err) {
        problem.textContent = err instanceof ApiError ? err.message : String(err);
      }
    });
    controls.append(save, problem);
    pane.append(list, controls);
  }

  private widgetCard(widget: WidgetConfig, index: number): HTMLDivElement {
    const card = document.createElement("div");
    card.className = "widget-card";
    const title = document.createElement("strong");
    title.textContent = `${widget.id} (${widget.kind})`;
    const remove = document.createElement("button");
    remove.textContent = "remove";
    remove.addEventListener("click", () => {
      this.draft!.widgets.splice(index, 1);
      this.renderDetails();
    });
    card.append(title, remove);

    type NumericKey = "max_linear" | "max_angular" | "publish_rate_hz" | "min_level";
    const fields: ["topic" | NumericKey, string][] = [["topic", "topic"]];
    if (widget.kind === "joystick") {
      fields.push(["max_linear", "max linear m/s"], ["max_angular", "max angular rad/s"],
                  ["publish_rate_hz", "publish rate Hz"]);
    } else if (widget.kind === "logger") {
      fields.push(["min_level", "min level"]);
    }
    for (const [key, caption] of fields) {
      const row = document.createElement("label");
      row.textContent = caption;
      const input = document.createElement("input");
      input.value = String(widget[key] ?? "");
      input.addEventListener("change", () => {
        const raw = input.value.trim();
        if (key === "topic") {
          widget.topic = raw;
        } else {
          widget[key] = Number(raw);
        }
      });
      row.appendChild(input);
      card.appendChild(row);
    }
    return card;
  }

  // -- viz tab ------------------------------------------------------------------

  private renderViz(): void {
    const pane = this.panes.viz;
    pane.innerHTML = "";
    this.gridViews.clear();
    this.logViews.clear();
    if (!this.state.config || this.state.config.widgets.length === 0) {
      pane.textContent = "no widgets configured; add some in DETAILS";
      return;
    }
    for (const widget of this.state.config.widgets) {
      const panel = document.createElement("section");
      panel.className = `viz-panel ${widget.kind}`;
      const caption = document.createElement("h2");
      caption.textContent = `${widget.id} - ${widget.topic}`;
      panel.appendChild(caption);
      if (widget.kind === "joystick") {
        const pad = new JoystickPad((sample) => {
          // the guard: only widgets in the active config ever produce sends
          const message = joystickMessage(this.state, widget.id, sample);
          if (message) {
            this.socket.send(message);
          }
        });
        panel.appendChild(pad.element);
      } else if (widget.kind === "gridmap") {
        const view = new GridmapView();
        this.gridViews.set(widget.id, view);
        panel.appendChild(view.element);
      } else {
        const view = new LogView();
        this.logViews.set(widget.id, view);
        panel.appendChild(view.element);
      }
      pane.appendChild(panel);
    }
  }
}

const base = new URLSearchParams(location.search).get("gateway") ?? "";
const dashboard = new Dashboard(document.getElementById("app")!, base);
void dashboard.start();
