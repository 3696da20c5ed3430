/** REST calls to the gateway control plane. */

import type { AppConfig, StatusReply } from "./protocol.js";

export class ApiError extends Error {
  constructor(message: string, readonly violations: { path: string; message: string }[] = []) {
    super(message);
  }
}

export class GatewayApi {
  constructor(readonly base: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.base + path, {
      method,
      headers: body !== undefined ? { "Content-Type": "application/json" } : undefined,
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (response.status === 422) {
      const detail = await response.json();
      const violations = detail.violations ?? [];
      throw new ApiError(
        violations.map((v: { path: string; message: string }) => `${v.path}: ${v.message}`).join("; "),
        violations,
      );
    }
    if (!response.ok) {
      throw new ApiError(`${method} ${path} failed: ${response.status}`);
    }
    return (await response.json()) as T;
  }

  getConfig(): Promise<AppConfig> {
    return this.request("GET", "/api/config");
  }

  putConfig(config: AppConfig): Promise<AppConfig> {
    return this.request("PUT", "/api/config", config);
  }

  getStatus(): Promise<StatusReply> {
    return this.request("GET", "/api/status");
  }

  connect(): Promise<StatusReply> {
    return this.request("POST", "/api/connect");
  }

  disconnect(): Promise<StatusReply> {
    return this.request("POST", "/api/disconnect");
  }
}
