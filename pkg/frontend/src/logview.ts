/** Log tail: bounded ring buffer plus a list view. */

import type { LogEvent } from "./protocol.js";

export const LOG_CAPACITY = 500;

export class RingBuffer<T> {
  private items: T[] = [];

  constructor(readonly capacity: number) {}

  push(item: T): void {
    this.items.push(item);
    if (this.items.length > this.capacity) {
      this.items.splice(0, this.items.length - this.capacity);
    }
  }

  toArray(): readonly T[] {
    return this.items;
  }

  get length(): number {
    return this.items.length;
  }
}

const LEVEL_NAMES: Record<number, string> = {
  1: "DEBUG",
  2: "INFO",
  4: "WARN",
  8: "ERROR",
  16: "FATAL",
};

export function levelName(level: number): string {
  return LEVEL_NAMES[level] ?? `L${level}`;
}

export class LogView {
  readonly element: HTMLDivElement;
  private list: HTMLPreElement;
  private buffer = new RingBuffer<LogEvent>(LOG_CAPACITY);

  constructor() {
    this.element = document.createElement("div");
    this.element.className = "log-view";
    this.list = document.createElement("pre");
    this.element.appendChild(this.list);
  }

  append(entry: LogEvent): void {
    this.buffer.push(entry);
    const lines = this.buffer
      .toArray()
      .map((e) => {
        const t = new Date(e.stamp * 1000).toLocaleTimeString();
        return `${t} [${levelName(e.level)}] ${e.name}: ${e.msg}`;
      });
    this.list.textContent = lines.join("\n");
    this.list.scrollTop = this.list.scrollHeight;
  }
}
