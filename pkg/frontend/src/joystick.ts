/**
 * Virtual joystick: pointer positions become pad-relative samples.
 *
 * Screen convention throughout: x right-positive, y down-positive, so
 * pushing the knob up gives y = -1. Samples are clamped to the unit disc
 * radially (direction preserved). Every press...release interaction emits
 * exactly one engaged=false sample, after the last engaged=true one.
 */

export interface JoystickSample {
  x: number;
  y: number;
  engaged: boolean;
}

export interface PadGeometry {
  centerX: number;
  centerY: number;
  radius: number;
}

export function pointerToSample(px: number, py: number, pad: PadGeometry): JoystickSample {
  let x = (px - pad.centerX) / pad.radius;
  let y = (py - pad.centerY) / pad.radius;
  const r = Math.hypot(x, y);
  if (r > 1) {
    x /= r;
    y /= r;
  }
  return { x, y, engaged: true };
}

export const MOVE_THROTTLE_MS = 1000 / 30;

/**
 * Pointer-event state machine, DOM-free for testability. press() and
 * release() always emit; move() is throttled to 30 Hz (the gateway's
 * fixed-rate session decouples wire rate from pointer rate anyway).
 */
export class JoystickInput {
  private pad: PadGeometry | null = null;
  private lastMoveEmit = -Infinity;

  constructor(
    private emit: (sample: JoystickSample) => void,
    private now: () => number = () => performance.now(),
  ) {}

  get active(): boolean {
    return this.pad !== null;
  }

  press(px: number, py: number, pad: PadGeometry): JoystickSample {
    this.pad = pad;
    this.lastMoveEmit = this.now();
    const sample = pointerToSample(px, py, pad);
    this.emit(sample);
    return sample;
  }

  move(px: number, py: number): JoystickSample | null {
    if (this.pad === null) {
      return null;
    }
    const sample = pointerToSample(px, py, this.pad);
    const t = this.now();
    if (t - this.lastMoveEmit < MOVE_THROTTLE_MS) {
      return sample; // position still useful for the knob, but not emitted
    }
    this.lastMoveEmit = t;
    this.emit(sample);
    return sample;
  }

  release(): void {
    if (this.pad === null) {
      return; // duplicate release: nothing to emit
    }
    this.pad = null;
    this.emit({ x: 0, y: 0, engaged: false });
  }
}

/** DOM wrapper: a round pad with a knob, driving a JoystickInput. */
export class JoystickPad {
  readonly element: HTMLDivElement;
  private knob: HTMLDivElement;
  private input: JoystickInput;
  private pointerId: number | null = null;

  constructor(emit: (sample: JoystickSample) => void) {
    this.element = document.createElement("div");
    this.element.className = "joystick-pad";
    this.knob = document.createElement("div");
    this.knob.className = "joystick-knob";
    this.element.appendChild(this.knob);
    this.input = new JoystickInput(emit);

    this.element.addEventListener("pointerdown", (e) => {
      if (this.pointerId !== null) return;
      this.pointerId = e.pointerId;
      this.element.setPointerCapture(e.pointerId);
      const rect = this.element.getBoundingClientRect();
      const pad: PadGeometry = {
        centerX: rect.left + rect.width / 2,
        centerY: rect.top + rect.height / 2,
        radius: rect.width / 2,
      };
      this.showKnob(this.input.press(e.clientX, e.clientY, pad));
    });
    this.element.addEventListener("pointermove", (e) => {
      if (e.pointerId !== this.pointerId) return;
      const sample = this.input.move(e.clientX, e.clientY);
      if (sample) this.showKnob(sample);
    });
    const end = (e: PointerEvent) => {
      if (e.pointerId !== this.pointerId) return;
      this.pointerId = null;
      this.input.release();
      this.showKnob({ x: 0, y: 0, engaged: false });
    };
    this.element.addEventListener("pointerup", end);
    this.element.addEventListener("pointercancel", end);
  }

  private showKnob(sample: JoystickSample): void {
    const half = this.element.clientWidth / 2;
    this.knob.style.transform =
      `translate(${sample.x * half * 0.7}px, ${sample.y * half * 0.7}px)`;
    this.knob.classList.toggle("engaged", sample.engaged);
  }
}
