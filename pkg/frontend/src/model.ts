/**
 * View model: the latest frame, connection state, drag-to-force mapping,
 * and ring-buffered histories for the strip charts.  Rendering never
 * mutates simulation state; every mutation travels as a command message.
 */

import { CommandPayload, TelemetryPayload, Vec3 } from "./protocol.js";

export type ConnectionState = "connecting" | "connected" | "disconnected";

export interface DragState {
  active: boolean;
  dx: number; // screen px, +right
  dy: number; // screen px, +down
}

export class RingBuffer {
  private values: number[] = [];
  constructor(readonly capacity: number) {}

  push(v: number): void {
    this.values.push(v);
    if (this.values.length > this.capacity) {
      this.values.shift();
    }
  }

  toArray(): number[] {
    return this.values.slice();
  }

  get length(): number {
    return this.values.length;
  }
}

/**
 * Map a screen-space drag vector to a human force command, clamped to the
 * human input bounds (the server clamps again authoritatively).  Screen y
 * grows downward while world y grows upward, hence the sign flip.
 */
export function dragToCommand(
  drag: DragState,
  newtonsPerPixel: number,
  bounds: { lower: number[]; upper: number[] },
  stamp = 0,
): CommandPayload {
  if (!drag.active) {
    return { force: [0, 0, 0], torque_z: 0, stamp };
  }
  const raw: Vec3 = [drag.dx * newtonsPerPixel, -drag.dy * newtonsPerPixel, 0];
  const force = raw.map(
    (v, i) => Math.min(Math.max(v, bounds.lower[i]), bounds.upper[i]) + 0,
  ) as Vec3;
  return { force, torque_z: 0, stamp };
}

export class ViewModel {
  frame: TelemetryPayload | null = null;
  connection: ConnectionState = "connecting";
  drag: DragState = { active: false, dx: 0, dy: 0 };
  newtonsPerPixel = 0.25;
  readonly alphaHistory = new RingBuffer(600);
  readonly humanForceHistory = new RingBuffer(600);

  /** Absorb one telemetry frame; the displayed trust value is the
   *  server's, never recomputed client-side. */
  update(frame: TelemetryPayload): void {
    this.frame = frame;
    this.alphaHistory.push(frame.alpha);
    const f = frame.forces.u_h;
    this.humanForceHistory.push(Math.hypot(f[0], f[1], f[2]));
  }

  get displayedAlpha(): number | null {
    return this.frame === null ? null : this.frame.alpha;
  }

  command(stamp: number): CommandPayload {
    const bounds = this.frame?.human_input_bounds ?? {
      lower: [-50, -50, -50, -20, -20, -20],
      upper: [50, 50, 50, 20, 20, 20],
    };
    return dragToCommand(this.drag, this.newtonsPerPixel, bounds, stamp);
  }
}
