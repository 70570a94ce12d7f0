/**
 * View model: the latest frame, connection state, drag-to-force mapping,
 * and ring-buffered histories for the strip charts.  Rendering never
 * mutates simulation state; every mutation travels as a command message.
 */
export class RingBuffer {
    constructor(capacity) {
        this.capacity = capacity;
        this.values = [];
    }
    push(v) {
        this.values.push(v);
        if (this.values.length > this.capacity) {
            this.values.shift();
        }
    }
    toArray() {
        return this.values.slice();
    }
    get length() {
        return this.values.length;
    }
}
/**
 * Map a screen-space drag vector to a human force command, clamped to the
 * human input bounds (the server clamps again authoritatively).  Screen y
 * grows downward while world y grows upward, hence the sign flip.
 */
export function dragToCommand(drag, newtonsPerPixel, bounds, stamp = 0) {
    if (!drag.active) {
        return { force: [0, 0, 0], torque_z: 0, stamp };
    }
    const raw = [drag.dx * newtonsPerPixel, -drag.dy * newtonsPerPixel, 0];
    const force = raw.map((v, i) => Math.min(Math.max(v, bounds.lower[i]), bounds.upper[i]) + 0);
    return { force, torque_z: 0, stamp };
}
export class ViewModel {
    constructor() {
        this.frame = null;
        this.connection = "connecting";
        this.drag = { active: false, dx: 0, dy: 0 };
        this.newtonsPerPixel = 0.25;
        this.alphaHistory = new RingBuffer(600);
        this.humanForceHistory = new RingBuffer(600);
    }
    /** Absorb one telemetry frame; the displayed trust value is the
     *  server's, never recomputed client-side. */
    update(frame) {
        this.frame = frame;
        this.alphaHistory.push(frame.alpha);
        const f = frame.forces.u_h;
        this.humanForceHistory.push(Math.hypot(f[0], f[1], f[2]));
    }
    get displayedAlpha() {
        return this.frame === null ? null : this.frame.alpha;
    }
    command(stamp) {
        const bounds = this.frame?.human_input_bounds ?? {
            lower: [-50, -50, -50, -20, -20, -20],
            upper: [50, 50, 50, 20, 20, 20],
        };
        return dragToCommand(this.drag, this.newtonsPerPixel, bounds, stamp);
    }
}
