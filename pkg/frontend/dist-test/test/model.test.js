/** Unit tests for the view model and protocol helpers (node:test). */
import assert from "node:assert/strict";
import { test } from "node:test";
import { commandMessage, parseTelemetry } from "../src/protocol.js";
import { dragToCommand, RingBuffer, ViewModel } from "../src/model.js";
const BOUNDS = {
    lower: [-9, -9, -9, -2, -2, -2],
    upper: [9, 9, 9, 2, 2, 2],
};
function sampleFrame(alpha, step = 0) {
    return {
        step,
        time: step * 0.05,
        status: "running",
        pose: { position: [0, 0, 0.5], yaw: 0 },
        state: {
            position: [0, 0, 0.5],
            euler: [0, 0, 0],
            lin_vel_body: [0, 0, 0],
            ang_vel_body: [0, 0, 0],
        },
        alpha,
        mode: "trust_blend",
        forces: { u_r: [1, 0, 0], u_h: [3, 4, 0], u_hat_h: [1, 0, 0] },
        min_obstacle_distance: 1.0,
        virtual_points: null,
        workspace: { min: [-2, -2, 0], max: [2, 2, 1] },
        obstacles: [],
        target: [1, 0, 0.5],
        footprint: [
            [0.5, 0, 0],
            [-0.5, 0, 0],
        ],
        human_input_bounds: BOUNDS,
    };
}
test("no drag produces the zero command", () => {
    const cmd = dragToCommand({ active: false, dx: 120, dy: -40 }, 0.5, BOUNDS);
    assert.deepEqual(cmd.force, [0, 0, 0]);
    assert.equal(cmd.torque_z, 0);
});
test("drag maps linearly at the configured scale", () => {
    // 100 px right at 0.5 N/px -> (50, 0, 0) before clamping; the bounds
    // here are tighter, so the x component clamps to 9.
    const cmd = dragToCommand({ active: true, dx: 100, dy: 0 }, 0.5, BOUNDS);
    assert.deepEqual(cmd.force, [9, 0, 0]);
    const small = dragToCommand({ active: true, dx: 10, dy: 0 }, 0.5, BOUNDS);
    assert.deepEqual(small.force, [5, 0, 0]);
});
test("screen-down drags map to negative world y", () => {
    const cmd = dragToCommand({ active: true, dx: 0, dy: 8 }, 0.5, BOUNDS);
    assert.deepEqual(cmd.force, [0, -4, 0]);
});
test("drag beyond the bound clamps exactly to the bound", () => {
    const cmd = dragToCommand({ active: true, dx: -1000, dy: 1000 }, 0.5, BOUNDS);
    assert.deepEqual(cmd.force, [-9, -9, 0]);
});
test("displayed trust is the server value, never recomputed", () => {
    const vm = new ViewModel();
    vm.update(sampleFrame(0.37));
    assert.equal(vm.displayedAlpha, 0.37);
    vm.update(sampleFrame(0.91, 1));
    assert.equal(vm.displayedAlpha, 0.91);
});
test("histories ring-buffer at capacity", () => {
    const buf = new RingBuffer(3);
    [1, 2, 3, 4].forEach((v) => buf.push(v));
    assert.deepEqual(buf.toArray(), [2, 3, 4]);
});
test("view model records trust and human-force histories", () => {
    const vm = new ViewModel();
    vm.update(sampleFrame(0.5));
    assert.deepEqual(vm.alphaHistory.toArray(), [0.5]);
    assert.deepEqual(vm.humanForceHistory.toArray(), [5]); // |(3,4,0)|
});
test("telemetry parsing accepts frames and rejects other messages", () => {
    const frame = sampleFrame(1.0);
    const ok = parseTelemetry(JSON.stringify({ type: "telemetry", payload: frame }));
    assert.ok(ok !== null);
    assert.equal(ok.alpha, 1.0);
    assert.equal(parseTelemetry(JSON.stringify({ type: "command", payload: {} })), null);
    assert.equal(parseTelemetry("not json"), null);
});
test("command envelope round-trips through JSON", () => {
    const msg = commandMessage([1, 2, 0], 0.5, 123);
    const parsed = JSON.parse(JSON.stringify(msg));
    assert.equal(parsed.type, "command");
    assert.deepEqual(parsed.payload.force, [1, 2, 0]);
    assert.equal(parsed.payload.torque_z, 0.5);
});
test("view model command uses frame bounds when available", () => {
    const vm = new ViewModel();
    vm.newtonsPerPixel = 1.0;
    vm.drag = { active: true, dx: 50, dy: 0 };
    vm.update(sampleFrame(1.0));
    const cmd = vm.command(0);
    assert.deepEqual(cmd.force, [9, 0, 0]); // clamped by frame bounds
});
