/**
 * Browser entry point: connects to the session bridge, forwards drag
 * input as force commands at up to 60 Hz, and renders each animation
 * frame.  Host, port, and the drag scale come from URL query parameters:
 *   ?host=127.0.0.1&port=8765&npp=0.25
 */

import { commandMessage, parseTelemetry } from "./protocol.js";
import { ViewModel } from "./model.js";
import { render } from "./render.js";

const params = new URLSearchParams(window.location.search);
const host = params.get("host") ?? window.location.hostname ?? "127.0.0.1";
const port = params.get("port") ?? "8765";
const vm = new ViewModel();
vm.newtonsPerPixel = parseFloat(params.get("npp") ?? "0.25");

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;

let socket: WebSocket | null = null;
let lastCommandSent = 0;
const COMMAND_INTERVAL_MS = 1000 / 60;

function connect(): void {
  vm.connection = "connecting";
  const ws = new WebSocket(`ws://${host}:${port}`);
  socket = ws;
  ws.onopen = () => {
    vm.connection = "connected";
  };
  ws.onmessage = (ev) => {
    const frame = parseTelemetry(String(ev.data));
    if (frame !== null) {
      vm.update(frame);
    }
  };
  ws.onclose = () => {
    vm.connection = "disconnected";
    socket = null;
    setTimeout(connect, 1000);
  };
  ws.onerror = () => ws.close();
}

function sendCommand(now: number): void {
  if (socket === null || socket.readyState !== WebSocket.OPEN) {
    return;
  }
  if (now - lastCommandSent < COMMAND_INTERVAL_MS) {
    return;
  }
  lastCommandSent = now;
  const cmd = vm.command(now);
  socket.send(JSON.stringify(commandMessage(cmd.force, cmd.torque_z, cmd.stamp)));
}

// Drag input: force follows the vector from the press point.
let pressX = 0;
let pressY = 0;

canvas.addEventListener("pointerdown", (ev) => {
  pressX = ev.offsetX;
  pressY = ev.offsetY;
  vm.drag = { active: true, dx: 0, dy: 0 };
  canvas.setPointerCapture(ev.pointerId);
});
canvas.addEventListener("pointermove", (ev) => {
  if (vm.drag.active) {
    vm.drag = { active: true, dx: ev.offsetX - pressX, dy: ev.offsetY - pressY };
  }
});
function release() {
  vm.drag = { active: false, dx: 0, dy: 0 };
  // Zero-command on release so the hold does not keep pushing.
  if (socket !== null && socket.readyState === WebSocket.OPEN) {
    socket.send(JSON.stringify(commandMessage([0, 0, 0], 0, performance.now())));
  }
}
canvas.addEventListener("pointerup", release);
canvas.addEventListener("pointercancel", release);

function frame(now: number): void {
  if (vm.drag.active) {
    sendCommand(now);
  }
  render(ctx, vm);
  requestAnimationFrame(frame);
}

connect();
requestAnimationFrame(frame);
