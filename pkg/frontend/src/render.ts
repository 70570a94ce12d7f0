/**
 * Canvas rendering: top-down orthographic XY view of the workspace with
 * obstacles colored by which agent knows them, the object footprint, the
 * inferred virtual points, force vectors, a trust gauge, and strip
 * charts.  Pure function of the view model.
 */

import { Obstacle, TelemetryPayload, Vec3 } from "./protocol.js";
import { RingBuffer, ViewModel } from "./model.js";

const COLOR_HUMAN_ONLY = "#ef5675";
const COLOR_ROBOT_ONLY = "#003f5c";
const COLOR_BOTH = "#7a5195";
const COLOR_OBJECT = "#2f4b7c";
const COLOR_TARGET = "#ffa600";
const COLOR_VPOINT = "#bc5090";

interface Mapping {
  scale: number;
  ox: number;
  oy: number;
}

function makeMapping(frame: TelemetryPayload, w: number, h: number): Mapping {
  const [minX, minY] = frame.workspace.min;
  const [maxX, maxY] = frame.workspace.max;
  const pad = 20;
  const scale = Math.min(
    (w - 2 * pad) / (maxX - minX),
    (h - 2 * pad) / (maxY - minY),
  );
  return {
    scale,
    ox: pad - minX * scale,
    oy: h - pad + minY * scale,
  };
}

function toScreen(m: Mapping, p: Vec3 | [number, number]): [number, number] {
  return [m.ox + p[0] * m.scale, m.oy - p[1] * m.scale];
}

function obstacleColor(o: Obstacle): string {
  if (o.visible_to_human && o.visible_to_robot) return COLOR_BOTH;
  return o.visible_to_human ? COLOR_HUMAN_ONLY : COLOR_ROBOT_ONLY;
}

function drawObstacle(
  ctx: CanvasRenderingContext2D,
  m: Mapping,
  o: Obstacle,
  frame: TelemetryPayload,
): void {
  ctx.fillStyle = obstacleColor(o);
  ctx.globalAlpha = 0.45;
  if (o.kind === "sphere") {
    const [cx, cy] = toScreen(m, o.center);
    ctx.beginPath();
    ctx.arc(cx, cy, o.radius * m.scale, 0, 2 * Math.PI);
    ctx.fill();
  } else if (o.kind === "box") {
    const [x0, y0] = toScreen(m, [o.min[0], o.max[1]]);
    ctx.fillRect(x0, y0, (o.max[0] - o.min[0]) * m.scale, (o.max[1] - o.min[1]) * m.scale);
  } else if (o.kind === "wall" && o.axis < 2) {
    const ws = frame.workspace;
    const lo: [number, number] = [ws.min[0], ws.min[1]];
    const hi: [number, number] = [ws.max[0], ws.max[1]];
    if (o.side === "le") {
      hi[o.axis] = o.offset;
    } else {
      lo[o.axis] = o.offset;
    }
    const [x0, y0] = toScreen(m, [lo[0], hi[1]]);
    ctx.fillRect(x0, y0, (hi[0] - lo[0]) * m.scale, (hi[1] - lo[1]) * m.scale);
  }
  ctx.globalAlpha = 1.0;
}

function drawArrow(
  ctx: CanvasRenderingContext2D,
  from: [number, number],
  fx: number,
  fy: number,
  pixelsPerNewton: number,
  color: string,
): void {
  const tox = from[0] + fx * pixelsPerNewton;
  const toy = from[1] - fy * pixelsPerNewton;
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(from[0], from[1]);
  ctx.lineTo(tox, toy);
  ctx.stroke();
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(tox, toy, 3, 0, 2 * Math.PI);
  ctx.fill();
}

function drawStrip(
  ctx: CanvasRenderingContext2D,
  buf: RingBuffer,
  x: number,
  y: number,
  w: number,
  h: number,
  maxValue: number,
  color: string,
  label: string,
): void {
  ctx.strokeStyle = "#ccc";
  ctx.strokeRect(x, y, w, h);
  const values = buf.toArray();
  if (values.length > 1) {
    ctx.strokeStyle = color;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    values.forEach((v, i) => {
      const px = x + (i / (buf.capacity - 1)) * w;
      const py = y + h - Math.min(v / maxValue, 1) * h;
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
  }
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(label, x + 4, y + 12);
}

export function render(ctx: CanvasRenderingContext2D, vm: ViewModel): void {
  const canvas = ctx.canvas;
  ctx.clearRect(0, 0, canvas.width, canvas.height);

  if (vm.connection !== "connected" || vm.frame === null) {
    ctx.fillStyle = "#f2f2f2";
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    ctx.fillStyle = "#666";
    ctx.font = "16px sans-serif";
    ctx.fillText(
      vm.connection === "connecting" ? "connecting…" : "disconnected — retrying…",
      20,
      40,
    );
    return;
  }

  const frame = vm.frame;
  const chartHeight = 90;
  const viewHeight = canvas.height - chartHeight - 10;
  const m = makeMapping(frame, canvas.width, viewHeight);

  // Workspace border.
  const [wx0, wy0] = toScreen(m, [frame.workspace.min[0], frame.workspace.max[1]]);
  const [wx1, wy1] = toScreen(m, [frame.workspace.max[0], frame.workspace.min[1]]);
  ctx.strokeStyle = "#333";
  ctx.strokeRect(wx0, wy0, wx1 - wx0, wy1 - wy0);

  for (const o of frame.obstacles) {
    drawObstacle(ctx, m, o, frame);
  }

  if (frame.virtual_points) {
    ctx.fillStyle = COLOR_VPOINT;
    for (const p of frame.virtual_points) {
      const [px, py] = toScreen(m, p);
      ctx.beginPath();
      ctx.arc(px, py, 3, 0, 2 * Math.PI);
      ctx.fill();
    }
  }

  // Target marker.
  const [tx, ty] = toScreen(m, frame.target);
  ctx.strokeStyle = COLOR_TARGET;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(tx - 7, ty);
  ctx.lineTo(tx + 7, ty);
  ctx.moveTo(tx, ty - 7);
  ctx.lineTo(tx, ty + 7);
  ctx.stroke();

  // Object footprint rotated by yaw.
  const { position, yaw } = frame.pose;
  const cos = Math.cos(yaw);
  const sin = Math.sin(yaw);
  ctx.strokeStyle = COLOR_OBJECT;
  ctx.lineWidth = 4;
  ctx.beginPath();
  frame.footprint.forEach((pt, i) => {
    const wx = position[0] + cos * pt[0] - sin * pt[1];
    const wy = position[1] + sin * pt[0] + cos * pt[1];
    const [sx, sy] = toScreen(m, [wx, wy]);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  ctx.stroke();

  // Force vectors at the object center.
  const center = toScreen(m, position);
  const pxPerN = (0.02 * m.scale) as number;
  drawArrow(ctx, center, frame.forces.u_r[0], frame.forces.u_r[1], pxPerN, COLOR_ROBOT_ONLY);
  drawArrow(ctx, center, frame.forces.u_h[0], frame.forces.u_h[1], pxPerN, COLOR_HUMAN_ONLY);

  // Trust gauge and mode banner.
  ctx.fillStyle = "#eee";
  ctx.fillRect(10, 10, 160, 18);
  ctx.fillStyle = frame.alpha >= 0.5 ? "#2e7d32" : "#c62828";
  ctx.fillRect(10, 10, 160 * frame.alpha, 18);
  ctx.strokeStyle = "#333";
  ctx.strokeRect(10, 10, 160, 18);
  ctx.fillStyle = "#111";
  ctx.font = "12px sans-serif";
  ctx.fillText(`trust ${frame.alpha.toFixed(2)}`, 14, 23);

  if (frame.mode === "safe_stop") {
    ctx.fillStyle = "#c62828";
    ctx.font = "bold 18px sans-serif";
    ctx.fillText("SAFE STOP", 190, 25);
  } else if (frame.alpha >= 0.5) {
    ctx.fillStyle = "#2e7d32";
    ctx.font = "12px sans-serif";
    ctx.fillText("robot leading", 190, 23);
  } else {
    ctx.fillStyle = "#ef6c00";
    ctx.font = "12px sans-serif";
    ctx.fillText("robot following", 190, 23);
  }

  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(
    `t=${frame.time.toFixed(1)}s  z=${frame.state.position[2].toFixed(2)}m  status=${frame.status}`,
    10,
    viewHeight + 4,
  );

  // Strip charts: trust and |human force|.
  const half = canvas.width / 2 - 15;
  drawStrip(ctx, vm.alphaHistory, 10, viewHeight + 10, half, chartHeight - 10,
            1.0, "#2e7d32", "trust");
  const bound = frame.human_input_bounds.upper;
  const maxF = Math.hypot(bound[0], bound[1], bound[2]) || 1;
  drawStrip(ctx, vm.humanForceHistory, canvas.width / 2 + 5, viewHeight + 10,
            half, chartHeight - 10, maxF, COLOR_HUMAN_ONLY, "|human force| N");
}
