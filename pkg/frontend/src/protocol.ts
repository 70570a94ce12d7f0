/**
 * Wire protocol shared with the session bridge: JSON text messages with
 * the envelope { type, payload }.  Telemetry flows server -> client once
 * per simulation step; commands and control actions flow back.
 */

export type Vec3 = [number, number, number];

export interface ObstacleSphere {
  kind: "sphere";
  index: number;
  visible_to_human: boolean;
  visible_to_robot: boolean;
  center: Vec3;
  radius: number;
}

export interface ObstacleBox {
  kind: "box";
  index: number;
  visible_to_human: boolean;
  visible_to_robot: boolean;
  min: Vec3;
  max: Vec3;
}

export interface ObstacleWall {
  kind: "wall";
  index: number;
  visible_to_human: boolean;
  visible_to_robot: boolean;
  axis: number;
  offset: number;
  side: "le" | "ge";
}

export type Obstacle = ObstacleSphere | ObstacleBox | ObstacleWall;

export interface TelemetryPayload {
  step: number;
  time: number;
  status: string;
  pose: { position: Vec3; yaw: number };
  state: {
    position: Vec3;
    euler: Vec3;
    lin_vel_body: Vec3;
    ang_vel_body: Vec3;
  };
  alpha: number;
  mode: string;
  forces: { u_r: Vec3; u_h: Vec3; u_hat_h: Vec3 };
  min_obstacle_distance: number | null;
  virtual_points: Vec3[] | null;
  workspace: { min: Vec3; max: Vec3 };
  obstacles: Obstacle[];
  target: Vec3;
  footprint: Vec3[];
  human_input_bounds: { lower: number[]; upper: number[] };
}

export interface TelemetryMessage {
  type: "telemetry";
  payload: TelemetryPayload;
}

export interface CommandPayload {
  force: Vec3;
  torque_z: number;
  stamp: number;
}

export interface CommandMessage {
  type: "command";
  payload: CommandPayload;
}

export interface ControlMessage {
  type: "control";
  payload: { action: "pause" | "resume" | "reset" | "seed"; value?: number };
}

export function parseTelemetry(raw: string): TelemetryPayload | null {
  let msg: unknown;
  try {
    msg = JSON.parse(raw);
  } catch {
    return null;
  }
  const m = msg as { type?: string; payload?: TelemetryPayload };
  if (m.type !== "telemetry" || m.payload === undefined) {
    return null;
  }
  return m.payload;
}

export function commandMessage(
  force: Vec3,
  torqueZ: number,
  stamp: number,
): CommandMessage {
  return { type: "command", payload: { force, torque_z: torqueZ, stamp } };
}
