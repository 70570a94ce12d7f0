"""Live-session WebSocket server: telemetry out, human commands in.

One client at a time connects over a WebSocket carrying JSON text
messages with the envelope {"type": ..., "payload": ...}:

* server -> client  type "telemetry": one frame per simulation step
  (position, yaw, full state, trust, mode, wrenches, obstacles with
  visibility tags, virtual points, status).
* client -> server  type "command": {"force": [fx, fy, fz],
  "torque_z": tz, "stamp": ...} - the live human wrench.  Commands are
  clamped to the human input box on receipt; the latest command before a
  step boundary is held for that step (zero-order hold, zero wrench when
  none has arrived).
* client -> server  type "control": {"action": "pause" | "resume" |
  "reset" | "seed", ...}.

The network side and the sim loop share only two queues; commands are
drained at step boundaries, so live play preserves the same causality as
scripted trials.  With no client connected the sim pauses.  In lockstep
mode the loop waits for exactly one command per step, which makes replay
tests deterministic.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
from dataclasses import replace
from typing import Optional

import numpy as np
import websockets

from .engine import ControllerVariant, StepRecord, TrialStatus, World
from .environment import AxisBox, Sphere, Wall
from .rigid_body import Wrench
from .scenario import Scenario


def command_to_wrench(payload: dict) -> Wrench:
    force = np.asarray(payload.get("force", (0.0, 0.0, 0.0)), dtype=float).reshape(3)
    torque = np.array([0.0, 0.0, float(payload.get("torque_z", 0.0))])
    return Wrench(force, torque)


def _obstacle_dict(obs, index: int, env) -> dict:
    base = {
        "index": index,
        "visible_to_human": index in env.visible_to_human,
        "visible_to_robot": index in env.visible_to_robot,
    }
    if isinstance(obs, Sphere):
        base.update(kind="sphere", center=obs.center.tolist(), radius=obs.radius)
    elif isinstance(obs, AxisBox):
        base.update(kind="box", min=obs.min_corner.tolist(), max=obs.max_corner.tolist())
    elif isinstance(obs, Wall):
        base.update(kind="wall", axis=obs.axis, offset=obs.offset, side=obs.side)
    return base


def telemetry_frame(world: World, record: StepRecord) -> dict:
    env = world.env
    return {
        "type": "telemetry",
        "payload": {
            "step": record.step,
            "time": record.time,
            "status": world.status.value,
            "pose": {
                "position": record.state.position.tolist(),
                "yaw": float(record.state.euler[0]),
            },
            "state": {
                "position": record.state.position.tolist(),
                "euler": record.state.euler.tolist(),
                "lin_vel_body": record.state.lin_vel_body.tolist(),
                "ang_vel_body": record.state.ang_vel_body.tolist(),
            },
            "alpha": record.alpha,
            "mode": record.mode,
            "forces": {
                "u_r": record.u_r.force.tolist(),
                "u_h": record.u_h_measured.force.tolist(),
                "u_hat_h": record.u_hat_h.force.tolist(),
            },
            "min_obstacle_distance": (None if record.min_obstacle_distance != record.min_obstacle_distance
                                      or record.min_obstacle_distance == float("inf")
                                      else record.min_obstacle_distance),
            "virtual_points": (None if record.virtual_points is None
                               else record.virtual_points.tolist()),
            "workspace": {
                "min": env.workspace_min.tolist(),
                "max": env.workspace_max.tolist(),
            },
            "obstacles": [_obstacle_dict(o, i, env) for i, o in enumerate(env.obstacles)],
            "target": world.scenario.target.position.tolist(),
            "footprint": world.body.footprint.tolist(),
            "human_input_bounds": {
                "lower": world.human_cfg.input_set.lower.tolist(),
                "upper": world.human_cfg.input_set.upper.tolist(),
            },
        },
    }


class SessionBridge:
    """Runs one live world, pacing the loop and bridging one client."""

    def __init__(self, scenario: Scenario, variant=ControllerVariant.TRUST_SAFE_STOP,
                 rtf: float = 1.0, lockstep: bool = False, decimation: int = 1,
                 frame_queue_size: int = 32):
        self.scenario = scenario
        self.variant = variant
        self.rtf = rtf
        self.lockstep = lockstep
        self.decimation = max(1, decimation)
        self.world = World(scenario, variant, live=True)
        self.paused = False
        self._client = None
        self._commands: asyncio.Queue = asyncio.Queue()
        self._frames: asyncio.Queue = asyncio.Queue(maxsize=frame_queue_size)
        self._held_command: Optional[Wrench] = None
        self._done = asyncio.Event()

    # -- client side ---------------------------------------------------------

    async def _handle_client(self, ws):
        if self._client is not None:
            await ws.close(code=1013, reason="session busy")
            return
        self._client = ws
        sender = asyncio.create_task(self._send_frames(ws))
        try:
            async for raw in ws:
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    continue
                kind = msg.get("type")
                payload = msg.get("payload", {})
                if kind == "command":
                    await self._commands.put(command_to_wrench(payload))
                elif kind == "control":
                    self._apply_control(payload)
        finally:
            sender.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await sender
            self._client = None

    async def _send_frames(self, ws):
        while True:
            frame = await self._frames.get()
            await ws.send(json.dumps(frame))

    def _apply_control(self, payload: dict) -> None:
        action = payload.get("action")
        if action == "pause":
            self.paused = True
        elif action == "resume":
            self.paused = False
        elif action == "reset":
            self._reset(self.scenario.seed)
        elif action == "seed":
            self._reset(int(payload.get("value", self.scenario.seed)))

    def _reset(self, seed: int) -> None:
        self.scenario = replace(self.scenario, seed=seed)
        self.world = World(self.scenario, self.variant, live=True)
        self._held_command = None

    # -- sim side -------------------------------------------------------------

    def _drain_commands(self) -> Optional[Wrench]:
        latest = None
        while True:
            try:
                latest = self._commands.get_nowait()
            except asyncio.QueueEmpty:
                break
        if latest is not None:
            self._held_command = latest
        return self._held_command

    def _publish(self, frame: dict) -> None:
        # Drop oldest frames rather than stall the sim on a slow client.
        while True:
            try:
                self._frames.put_nowait(frame)
                return
            except asyncio.QueueFull:
                try:
                    self._frames.get_nowait()
                except asyncio.QueueEmpty:
                    return

    async def _sim_loop(self):
        ts = self.world.ts
        try:
            while not self.world.done:
                if self.paused or self._client is None:
                    await asyncio.sleep(0.02)
                    continue
                if self.lockstep:
                    command = await self._commands.get()
                    self._held_command = command
                else:
                    command = self._drain_commands()
                start = asyncio.get_event_loop().time()
                record = self.world.step(command)
                if record.step % self.decimation == 0 or self.world.done:
                    self._publish(telemetry_frame(self.world, record))
                if not self.lockstep and self.rtf > 0:
                    elapsed = asyncio.get_event_loop().time() - start
                    await asyncio.sleep(max(0.0, ts / self.rtf - elapsed))
                else:
                    await asyncio.sleep(0)
            # Flush the terminal frame before closing.
            if self._client is not None:
                await asyncio.sleep(0.05)
        finally:
            self._done.set()

    async def serve(self, host: str = "127.0.0.1", port: int = 8765):
        """Serve until the trial terminates; returns the bound port."""
        async with websockets.serve(self._handle_client, host, port) as server:
            bound = server.sockets[0].getsockname()[1]
            self.bound_port = bound
            sim = asyncio.create_task(self._sim_loop())
            await self._done.wait()
            sim.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await sim
        return self.world.outcome()


def run_session(scenario: Scenario, variant=ControllerVariant.TRUST_SAFE_STOP,
                host: str = "127.0.0.1", port: int = 8765, rtf: float = 1.0,
                lockstep: bool = False):
    bridge = SessionBridge(scenario, variant, rtf=rtf, lockstep=lockstep)
    return asyncio.run(bridge.serve(host, port))
