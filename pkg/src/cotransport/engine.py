"""Closed-loop executor: one world per trial, strict per-step ordering.

Each control period runs, in order:

1. read the human wrench measured in the previous step (zero at t=0);
2. evaluate the inferred-obstacle trigger from the previous trust value
   and previous plan, spawning or clearing virtual obstacle points;
3. solve the receding-horizon problem, warm-started by shifting the
   previous input sequence;
4. apply the trust policy (blend or safe stop) to get the robot wrench;
5. obtain the human wrench (scripted policy, or a live command through
   the session bridge) and measure it;
6. integrate the plant one sample under the summed wrench;
7. check collision, goal arrival, and timeout.

The trust value at step t therefore never reads the human wrench applied
at t, only the previous measurement.  Solver failures (infeasible start
or iteration limit) fall back to the shifted previous plan; two
consecutive failures near a robot-known obstacle force safe-stop mode.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import humans, inference, planner, rigid_body, trust
from .environment import (
    closest_robot_point,
    footprint,
    in_collision,
    min_obstacle_distance,
)
from .planner import PlanStatus
from .rigid_body import GimbalProximity, State, Wrench
from .scenario import Scenario, validate_scenario
from .trust import PolicyMode


class ControllerVariant(enum.Enum):
    PURE_MPC = "pure_mpc"
    TRUST_SAFE_STOP = "trust_safe_stop"
    TRUST_NO_SAFE_STOP = "trust_no_safe_stop"


class TrialStatus(enum.Enum):
    RUNNING = "running"
    SUCCESS = "success"
    COLLISION = "collision"
    TIMEOUT = "timeout"
    FAULT = "fault"


@dataclass(frozen=True)
class StepRecord:
    step: int
    time: float
    state: State
    u_star: Wrench
    u_hat_h: Wrench
    u_h_measured: Wrench
    u_r: Wrench
    alpha: float
    mode: str
    solver_status: str
    min_obstacle_distance: float
    robot_obstacle_distance: float
    closure_speed: float
    virtual_points: Optional[np.ndarray]


@dataclass(frozen=True)
class TrialOutcome:
    status: TrialStatus
    records: list
    final_state: State
    scenario_name: str
    variant: str

    @property
    def success(self) -> bool:
        return self.status is TrialStatus.SUCCESS


class World:
    """Mutable simulation state for one trial."""

    def __init__(self, scenario: Scenario, variant=ControllerVariant.TRUST_SAFE_STOP,
                 live: bool = False):
        if not isinstance(variant, ControllerVariant):
            variant = ControllerVariant(variant)
        validate_scenario(scenario)
        self.scenario = scenario
        self.variant = variant
        self.live = live
        self.env = scenario.environment
        self.body = scenario.body
        self.planner_cfg = scenario.resolved_planner()
        self.trust_cfg = scenario.trust
        self.inference_cfg = scenario.inference
        self.human_cfg = scenario.human
        self.ts = self.planner_cfg.ts

        seq = np.random.SeedSequence(scenario.seed)
        human_seq, inference_seq = seq.spawn(2)
        self.human_rng = np.random.default_rng(human_seq)
        self.inference_rng = np.random.default_rng(inference_seq)

        self.state: State = scenario.initial
        self.step_index = 0
        self.status = TrialStatus.RUNNING
        self.records: list[StepRecord] = []

        self.prev_inputs: Optional[np.ndarray] = None
        self.prev_u_star: Wrench = Wrench.zero()
        self.prev_alpha: float = 1.0
        self.u_h_measured_prev: Wrench = Wrench.zero()
        self.u_h_filtered_prev: Wrench = Wrench.zero()
        self.vpoints: Optional[inference.VirtualObstacleSet] = None
        self.consecutive_failures = 0
        self._success_streak = 0
        self._stall_steps = 0
        self._leader_yielded = False
        self._leader_moved = False
        self._u_h_slewed: Optional[np.ndarray] = None

    # -- helpers -----------------------------------------------------------

    @property
    def time(self) -> float:
        return self.step_index * self.ts

    @property
    def done(self) -> bool:
        return self.status is not TrialStatus.RUNNING

    def _io_enabled(self) -> bool:
        return self.variant is not ControllerVariant.PURE_MPC

    def _ss_enabled(self) -> bool:
        return self.variant is ControllerVariant.TRUST_SAFE_STOP

    def _trust_reference(self) -> Wrench:
        """Human wrench the trust computation compares against."""
        c = self.trust_cfg.measurement_filter
        return self.u_h_filtered_prev if c > 0.0 else self.u_h_measured_prev

    def _human_position(self) -> np.ndarray:
        pts = footprint(self.state, self.body).positions
        return pts[self.scenario.human_point_index]

    # -- one control period --------------------------------------------------

    def step(self, human_override: Optional[Wrench] = None) -> StepRecord:
        if self.done:
            raise RuntimeError("world already terminated")

        u_h_prev = self._trust_reference()

        # Inferred obstacle zone: decided from the previous step's trust
        # value and plan, since this step's plan depends on the outcome.
        self.vpoints = None
        if self._io_enabled():
            u_hat_prev_f = self.trust_cfg.p * self.prev_u_star.force
            if inference.io_triggered(self.prev_alpha, u_hat_prev_f,
                                      u_h_prev.force, self.inference_cfg):
                # Virtual points are placed in the inertial frame, so the
                # measured force input is mapped to its inertial effect.
                inertial_f = rigid_body.rotation_matrix(self.state.euler) @ u_h_prev.force
                self.vpoints = inference.spawn_virtual_points(
                    self._human_position(), inertial_f,
                    self.inference_cfg, self.inference_rng, self.step_index)

        # Receding-horizon solve with shifted warm start.
        warm = planner.warm_shift_inputs(self.prev_inputs) if self.prev_inputs is not None else None
        vpts = self.vpoints.points if self.vpoints is not None else None
        try:
            plan = planner.solve(self.state, self.planner_cfg, self.body, self.env,
                                 vpts, warm)
        except GimbalProximity:
            self.status = TrialStatus.FAULT
            return self._record_fault()

        # An iteration-limited plan is still a monotone improvement on its
        # warm start, so it is used; only an infeasible start falls back to
        # the shifted previous plan.
        if plan.status is PlanStatus.INFEASIBLE:
            self.consecutive_failures += 1
            used_inputs = warm if warm is not None else plan.inputs
        else:
            self.consecutive_failures = 0
            used_inputs = plan.inputs
        u_star = Wrench.from_vector(used_inputs[0])

        # Trust policy.
        closest = closest_robot_point(self.state, self.body, self.env)
        force_ss = (self._ss_enabled() and self.consecutive_failures >= 2
                    and closest.distance <= self.trust_cfg.d_thr)
        force_alpha = 1.0 if self.variant is ControllerVariant.PURE_MPC else None
        u_r, tstate = trust.robot_policy(
            u_star, u_h_prev, closest, self.trust_cfg, self.ts,
            enable_safe_stop=self._ss_enabled(),
            force_alpha=force_alpha,
            force_safe_stop=force_ss,
            euler=self.state.euler,
        )

        # Human wrench: scripted policy unless a live command is injected.
        if self.live:
            cmd = human_override if human_override is not None else Wrench.zero()
            u_h_true = self.human_cfg.input_set.clamp(cmd)
            u_h_measured = u_h_true
        else:
            mode = self.human_cfg.mode_at(self.time)
            if mode is humans.HumanMode.LEADER:
                self._update_leader_yield()
                if self._leader_yielded:
                    mode = humans.HumanMode.COMPLIANT
            u_h_true = humans.scripted_wrench(mode, self.state, self.prev_u_star,
                                              self.scenario.target, self.env,
                                              self.body, self.human_cfg)
            u_h_true = self._slew_human(u_h_true)
            u_h_measured = humans.measure(u_h_true,
                                          self.human_cfg.measurement_noise_std,
                                          self.human_rng)

        # Plant integration under the summed wrench.
        try:
            next_state = rigid_body.step(self.state, u_h_true + u_r, self.body, self.ts)
        except GimbalProximity:
            self.status = TrialStatus.FAULT
            return self._record_fault()

        closure = 0.0
        if closest.obstacle_point is not None:
            direction = closest.obstacle_point - closest.position
            denom = max(float(np.linalg.norm(direction)), 1e-12)
            closure = float(closest.velocity @ direction) / denom

        record = StepRecord(
            step=self.step_index,
            time=self.time,
            state=self.state,
            u_star=u_star,
            u_hat_h=trust.estimate_human(u_star, self.trust_cfg.p),
            u_h_measured=u_h_measured,
            u_r=u_r,
            alpha=tstate.alpha,
            mode=tstate.mode.value,
            solver_status=plan.status.value,
            min_obstacle_distance=min_obstacle_distance(self.state, self.body, self.env),
            robot_obstacle_distance=closest.distance,
            closure_speed=closure,
            virtual_points=None if self.vpoints is None else self.vpoints.points.copy(),
        )
        self.records.append(record)

        # Bookkeeping for the next period.
        c = self.trust_cfg.measurement_filter
        filt = (1.0 - c) * u_h_measured.as_vector() + c * self.u_h_filtered_prev.as_vector()
        self.u_h_filtered_prev = Wrench.from_vector(filt)
        self.u_h_measured_prev = u_h_measured
        self.prev_inputs = used_inputs
        self.prev_u_star = u_star
        self.prev_alpha = tstate.alpha
        self.state = next_state
        self.step_index += 1

        self._check_termination()
        return record

    def _slew_human(self, wrench: Wrench) -> Wrench:
        """A person re-aims their wrench gradually, not step to step."""
        rate = self.human_cfg.wrench_slew_rate
        if not math.isfinite(rate):
            return wrench
        target = wrench.as_vector()
        if self._u_h_slewed is None:
            self._u_h_slewed = np.zeros(6)
        limit = rate * self.ts
        self._u_h_slewed = self._u_h_slewed + np.clip(
            target - self._u_h_slewed, -limit, limit)
        return Wrench.from_vector(self._u_h_slewed)

    def _update_leader_yield(self) -> None:
        """A stalled leader eventually accepts the robot's resistance.

        Stall is judged by progress speed toward the leader's goal, so a
        braked slide along an obstacle counts as stalled even though the
        object still moves.  Counting starts only after the task has
        visibly gotten underway.
        """
        cfg = self.human_cfg
        if self._leader_yielded or not math.isfinite(cfg.yield_stall_time):
            return
        to_goal = self.scenario.target.position - self.state.position
        dist = float(np.linalg.norm(to_goal))
        if dist <= self.scenario.success_tolerance:
            self._stall_steps = 0
            return
        vel = rigid_body.rotation_matrix(self.state.euler) @ self.state.lin_vel_body
        progress = float(vel @ to_goal) / dist
        if progress > 2.0 * cfg.yield_speed:
            self._leader_moved = True
        if self._leader_moved and progress < cfg.yield_speed:
            self._stall_steps += 1
        else:
            self._stall_steps = 0
        if self._stall_steps * self.ts >= cfg.yield_stall_time:
            self._leader_yielded = True

    def _record_fault(self) -> StepRecord:
        record = StepRecord(
            step=self.step_index, time=self.time, state=self.state,
            u_star=Wrench.zero(), u_hat_h=Wrench.zero(),
            u_h_measured=Wrench.zero(), u_r=Wrench.zero(),
            alpha=self.prev_alpha, mode=PolicyMode.TRUST_BLEND.value,
            solver_status="fault",
            min_obstacle_distance=min_obstacle_distance(self.state, self.body, self.env),
            robot_obstacle_distance=math.inf, closure_speed=0.0,
            virtual_points=None,
        )
        self.records.append(record)
        return record

    def _check_termination(self) -> None:
        sc = self.scenario
        if in_collision(self.state, self.body, self.env):
            self.status = TrialStatus.COLLISION
            return
        pos_err = float(np.linalg.norm(self.state.position - sc.target.position))
        if pos_err <= sc.success_tolerance and self.state.speed() < sc.success_speed:
            self._success_streak += 1
        else:
            self._success_streak = 0
        if self._success_streak >= sc.success_hold_steps:
            self.status = TrialStatus.SUCCESS
            return
        if self.time >= sc.duration:
            self.status = TrialStatus.TIMEOUT

    def outcome(self) -> TrialOutcome:
        return TrialOutcome(self.status, list(self.records), self.state,
                            self.scenario.name, self.variant.value)


def run(scenario: Scenario, variant=ControllerVariant.TRUST_SAFE_STOP,
        max_steps: Optional[int] = None) -> TrialOutcome:
    """Run one trial to termination and return its outcome."""
    world = World(scenario, variant)
    limit = max_steps if max_steps is not None else int(math.ceil(scenario.duration / world.ts)) + 1
    for _ in range(limit):
        if world.done:
            break
        world.step()
    if not world.done:
        world.status = TrialStatus.TIMEOUT
    return world.outcome()
