"""Scripted human-agent policies closing the loop in simulation.

Three behaviors, switchable on a timed schedule:

* ``COMPLIANT`` — supplies a fixed fraction of the previous net planned
  wrench (minimizing felt forces) plus a repulsive potential-field force
  away from obstacles the human can see.
* ``LEADER`` — ignores the plan and drives the object to the goal with a
  PD law on position, a yaw torque toward the path tangent, and the same
  repulsive field.  A leader who feels the object held back (speed under
  ``yield_speed`` for ``yield_stall_time`` while the goal is still far)
  acquiesces and behaves compliantly for the rest of the trial: the
  response a decelerating robot is meant to provoke.
* ``RESISTING`` — actively opposes the plan: minus the compliant fraction
  of the planned wrench, plus the repulsive field.

The repulsive field over a human-visible obstacle at footprint distance d
within ``repulsion_radius`` R is the classic gradient form
gain * (1/d - 1/R) / d^2 pointing away from the obstacle surface; it is
continuous (zero) at d = R.  Every emitted wrench is clamped to the
human's input box.  A live operator replaces these policies through the
session bridge with the same clamping.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import environment as envmod
from .environment import Environment
from .rigid_body import BodyParams, State, Wrench, WrenchBox, rotation_matrix

# Yaw regulation gains as fractions of the linear PD gains.
YAW_GAIN_FRACTION = 0.1


class HumanMode(enum.Enum):
    COMPLIANT = "compliant"
    LEADER = "leader"
    RESISTING = "resisting"


@dataclass(frozen=True)
class HumanConfig:
    """Behavior schedule and gains for the scripted human."""

    schedule: tuple = ((0.0, HumanMode.COMPLIANT),)
    compliance_fraction: float = 0.5
    repulsion_gain: float = 1.0
    repulsion_radius: float = 0.8
    evasion_fraction: float = 0.6
    repulsion_saturation: float = 100.0
    comfort_speed: float = 0.5
    over_speed_damping: float = 25.0
    lead_stiffness: float = 30.0
    lead_damping: float = 20.0
    yield_stall_time: float = math.inf  # s; leader acquiesces after stalling
    yield_speed: float = 0.08           # m/s; "stalled" speed threshold
    wrench_slew_rate: float = math.inf  # N/s; how fast the person re-aims
    input_set: WrenchBox = None
    measurement_noise_std: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.compliance_fraction < 1.0:
            raise ValueError("compliance_fraction must lie in (0, 1)")
        if self.repulsion_gain < 0.0 or self.repulsion_radius <= 0.0:
            raise ValueError("repulsion parameters must be non-negative / positive")
        if self.evasion_fraction < 0.0 or self.over_speed_damping < 0.0:
            raise ValueError("evasion_fraction and damping must be non-negative")
        if self.repulsion_saturation <= 0.0:
            raise ValueError("repulsion_saturation must be positive")
        if self.input_set is None:
            object.__setattr__(self, "input_set", WrenchBox.symmetric(50.0, 20.0))

    def mode_at(self, t: float) -> HumanMode:
        mode = self.schedule[0][1]
        for start, m in self.schedule:
            if t >= start:
                mode = m
        return mode


def _obstacle_centroid(obs) -> np.ndarray:
    if isinstance(obs, envmod.Sphere):
        return obs.center
    if isinstance(obs, envmod.AxisBox):
        return 0.5 * (obs.min_corner + obs.max_corner)
    return None  # walls are unbounded: no lateral preference


def repulsion_force(state: State, body: BodyParams, env: Environment,
                    cfg: HumanConfig) -> np.ndarray:
    """Evasive push away from every nearby human-visible obstacle.

    The magnitude follows the classic gradient field
    gain * (1/d - 1/R) / d^2 along the outward normal, saturated at
    ``repulsion_saturation`` and gated by the closure speed (a person
    pushes hard while the object closes on the hazard, gently once it
    recedes).  A person does not just push back, though:
    they steer around.  A tangential component
    (``evasion_fraction`` of the magnitude) is added along the in-surface
    direction pointing away from the obstacle's centroid, which picks the
    natural detour side deterministically.  Head-on sphere approaches and
    infinite walls have no preferred side and keep the pure normal field.
    """
    total = np.zeros(3)
    sample = envmod.footprint(state, body)
    # The room itself is always visible; people tolerate walls much closer
    # than free-standing obstacles, so the wall cushion is kept tight.
    wall_radius = min(0.2, cfg.repulsion_radius)
    queries = [(obs, cfg.repulsion_radius) for _, obs in env.human_obstacles()]
    queries += [(wall, wall_radius) for wall in env.workspace_walls()]
    for obs, radius in queries:
        d_all = envmod.signed_distance_points(sample.positions, obs)
        j = int(np.argmin(d_all))
        d = float(d_all[j])
        if d >= radius:
            continue
        d = max(d, 1e-6)
        normal = envmod.distance_gradient(sample.positions[j], obs)
        # A person pushes hardest while the object is still closing on the
        # hazard and eases off once it visibly clears.
        closing = -float(sample.velocities[j] @ normal)
        gate = float(np.clip(0.2 + closing / 0.12, 0.2, 1.0))
        direction = normal.copy()
        centroid = _obstacle_centroid(obs)
        if centroid is not None and cfg.evasion_fraction > 0.0:
            away = sample.positions[j] - centroid
            tangent = away - (away @ normal) * normal
            t_norm = np.linalg.norm(tangent)
            if t_norm > 1e-9:
                direction = direction + cfg.evasion_fraction * tangent / t_norm
        push = gate * cfg.repulsion_gain * (1.0 / d - 1.0 / radius) / (d * d) * direction
        # A person's push saturates; the cap also keeps the near-contact
        # 1/d^3 blowup from swamping the direction with clamp corners.
        norm = np.linalg.norm(push)
        if norm > cfg.repulsion_saturation:
            push *= cfg.repulsion_saturation / norm
        total += push
    return total


def over_speed_brake(state: State, cfg: HumanConfig) -> np.ndarray:
    """Damping a person applies once the object moves faster than they like.

    Zero below ``comfort_speed`` (keeping the trust signal clean during
    nominal transport), then proportional to the excess speed.
    """
    vel = rotation_matrix(state.euler) @ state.lin_vel_body
    speed = float(np.linalg.norm(vel))
    if speed <= cfg.comfort_speed or cfg.over_speed_damping == 0.0:
        return np.zeros(3)
    return -cfg.over_speed_damping * (speed - cfg.comfort_speed) * vel / speed


def intended_force_to_input(force: np.ndarray, state: State) -> np.ndarray:
    """Map a force intended in the inertial frame to input coordinates.

    Under the plant model an applied force vector produces the inertial
    acceleration Q F / m, so realizing an intended inertial push requires
    commanding Q^T times it.  At zero attitude the two coincide.
    """
    return rotation_matrix(state.euler).T @ force


def compliant_wrench(state: State, u_star: Wrench, env: Environment,
                     body: BodyParams, cfg: HumanConfig) -> Wrench:
    """Fraction of the planned wrench plus obstacle repulsion, clamped."""
    vec = cfg.compliance_fraction * u_star.as_vector()
    intent = repulsion_force(state, body, env, cfg) + over_speed_brake(state, cfg)
    vec[0:3] += intended_force_to_input(intent, state)
    return Wrench.from_vector(cfg.input_set.clamp_vector(vec))


def resisting_wrench(state: State, u_star: Wrench, env: Environment,
                     body: BodyParams, cfg: HumanConfig) -> Wrench:
    """Opposes the planned wrench instead of assisting it."""
    vec = -cfg.compliance_fraction * u_star.as_vector()
    intent = repulsion_force(state, body, env, cfg) + over_speed_brake(state, cfg)
    vec[0:3] += intended_force_to_input(intent, state)
    return Wrench.from_vector(cfg.input_set.clamp_vector(vec))


def _wrap_angle(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def leader_wrench(state: State, target: State, env: Environment,
                  body: BodyParams, cfg: HumanConfig) -> Wrench:
    """PD drive straight toward the goal, yaw toward the path tangent."""
    err = target.position - state.position
    vel = rotation_matrix(state.euler) @ state.lin_vel_body
    intent = cfg.lead_stiffness * err - cfg.lead_damping * vel
    intent += repulsion_force(state, body, env, cfg)
    force = intended_force_to_input(intent, state)

    torque = np.zeros(3)
    planar = math.hypot(err[0], err[1])
    yaw_des = math.atan2(err[1], err[0]) if planar > 0.05 else float(state.euler[0])
    yaw_err = _wrap_angle(yaw_des - float(state.euler[0]))
    torque[2] = (YAW_GAIN_FRACTION * cfg.lead_stiffness * yaw_err
                 - YAW_GAIN_FRACTION * cfg.lead_damping * float(state.ang_vel_body[2]))

    vec = np.concatenate([force, torque])
    return Wrench.from_vector(cfg.input_set.clamp_vector(vec))


def scripted_wrench(mode: HumanMode, state: State, prev_u_star: Wrench,
                    target: State, env: Environment, body: BodyParams,
                    cfg: HumanConfig) -> Wrench:
    if mode is HumanMode.COMPLIANT:
        return compliant_wrench(state, prev_u_star, env, body, cfg)
    if mode is HumanMode.LEADER:
        return leader_wrench(state, target, env, body, cfg)
    return resisting_wrench(state, prev_u_star, env, body, cfg)


def measure(true_wrench: Wrench, noise_std: float, rng: np.random.Generator) -> Wrench:
    """Sensor model for the human wrench: additive Gaussian noise."""
    if noise_std <= 0.0:
        return true_wrench
    return Wrench.from_vector(true_wrench.as_vector() + rng.normal(0.0, noise_std, 6))
