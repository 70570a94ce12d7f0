"""Trust-weighted role blending and the safe-stop backup policy.

The robot never applies its planned share blindly.  It estimates the
human's compliant contribution as a fixed fraction of the net planned
wrench, compares that estimate against the human wrench measured one
sample earlier, and converts the deviation into a trust value in [0, 1]:

    alpha = 1 - min(1, |u_hat - u_prev| / delta_thr)

High trust applies the robot's own planned share; low trust shifts weight
onto the human's last measured wrench (follower role).  Independently, if
trust is below 1/2 while the object point nearest a robot-known obstacle
closes in faster than a speed threshold, the robot switches to a safe
stop: a pure decelerating force opposing that point's velocity.

All applied wrenches are clamped componentwise to the robot's input box,
which is the exact Euclidean projection for box sets.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .environment import ClosestPoint
from .rigid_body import Wrench, WrenchBox, rotation_matrix


class PolicyMode(enum.Enum):
    TRUST_BLEND = "trust_blend"
    SAFE_STOP = "safe_stop"


@dataclass(frozen=True)
class TrustConfig:
    """Estimation fraction, trust threshold, gains, and trigger thresholds."""

    p: float = 0.5
    delta_thr: float = 20.0
    k1: float = 1.0
    k2: float = 10.0
    d_thr: float = 0.15
    v_thr: float = 0.05
    robot_input_set: WrenchBox = None
    deviation_weights: tuple = (1.0,) * 6
    measurement_filter: float = 0.0  # first-order filter coefficient, 0 = off

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if self.delta_thr <= 0.0:
            raise ValueError("delta_thr must be positive")
        if self.k1 <= 0.0 or self.k2 <= 0.0:
            raise ValueError("gains must be positive")
        if self.robot_input_set is None:
            object.__setattr__(self, "robot_input_set", WrenchBox.symmetric(50.0, 20.0))
        if not 0.0 <= self.measurement_filter < 1.0:
            raise ValueError("measurement_filter must lie in [0, 1)")


@dataclass(frozen=True)
class TrustState:
    alpha: float
    last_human: Wrench
    deviation: Wrench
    mode: PolicyMode


def estimate_human(u_star: Wrench, p: float) -> Wrench:
    """Expected compliant human share of the net planned wrench."""
    return u_star * p


def robot_share(u_star: Wrench, u_hat_h: Wrench) -> Wrench:
    """Planned robot share: the net wrench minus the human estimate."""
    return u_star - u_hat_h


def trust_value(u_hat_h: Wrench, last_human: Wrench, delta_thr: float,
                weights=None) -> float:
    """Trust in [0, 1]: 1 at perfect agreement, 0 at or beyond delta_thr."""
    if delta_thr <= 0.0:
        raise ValueError("delta_thr must be positive")
    dev = u_hat_h.as_vector() - last_human.as_vector()
    if weights is not None:
        dev = dev * np.sqrt(np.asarray(weights, dtype=float))
    norm = float(np.linalg.norm(dev))
    return 1.0 - min(1.0, norm / delta_thr)


def safe_stop_triggered(alpha: float, closest: ClosestPoint, cfg: TrustConfig) -> bool:
    """Low trust + near a robot-known obstacle + closing faster than v_thr."""
    if alpha >= 0.5:
        return False
    if not closest.distance <= cfg.d_thr:
        return False
    if closest.obstacle_point is None:
        return False
    direction = closest.obstacle_point - closest.position
    closure = float(closest.velocity @ direction) / max(float(np.linalg.norm(direction)), 1e-12)
    return closure > cfg.v_thr


def blend_input(alpha: float, u_star_r: Wrench, last_human: Wrench,
                cfg: TrustConfig) -> Wrench:
    """Trust-weighted mix of planned share and last human wrench, clamped."""
    mixed = alpha * u_star_r.as_vector() + cfg.k1 * (1.0 - alpha) * last_human.as_vector()
    return Wrench.from_vector(cfg.robot_input_set.clamp_vector(mixed))


def safe_stop_input(r_dot, cfg: TrustConfig, ts: float, euler=None) -> Wrench:
    """Decelerating force opposing the closing point's velocity; no torque.

    The braking intent is inertial; under the plant model an input force
    acts through the body attitude, so the intent is mapped by Q^T (the
    identity at zero attitude).
    """
    if ts <= 0.0:
        raise ValueError("ts must be positive")
    force = -cfg.k2 * np.asarray(r_dot, dtype=float).reshape(3) / ts
    if euler is not None:
        force = rotation_matrix(euler).T @ force
    vec = np.concatenate([force, np.zeros(3)])
    return Wrench.from_vector(cfg.robot_input_set.clamp_vector(vec))


def robot_policy(u_star: Wrench, last_human: Wrench, closest: ClosestPoint,
                 cfg: TrustConfig, ts: float,
                 enable_safe_stop: bool = True,
                 force_alpha: Optional[float] = None,
                 force_safe_stop: bool = False,
                 euler=None) -> tuple[Wrench, TrustState]:
    """Full closed-loop robot input: estimate, trust, blend or safe-stop.

    ``force_alpha`` pins the trust value (the pure planner baseline uses
    1.0); ``force_safe_stop`` lets the caller impose the backup mode, used
    when repeated solver failures occur near an obstacle.
    """
    u_hat = estimate_human(u_star, cfg.p)
    u_star_r = robot_share(u_star, u_hat)
    if force_alpha is not None:
        alpha = float(force_alpha)
    else:
        alpha = trust_value(u_hat, last_human, cfg.delta_thr, cfg.deviation_weights)
    deviation = u_hat - last_human

    stop = force_safe_stop
    if not stop and enable_safe_stop:
        stop = safe_stop_triggered(alpha, closest, cfg)

    if stop:
        u_r = safe_stop_input(closest.velocity, cfg, ts, euler)
        mode = PolicyMode.SAFE_STOP
    else:
        u_r = blend_input(alpha, u_star_r, last_human, cfg)
        mode = PolicyMode.TRUST_BLEND
    return u_r, TrustState(alpha, last_human, deviation, mode)
