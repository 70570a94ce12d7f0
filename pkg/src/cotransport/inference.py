"""Virtual obstacle inference from unexpected human forces.

When trust is low and the measured human force direction disagrees with
the expected one by more than a configured angle, the robot assumes the
human is avoiding something it cannot see.  It then spawns a small cloud
of virtual obstacle points placed opposite the human's force, offset from
the human's grasp position, and penalizes plan proximity to those points
with an inverse-distance cost.

Virtual points live for a single planning cycle: a new trigger replaces
the previous set, and no points are ever stored as real obstacles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

# Floor on distances inside the inverse-distance penalty (caps it at
# 1/DISTANCE_GUARD per point so the optimizer never sees a singularity).
DISTANCE_GUARD = 0.01


@dataclass(frozen=True)
class InferenceConfig:
    """Gains and thresholds for virtual-point generation."""

    k3: float = 0.005            # m per N: offset per unit of human force
    num_points: int = 5
    nu_thr: float = math.pi / 6  # rad: force-direction disagreement trigger
    noise_scale: float = 0.01    # m: componentwise offset noise bound
    force_epsilon: float = 1e-3  # N: below this, angles are undefined
    rng_seed: Optional[int] = None

    def __post_init__(self):
        if self.num_points < 1:
            raise ValueError("num_points must be >= 1")
        if not 0.0 < self.nu_thr < math.pi:
            raise ValueError("nu_thr must lie in (0, pi)")
        if self.noise_scale < 0.0:
            raise ValueError("noise_scale must be non-negative")


@dataclass(frozen=True)
class VirtualObstacleSet:
    points: np.ndarray  # (n, 3) inertial positions
    created_at: int

    def __post_init__(self):
        object.__setattr__(self, "points",
                           np.atleast_2d(np.asarray(self.points, dtype=float)).copy())


def io_triggered(alpha: float, u_hat_f, u_h_f_prev, cfg: InferenceConfig) -> bool:
    """True when trust is low and force directions disagree beyond the threshold."""
    if alpha >= 0.5:
        return False
    a = np.asarray(u_hat_f, dtype=float).reshape(3)
    b = np.asarray(u_h_f_prev, dtype=float).reshape(3)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na <= cfg.force_epsilon or nb <= cfg.force_epsilon:
        return False
    cosang = float(np.clip(a @ b / (na * nb), -1.0, 1.0))
    return abs(math.acos(cosang)) > cfg.nu_thr


def spawn_virtual_points(human_position, u_h_f_prev, cfg: InferenceConfig,
                         rng: np.random.Generator, created_at: int = 0) -> VirtualObstacleSet:
    """Place points opposite the measured human force, with small noise.

    Each point is H - k3 * f - o_i where o_i has independent components
    uniform in (0, noise_scale]; deterministic for a seeded generator.
    """
    h = np.asarray(human_position, dtype=float).reshape(3)
    f = np.asarray(u_h_f_prev, dtype=float).reshape(3)
    base = h - cfg.k3 * f
    noise = cfg.noise_scale * (1.0 - rng.random((cfg.num_points, 3)))
    return VirtualObstacleSet(base[None, :] - noise, created_at)


def penalty(position, vset: Optional[VirtualObstacleSet],
            guard: float = DISTANCE_GUARD) -> float:
    """Summed inverse distance from ``position`` to the virtual points."""
    if vset is None or vset.points.shape[0] == 0:
        return 0.0
    p = np.asarray(position, dtype=float).reshape(3)
    dist = np.linalg.norm(vset.points - p[None, :], axis=-1)
    return float(np.sum(1.0 / np.maximum(dist, guard)))
