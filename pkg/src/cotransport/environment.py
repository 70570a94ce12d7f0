"""Workspace, obstacles, visibility sets, and footprint/collision queries.

Obstacles are static: spheres, axis-aligned boxes, and infinite half-space
walls.  Each agent only knows a subset of them (``visible_to_human`` /
``visible_to_robot``); their union must cover every obstacle.  Collision
checks always use the full obstacle set regardless of visibility.

Distance convention: signed distance is >= 0 outside an obstacle and < 0
inside; a point exactly on an obstacle surface (distance 0) is *not* in
collision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .rigid_body import BodyParams, State, rotation_matrix


@dataclass(frozen=True)
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3).copy())
        if self.radius <= 0.0:
            raise ValueError("sphere radius must be positive")


@dataclass(frozen=True)
class AxisBox:
    min_corner: np.ndarray
    max_corner: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min_corner, dtype=float).reshape(3).copy()
        hi = np.asarray(self.max_corner, dtype=float).reshape(3).copy()
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)
        if np.any(lo >= hi):
            raise ValueError("box min corner must be strictly below max corner")


@dataclass(frozen=True)
class Wall:
    """Half-space obstacle: occupies coord <= offset ("le") or >= ("ge")."""

    axis: int
    offset: float
    side: str = "le"

    def __post_init__(self):
        if self.axis not in (0, 1, 2):
            raise ValueError("wall axis must be 0, 1, or 2")
        if self.side not in ("le", "ge"):
            raise ValueError("wall side must be 'le' or 'ge'")


Obstacle = Union[Sphere, AxisBox, Wall]


def signed_distance_points(points: np.ndarray, obstacle: Obstacle) -> np.ndarray:
    """Signed distances from an (n, 3) array of points to one obstacle."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    if isinstance(obstacle, Sphere):
        return np.linalg.norm(p - obstacle.center, axis=-1) - obstacle.radius
    if isinstance(obstacle, AxisBox):
        center = 0.5 * (obstacle.min_corner + obstacle.max_corner)
        half = 0.5 * (obstacle.max_corner - obstacle.min_corner)
        q = np.abs(p - center) - half
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(np.max(q, axis=-1), 0.0)
        return outside + inside
    if isinstance(obstacle, Wall):
        coord = p[:, obstacle.axis]
        return coord - obstacle.offset if obstacle.side == "le" else obstacle.offset - coord
    raise TypeError(f"unsupported obstacle type {type(obstacle)!r}")


def signed_distance(point, obstacle: Obstacle) -> float:
    return float(signed_distance_points(np.asarray(point, dtype=float).reshape(1, 3), obstacle)[0])


def surface_point(point, obstacle: Obstacle) -> np.ndarray:
    """Nearest point of the obstacle surface to ``point``."""
    p = np.asarray(point, dtype=float).reshape(3)
    if isinstance(obstacle, Sphere):
        d = p - obstacle.center
        n = np.linalg.norm(d)
        if n < 1e-12:
            d, n = np.array([1.0, 0.0, 0.0]), 1.0
        return obstacle.center + obstacle.radius * d / n
    if isinstance(obstacle, AxisBox):
        clamped = np.clip(p, obstacle.min_corner, obstacle.max_corner)
        if np.any(clamped != p):
            return clamped
        # Inside: project to the nearest face.
        gap_lo = p - obstacle.min_corner
        gap_hi = obstacle.max_corner - p
        out = p.copy()
        axis = int(np.argmin(np.minimum(gap_lo, gap_hi)))
        out[axis] = obstacle.min_corner[axis] if gap_lo[axis] <= gap_hi[axis] else obstacle.max_corner[axis]
        return out
    if isinstance(obstacle, Wall):
        out = p.copy()
        out[obstacle.axis] = obstacle.offset
        return out
    raise TypeError(f"unsupported obstacle type {type(obstacle)!r}")


def distance_gradient(point, obstacle: Obstacle) -> np.ndarray:
    """Gradient of signed distance w.r.t. the query point (unit outward)."""
    p = np.asarray(point, dtype=float).reshape(3)
    if isinstance(obstacle, Wall):
        g = np.zeros(3)
        g[obstacle.axis] = 1.0 if obstacle.side == "le" else -1.0
        return g
    surf = surface_point(p, obstacle)
    d = p - surf
    n = np.linalg.norm(d)
    if n < 1e-12:
        if isinstance(obstacle, Sphere):
            d = p - obstacle.center
            n = np.linalg.norm(d)
            return d / n if n > 1e-12 else np.array([1.0, 0.0, 0.0])
        return np.array([1.0, 0.0, 0.0])
    sign = 1.0 if signed_distance(p, obstacle) >= 0.0 else -1.0
    return sign * d / n


@dataclass(frozen=True)
class Environment:
    """Workspace box, obstacle list, and per-agent visibility index sets."""

    workspace_min: np.ndarray
    workspace_max: np.ndarray
    obstacles: tuple = ()
    visible_to_human: frozenset = field(default_factory=frozenset)
    visible_to_robot: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        lo = np.asarray(self.workspace_min, dtype=float).reshape(3).copy()
        hi = np.asarray(self.workspace_max, dtype=float).reshape(3).copy()
        object.__setattr__(self, "workspace_min", lo)
        object.__setattr__(self, "workspace_max", hi)
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "visible_to_human", frozenset(self.visible_to_human))
        object.__setattr__(self, "visible_to_robot", frozenset(self.visible_to_robot))
        if np.any(lo >= hi):
            raise ValueError("workspace min must be strictly below max")
        all_idx = set(range(len(self.obstacles)))
        if self.visible_to_human | self.visible_to_robot != all_idx:
            raise ValueError("every obstacle must be visible to at least one agent")

    def robot_obstacles(self) -> list:
        return [(i, self.obstacles[i]) for i in sorted(self.visible_to_robot)]

    def human_obstacles(self) -> list:
        return [(i, self.obstacles[i]) for i in sorted(self.visible_to_human)]

    def workspace_walls(self) -> list:
        """The workspace boundary expressed as six inward-facing walls."""
        walls = []
        for axis in range(3):
            walls.append(Wall(axis, float(self.workspace_min[axis]), "le"))
            walls.append(Wall(axis, float(self.workspace_max[axis]), "ge"))
        return walls


@dataclass(frozen=True)
class FootprintSample:
    """Inertial positions and velocities of the body footprint points."""

    positions: np.ndarray  # (n, 3)
    velocities: np.ndarray  # (n, 3)


def footprint(state: State, body: BodyParams) -> FootprintSample:
    q = rotation_matrix(state.euler)
    pts_body = body.footprint
    positions = state.position[None, :] + pts_body @ q.T
    vel_body = state.lin_vel_body[None, :] + np.cross(state.ang_vel_body[None, :], pts_body)
    velocities = vel_body @ q.T
    return FootprintSample(positions, velocities)


@dataclass(frozen=True)
class ClosestPoint:
    """Closest (footprint point, visible obstacle) pair for one agent."""

    position: np.ndarray
    velocity: np.ndarray
    distance: float
    obstacle_point: Optional[np.ndarray]
    obstacle_index: Optional[int]


def closest_visible_point(state: State, body: BodyParams, env: Environment,
                          indices) -> ClosestPoint:
    sample = footprint(state, body)
    best_d = math.inf
    best_pt = 0
    best_obs: Optional[int] = None
    for idx in sorted(indices):
        d = signed_distance_points(sample.positions, env.obstacles[idx])
        j = int(np.argmin(d))
        if d[j] < best_d:
            best_d = float(d[j])
            best_pt = j
            best_obs = idx
    if best_obs is None:
        return ClosestPoint(sample.positions[0].copy(), sample.velocities[0].copy(),
                            math.inf, None, None)
    pos = sample.positions[best_pt]
    return ClosestPoint(pos.copy(), sample.velocities[best_pt].copy(), best_d,
                        surface_point(pos, env.obstacles[best_obs]), best_obs)


def closest_robot_point(state: State, body: BodyParams, env: Environment) -> ClosestPoint:
    """Closest object point to any robot-visible obstacle (inf if none)."""
    return closest_visible_point(state, body, env, env.visible_to_robot)


def in_collision(state: State, body: BodyParams, env: Environment) -> bool:
    """True if any footprint point penetrates any obstacle or exits the workspace."""
    pts = footprint(state, body).positions
    if np.any(pts < env.workspace_min[None, :]) or np.any(pts > env.workspace_max[None, :]):
        return True
    for obs in env.obstacles:
        if np.any(signed_distance_points(pts, obs) < 0.0):
            return True
    return False


def min_obstacle_distance(state: State, body: BodyParams, env: Environment,
                          indices=None) -> float:
    """Minimum footprint distance over a set of obstacles (all by default)."""
    if indices is None:
        indices = range(len(env.obstacles))
    pts = footprint(state, body).positions
    best = math.inf
    for idx in indices:
        best = min(best, float(np.min(signed_distance_points(pts, env.obstacles[idx]))))
    return best
