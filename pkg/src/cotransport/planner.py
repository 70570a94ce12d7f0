"""Receding-horizon wrench planner for the transported object.

Each control step solves a finite-horizon optimal control problem over the
net wrench sequence by direct single shooting: projected gradient descent
with Armijo backtracking on the stacked (N, 6) input array.  The cost is

    sum_k  (pose_k - pose_target)' diag(state_weights) (pose_k - pose_target)
         + u_k' diag(input_weights) u_k
         + obstacle_penalty_weight * sum_obs max(0, margin - d_obs(k))^2
         + inferred_penalty_weight * sum_pts 1 / max(|com_k - pt|, guard)

where d_obs(k) is the minimum footprint distance at stage k to each
robot-visible obstacle (the workspace boundary is handled as six inward
walls), and the last term repels the plan from virtual obstacle points
inferred from unexpected human forces.

Pose weights apply to the six pose components only; velocity errors are
unweighted.  Input bounds are enforced exactly by componentwise clamping,
which is the exact Euclidean projection onto the box.  Gradients are
analytic (adjoint sweep through the RK4 step Jacobians).

Plans whose predicted footprint would penetrate a robot-visible obstacle
are rejected in favor of the best feasible iterate encountered.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import environment as envmod
from .environment import Environment
from .rigid_body import (
    BodyParams,
    GimbalProximity,
    State,
    Wrench,
    WrenchBox,
    rotation_matrix,
    rotation_matrices,
    step_jacobians_batch,
    step_vector,
)
from .inference import DISTANCE_GUARD

ARMIJO_BETA = 0.5
ARMIJO_SIGMA = 1e-4
MAX_BACKTRACKS = 25


class PlanStatus(enum.Enum):
    CONVERGED = "converged"
    ITER_LIMIT = "iter_limit"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class PlannerConfig:
    """Horizon, weights, bounds, and solver settings."""

    horizon: int = 20
    ts: float = 0.05
    state_weights: tuple = (20.0, 20.0, 20.0, 1.0, 1.0, 1.0)
    input_weights: tuple = (10.0, 10.0, 10.0, 100.0, 100.0, 100.0)
    target: Optional[State] = None
    input_set: Optional[WrenchBox] = None
    max_iterations: int = 50
    cost_tolerance: float = 1e-4
    obstacle_penalty_weight: float = 1e3
    obstacle_margin: float = 0.05
    inferred_penalty_weight: float = 1.0
    lateral_restarts: int = 0  # stall escapes: extra descents from biased seeds

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if any(w < 0 for w in self.state_weights) or any(w < 0 for w in self.input_weights):
            raise ValueError("weights must be non-negative")


@dataclass(frozen=True)
class PlanResult:
    """Optimized input sequence with its exact rollout."""

    inputs: np.ndarray          # (N, 6)
    predicted: np.ndarray       # (N+1, 12)
    cost: float
    status: PlanStatus
    cost_history: tuple = ()

    def input_wrench(self, k: int = 0) -> Wrench:
        return Wrench.from_vector(self.inputs[k])

    def predicted_state(self, k: int) -> State:
        return State.from_vector(self.predicted[k])


class PlanCost:
    """Cost functional over (states, inputs) trajectories.

    All stage terms are evaluated batched over the horizon: footprint
    points for every predicted stage are built in one pass and each
    obstacle's distances are queried once per trajectory.
    """

    def __init__(self, cfg: PlannerConfig, body: BodyParams, env: Environment,
                 virtual_points: Optional[np.ndarray] = None):
        if cfg.target is None or cfg.input_set is None:
            raise ValueError("PlannerConfig.target and input_set must be resolved")
        self.cfg = cfg
        self.body = body
        self.pose_target = cfg.target.as_vector()[0:6]
        self.state_w = np.asarray(cfg.state_weights, dtype=float)
        self.input_w = np.asarray(cfg.input_weights, dtype=float)
        self.penalty_obstacles = [obs for _, obs in env.robot_obstacles()]
        self.penalty_obstacles += env.workspace_walls()
        self.vpoints = None
        if virtual_points is not None and len(virtual_points) > 0:
            self.vpoints = np.atleast_2d(np.asarray(virtual_points, dtype=float))

        # Diagonal Gauss-Newton curvature estimate per input component:
        # forces act on position through ~(m Ts)^2 / 2M, torques on the
        # Euler angles through the (much smaller) inertia, which makes the
        # torque directions orders of magnitude stiffer.  Scaling descent
        # directions by 1/h equalizes them so one line search fits all.
        n = cfg.horizon
        lever = np.array([((m * cfg.ts) ** 2) for m in range(1, n + 1)])
        pos_w = float(np.max(self.state_w[0:3]))
        eul_w = float(np.max(self.state_w[3:6]))
        h = np.empty(6)
        h[0:3] = 2.0 * self.input_w[0:3] + 2.0 * pos_w * np.sum(
            (lever / (2.0 * body.mass)) ** 2)
        for i, j_ax in enumerate(body.inertia_diag):
            h[3 + i] = 2.0 * self.input_w[3 + i] + 2.0 * eul_w * np.sum(
                (lever / (2.0 * j_ax)) ** 2)
        self.precond = 1.0 / h

    def _stage_points(self, states: np.ndarray) -> np.ndarray:
        """Footprint points for a (k, 12) state batch, shape (k, n_pts, 3)."""
        q = rotation_matrices(states[:, 3:6])
        return states[:, None, 0:3] + np.einsum("kij,pj->kpi", q, self.body.footprint)

    def _obstacle_cost_terms(self, pts: np.ndarray) -> float:
        k, n = pts.shape[0], pts.shape[1]
        flat = pts.reshape(-1, 3)
        total = 0.0
        for obs in self.penalty_obstacles:
            d = envmod.signed_distance_points(flat, obs).reshape(k, n).min(axis=1)
            gap = np.maximum(self.cfg.obstacle_margin - d, 0.0)
            total += float(gap @ gap)
        return self.cfg.obstacle_penalty_weight * total

    def _inferred_cost_terms(self, positions: np.ndarray) -> float:
        if self.vpoints is None:
            return 0.0
        dist = np.linalg.norm(positions[:, None, :] - self.vpoints[None, :, :], axis=-1)
        return self.cfg.inferred_penalty_weight * float(
            np.sum(1.0 / np.maximum(dist, DISTANCE_GUARD)))

    # -- single-stage terms (used by tests and diagnostics) ------------------

    def stage_state_cost(self, s: np.ndarray) -> float:
        err = s[0:6] - self.pose_target
        return float(err @ (self.state_w * err))

    def stage_input_cost(self, u: np.ndarray) -> float:
        return float(u @ (self.input_w * u))

    def stage_obstacle_cost(self, s: np.ndarray) -> float:
        return self._obstacle_cost_terms(self._stage_points(s[None, :]))

    def stage_inferred_cost(self, s: np.ndarray) -> float:
        return self._inferred_cost_terms(s[None, 0:3])

    # -- trajectory terms ----------------------------------------------------

    def total(self, states: np.ndarray, inputs: np.ndarray) -> float:
        err = states[1:, 0:6] - self.pose_target[None, :]
        cost = float(np.sum(err * err * self.state_w[None, :]))
        cost += float(np.sum(inputs * inputs * self.input_w[None, :]))
        cost += self._obstacle_cost_terms(self._stage_points(states[1:]))
        cost += self._inferred_cost_terms(states[1:, 0:3])
        return cost

    def state_gradients(self, states: np.ndarray) -> np.ndarray:
        """d(stage cost)/d(state) for stages 1..N, shape (N, 12)."""
        stages = states[1:]
        k_count = stages.shape[0]
        g = np.zeros((k_count, 12))
        g[:, 0:6] = 2.0 * self.state_w[None, :] * (stages[:, 0:6] - self.pose_target[None, :])

        pts = self._stage_points(stages)
        n = pts.shape[1]
        flat = pts.reshape(-1, 3)
        margin = self.cfg.obstacle_margin
        sps, cps = np.sin(stages[:, 3]), np.cos(stages[:, 3])
        for obs in self.penalty_obstacles:
            d = envmod.signed_distance_points(flat, obs).reshape(k_count, n)
            j_min = np.argmin(d, axis=1)
            d_min = d[np.arange(k_count), j_min]
            active = np.nonzero(margin - d_min > 0.0)[0]
            for k in active:
                gap = margin - d_min[k]
                p = pts[k, j_min[k]]
                n_hat = envmod.distance_gradient(p, obs)
                coeff = -2.0 * self.cfg.obstacle_penalty_weight * gap
                g[k, 0:3] += coeff * n_hat
                # Rotational part: d(Q r)/dangle columns are cross products
                # of the rotation axes (in parent frame) with a = Q r.
                a = p - stages[k, 0:3]
                g[k, 3] += coeff * (n_hat[0] * (-a[1]) + n_hat[1] * a[0])
                my, mx = cps[k], -sps[k]
                g[k, 4] += coeff * (
                    n_hat[0] * (my * a[2])
                    + n_hat[1] * (-mx * a[2])
                    + n_hat[2] * (mx * a[1] - my * a[0])
                )
                q0 = rotation_matrix(stages[k, 3:6])[:, 0]
                g[k, 5] += coeff * float(n_hat @ np.cross(q0, a))

        if self.vpoints is not None:
            diff = stages[:, None, 0:3] - self.vpoints[None, :, :]
            dist = np.linalg.norm(diff, axis=-1)
            mask = dist > DISTANCE_GUARD
            inv3 = np.where(mask, 1.0 / np.maximum(dist, DISTANCE_GUARD) ** 3, 0.0)
            g[:, 0:3] += self.cfg.inferred_penalty_weight * np.sum(
                -diff * inv3[:, :, None], axis=1)
        return g

    def input_gradient(self, u: np.ndarray) -> np.ndarray:
        return 2.0 * self.input_w * u

    def plan_feasible(self, states: np.ndarray) -> bool:
        """Hard check: no predicted footprint point inside a robot-known
        obstacle or outside the workspace."""
        flat = self._stage_points(states[1:]).reshape(-1, 3)
        for obs in self.penalty_obstacles:
            if envmod.signed_distance_points(flat, obs).min() < 0.0:
                return False
        return True


def build_cost(cfg: PlannerConfig, body: BodyParams, env: Environment,
               virtual_points: Optional[np.ndarray] = None) -> PlanCost:
    return PlanCost(cfg, body, env, virtual_points)


def warm_shift_inputs(inputs: np.ndarray) -> np.ndarray:
    """Receding-horizon warm start: drop the first input, repeat the last."""
    return np.vstack([inputs[1:], inputs[-1:]])


def warm_shift(prev: PlanResult) -> np.ndarray:
    return warm_shift_inputs(prev.inputs)


def _rollout(s0: np.ndarray, inputs: np.ndarray, body: BodyParams, ts: float) -> np.ndarray:
    states = np.empty((inputs.shape[0] + 1, 12))
    states[0] = s0
    for k in range(inputs.shape[0]):
        states[k + 1] = step_vector(states[k], inputs[k], body.mass, body.inertia_diag, ts)
    return states


def _gradient(states: np.ndarray, inputs: np.ndarray, cost: PlanCost,
              body: BodyParams, ts: float) -> np.ndarray:
    n = inputs.shape[0]
    a_mats, b_mats = step_jacobians_batch(states[:-1], inputs, body.mass,
                                          body.inertia_diag, ts)
    stage_grads = cost.state_gradients(states)  # gradients for stages 1..N
    grad = 2.0 * cost.input_w[None, :] * inputs
    lam = stage_grads[n - 1]
    for k in range(n - 1, -1, -1):
        grad[k] += b_mats[k].T @ lam
        lam = a_mats[k].T @ lam
        if k >= 1:
            lam = lam + stage_grads[k - 1]
    return grad


def _initial_feasible(s0_state: State, body: BodyParams, env: Environment) -> bool:
    pts = envmod.footprint(s0_state, body).positions
    if np.any(pts < env.workspace_min[None, :]) or np.any(pts > env.workspace_max[None, :]):
        return False
    for _, obs in env.robot_obstacles():
        if np.min(envmod.signed_distance_points(pts, obs)) < 0.0:
            return False
    return True


def solve(s0: State, cfg: PlannerConfig, body: BodyParams, env: Environment,
          virtual_points: Optional[np.ndarray] = None,
          warm_start=None) -> PlanResult:
    """Run projected gradient descent from the warm start (or zero inputs).

    The soft obstacle penalty makes the problem nonconvex; when the
    incumbent solution is a stalled pushing-at-the-wall minimum (almost no
    predicted motion despite a large pose error) and ``lateral_restarts``
    is enabled, extra descents from laterally biased seeds are tried and
    the lowest-cost result returned.
    """
    plan = _solve_single(s0, cfg, body, env, virtual_points, warm_start)
    if cfg.lateral_restarts <= 0 or plan.status is PlanStatus.INFEASIBLE:
        return plan
    if not _looks_stalled(s0, plan, cfg):
        return plan
    err = cfg.target.position - s0.position
    norm = float(np.linalg.norm(err[0:2]))
    if norm < 1e-9:
        return plan
    lateral = np.array([-err[1], err[0], 0.0]) / norm
    bias = 0.4 * float(np.min(cfg.input_set.upper[0:3]))
    best = plan
    for sign in (1.0, -1.0)[: cfg.lateral_restarts]:
        seed = np.zeros((cfg.horizon, 6))
        seed[:, 0:3] = sign * bias * lateral[None, :]
        cand = _solve_single(s0, cfg, body, env, virtual_points, seed)
        if cand.cost < best.cost:
            best = cand
    return best


def _looks_stalled(s0: State, plan: PlanResult, cfg: PlannerConfig) -> bool:
    displacement = float(np.linalg.norm(plan.predicted[-1][0:3] - plan.predicted[0][0:3]))
    pose_err = float(np.linalg.norm(cfg.target.position - s0.position))
    return displacement < 0.05 and pose_err > 0.5


def _solve_single(s0: State, cfg: PlannerConfig, body: BodyParams, env: Environment,
                  virtual_points: Optional[np.ndarray] = None,
                  warm_start=None) -> PlanResult:
    cost = build_cost(cfg, body, env, virtual_points)
    lower = cfg.input_set.lower
    upper = cfg.input_set.upper
    n = cfg.horizon
    ts = cfg.ts
    s0_vec = s0.as_vector()

    if warm_start is None:
        u = np.zeros((n, 6))
    else:
        u = np.asarray(warm_start.inputs if isinstance(warm_start, PlanResult) else warm_start,
                       dtype=float).reshape(n, 6)
        u = np.clip(u, lower[None, :], upper[None, :])

    if not _initial_feasible(s0, body, env):
        try:
            states = _rollout(s0_vec, u, body, ts)
            j = cost.total(states, u)
        except GimbalProximity:
            states = np.tile(s0_vec, (n + 1, 1))
            j = math.inf
        return PlanResult(u, states, j, PlanStatus.INFEASIBLE, (j,))

    try:
        states = _rollout(s0_vec, u, body, ts)
    except GimbalProximity:
        u = np.zeros((n, 6))
        states = _rollout(s0_vec, u, body, ts)
    j = cost.total(states, u)
    history = [j]

    best_feasible = None
    if cost.plan_feasible(states):
        best_feasible = (u, states, j)

    status = PlanStatus.ITER_LIMIT
    step_scale = None
    for _ in range(cfg.max_iterations):
        g = _gradient(states, u, cost, body, ts)
        g_inf = float(np.max(np.abs(g)))
        if g_inf < 1e-12:
            status = PlanStatus.CONVERGED
            break
        direction = g * cost.precond[None, :]
        # The preconditioned step is Newton-like, so t = 1 is the natural
        # first trial; within a solve, reuse twice the last accepted step.
        t = 1.0 if step_scale is None else min(step_scale * 2.0, 8.0)

        accepted = False
        for _ in range(MAX_BACKTRACKS):
            cand = np.clip(u - t * direction, lower[None, :], upper[None, :])
            decrease = float(np.sum(g * (u - cand)))
            if decrease <= 0.0:
                break
            try:
                cand_states = _rollout(s0_vec, cand, body, ts)
            except GimbalProximity:
                t *= ARMIJO_BETA
                continue
            j_cand = cost.total(cand_states, cand)
            if j_cand <= j - ARMIJO_SIGMA * decrease:
                accepted = True
                break
            t *= ARMIJO_BETA

        if not accepted:
            status = PlanStatus.CONVERGED
            break

        step_scale = t
        improvement = j - j_cand
        u, states, j = cand, cand_states, j_cand
        history.append(j)
        if best_feasible is None or j < best_feasible[2]:
            if cost.plan_feasible(states):
                best_feasible = (u, states, j)
        if improvement <= cfg.cost_tolerance * max(1.0, abs(history[-2])):
            status = PlanStatus.CONVERGED
            break

    if best_feasible is not None and not cost.plan_feasible(states):
        u, states, j = best_feasible
        history.append(j)

    return PlanResult(u, states, j, status, tuple(history))
