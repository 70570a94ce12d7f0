"""Randomized paired-trial study comparing the two controller variants.

Each sampled configuration (start, goal, obstacles, visibility split,
human behavior) is run under both the pure planner baseline and the full
trust-driven controller with identical seeds, and scored on three
metrics: collision-free success, peak human force magnitude, and the
time the human spent applying more than a threshold force (default 30 N).

Sampling is rejection-based: configurations whose start or goal footprint
is in collision or closer than a clearance margin to any obstacle are
redrawn.  Obstacles are placed near the start-goal corridor so most
trials actually exercise avoidance.  Trials are independent, seeded per
index from the master seed, so a worker pool produces bit-identical
results to a sequential run.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .engine import ControllerVariant, TrialOutcome, run
from .environment import AxisBox, Environment, Sphere, footprint, signed_distance_points
from .humans import HumanConfig, HumanMode
from .inference import InferenceConfig
from .planner import PlannerConfig
from .rigid_body import BodyParams, State, WrenchBox
from .scenario import Scenario
from .telemetry import write_jsonl

# Published hardware study results, printed in reports as a reference row
# only; a simulated scripted-human study is not expected to reproduce them.
HARDWARE_REFERENCE = {
    "mpc_only": {"success_pct": 51.0, "peak_force": 63.276, "intervening_s": 5.934},
    "trust_safe_stop": {"success_pct": 88.0, "peak_force": 53.835, "intervening_s": 2.265},
}


class SamplingExhausted(RuntimeError):
    """Raised when no valid configuration is found within the attempt budget."""


@dataclass(frozen=True)
class BatchConfig:
    trials: int = 50
    master_seed: int = 0
    # A 3 m square cannot host the rod, a blocking slab, and the detour
    # dynamics at the calibrated interaction scale, so the default arena
    # is larger than the published experiment space.
    workspace_min: tuple = (-2.2, -2.2, 0.0)
    workspace_max: tuple = (2.2, 2.2, 1.0)
    num_obstacles: tuple = (1, 2)
    sphere_radius: tuple = (0.12, 0.2)
    box_half_extent: tuple = (0.1, 0.18)
    visibility_probs: tuple = (1 / 3, 1 / 3, 1 / 3)  # human-only, robot-only, both

    min_separation: float = 2.2
    clearance: float = 0.42
    duration: float = 55.0
    intervening_force_threshold: float = 30.0
    max_sample_attempts: int = 1000

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if abs(sum(self.visibility_probs) - 1.0) > 1e-9:
            raise ValueError("visibility probabilities must sum to 1")


@dataclass(frozen=True)
class TrialMetrics:
    collision_free_success: bool
    peak_human_force: float
    intervening_duration: float
    status: str = ""

    def __post_init__(self):
        if self.peak_human_force < 0 or self.intervening_duration < 0:
            raise ValueError("metrics must be non-negative")


def metrics_from(outcome: TrialOutcome, threshold_n: float = 30.0,
                 ts: float = 0.05) -> TrialMetrics:
    """Score one trial: success flag, peak |human force|, time above threshold."""
    forces = np.array([np.linalg.norm(r.u_h_measured.force) for r in outcome.records])
    peak = float(forces.max()) if forces.size else 0.0
    duration = float(np.count_nonzero(forces > threshold_n)) * ts
    return TrialMetrics(outcome.success, peak, duration, outcome.status.value)


# ---------------------------------------------------------------------------
# Scenario sampling
# ---------------------------------------------------------------------------

# The batch reuses the calibrated study-fixture regime under an exact
# dynamic similarity scaling: forces, mass, gains, and noise scale by
# _KAPPA while geometry, speeds, and trajectories are unchanged (input
# weights scale by 1/kappa^2 to keep the planner's wrench scale matched).
# At this scale the compliant partner's transit share saturates just
# below the 30 N intervening-force threshold while two-axis fights
# during obstacle negotiations exceed it.
_KAPPA = 3.6
_BATCH_BODY = dict(mass=25.0 * _KAPPA, length=1.0)

_BATCH_PLANNER = dict(
    state_weights=(800.0, 800.0, 800.0, 40.0, 40.0, 40.0),
    input_weights=(2.0 / _KAPPA**2,) * 3 + (20.0 / _KAPPA**2,) * 3,
    obstacle_penalty_weight=4.0e4,
    obstacle_margin=0.12,
    inferred_penalty_weight=75.0,
    max_iterations=15,
    cost_tolerance=1e-3,
)


def _batch_trust():
    from .trust import TrustConfig
    return TrustConfig(delta_thr=24.0 * _KAPPA, k2=10.0 * _KAPPA, d_thr=0.35,
                       robot_input_set=WrenchBox.symmetric(12.0 * _KAPPA, 3.0 * _KAPPA))


def _batch_human() -> HumanConfig:
    return HumanConfig(
        schedule=((0.0, HumanMode.COMPLIANT),),
        repulsion_gain=1.4 * _KAPPA,
        repulsion_radius=0.8,
        evasion_fraction=0.4,
        repulsion_saturation=12.0 * _KAPPA,
        comfort_speed=0.3,
        over_speed_damping=30.0 * _KAPPA,
        wrench_slew_rate=35.0 * _KAPPA,
        input_set=WrenchBox.symmetric(9.0 * _KAPPA, 2.0 * _KAPPA),
        measurement_noise_std=0.05 * _KAPPA,
    )


def _pose_valid(position, body: BodyParams, env: Environment, clearance: float) -> bool:
    """Center clearance >= ``clearance``; footprint well clear of contact."""
    state = State.at_rest(position)
    pts = footprint(state, body).positions
    if np.any(pts < env.workspace_min + 0.02) or np.any(pts > env.workspace_max - 0.02):
        return False
    center = np.asarray(position, dtype=float).reshape(1, 3)
    for obs in env.obstacles:
        if signed_distance_points(center, obs)[0] < clearance:
            return False
        if np.min(signed_distance_points(pts, obs)) < 0.12:
            return False
    return True


def sample_scenario(cfg: BatchConfig, rng: np.random.Generator,
                    name: str = "batch") -> Scenario:
    """Rejection-sample one valid randomized transportation task."""
    body = BodyParams.rod(**_BATCH_BODY)
    ws_min = np.asarray(cfg.workspace_min, dtype=float)
    ws_max = np.asarray(cfg.workspace_max, dtype=float)
    z_mid = 0.5 * (ws_min[2] + ws_max[2])

    for _ in range(cfg.max_sample_attempts):
        margin = 0.78
        lo, hi = ws_min[:2] + margin, ws_max[:2] - margin
        # Axis-aligned corridor: the object is carried along one axis with
        # lateral jitter, which lets a slab obstacle genuinely block the
        # direct route (a small obstacle is just deflected around).
        axis = int(rng.integers(2))
        span = hi[axis] - lo[axis]
        start = np.array([0.0, 0.0, z_mid])
        goal = np.array([0.0, 0.0, z_mid])
        start[axis] = lo[axis]
        goal[axis] = hi[axis]
        if rng.random() < 0.5:
            start[axis], goal[axis] = goal[axis], start[axis]
        lat_axis = 1 - axis
        start[lat_axis] = rng.uniform(lo[lat_axis] + 0.3, hi[lat_axis] - 0.3)
        goal[lat_axis] = np.clip(start[lat_axis] + rng.uniform(-0.4, 0.4),
                                 lo[lat_axis] + 0.3, hi[lat_axis] - 0.3)
        if abs(goal[axis] - start[axis]) < cfg.min_separation:
            continue

        n_obs = int(rng.integers(cfg.num_obstacles[0], cfg.num_obstacles[1] + 1))
        obstacles = []
        for k_obs in range(n_obs):
            along = rng.uniform(0.42, 0.58)
            side = float(rng.choice([-1.0, 1.0]))
            center = start + along * (goal - start)
            if k_obs == 0:
                # Blocking slab across the corridor, centroid offset to one
                # side (but still covering the path) so the human's evasion
                # has a defined detour side.
                half = np.zeros(3)
                half[axis] = rng.uniform(0.2, 0.3)
                # Narrow slabs can be fought around by the partner alone
                # (long interventions); wide ones genuinely require the
                # planner to reroute.
                half[lat_axis] = rng.uniform(0.25, 0.5)
                center[lat_axis] += side * rng.uniform(0.05, 0.2)
                obstacles.append(AxisBox(
                    (center[0] - half[0], center[1] - half[1], ws_min[2]),
                    (center[0] + half[0], center[1] + half[1], ws_max[2])))
            else:
                center[lat_axis] += side * rng.uniform(0.45, 0.7)
                radius = rng.uniform(*cfg.sphere_radius)
                obstacles.append(Sphere((center[0], center[1], z_mid), radius))

        visible_h, visible_r = set(), set()
        probs = np.asarray(cfg.visibility_probs)
        for i in range(n_obs):
            draw = rng.random()
            if draw < probs[0]:
                visible_h.add(i)
            elif draw < probs[0] + probs[1]:
                visible_r.add(i)
            else:
                visible_h.add(i)
                visible_r.add(i)

        env = Environment(ws_min, ws_max, tuple(obstacles),
                          frozenset(visible_h), frozenset(visible_r))
        if not _pose_valid(start, body, env, cfg.clearance):
            continue
        if not _pose_valid(goal, body, env, cfg.clearance):
            continue

        yaw = math.atan2(goal[1] - start[1], goal[0] - start[0])
        seed = int(rng.integers(0, 2**31 - 1))
        return Scenario(
            name=name,
            environment=env,
            body=body,
            initial=State.at_rest(start, yaw=yaw),
            target=State.at_rest(goal, yaw=yaw),
            planner=PlannerConfig(**_BATCH_PLANNER),
            trust=_batch_trust(),
            inference=InferenceConfig(k3=0.04 / _KAPPA, noise_scale=0.08),
            human=_batch_human(),
            duration=cfg.duration,
            # At this force scale the partner's sensor-noise floor parks
            # the endgame a few centimetres out, so the arrival gate is
            # wider than the study-fixture default.
            success_tolerance=0.08,
            success_speed=0.06,
            seed=seed,
        )
    raise SamplingExhausted(f"no valid scenario in {cfg.max_sample_attempts} attempts")


# ---------------------------------------------------------------------------
# Batch execution and reporting
# ---------------------------------------------------------------------------

VARIANTS = (ControllerVariant.PURE_MPC, ControllerVariant.TRUST_SAFE_STOP)


@dataclass
class BatchReport:
    config: BatchConfig
    per_trial: dict = field(default_factory=dict)  # variant -> list[TrialMetrics]

    def aggregate(self, variant: str) -> dict:
        rows = self.per_trial[variant]
        n = len(rows)
        return {
            "trials": n,
            "success_pct": 100.0 * sum(m.collision_free_success for m in rows) / n,
            "peak_force": sum(m.peak_human_force for m in rows) / n,
            "intervening_s": sum(m.intervening_duration for m in rows) / n,
        }

    def table_text(self) -> str:
        lines = [
            f"{'Feature':<42}{'MPC Only':>14}{'Trust+SafeStop':>16}",
            "-" * 72,
        ]
        agg = {v.value: self.aggregate(v.value) for v in VARIANTS}
        lines.append(f"{'Collision-Free Successes (%)':<42}"
                     f"{agg['pure_mpc']['success_pct']:>14.1f}"
                     f"{agg['trust_safe_stop']['success_pct']:>16.1f}")
        lines.append(f"{'Avg. Peak Human Force (N)':<42}"
                     f"{agg['pure_mpc']['peak_force']:>14.3f}"
                     f"{agg['trust_safe_stop']['peak_force']:>16.3f}")
        lines.append(f"{'Avg. Duration of Intervening Forces (s)':<42}"
                     f"{agg['pure_mpc']['intervening_s']:>14.3f}"
                     f"{agg['trust_safe_stop']['intervening_s']:>16.3f}")
        lines.append("")
        ref = HARDWARE_REFERENCE
        lines.append("Hardware study reference (not a simulation target):")
        lines.append(f"{'  Collision-Free Successes (%)':<42}"
                     f"{ref['mpc_only']['success_pct']:>14.1f}"
                     f"{ref['trust_safe_stop']['success_pct']:>16.1f}")
        lines.append(f"{'  Avg. Peak Human Force (N)':<42}"
                     f"{ref['mpc_only']['peak_force']:>14.3f}"
                     f"{ref['trust_safe_stop']['peak_force']:>16.3f}")
        lines.append(f"{'  Avg. Duration of Intervening Forces (s)':<42}"
                     f"{ref['mpc_only']['intervening_s']:>14.3f}"
                     f"{ref['trust_safe_stop']['intervening_s']:>16.3f}")
        return "\n".join(lines)

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["variant", "trial", "status", "success",
                             "peak_human_force_n", "intervening_duration_s"])
            for variant, rows in self.per_trial.items():
                for i, m in enumerate(rows):
                    writer.writerow([variant, i, m.status,
                                     int(m.collision_free_success),
                                     f"{m.peak_human_force:.6f}",
                                     f"{m.intervening_duration:.6f}"])
            writer.writerow([])
            for variant in self.per_trial:
                agg = self.aggregate(variant)
                writer.writerow([variant, "aggregate", "",
                                 f"{agg['success_pct']:.3f}",
                                 f"{agg['peak_force']:.6f}",
                                 f"{agg['intervening_s']:.6f}"])


def _trial_seed(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((master_seed, index)))


def run_trial_pair(cfg: BatchConfig, index: int,
                   out_dir: Optional[str] = None) -> dict:
    """Sample scenario #index and run both variants on identical seeds."""
    rng = _trial_seed(cfg.master_seed, index)
    scenario = sample_scenario(cfg, rng, name=f"batch-{index:03d}")
    results = {}
    for variant in VARIANTS:
        outcome = run(scenario, variant)
        results[variant.value] = metrics_from(
            outcome, cfg.intervening_force_threshold, scenario.planner.ts)
        if out_dir is not None:
            write_jsonl(outcome, Path(out_dir) / "trials"
                        / f"trial_{index:03d}_{variant.value}.jsonl")
    return results


def run_batch(cfg: BatchConfig, out_dir=None, workers: Optional[int] = None) -> BatchReport:
    """Run the paired study; optionally in a worker pool (bit-identical)."""
    out = str(out_dir) if out_dir is not None else None
    indices = list(range(cfg.trials))
    if workers is not None and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_pair_worker, [(cfg, i, out) for i in indices]))
    else:
        rows = [run_trial_pair(cfg, i, out) for i in indices]

    report = BatchReport(cfg, {v.value: [r[v.value] for r in rows] for v in VARIANTS})
    if out_dir is not None:
        out_path = Path(out_dir)
        out_path.mkdir(parents=True, exist_ok=True)
        (out_path / "report.txt").write_text(report.table_text() + "\n")
        report.write_csv(out_path / "report.csv")
    return report


def _pair_worker(args) -> dict:
    cfg, index, out_dir = args
    return run_trial_pair(cfg, index, out_dir)
