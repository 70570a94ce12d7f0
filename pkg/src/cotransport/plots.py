"""Figure rendering for trial telemetry and batch reports.

Renders trust traces, force traces, and XY trajectories from JSON-lines
telemetry to SVG files, plus a bar summary for batch comparisons.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .environment import AxisBox, Sphere, Wall


def _obstacle_patch(ax, obs, visible_h, visible_r, index, workspace):
    color = {(True, True): "#7a5195", (True, False): "#ef5675",
             (False, True): "#003f5c"}[(index in visible_h, index in visible_r)]
    if isinstance(obs, Sphere):
        ax.add_patch(plt.Circle(obs.center[:2], obs.radius, alpha=0.45, color=color))
    elif isinstance(obs, AxisBox):
        lo, hi = obs.min_corner, obs.max_corner
        ax.add_patch(plt.Rectangle(lo[:2], hi[0] - lo[0], hi[1] - lo[1],
                                   alpha=0.45, color=color))
    elif isinstance(obs, Wall) and obs.axis in (0, 1):
        lo = np.array(workspace[0][:2], dtype=float)
        hi = np.array(workspace[1][:2], dtype=float)
        if obs.side == "le":
            hi = hi.copy()
            hi[obs.axis] = obs.offset
        else:
            lo = lo.copy()
            lo[obs.axis] = obs.offset
        ax.add_patch(plt.Rectangle(lo, hi[0] - lo[0], hi[1] - lo[1],
                                   alpha=0.35, color=color, hatch="//"))


def plot_trust_trace(records: list[dict], path) -> None:
    """Trust value over time with the 1/2 threshold and mode shading."""
    t = [r["time"] for r in records]
    alpha = [r["alpha"] for r in records]
    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(t, alpha, lw=1.5, color="#003f5c")
    ax.axhline(0.5, color="#ef5675", ls="--", lw=1, label="safe-stop gate")
    stops = [r["time"] for r in records if r["mode"] == "safe_stop"]
    if stops:
        ax.scatter(stops, [0.02] * len(stops), marker="|", color="#ef5675",
                   label="safe stop active")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("trust")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_force_traces(records: list[dict], path) -> None:
    """Measured human force and applied robot force magnitudes over time."""
    t = [r["time"] for r in records]
    fh = [float(np.linalg.norm(r["u_h_measured"][0:3])) for r in records]
    fr = [float(np.linalg.norm(r["u_r"][0:3])) for r in records]
    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(t, fh, lw=1.2, label="|human force|", color="#ef5675")
    ax.plot(t, fr, lw=1.2, label="|robot force|", color="#003f5c")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("force [N]")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_trajectory(records: list[dict], path, scenario=None) -> None:
    """Top-down XY path, with the environment when a scenario is given."""
    xs = [r["position"][0] for r in records]
    ys = [r["position"][1] for r in records]
    fig, ax = plt.subplots(figsize=(6, 6))
    if scenario is not None:
        env = scenario.environment
        ws = (env.workspace_min, env.workspace_max)
        ax.add_patch(plt.Rectangle(env.workspace_min[:2],
                                   env.workspace_max[0] - env.workspace_min[0],
                                   env.workspace_max[1] - env.workspace_min[1],
                                   fill=False, color="black", lw=1))
        for i, obs in enumerate(env.obstacles):
            _obstacle_patch(ax, obs, env.visible_to_human, env.visible_to_robot, i, ws)
        ax.plot(*scenario.target.position[:2], marker="*", ms=14, color="#ffa600")
    vpts = [np.asarray(r["virtual_points"]) for r in records if r.get("virtual_points")]
    if vpts:
        all_pts = np.vstack(vpts)
        ax.scatter(all_pts[:, 0], all_pts[:, 1], s=4, color="#bc5090", alpha=0.4,
                   label="inferred points")
    ax.plot(xs, ys, lw=1.5, color="#003f5c")
    ax.plot(xs[0], ys[0], marker="o", color="#003f5c")
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_batch_summary(report, path) -> None:
    """Bar comparison of the three study metrics for both variants."""
    variants = list(report.per_trial.keys())
    labels = ["success %", "peak force [N]", "intervening [s]"]
    keys = ["success_pct", "peak_force", "intervening_s"]
    fig, axes = plt.subplots(1, 3, figsize=(9, 3))
    colors = {"pure_mpc": "#955196", "trust_safe_stop": "#003f5c"}
    for ax, key, label in zip(axes, keys, labels):
        vals = [report.aggregate(v)[key] for v in variants]
        ax.bar(range(len(variants)), vals,
               color=[colors.get(v, "gray") for v in variants])
        ax.set_xticks(range(len(variants)))
        ax.set_xticklabels([v.replace("_", "\n") for v in variants], fontsize=7)
        ax.set_title(label, fontsize=9)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_log(log_path, out_dir, scenario=None) -> list[Path]:
    """Render the standard figure set for one telemetry log."""
    from .telemetry import read_jsonl

    records, _ = read_jsonl(log_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(log_path).stem
    paths = []
    for name, fn in (("trust", plot_trust_trace), ("forces", plot_force_traces)):
        p = out_dir / f"{stem}_{name}.svg"
        fn(records, p)
        paths.append(p)
    p = out_dir / f"{stem}_trajectory.svg"
    plot_trajectory(records, p, scenario)
    paths.append(p)
    return paths
