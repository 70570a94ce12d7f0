"""Step-record serialization: JSON-lines logs for trials and reports.

One JSON object per simulation step, with a trailing summary line holding
the trial status.  Non-finite floats (the no-obstacle distance sentinel)
are stored as null so the logs stay standard JSON.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Optional

import numpy as np

from .engine import StepRecord, TrialOutcome


def _num(x: float) -> Optional[float]:
    x = float(x)
    return x if math.isfinite(x) else None


def record_to_dict(rec: StepRecord) -> dict:
    return {
        "step": rec.step,
        "time": rec.time,
        "position": rec.state.position.tolist(),
        "euler": rec.state.euler.tolist(),
        "lin_vel_body": rec.state.lin_vel_body.tolist(),
        "ang_vel_body": rec.state.ang_vel_body.tolist(),
        "u_star": rec.u_star.as_vector().tolist(),
        "u_hat_h": rec.u_hat_h.as_vector().tolist(),
        "u_h_measured": rec.u_h_measured.as_vector().tolist(),
        "u_r": rec.u_r.as_vector().tolist(),
        "alpha": rec.alpha,
        "mode": rec.mode,
        "solver_status": rec.solver_status,
        "min_obstacle_distance": _num(rec.min_obstacle_distance),
        "robot_obstacle_distance": _num(rec.robot_obstacle_distance),
        "closure_speed": rec.closure_speed,
        "virtual_points": None if rec.virtual_points is None else rec.virtual_points.tolist(),
    }


def outcome_summary(outcome: TrialOutcome) -> dict:
    return {
        "summary": True,
        "status": outcome.status.value,
        "scenario": outcome.scenario_name,
        "variant": outcome.variant,
        "steps": len(outcome.records),
        "final_position": outcome.final_state.position.tolist(),
    }


def write_jsonl(outcome: TrialOutcome, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for rec in outcome.records:
            fh.write(json.dumps(record_to_dict(rec)) + "\n")
        fh.write(json.dumps(outcome_summary(outcome)) + "\n")


def read_jsonl(path) -> tuple[list[dict], Optional[dict]]:
    """Load a telemetry log; returns (step dicts, summary dict or None)."""
    records: list[dict] = []
    summary = None
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if obj.get("summary"):
                summary = obj
            else:
                records.append(obj)
    return records, summary


def human_force_magnitudes(records: list[dict]) -> np.ndarray:
    forces = np.array([r["u_h_measured"][0:3] for r in records], dtype=float)
    if forces.size == 0:
        return np.zeros(0)
    return np.linalg.norm(forces, axis=1)
