"""Command-line interface: run trials, render figures, batch studies, serve.

Subcommands:
  run        one trial of a fixture or scenario file, telemetry to JSONL
  plot       render trust/force/trajectory figures from a telemetry log
  batch      paired randomized study with text/CSV report and summary figure
  serve      live WebSocket session for an operator client
  calibrate  report the trust-calibration quantities of the study fixtures
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from .engine import ControllerVariant, run
from .scenario import FIXTURES, resolve_scenario, save_scenario
from .telemetry import write_jsonl


def _add_run(sub):
    p = sub.add_parser("run", help="run one trial and write telemetry")
    p.add_argument("--scenario", required=True,
                   help=f"fixture name ({', '.join(FIXTURES)}) or scenario JSON path")
    p.add_argument("--variant", default="trust_safe_stop",
                   choices=[v.value for v in ControllerVariant])
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--plots", action="store_true", help="also render figures")


def _add_plot(sub):
    p = sub.add_parser("plot", help="render figures from a telemetry log")
    p.add_argument("--log", required=True)
    p.add_argument("--out", default=None, help="output directory (default: log's)")
    p.add_argument("--scenario", default=None,
                   help="optional fixture name or file for environment overlay")
    p.add_argument("--seed", type=int, default=None)


def _add_batch(sub):
    p = sub.add_parser("batch", help="run the paired comparison study")
    p.add_argument("--config", default=None, help="batch config JSON file")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=None)


def _add_serve(sub):
    p = sub.add_parser("serve", help="serve a live session over WebSocket")
    p.add_argument("--scenario", required=True)
    p.add_argument("--variant", default="trust_safe_stop",
                   choices=[v.value for v in ControllerVariant])
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int,
                   default=int(os.environ.get("COTRANSPORT_PORT", "8765")))
    p.add_argument("--rtf", type=float, default=1.0,
                   help="real-time factor (0 disables pacing)")


def _add_calibrate(sub):
    p = sub.add_parser("calibrate", help="report fixture trust calibration")
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--out", default=None, help="optional JSON output path")


def _add_export(sub):
    p = sub.add_parser("export-scenario", help="write a fixture to a JSON file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)


def cmd_run(args) -> int:
    scenario = resolve_scenario(args.scenario, args.seed)
    t0 = time.perf_counter()
    outcome = run(scenario, ControllerVariant(args.variant))
    wall = time.perf_counter() - t0
    steps = len(outcome.records)
    print(f"{scenario.name} [{args.variant}] -> {outcome.status.value} "
          f"({steps} steps, {wall:.1f} s wall, {1e3 * wall / max(1, steps):.1f} ms/step)")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        log = out / f"{scenario.name}_{args.variant}.jsonl"
        write_jsonl(outcome, log)
        print(f"telemetry: {log}")
        if args.plots:
            from .plots import render_log
            for p in render_log(log, out, scenario):
                print(f"figure: {p}")
    return 0


def cmd_plot(args) -> int:
    from .plots import render_log
    scenario = resolve_scenario(args.scenario, args.seed) if args.scenario else None
    out = args.out if args.out else Path(args.log).parent
    for p in render_log(args.log, out, scenario):
        print(f"figure: {p}")
    return 0


def cmd_batch(args) -> int:
    from .harness import BatchConfig, run_batch
    from .plots import plot_batch_summary

    kwargs = {}
    if args.config:
        kwargs.update(json.loads(Path(args.config).read_text()))
    if args.trials is not None:
        kwargs["trials"] = args.trials
    if args.seed is not None:
        kwargs["master_seed"] = args.seed
    cfg = BatchConfig(**kwargs)
    t0 = time.perf_counter()
    report = run_batch(cfg, out_dir=args.out, workers=args.workers)
    wall = time.perf_counter() - t0
    print(report.table_text())
    plot_batch_summary(report, Path(args.out) / "summary.svg")
    print(f"\n{cfg.trials} paired trials in {wall:.0f} s -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    from .bridge import run_session
    scenario = resolve_scenario(args.scenario, args.seed)
    print(f"serving {scenario.name} on ws://{args.host}:{args.port} (rtf={args.rtf})")
    outcome = run_session(scenario, ControllerVariant(args.variant),
                          host=args.host, port=args.port, rtf=args.rtf)
    print(f"session ended: {outcome.status.value}")
    return 0


def cmd_calibrate(args) -> int:
    """Check the trust-threshold calibration targets on the fixtures.

    The compliant partner should keep trust high away from hidden
    obstacles and collapse it during the disagreement; the leading
    partner should show low trust near the robot-known wall.
    """
    import numpy as np
    from .scenario import fixture_a, fixture_b

    report = {}
    for seed in range(args.seeds):
        sc = fixture_a(seed)
        out = run(sc, ControllerVariant.TRUST_SAFE_STOP)
        alphas = np.array([r.alpha for r in out.records])
        dists = np.array([r.min_obstacle_distance for r in out.records])
        free = alphas[(dists > 0.6)][5:]
        row = {
            "status": out.status.value,
            "alpha_free_median": float(np.median(free)) if free.size else None,
            "alpha_min": float(alphas.min()),
        }
        report[f"fixture-a-seed{seed}"] = row
        print(f"fixture-a seed {seed}: {row}")

        sc = fixture_b(seed)
        out = run(sc, ControllerVariant.TRUST_SAFE_STOP)
        near = [r.alpha for r in out.records if r.robot_obstacle_distance < sc.trust.d_thr]
        row = {
            "status": out.status.value,
            "alpha_min_near_wall": float(min(near)) if near else None,
        }
        report[f"fixture-b-seed{seed}"] = row
        print(f"fixture-b seed {seed}: {row}")
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2))
    return 0


def cmd_export(args) -> int:
    scenario = resolve_scenario(args.scenario, args.seed)
    save_scenario(scenario, args.out)
    print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cotransport",
        description="Trust-driven human-robot collaborative transportation simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run(sub)
    _add_plot(sub)
    _add_batch(sub)
    _add_serve(sub)
    _add_calibrate(sub)
    _add_export(sub)
    args = parser.parse_args(argv)
    handler = {
        "run": cmd_run,
        "plot": cmd_plot,
        "batch": cmd_batch,
        "serve": cmd_serve,
        "calibrate": cmd_calibrate,
        "export-scenario": cmd_export,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
