"""Acceptance suite: one test per top-level criterion, printed pass/fail.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and timings.
"""

import itertools
import math
import time

import numpy as np
import pytest

import cotransport.rigid_body as rb
from cotransport.engine import ControllerVariant, TrialStatus, World, run
from cotransport.environment import ClosestPoint, Environment, Sphere
from cotransport.harness import BatchConfig, run_batch
from cotransport.inference import VirtualObstacleSet, penalty
from cotransport.planner import PlannerConfig, build_cost, solve
from cotransport.rigid_body import BodyParams, State, Wrench, WrenchBox
from cotransport.scenario import fixture_a, fixture_b
from cotransport.telemetry import outcome_summary, record_to_dict
from cotransport.trust import (
    TrustConfig,
    estimate_human,
    robot_policy,
    robot_share,
    safe_stop_triggered,
    trust_value,
)


def _report(name: str, ok: bool, detail: str = "") -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" - {detail}" if detail else ""))
    assert ok, f"{name}: {detail}"


class TestTrustLawAlgebra:
    def test_trust_law_exact(self):
        t0 = time.perf_counter()
        delta = 20.0
        zero = Wrench.zero()
        ok = (trust_value(zero, zero, delta) == 1.0
              and trust_value(Wrench(np.array([delta, 0, 0]), np.zeros(3)), zero, delta) == 0.0
              and trust_value(Wrench(np.array([delta / 2, 0, 0]), np.zeros(3)), zero, delta) == 0.5
              and trust_value(Wrench(np.array([3 * delta, 0, 0]), np.zeros(3)), zero, delta) == 0.0)
        rng = np.random.default_rng(0)
        for _ in range(500):
            a = Wrench.from_vector(rng.normal(size=6) * 30)
            b = Wrench.from_vector(rng.normal(size=6) * 30)
            v = trust_value(a, b, delta)
            ok = ok and 0.0 <= v <= 1.0
        runtime = time.perf_counter() - t0
        _report("trust-law algebra (exact endpoints, clamped, < 1 s)",
                ok and runtime < 1.0, f"runtime {runtime:.3f} s")


class TestDynamicsConservation:
    def test_energy_momentum_orthonormality(self):
        body = BodyParams(2.0, np.array([0.1, 0.5, 0.9]), np.zeros((1, 3)))
        j = body.inertia_diag
        vec = State(np.zeros(3), np.zeros(3), np.zeros(3),
                    np.array([0.3, 0.2, 0.1])).as_vector()
        e0 = 0.5 * float(vec[9:12] @ (j * vec[9:12]))
        u = np.zeros(6)
        for _ in range(1000):
            vec = rb.step_vector(vec, u, body.mass, j, 0.05)
        e1 = 0.5 * float(vec[9:12] @ (j * vec[9:12]))
        energy_ok = abs(e1 - e0) / e0 < 1e-6

        vec = State(np.zeros(3), np.array([0.2, 0.1, -0.3]),
                    np.array([0.4, -0.1, 0.05]), np.array([0.05, 0.02, 0.3])).as_vector()
        p0 = body.mass * rb.rotation_matrix(vec[3:6]) @ vec[6:9]
        for _ in range(2000):  # 100 s at Ts = 0.05
            vec = rb.step_vector(vec, u, body.mass, j, 0.05)
        p1 = body.mass * rb.rotation_matrix(vec[3:6]) @ vec[6:9]
        momentum_ok = np.linalg.norm(p1 - p0) / np.linalg.norm(p0) < 1e-6

        rng = np.random.default_rng(1)
        ortho_ok = True
        limit = math.pi / 2 - rb.GIMBAL_MARGIN
        for _ in range(1000):
            e = np.array([rng.uniform(-math.pi, math.pi),
                          rng.uniform(-limit, limit),
                          rng.uniform(-math.pi, math.pi)])
            q = rb.rotation_matrix(e)
            ortho_ok = ortho_ok and np.max(np.abs(q.T @ q - np.eye(3))) <= 1e-12
            ortho_ok = ortho_ok and abs(np.linalg.det(q) - 1.0) <= 1e-12
        _report("dynamics conservation (energy 1e-6, momentum 1e-6, "
                "orthonormality 1e-12 x1000)", energy_ok and momentum_ok and ortho_ok,
                f"dE={abs(e1 - e0) / e0:.2e}")


class TestSolverProperties:
    def test_monotone_descent_feasibility_grid_oracle(self):
        rng = np.random.default_rng(5)
        body = BodyParams.rod(mass=2.0, length=1.0)
        box = WrenchBox.symmetric(50.0, 20.0)
        monotone = True
        feasible = True
        for trial in range(100):
            target = State.at_rest(rng.uniform(-1.5, 1.5, 3))
            s0 = State(rng.uniform(-1.5, 1.5, 3), np.array([rng.uniform(-1, 1), 0, 0]),
                       rng.uniform(-0.3, 0.3, 3), rng.uniform(-0.2, 0.2, 3))
            if trial % 4 == 0:
                env = Environment((-6, -6, -6), (6, 6, 6),
                                  (Sphere(rng.uniform(-2, 2, 3), 0.25),),
                                  frozenset({0}), frozenset({0}))
            else:
                env = Environment((-6, -6, -6), (6, 6, 6))
            cfg = PlannerConfig(target=target, input_set=box, horizon=8,
                                max_iterations=30)
            plan = solve(s0, cfg, body, env)
            hist = np.array(plan.cost_history)
            monotone = monotone and bool(np.all(np.diff(hist) <= 1e-9))
            feasible = feasible and bool(
                np.all(plan.inputs >= box.lower[None, :])
                and np.all(plan.inputs <= box.upper[None, :]))

        # Grid oracle on the tiny obstacle-free instance.
        cfg = PlannerConfig(target=State.at_rest((1.0, 0, 0)), input_set=box, horizon=2)
        env = Environment((-6, -6, -6), (6, 6, 6))
        cost = build_cost(cfg, body, env)
        best = np.inf
        grid = np.linspace(-50, 50, 11)
        for fx, fy, fz in itertools.product(grid, grid, grid):
            u = np.array([fx, fy, fz, 0.0, 0.0, 0.0])
            st = State.zero()
            states = [st.as_vector()]
            for _ in range(2):
                st = rb.step(st, Wrench.from_vector(u), body, cfg.ts)
                states.append(st.as_vector())
            best = min(best, cost.total(np.array(states), np.stack([u, u])))
        plan = solve(State.zero(), cfg, body, env)
        oracle_ok = plan.cost <= best
        _report("solver properties (monotone descent x100, exact feasibility, "
                "beats 11^3 grid oracle)",
                monotone and feasible and oracle_ok,
                f"solver {plan.cost:.2f} <= grid {best:.2f}")


class TestFixtureA:
    def test_box_known_only_to_human(self):
        t0 = time.perf_counter()
        mpc_collisions = 0
        trust_successes = 0
        alpha_ok = 0
        for seed in range(10):
            sc = fixture_a(seed)
            mpc = run(sc, ControllerVariant.PURE_MPC)
            trust = run(sc, ControllerVariant.TRUST_SAFE_STOP)
            mpc_collisions += mpc.status is TrialStatus.COLLISION
            if trust.status is TrialStatus.SUCCESS:
                trust_successes += 1
                if min(r.alpha for r in trust.records) < 0.5:
                    alpha_ok += 1
        runtime = time.perf_counter() - t0
        ok = (mpc_collisions >= 8 and trust_successes >= 8
              and alpha_ok == trust_successes and runtime <= 120.0)
        _report("fixture A (pure planner collides >= 8/10, trust succeeds >= 8/10, "
                "min trust < 0.5, <= 2 min)", ok,
                f"collisions {mpc_collisions}/10, successes {trust_successes}/10, "
                f"alpha ok {alpha_ok}, {runtime:.0f} s")


class TestFixtureB:
    def test_leader_into_robot_only_wall(self):
        no_ss_collisions = 0
        ss_safe = 0
        closure_ok = 0
        for seed in range(10):
            sc = fixture_b(seed)
            no_ss = run(sc, ControllerVariant.TRUST_NO_SAFE_STOP)
            ss = run(sc, ControllerVariant.TRUST_SAFE_STOP)
            no_ss_collisions += no_ss.status is TrialStatus.COLLISION
            ss_safe += ss.status is not TrialStatus.COLLISION
            trigger = next((r for r in ss.records if r.mode == "safe_stop"), None)
            if trigger is not None:
                window = [r for r in ss.records
                          if trigger.time <= r.time <= trigger.time + 5.0]
                closure_ok += any(r.closure_speed < sc.trust.v_thr for r in window)
        ok = no_ss_collisions == 10 and ss_safe == 10 and closure_ok == 10
        _report("fixture B (no-safe-stop collides 10/10, safe stop collision-free "
                "with closure < v_thr within 5 s, 10/10)", ok,
                f"collide {no_ss_collisions}, safe {ss_safe}, closure {closure_ok}")


class TestRandomizedStudy:
    def test_paired_batch_direction(self):
        t0 = time.perf_counter()
        cfg = BatchConfig(trials=50, master_seed=1)
        report = run_batch(cfg)
        mpc = report.aggregate("pure_mpc")
        trust = report.aggregate("trust_safe_stop")
        runtime = time.perf_counter() - t0
        print("\n" + report.table_text())
        gap = trust["success_pct"] - mpc["success_pct"]
        ok = (gap >= 20.0
              and trust["peak_force"] < mpc["peak_force"]
              and trust["intervening_s"] < mpc["intervening_s"]
              and runtime <= 600.0)
        _report("randomized study (success gap >= 20 pts, lower peak force, "
                "lower intervening duration, <= 10 min)", ok,
                f"gap {gap:.1f} pts, peak {mpc['peak_force']:.2f}->"
                f"{trust['peak_force']:.2f} N, duration {mpc['intervening_s']:.2f}->"
                f"{trust['intervening_s']:.2f} s, {runtime:.0f} s")


class TestDeterminism:
    def test_bit_identical_and_parallel(self):
        sc = fixture_a(5)
        a = run(sc, ControllerVariant.TRUST_SAFE_STOP, max_steps=150)
        b = run(sc, ControllerVariant.TRUST_SAFE_STOP, max_steps=150)
        sig_a = ([record_to_dict(r) for r in a.records], outcome_summary(a))
        sig_b = ([record_to_dict(r) for r in b.records], outcome_summary(b))
        rerun_ok = sig_a == sig_b

        cfg = BatchConfig(trials=3, master_seed=6, duration=12.0)
        seq = run_batch(cfg, workers=None)
        par = run_batch(cfg, workers=2)
        parallel_ok = seq.per_trial == par.per_trial
        _report("determinism (same-seed bit-identical, parallel == sequential)",
                rerun_ok and parallel_ok)


class TestExactPropertySuites:
    def test_identity_projection_trigger_penalty(self):
        rng = np.random.default_rng(17)
        cfg = TrustConfig(robot_input_set=WrenchBox.symmetric(50.0, 20.0))

        identity_ok = True
        for _ in range(1000):
            u = Wrench.from_vector(rng.uniform(-80, 80, 6))
            est = estimate_human(u, cfg.p)
            identity_ok = identity_ok and np.array_equal(
                (est + robot_share(u, est)).as_vector(), u.as_vector())

        projection_ok = True
        for _ in range(10_000):
            u_star = Wrench.from_vector(rng.uniform(-150, 150, 6))
            last = Wrench.from_vector(rng.uniform(-150, 150, 6))
            pos = rng.normal(size=3)
            c = ClosestPoint(pos, rng.normal(size=3) * 0.3,
                             float(rng.uniform(0, 0.4)),
                             pos + rng.normal(size=3) * 0.1, 0)
            u_r, _ = robot_policy(u_star, last, c, cfg, 0.05)
            projection_ok = projection_ok and cfg.robot_input_set.contains(u_r)

        trigger_ok = True
        for _ in range(3000):
            alpha = float(rng.uniform(0, 1))
            pos = rng.normal(size=3)
            c = ClosestPoint(pos, rng.normal(size=3) * 0.3,
                             float(rng.uniform(0, 0.3)),
                             pos + rng.normal(size=3) * 0.1, 0)
            got = safe_stop_triggered(alpha, c, cfg)
            direction = c.obstacle_point - c.position
            speed = float(c.velocity @ direction) / max(np.linalg.norm(direction), 1e-12)
            expect = (alpha < 0.5 and c.distance <= cfg.d_thr and speed > cfg.v_thr)
            trigger_ok = trigger_ok and (got == expect)

        pts = rng.normal(size=(5, 3))
        vset = VirtualObstacleSet(pts, 0)
        penalty_ok = True
        p0 = rng.normal(size=3)
        whole = penalty(p0, vset)
        parts = sum(penalty(p0, VirtualObstacleSet(pts[i:i + 1], 0)) for i in range(5))
        penalty_ok = abs(whole - parts) < 1e-12
        single = VirtualObstacleSet(np.zeros((1, 3)), 0)
        vals = [penalty((d, 0, 0), single) for d in np.linspace(0.02, 4.0, 60)]
        penalty_ok = penalty_ok and all(b < a for a, b in zip(vals, vals[1:]))
        penalty_ok = penalty_ok and all(v > 0 for v in vals)

        _report("exact property suites (share identity, projection x1e4, "
                "trigger equivalence, penalty monotone+additive)",
                identity_ok and projection_ok and trigger_ok and penalty_ok)


class TestStepBudget:
    def test_default_configuration_step_time(self):
        sc = fixture_a(0)
        world = World(sc, ControllerVariant.TRUST_SAFE_STOP)
        world.step()  # warm-up (cold solve)
        times = []
        for _ in range(60):
            if world.done:
                break
            t0 = time.perf_counter()
            world.step()
            times.append(time.perf_counter() - t0)
        worst = max(times)
        ok = worst <= 0.2
        _report("step budget (<= 0.2 s per control period)", ok,
                f"worst {1e3 * worst:.1f} ms, mean {1e3 * np.mean(times):.1f} ms")
