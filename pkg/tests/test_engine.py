"""Closed-loop engine tests: ordering, causality, termination, determinism."""

import numpy as np
import pytest

from cotransport.engine import ControllerVariant, TrialStatus, World, run
from cotransport.environment import Environment, Sphere
from cotransport.rigid_body import BodyParams, State, Wrench, WrenchBox
from cotransport.scenario import Scenario, fixture_a, free_space
from cotransport.humans import HumanConfig, HumanMode
from cotransport.planner import PlannerConfig
from cotransport.trust import TrustConfig, estimate_human, trust_value
from cotransport.telemetry import outcome_summary, record_to_dict


def small_scenario(distance=1.2, seed=0, duration=20.0, obstacles=(),
                   vis_h=frozenset(), vis_r=frozenset()):
    env = Environment((-3, -2, 0), (3, 2, 1), obstacles, vis_h, vis_r)
    return Scenario(
        name="test",
        environment=env,
        body=BodyParams.rod(mass=25.0, length=1.0),
        initial=State.at_rest((-distance / 2, 0, 0.5)),
        target=State.at_rest((distance / 2, 0, 0.5)),
        planner=PlannerConfig(state_weights=(800.0,) * 3 + (40.0,) * 3,
                              input_weights=(2.0,) * 3 + (20.0,) * 3,
                              obstacle_penalty_weight=4e4,
                              max_iterations=15, cost_tolerance=1e-3),
        trust=TrustConfig(delta_thr=16.0, robot_input_set=WrenchBox.symmetric(12.0, 3.0)),
        human=HumanConfig(input_set=WrenchBox.symmetric(9.0, 2.0)),
        duration=duration,
        seed=seed,
    )


class TestStepOrdering:
    def test_first_step_uses_zero_human_history(self):
        world = World(small_scenario(), ControllerVariant.TRUST_SAFE_STOP)
        rec = world.step()
        # Trust at t=0 compares the estimate against the zero wrench.
        expected = trust_value(rec.u_hat_h, Wrench.zero(), world.trust_cfg.delta_thr,
                               world.trust_cfg.deviation_weights)
        assert rec.alpha == pytest.approx(expected)

    def test_trust_never_reads_current_human_wrench(self):
        # Recompute each step's trust from the PREVIOUS step's measured
        # human wrench; it must match the recorded value exactly.
        world = World(small_scenario(), ControllerVariant.TRUST_SAFE_STOP)
        prev_measured = Wrench.zero()
        for _ in range(40):
            if world.done:
                break
            rec = world.step()
            expected = trust_value(
                estimate_human(rec.u_star, world.trust_cfg.p), prev_measured,
                world.trust_cfg.delta_thr, world.trust_cfg.deviation_weights)
            assert rec.alpha == pytest.approx(expected, abs=1e-12)
            prev_measured = rec.u_h_measured

    def test_free_space_progress(self):
        sc = small_scenario(distance=1.6, duration=60.0)
        out = run(sc, ControllerVariant.TRUST_SAFE_STOP)
        assert out.status is TrialStatus.SUCCESS
        # Distance to target decreases over any 5 s window of the approach
        # (checked until the endgame, where settling may overshoot).
        errs = [np.linalg.norm(r.state.position - sc.target.position)
                for r in out.records]
        window = 100
        for k in range(0, len(errs) - window, window):
            if errs[k] < 0.4:
                break
            assert errs[k + window] < errs[k]

    def test_collision_halts_loop(self):
        sphere = Sphere((0.0, 0.0, 0.5), 0.25)
        sc = small_scenario(distance=2.4, obstacles=(sphere,),
                            vis_h=frozenset(), vis_r=frozenset({0}))
        # Robot-visible only, but placed dead on the path with a compliant
        # human: plan avoidance keeps it safe, so force a collision by
        # making it invisible to the planner instead.
        sc_blind = small_scenario(distance=2.4, obstacles=(sphere,),
                                  vis_h=frozenset({0}), vis_r=frozenset())
        out = run(sc_blind, ControllerVariant.PURE_MPC)
        if out.status is TrialStatus.COLLISION:
            assert not out.records[-1].state.position[0] > 1.2
        else:
            assert out.status in (TrialStatus.TIMEOUT, TrialStatus.SUCCESS)

    def test_immediate_success_when_starting_at_target(self):
        sc = small_scenario(distance=0.0)
        out = run(sc, ControllerVariant.TRUST_SAFE_STOP)
        assert out.status is TrialStatus.SUCCESS
        assert len(out.records) == sc.success_hold_steps

    def test_initial_collision_rejected(self):
        sphere = Sphere((-0.6, 0.0, 0.5), 0.3)
        sc = small_scenario(distance=1.2, obstacles=(sphere,),
                            vis_h=frozenset({0}), vis_r=frozenset({0}))
        with pytest.raises(ValueError):
            World(sc, ControllerVariant.TRUST_SAFE_STOP)


class TestVariants:
    def test_pure_mpc_forces_full_trust(self):
        world = World(small_scenario(), ControllerVariant.PURE_MPC)
        for _ in range(10):
            rec = world.step()
            assert rec.alpha == 1.0
            assert rec.virtual_points is None
            assert rec.mode == "trust_blend"

    def test_variant_accepts_strings(self):
        world = World(small_scenario(), "pure_mpc")
        assert world.variant is ControllerVariant.PURE_MPC


class TestDeterminism:
    def _signature(self, outcome):
        return [record_to_dict(r) for r in outcome.records], outcome_summary(outcome)

    def test_same_seed_bit_identical(self):
        sc = fixture_a(3)
        a = run(sc, ControllerVariant.TRUST_SAFE_STOP, max_steps=120)
        b = run(sc, ControllerVariant.TRUST_SAFE_STOP, max_steps=120)
        assert self._signature(a) == self._signature(b)

    def test_different_seed_differs(self):
        a = run(fixture_a(0), ControllerVariant.TRUST_SAFE_STOP, max_steps=80)
        b = run(fixture_a(1), ControllerVariant.TRUST_SAFE_STOP, max_steps=80)
        assert self._signature(a) != self._signature(b)


class TestLiveMode:
    def test_live_override_clamped_and_applied(self):
        world = World(small_scenario(), ControllerVariant.TRUST_SAFE_STOP, live=True)
        big = Wrench(np.array([500.0, 0, 0]), np.zeros(3))
        rec = world.step(big)
        bound = world.human_cfg.input_set.upper[0]
        assert rec.u_h_measured.force[0] == pytest.approx(bound)

    def test_live_without_command_is_zero(self):
        world = World(small_scenario(), ControllerVariant.TRUST_SAFE_STOP, live=True)
        rec = world.step(None)
        assert np.allclose(rec.u_h_measured.as_vector(), np.zeros(6))
