"""Trust-policy tests: trust law algebra, blending, safe-stop trigger."""

import numpy as np
import pytest

from cotransport.environment import ClosestPoint
from cotransport.rigid_body import Wrench, WrenchBox
from cotransport.trust import (
    PolicyMode,
    TrustConfig,
    blend_input,
    estimate_human,
    robot_policy,
    robot_share,
    safe_stop_input,
    safe_stop_triggered,
    trust_value,
)


def wrench(*vals):
    return Wrench.from_vector(np.array(vals, dtype=float))


def closest(distance, position=(0, 0, 0), velocity=(0, 0, 0), obstacle_point=(1, 0, 0)):
    return ClosestPoint(np.array(position, dtype=float), np.array(velocity, dtype=float),
                        distance, np.array(obstacle_point, dtype=float), 0)


CFG = TrustConfig(robot_input_set=WrenchBox.symmetric(50.0, 20.0))


class TestEstimateAndShare:
    def test_fraction_scaling(self):
        u = wrench(10, 0, 0, 0, 0, 0)
        assert np.allclose(estimate_human(u, 0.5).as_vector(), [5, 0, 0, 0, 0, 0])

    def test_zero_input(self):
        assert np.allclose(estimate_human(Wrench.zero(), 0.5).as_vector(), np.zeros(6))

    def test_reconstruction_identity(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            u = Wrench.from_vector(rng.uniform(-40, 40, 6))
            est = estimate_human(u, 0.5)
            share = robot_share(u, est)
            assert np.array_equal((est + share).as_vector(), u.as_vector())

    def test_share_edge_cases(self):
        u = wrench(10, -4, 2, 1, 0, 0)
        assert np.allclose(robot_share(u, u).as_vector(), np.zeros(6))
        assert np.allclose(robot_share(u, Wrench.zero()).as_vector(), u.as_vector())


class TestTrustValue:
    def test_perfect_agreement(self):
        u = wrench(3, 1, -2, 0, 0, 0)
        assert trust_value(u, u, 20.0) == 1.0

    def test_saturation_at_threshold(self):
        zero = Wrench.zero()
        at = wrench(20, 0, 0, 0, 0, 0)
        beyond = wrench(35, 0, 0, 0, 0, 0)
        assert trust_value(at, zero, 20.0) == 0.0
        assert trust_value(beyond, zero, 20.0) == 0.0

    def test_linear_midpoint(self):
        half = wrench(10, 0, 0, 0, 0, 0)
        assert trust_value(half, Wrench.zero(), 20.0) == 0.5

    def test_piecewise_linear_monotone(self):
        rng = np.random.default_rng(4)
        direction = rng.normal(size=6)
        direction /= np.linalg.norm(direction)
        norms = np.sort(rng.uniform(0, 30, 50))
        alphas = [trust_value(Wrench.from_vector(n * direction), Wrench.zero(), 20.0)
                  for n in norms]
        assert all(a2 <= a1 + 1e-12 for a1, a2 in zip(alphas, alphas[1:]))
        assert all(0.0 <= a <= 1.0 for a in alphas)


class TestSafeStopTrigger:
    def test_all_conditions_hold(self):
        c = closest(0.10, position=(0.9, 0, 0), velocity=(0.06, 0, 0),
                    obstacle_point=(1.0, 0, 0))
        assert safe_stop_triggered(0.4, c, CFG)

    def test_high_trust_blocks(self):
        c = closest(0.10, position=(0.9, 0, 0), velocity=(0.06, 0, 0),
                    obstacle_point=(1.0, 0, 0))
        assert not safe_stop_triggered(0.6, c, CFG)

    def test_receding_motion_blocks(self):
        c = closest(0.10, position=(0.9, 0, 0), velocity=(-0.2, 0, 0),
                    obstacle_point=(1.0, 0, 0))
        assert not safe_stop_triggered(0.4, c, CFG)

    def test_far_obstacle_blocks(self):
        c = closest(0.50, position=(0.5, 0, 0), velocity=(1.0, 0, 0),
                    obstacle_point=(1.0, 0, 0))
        assert not safe_stop_triggered(0.4, c, CFG)

    def test_infinite_sentinel_blocks(self):
        c = ClosestPoint(np.zeros(3), np.ones(3), np.inf, None, None)
        assert not safe_stop_triggered(0.0, c, CFG)

    def test_normalized_closure_speed(self):
        # Far-but-within-threshold point approached slowly: the raw dot
        # product is large yet the closure speed stays below v_thr.
        c = closest(0.15, position=(0, 0, 0), velocity=(0.04, 0, 0),
                    obstacle_point=(0.15, 0, 0))
        assert not safe_stop_triggered(0.4, c, CFG)
        c_fast = closest(0.15, position=(0, 0, 0), velocity=(0.051, 0, 0),
                         obstacle_point=(0.15, 0, 0))
        assert safe_stop_triggered(0.4, c_fast, CFG)


class TestBlendAndStop:
    def test_pure_leader(self):
        u_r = wrench(60, 0, 0, 0, 0, 0)  # beyond the 50 N bound
        out = blend_input(1.0, u_r, wrench(5, 5, 5, 0, 0, 0), CFG)
        assert np.allclose(out.as_vector(), [50, 0, 0, 0, 0, 0])

    def test_pure_follower(self):
        out = blend_input(0.0, wrench(60, 0, 0, 0, 0, 0), wrench(3, -2, 1, 0, 0, 0), CFG)
        assert np.allclose(out.as_vector(), [3, -2, 1, 0, 0, 0])

    def test_linear_blend_inside_bounds(self):
        out = blend_input(0.5, wrench(4, 0, 0, 0, 0, 0), wrench(0, 4, 0, 0, 0, 0), CFG)
        assert np.allclose(out.as_vector(), [2, 2, 0, 0, 0, 0])

    def test_safe_stop_zero_velocity(self):
        assert np.allclose(safe_stop_input(np.zeros(3), CFG, 0.05).as_vector(), np.zeros(6))

    def test_safe_stop_proportional_braking(self):
        # K2 = 10, Ts = 0.05: R_dot = (0.05, 0, 0) gives -10 N before clamping.
        out = safe_stop_input(np.array([0.05, 0, 0]), CFG, 0.05)
        assert np.allclose(out.as_vector(), [-10, 0, 0, 0, 0, 0])

    def test_safe_stop_saturates_at_bound(self):
        out = safe_stop_input(np.array([5.0, 0, 0]), CFG, 0.05)
        assert np.allclose(out.as_vector(), [-50, 0, 0, 0, 0, 0])
        assert np.allclose(out.torque, np.zeros(3))


class TestRobotPolicy:
    def test_agreement_scenario(self):
        u_star = wrench(10, 0, 0, 0, 0, 0)
        last_human = estimate_human(u_star, CFG.p)
        c = closest(5.0)
        u_r, ts = robot_policy(u_star, last_human, c, CFG, 0.05)
        assert ts.mode is PolicyMode.TRUST_BLEND
        assert ts.alpha == 1.0
        assert np.allclose(u_r.as_vector(), [5, 0, 0, 0, 0, 0])

    def test_disagreement_far_from_obstacles(self):
        u_star = wrench(10, 0, 0, 0, 0, 0)
        last_human = wrench(-12, 0, 0, 0, 0, 0)
        u_r, ts = robot_policy(u_star, last_human, closest(5.0), CFG, 0.05)
        assert ts.mode is PolicyMode.TRUST_BLEND
        assert ts.alpha < 0.5

    def test_disagreement_near_fast_approach_stops(self):
        u_star = wrench(10, 0, 0, 0, 0, 0)
        last_human = wrench(-30, 0, 0, 0, 0, 0)
        c = closest(0.10, position=(0.9, 0, 0), velocity=(0.2, 0, 0),
                    obstacle_point=(1.0, 0, 0))
        u_r, ts = robot_policy(u_star, last_human, c, CFG, 0.05)
        assert ts.mode is PolicyMode.SAFE_STOP
        assert u_r.force[0] < 0

    def test_projection_feasibility_random_draws(self):
        rng = np.random.default_rng(11)
        for _ in range(10_000):
            u_star = Wrench.from_vector(rng.uniform(-120, 120, 6))
            last = Wrench.from_vector(rng.uniform(-120, 120, 6))
            c = closest(float(rng.uniform(0, 0.5)), velocity=rng.normal(size=3),
                        obstacle_point=rng.normal(size=3))
            u_r, _ = robot_policy(u_star, last, c, CFG, 0.05)
            assert CFG.robot_input_set.contains(u_r)

    def test_mode_equivalence_against_reevaluation(self):
        rng = np.random.default_rng(13)
        for _ in range(2000):
            u_star = Wrench.from_vector(rng.uniform(-60, 60, 6))
            last = Wrench.from_vector(rng.uniform(-60, 60, 6))
            pos = rng.normal(size=3)
            c = closest(float(rng.uniform(0, 0.3)), position=pos,
                        velocity=rng.normal(size=3) * 0.2,
                        obstacle_point=pos + rng.normal(size=3) * 0.1)
            u_r, ts = robot_policy(u_star, last, c, CFG, 0.05)
            # Direct re-evaluation of the three trigger conjuncts.
            alpha = trust_value(estimate_human(u_star, CFG.p), last, CFG.delta_thr,
                                CFG.deviation_weights)
            direction = c.obstacle_point - c.position
            speed = float(c.velocity @ direction) / max(np.linalg.norm(direction), 1e-12)
            expect_stop = (alpha < 0.5) and (c.distance <= CFG.d_thr) and (speed > CFG.v_thr)
            assert (ts.mode is PolicyMode.SAFE_STOP) == expect_stop
            if ts.mode is PolicyMode.SAFE_STOP:
                assert ts.alpha < 0.5

    def test_forced_alpha_reduces_to_pure_share_clamp(self):
        rng = np.random.default_rng(17)
        for _ in range(500):
            u_star = Wrench.from_vector(rng.uniform(-120, 120, 6))
            last = Wrench.from_vector(rng.uniform(-50, 50, 6))
            c = closest(float(rng.uniform(0, 0.2)), velocity=rng.normal(size=3),
                        obstacle_point=rng.normal(size=3))
            u_r, ts = robot_policy(u_star, last, c, CFG, 0.05,
                                   enable_safe_stop=False, force_alpha=1.0)
            expected = CFG.robot_input_set.clamp(robot_share(u_star, estimate_human(u_star, CFG.p)))
            assert np.array_equal(u_r.as_vector(), expected.as_vector())
            assert ts.mode is PolicyMode.TRUST_BLEND


class TestConfigValidation:
    def test_p_range(self):
        with pytest.raises(ValueError):
            TrustConfig(p=1.0)

    def test_delta_thr_positive(self):
        with pytest.raises(ValueError):
            TrustConfig(delta_thr=0.0)
