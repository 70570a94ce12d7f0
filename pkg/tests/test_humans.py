"""Scripted human policy tests: compliance, repulsion, leading, sensing."""

import numpy as np
import pytest

from cotransport.environment import Environment, Sphere
from cotransport.humans import (
    HumanConfig,
    HumanMode,
    compliant_wrench,
    leader_wrench,
    measure,
    repulsion_force,
    resisting_wrench,
)
from cotransport.rigid_body import BodyParams, State, Wrench, WrenchBox


def body():
    return BodyParams.rod(mass=2.0, length=1.0)


def free_env():
    return Environment((-5, -5, -5), (5, 5, 5))


def env_with_sphere(center, radius=0.2, human_visible=True):
    vis = frozenset({0}) if human_visible else frozenset()
    other = frozenset({0})
    return Environment((-5, -5, -5), (5, 5, 5), (Sphere(center, radius),),
                       vis, other)


CFG = HumanConfig(input_set=WrenchBox.symmetric(40.0, 10.0))


class TestCompliant:
    def test_free_space_fraction_of_plan(self):
        u_star = Wrench.from_vector(np.array([10.0, -6.0, 2.0, 1.0, 0.0, -0.5]))
        out = compliant_wrench(State.zero(), u_star, free_env(), body(), CFG)
        assert np.allclose(out.as_vector(), 0.5 * u_star.as_vector())

    def test_repulsion_deviates_away_from_obstacle(self):
        # Human-only sphere 0.1 m beyond the rod tip: repulsion pushes -x.
        env = env_with_sphere((0.8, 0.0, 0.0), radius=0.2)
        u_star = Wrench.from_vector(np.array([10.0, 0, 0, 0, 0, 0]))
        out = compliant_wrench(State.zero(), u_star, env, body(), CFG)
        assert out.force[0] < 0.5 * 10.0
        rep = repulsion_force(State.zero(), body(), env, CFG)
        assert rep[0] < 0.0
        assert abs(rep[1]) < 1e-9

    def test_repulsion_continuous_at_radius(self):
        env = env_with_sphere((2.0, 0.0, 0.0), radius=0.2)
        # Rod tip at x = 0.5: obstacle surface distance = 1.3 > radius 0.8.
        rep = repulsion_force(State.zero(), body(), env, CFG)
        assert np.allclose(rep, np.zeros(3))
        # Exactly at the radius boundary the field is still zero.
        cfg = HumanConfig(repulsion_radius=1.3, input_set=CFG.input_set)
        rep_edge = repulsion_force(State.zero(), body(), env, cfg)
        assert np.allclose(rep_edge, np.zeros(3), atol=1e-12)
        # Just inside the boundary it turns on smoothly.
        cfg_in = HumanConfig(repulsion_radius=1.3 + 1e-4, input_set=CFG.input_set)
        rep_in = repulsion_force(State.zero(), body(), env, cfg_in)
        assert 0 < abs(rep_in[0]) < 1e-3

    def test_invisible_obstacle_ignored(self):
        env = env_with_sphere((0.8, 0.0, 0.0), radius=0.2, human_visible=False)
        u_star = Wrench.from_vector(np.array([10.0, 0, 0, 0, 0, 0]))
        out = compliant_wrench(State.zero(), u_star, env, body(), CFG)
        assert np.allclose(out.as_vector(), 0.5 * u_star.as_vector())

    def test_clamped_to_input_set(self):
        u_star = Wrench.from_vector(np.array([200.0, 0, 0, 50.0, 0, 0]))
        out = compliant_wrench(State.zero(), u_star, free_env(), body(), CFG)
        assert CFG.input_set.contains(out)


class TestLeader:
    def test_at_target_at_rest_near_zero(self):
        target = State.at_rest((0.0, 0.0, 0.0))
        out = leader_wrench(State.zero(), target, free_env(), body(), CFG)
        assert np.linalg.norm(out.as_vector()) < 1e-9

    def test_pd_arithmetic(self):
        # 1 m X error at rest with stiffness 30: pre-clamp force (30, 0, 0).
        cfg = HumanConfig(lead_stiffness=30.0, lead_damping=20.0, input_set=CFG.input_set)
        target = State.at_rest((1.0, 0.0, 0.0))
        out = leader_wrench(State.zero(), target, free_env(), body(), cfg)
        assert np.allclose(out.force, [30.0, 0.0, 0.0])

    def test_damping_opposes_velocity(self):
        cfg = HumanConfig(lead_stiffness=30.0, lead_damping=20.0, input_set=CFG.input_set)
        target = State.at_rest((1.0, 0.0, 0.0))
        s = State(np.zeros(3), np.zeros(3), np.array([0.5, 0, 0]), np.zeros(3))
        out = leader_wrench(s, target, free_env(), body(), cfg)
        assert out.force[0] == pytest.approx(30.0 - 20.0 * 0.5)

    def test_pushes_at_robot_only_wall(self):
        # The leading human cannot see the obstacle, so the PD force aims
        # straight at the goal regardless.
        from cotransport.environment import Wall
        env = Environment((-5, -5, -5), (5, 5, 5), (Wall(1, -0.2, "le"),),
                          frozenset(), frozenset({0}))
        target = State.at_rest((0.0, -1.0, 0.0))
        out = leader_wrench(State.zero(), target, env, body(), CFG)
        assert out.force[1] < 0  # toward the wall

    def test_all_modes_stay_in_input_set(self):
        rng = np.random.default_rng(8)
        env = env_with_sphere((0.7, 0.1, 0.0), radius=0.15)
        for _ in range(300):
            s = State(rng.uniform(-1, 1, 3), np.array([rng.uniform(-2, 2), 0, 0]),
                      rng.normal(size=3), rng.normal(size=3) * 0.5)
            u_star = Wrench.from_vector(rng.uniform(-150, 150, 6))
            target = State.at_rest(rng.uniform(-2, 2, 3))
            for out in (
                compliant_wrench(s, u_star, env, body(), CFG),
                leader_wrench(s, target, env, body(), CFG),
                resisting_wrench(s, u_star, env, body(), CFG),
            ):
                assert CFG.input_set.contains(out, atol=1e-12)


class TestMeasure:
    def test_zero_noise_identity(self):
        u = Wrench.from_vector(np.arange(6.0))
        rng = np.random.default_rng(0)
        out = measure(u, 0.0, rng)
        assert out is u

    def test_seeded_reproducibility(self):
        u = Wrench.from_vector(np.arange(6.0))
        a = measure(u, 0.5, np.random.default_rng(5)).as_vector()
        b = measure(u, 0.5, np.random.default_rng(5)).as_vector()
        assert np.array_equal(a, b)

    def test_sample_mean_converges(self):
        u = Wrench.from_vector(np.array([3.0, -1.0, 0.0, 0.5, 0.0, 0.0]))
        rng = np.random.default_rng(99)
        sigma = 1.0
        n = 10_000
        total = np.zeros(6)
        for _ in range(n):
            total += measure(u, sigma, rng).as_vector()
        mean = total / n
        assert np.all(np.abs(mean - u.as_vector()) < 3.0 * sigma / np.sqrt(n) + 1e-2)


class TestSchedule:
    def test_mode_schedule_lookup(self):
        cfg = HumanConfig(schedule=((0.0, HumanMode.COMPLIANT), (5.0, HumanMode.LEADER),
                                    (9.0, HumanMode.RESISTING)))
        assert cfg.mode_at(0.0) is HumanMode.COMPLIANT
        assert cfg.mode_at(4.99) is HumanMode.COMPLIANT
        assert cfg.mode_at(5.0) is HumanMode.LEADER
        assert cfg.mode_at(12.0) is HumanMode.RESISTING

    def test_fraction_validation(self):
        with pytest.raises(ValueError):
            HumanConfig(compliance_fraction=1.0)
