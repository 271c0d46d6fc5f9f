import math
from dataclasses import replace

import numpy as np
import pytest

from formnav.core import AgentKind, Vec2, wrap_angle
from formnav.orca import (
    HalfPlane,
    OrcaParams,
    orca_halfplanes,
    pedestrian_policy,
    preferred_velocity,
    solve_lp2,
    solve_lp3,
)
from helpers import make_agent


def ped(x, y, vx=0.0, vy=0.0, goal=(0.0, 0.0), radius=0.3, speed=1.0):
    return make_agent(
        AgentKind.PEDESTRIAN,
        position=(x, y),
        velocity=(vx, vy),
        radius=radius,
        preferred_speed=speed,
        goal=goal,
        heading=0.0,
    )


def grid_search_lp2(planes, pref, vmax, n=801):
    """Dense feasible-grid oracle: best distance to the preferred velocity."""
    xs = np.linspace(-vmax, vmax, n)
    X, Y = np.meshgrid(xs, xs)
    ok = X**2 + Y**2 <= vmax**2
    for hp in planes:
        ok &= (X - hp.point.x) * hp.normal.x + (Y - hp.point.y) * hp.normal.y >= 0
    if not ok.any():
        return None
    d2 = (X - pref.x) ** 2 + (Y - pref.y) ** 2
    d2[~ok] = np.inf
    return math.sqrt(d2.min())


def grid_search_lp3(planes, vmax, n=801):
    """Dense-grid oracle for the minimax violation."""
    xs = np.linspace(-vmax, vmax, n)
    X, Y = np.meshgrid(xs, xs)
    worst = np.full_like(X, -np.inf)
    for hp in planes:
        v = (hp.point.x - X) * hp.normal.x + (hp.point.y - Y) * hp.normal.y
        worst = np.maximum(worst, v)
    worst[X**2 + Y**2 > vmax**2] = np.inf
    return worst.min()


def random_planes(rng, k):
    planes = []
    for _ in range(k):
        pt = Vec2(*(rng.uniform(-0.8, 0.8, 2)))
        ang = rng.uniform(-math.pi, math.pi)
        planes.append(HalfPlane(pt, Vec2(math.cos(ang), math.sin(ang))))
    return planes


class TestHalfPlanes:
    def test_normal_must_be_unit(self):
        with pytest.raises(ValueError):
            HalfPlane(Vec2(0, 0), Vec2(1.0, 1.0))

    def test_far_neighbor_constraint_inactive(self):
        me = ped(0.0, 0.0, goal=(5.0, 0.0))
        other = ped(8.0, 0.0)
        [hp] = orca_halfplanes(me, [other], OrcaParams(), dt=0.25)
        assert hp.violation(me.velocity) <= 0.0

    def test_symmetric_head_on_mirror(self):
        a = ped(-2.0, 0.0, vx=1.0, goal=(2.0, 0.0))
        b = ped(2.0, 0.0, vx=-1.0, goal=(-2.0, 0.0))
        params = OrcaParams()
        [ha] = orca_halfplanes(a, [b], params, 0.25)
        [hb] = orca_halfplanes(b, [a], params, 0.25)
        assert ha.point.x == pytest.approx(-hb.point.x, abs=1e-12)
        assert ha.point.y == pytest.approx(-hb.point.y, abs=1e-12)
        assert ha.normal.x == pytest.approx(-hb.normal.x, abs=1e-12)
        assert ha.normal.y == pytest.approx(-hb.normal.y, abs=1e-12)

    def test_overlapping_pair_normal_along_center_line(self):
        me = ped(0.0, 0.0)
        other = ped(0.4, 0.0)  # overlapping: distance 0.4 < 0.6
        [hp] = orca_halfplanes(me, [other], OrcaParams(), dt=0.25)
        # normal points from the neighbor toward me: -x direction
        assert hp.normal.x == pytest.approx(-1.0, abs=1e-12)
        assert hp.normal.y == pytest.approx(0.0, abs=1e-12)


class TestLp2:
    def test_unconstrained_returns_pref(self):
        v = solve_lp2([], Vec2(0.3, -0.4), 1.0)
        assert v == Vec2(0.3, -0.4)

    def test_overspeed_pref_projected_to_disc(self):
        v = solve_lp2([], Vec2(3.0, 4.0), 1.0)
        assert v.norm() == pytest.approx(1.0, abs=1e-12)
        assert v.x == pytest.approx(0.6, abs=1e-12)
        assert v.y == pytest.approx(0.8, abs=1e-12)

    def test_single_excluding_plane_lands_on_boundary(self):
        hp = HalfPlane(Vec2(0.0, 0.5), Vec2(0.0, 1.0))  # vy >= 0.5
        pref = Vec2(0.2, -0.3)
        v = solve_lp2([hp], pref, 1.0)
        assert hp.violation(v) == pytest.approx(0.0, abs=1e-12)
        best = grid_search_lp2([hp], pref, 1.0)
        assert (v - pref).norm() <= best + 1e-3

    def test_random_instances_match_grid_oracle(self):
        rng = np.random.default_rng(0)
        checked = 0
        while checked < 40:
            planes = random_planes(rng, int(rng.integers(1, 7)))
            pref = Vec2(*(rng.uniform(-1.2, 1.2, 2)))
            v = solve_lp2(planes, pref, 1.0)
            best = grid_search_lp2(planes, pref, 1.0)
            if v is None:
                continue  # infeasible cases are the lp3 tests' business
            assert max(hp.violation(v) for hp in planes) <= 1e-9
            assert v.norm() <= 1.0 + 1e-9
            if best is not None:
                assert (v - pref).norm() <= best + 1e-3
            checked += 1


class TestLp3:
    def test_parallel_opposing_planes_meet_in_middle(self):
        planes = [
            HalfPlane(Vec2(0.0, -0.5), Vec2(0.0, -1.0)),  # vy <= -0.5
            HalfPlane(Vec2(0.0, 0.5), Vec2(0.0, 1.0)),  # vy >= +0.5
        ]
        v = solve_lp3(planes, 1.0)
        assert v.y == pytest.approx(0.0, abs=1e-9)
        v0, v1 = planes[0].violation(v), planes[1].violation(v)
        assert v0 == pytest.approx(v1, abs=1e-9)

    def test_output_speed_bounded(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            planes = random_planes(rng, int(rng.integers(2, 8)))
            v = solve_lp3(planes, 1.0)
            assert v.norm() <= 1.0 + 1e-9

    def test_random_infeasible_vs_grid_oracle(self):
        rng = np.random.default_rng(2)
        checked = 0
        while checked < 25:
            planes = random_planes(rng, int(rng.integers(2, 8)))
            if solve_lp2(planes, Vec2(0.0, 0.0), 1.0) is not None:
                continue
            v = solve_lp3(planes, 1.0)
            mine = max(hp.violation(v) for hp in planes)
            oracle = grid_search_lp3(planes, 1.0)
            assert mine <= oracle + 1e-3
            checked += 1


class TestPedestrianPolicy:
    def test_at_goal_zero_command(self):
        agent = ped(1.0, 2.0, goal=(1.0, 2.0))
        v = pedestrian_policy(0, [agent], OrcaParams(), 0.25)
        assert v == Vec2(0.0, 0.0)

    def test_lone_pedestrian_goes_preferred(self):
        agent = ped(0.0, 0.0, goal=(5.0, 0.0))
        v = pedestrian_policy(0, [agent], OrcaParams(), 0.25)
        pref = preferred_velocity(agent, 0.25)
        assert v == pref
        assert v.x == pytest.approx(1.0)

    def test_near_goal_speed_capped(self):
        agent = ped(0.0, 0.0, goal=(0.1, 0.0))
        v = pedestrian_policy(0, [agent], OrcaParams(), 0.25)
        assert v.x == pytest.approx(0.4)  # covers the gap in one step

    def test_robot_index_rejected(self):
        leader = make_agent(AgentKind.LEADER, position=(0, 0))
        with pytest.raises(ValueError):
            pedestrian_policy(0, [leader], OrcaParams(), 0.25)

    def test_reciprocity_mirrored_commands(self):
        a = ped(-3.0, 0.0, vx=1.0, goal=(3.0, 0.0))
        b = ped(3.0, 0.0, vx=-1.0, goal=(-3.0, 0.0))
        params = OrcaParams()
        va = pedestrian_policy(0, [a, b], params, 0.25)
        vb = pedestrian_policy(1, [a, b], params, 0.25)
        assert va.x == pytest.approx(-vb.x, abs=1e-12)
        assert va.y == pytest.approx(-vb.y, abs=1e-12)

    def test_antipodal_circle_crossing(self):
        # 8 pedestrians swap across a circle: no contact, everyone arrives
        rng = np.random.default_rng(3)
        n, radius = 8, 4.0
        states = []
        for k in range(n):
            ang = 2 * math.pi * k / n + rng.normal(0.0, 0.05)
            gang = ang + math.pi + rng.normal(0.0, 0.05)
            states.append(
                ped(
                    radius * math.cos(ang),
                    radius * math.sin(ang),
                    goal=(radius * math.cos(gang), radius * math.sin(gang)),
                )
            )
        params = OrcaParams()
        for _ in range(300):
            cmds = [pedestrian_policy(i, states, params, 0.25) for i in range(n)]
            states = [
                replace(
                    s,
                    position=Vec2(s.position.x + 0.25 * c.x, s.position.y + 0.25 * c.y),
                    velocity=c,
                )
                for s, c in zip(states, cmds)
            ]
            for i in range(n):
                assert cmds[i].norm() <= params.v_max + 1e-9
                for j in range(i + 1, n):
                    gap = (states[i].position - states[j].position).norm()
                    assert gap >= 0.6 - 1e-6
        for s in states:
            assert (s.goal - s.position).norm() < 0.2
