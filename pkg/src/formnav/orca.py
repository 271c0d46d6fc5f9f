"""Reciprocal collision avoidance for pedestrians.

Each agent turns every neighbor into a half-plane constraint on its next
velocity (the velocity-obstacle construction), then picks the feasible
velocity closest to its preferred one with a 2-D incremental linear program.
When the constraints are jointly infeasible, a fallback program minimizes the
largest violation instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .core import AgentKind, AgentState, Vec2

_EPS = 1e-9


@dataclass(frozen=True)
class HalfPlane:
    """Feasible velocities satisfy (v - point) . normal >= 0 (normal is unit)."""

    point: Vec2
    normal: Vec2

    def __post_init__(self):
        if abs(self.normal.norm() - 1.0) > 1e-9:
            raise ValueError("normal must be a unit vector")

    def violation(self, v: Vec2) -> float:
        """Signed violation: positive when v is on the wrong side."""
        return (self.point - v).dot(self.normal)


@dataclass(frozen=True)
class OrcaParams:
    # A 5 s horizon gridlocks dense circle swaps at this scale; 3 s plus the
    # safety margin keeps crossings flowing without any true-radius contact.
    time_horizon: float = 3.0
    neighbor_dist: float = 10.0
    max_neighbors: int = 10
    v_max: float = 1.0
    safety_margin: float = 0.1

    def __post_init__(self):
        if min(self.time_horizon, self.neighbor_dist, self.max_neighbors, self.v_max) <= 0:
            raise ValueError("time_horizon, neighbor_dist, max_neighbors, v_max must be positive")
        if self.safety_margin < 0:
            raise ValueError("safety_margin must be nonnegative")


def _halfplane_from_line(px, py, dx, dy) -> HalfPlane:
    # Feasible side is to the left of the directed line.
    return HalfPlane(point=Vec2(px, py), normal=Vec2(-dy, dx))


def _line_from_halfplane(hp: HalfPlane):
    return hp.point.x, hp.point.y, hp.normal.y, -hp.normal.x


def orca_halfplanes(
    self_agent: AgentState,
    neighbors: Sequence[AgentState],
    params: OrcaParams,
    dt: float,
) -> list[HalfPlane]:
    """One half-plane per neighbor (reciprocal: each side takes half the dodge).

    For pairs not yet colliding the plane touches v_self + u/2, with u the
    smallest velocity change that exits the velocity obstacle truncated at
    ``time_horizon``; already-overlapping pairs get an escape plane on the
    ``dt`` horizon.
    """
    planes = []
    vx, vy = self_agent.velocity.x, self_agent.velocity.y
    for other in neighbors:
        rx = other.position.x - self_agent.position.x
        ry = other.position.y - self_agent.position.y
        rvx = vx - other.velocity.x
        rvy = vy - other.velocity.y
        dist_sq = rx * rx + ry * ry
        combined_r = self_agent.radius + other.radius

        if dist_sq > combined_r * combined_r:
            inv_t = 1.0 / params.time_horizon
            wx = rvx - inv_t * rx
            wy = rvy - inv_t * ry
            w_len_sq = wx * wx + wy * wy
            dot1 = wx * rx + wy * ry
            if dot1 < 0.0 and dot1 * dot1 > combined_r * combined_r * w_len_sq:
                # Closest exit is through the truncation disc.
                w_len = math.sqrt(w_len_sq)
                uwx, uwy = wx / w_len, wy / w_len
                dx, dy = uwy, -uwx
                ux = (combined_r * inv_t - w_len) * uwx
                uy = (combined_r * inv_t - w_len) * uwy
            else:
                # Closest exit is through one of the cone legs.
                leg = math.sqrt(dist_sq - combined_r * combined_r)
                if rx * wy - ry * wx > 0.0:
                    dx = (rx * leg - ry * combined_r) / dist_sq
                    dy = (rx * combined_r + ry * leg) / dist_sq
                else:
                    dx = -(rx * leg + ry * combined_r) / dist_sq
                    dy = -(-rx * combined_r + ry * leg) / dist_sq
                dot2 = rvx * dx + rvy * dy
                ux = dot2 * dx - rvx
                uy = dot2 * dy - rvy
        else:
            # Already overlapping: escape within one timestep.
            inv_dt = 1.0 / dt
            wx = rvx - inv_dt * rx
            wy = rvy - inv_dt * ry
            w_len = math.hypot(wx, wy)
            if w_len < _EPS:
                # Coincident and co-moving; push along the center line if any.
                d = math.sqrt(dist_sq)
                if d < _EPS:
                    uwx, uwy = 1.0, 0.0
                else:
                    uwx, uwy = -rx / d, -ry / d
                w_len = 0.0
            else:
                uwx, uwy = wx / w_len, wy / w_len
            dx, dy = uwy, -uwx
            ux = (combined_r * inv_dt - w_len) * uwx
            uy = (combined_r * inv_dt - w_len) * uwy

        planes.append(_halfplane_from_line(vx + 0.5 * ux, vy + 0.5 * uy, dx, dy))
    return planes


def _lp1(lines, line_no, radius, opt_x, opt_y, direction_opt, rx, ry):
    """Optimize along line ``line_no`` subject to earlier lines and the disc."""
    px, py, dx, dy = lines[line_no]
    dot = px * dx + py * dy
    disc = dot * dot + radius * radius - (px * px + py * py)
    if disc < 0.0:
        return False, rx, ry
    sq = math.sqrt(disc)
    t_left = -dot - sq
    t_right = -dot + sq
    for i in range(line_no):
        qx, qy, ex, ey = lines[i]
        denom = dx * ey - dy * ex
        numer = ex * (py - qy) - ey * (px - qx)
        if abs(denom) <= _EPS:
            if numer < 0.0:
                return False, rx, ry
            continue
        t = numer / denom
        if denom >= 0.0:
            t_right = min(t_right, t)
        else:
            t_left = max(t_left, t)
        if t_left > t_right:
            return False, rx, ry
    if direction_opt:
        t = t_right if (opt_x * dx + opt_y * dy) > 0.0 else t_left
    else:
        t = dx * (opt_x - px) + dy * (opt_y - py)
        t = min(max(t, t_left), t_right)
    return True, px + t * dx, py + t * dy


def _lp2(lines, radius, opt_x, opt_y, direction_opt):
    """Incremental half-plane intersection within a disc.

    Returns (fail_index, x, y); fail_index == len(lines) means success, a
    smaller value names the first constraint that could not be satisfied.
    """
    if direction_opt:
        rx, ry = opt_x * radius, opt_y * radius
    else:
        n_sq = opt_x * opt_x + opt_y * opt_y
        if n_sq > radius * radius:
            n = math.sqrt(n_sq)
            rx, ry = opt_x / n * radius, opt_y / n * radius
        else:
            rx, ry = opt_x, opt_y
    for i, (px, py, dx, dy) in enumerate(lines):
        if dx * (py - ry) - dy * (px - rx) > 0.0:
            ok, nx, ny = _lp1(lines, i, radius, opt_x, opt_y, direction_opt, rx, ry)
            if not ok:
                return i, rx, ry
            rx, ry = nx, ny
    return len(lines), rx, ry


def _lp3(lines, begin_line, radius, rx, ry):
    """Minimize the largest violation once the intersection is empty."""
    distance = 0.0
    for i in range(begin_line, len(lines)):
        px, py, dx, dy = lines[i]
        if dx * (py - ry) - dy * (px - rx) > distance:
            proj = []
            for j in range(i):
                qx, qy, ex, ey = lines[j]
                determinant = dx * ey - dy * ex
                if abs(determinant) <= _EPS:
                    if dx * ex + dy * ey > 0.0:
                        continue  # same direction: j is redundant here
                    ppx, ppy = 0.5 * (px + qx), 0.5 * (py + qy)
                else:
                    s = (ex * (py - qy) - ey * (px - qx)) / determinant
                    ppx, ppy = px + s * dx, py + s * dy
                ndx, ndy = ex - dx, ey - dy
                norm = math.hypot(ndx, ndy)
                if norm < _EPS:
                    continue
                proj.append((ppx, ppy, ndx / norm, ndy / norm))
            tx, ty = rx, ry
            fail, nx, ny = _lp2(proj, radius, -dy, dx, True)
            if fail >= len(proj):
                rx, ry = nx, ny
            else:
                rx, ry = tx, ty  # numerically impossible in exact arithmetic
            distance = dx * (py - ry) - dy * (px - rx)
    return rx, ry


def solve_lp2(
    halfplanes: Sequence[HalfPlane], preferred_velocity: Vec2, v_max: float
) -> Vec2 | None:
    """Velocity closest to the preferred one satisfying every half-plane and
    the speed bound, or None when the intersection is empty."""
    if v_max <= 0.0:
        raise ValueError("v_max must be positive")
    lines = [_line_from_halfplane(hp) for hp in halfplanes]
    fail, rx, ry = _lp2(lines, v_max, preferred_velocity.x, preferred_velocity.y, False)
    if fail < len(lines):
        return None
    return Vec2(rx, ry)


def solve_lp3(halfplanes: Sequence[HalfPlane], v_max: float) -> Vec2:
    """Velocity minimizing the largest signed violation, with speed <= v_max."""
    if v_max <= 0.0:
        raise ValueError("v_max must be positive")
    lines = [_line_from_halfplane(hp) for hp in halfplanes]
    fail, rx, ry = _lp2(lines, v_max, 0.0, 0.0, False)
    if fail < len(lines):
        rx, ry = _lp3(lines, fail, v_max, rx, ry)
    return Vec2(rx, ry)


def preferred_velocity(agent: AgentState, dt: float) -> Vec2:
    """Straight toward the goal at preferred speed, capped to avoid overshoot."""
    assert agent.goal is not None
    to_goal = agent.goal - agent.position
    dist = to_goal.norm()
    if dist < _EPS:
        return Vec2(0.0, 0.0)
    speed = min(agent.preferred_speed, dist / dt)
    return to_goal * (speed / dist)


def pedestrian_policy(
    pedestrian_index: int,
    world_states: Sequence[AgentState],
    params: OrcaParams,
    dt: float,
) -> Vec2:
    """Velocity command for one pedestrian; robots count as ordinary neighbors.

    The safety margin inflates neighbor radii inside the constraint
    construction only, so residual constraint violations in dense crunches
    eat into the buffer, never into the physical discs.
    """
    agent = world_states[pedestrian_index]
    if agent.kind is not AgentKind.PEDESTRIAN:
        raise ValueError(f"agent {pedestrian_index} is not a pedestrian")
    pref = preferred_velocity(agent, dt)

    by_dist = []
    for j, other in enumerate(world_states):
        if j == pedestrian_index:
            continue
        d = (other.position - agent.position).norm()
        if d < params.neighbor_dist:
            by_dist.append((d, j))
    by_dist.sort()
    neighbors = [
        replace(world_states[j], radius=world_states[j].radius + params.safety_margin)
        for _, j in by_dist[: params.max_neighbors]
    ]

    planes = orca_halfplanes(agent, neighbors, params, dt)
    v = solve_lp2(planes, pref, params.v_max)
    if v is None:
        v = solve_lp3(planes, params.v_max)
    return v
