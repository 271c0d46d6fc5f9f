"""Episode engine: unicycle integration, collision and goal detection,
extrinsic rewards, formation error, and the reset/step lifecycle.

One FormationEnv instance is single-threaded; independent instances may run
concurrently.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .core import (
    AgentKind,
    AgentState,
    JointObservation,
    RobotObservation,
    ScenarioConfig,
    Vec2,
    add_gaussian_noise,
    build_joint_flat,
    build_observation,
    wrap_angle,
)
from .orca import OrcaParams, pedestrian_policy

TRAJECTORY_SCHEMA_VERSION = 1


class Termination(Enum):
    RUNNING = "running"
    GOAL_REACHED = "goal_reached"
    COLLISION = "collision"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class StepOutcome:
    next_obs: JointObservation
    extrinsic_rewards: np.ndarray  # one entry per robot
    done: bool
    termination: Termination
    min_separations: np.ndarray  # per robot, over the elapsed interval
    formation_errors: np.ndarray  # per follower, at the post-step positions

    def __post_init__(self):
        assert self.done == (self.termination is not Termination.RUNNING)


def step_kinematics(
    state: AgentState,
    action: Sequence[float],
    dt: float,
    v_max: float | None = None,
    w_max: float | None = None,
) -> AgentState:
    """Explicit-Euler unicycle step; the stored velocity uses the pre-update heading.

    Out-of-bounds commands are clamped when bounds are given; callers that
    need the clamp diagnostic check the bounds themselves first.
    """
    v, w = float(action[0]), float(action[1])
    if v_max is not None:
        v = min(max(v, -v_max), v_max)
    if w_max is not None:
        w = min(max(w, -w_max), w_max)
    c, s = math.cos(state.heading), math.sin(state.heading)
    return replace(
        state,
        position=Vec2(state.position.x + dt * c * v, state.position.y + dt * s * v),
        velocity=Vec2(c * v, s * v),
        heading=wrap_angle(state.heading + dt * w),
    )


def _segment_min_distance(p0: Vec2, p1: Vec2, q0: Vec2, q1: Vec2) -> float:
    """Closest approach of two points moving linearly over the same interval."""
    dx = p0.x - q0.x
    dy = p0.y - q0.y
    mx = (p1.x - p0.x) - (q1.x - q0.x)
    my = (p1.y - p0.y) - (q1.y - q0.y)
    denom = mx * mx + my * my
    if denom > 0.0:
        s = -(dx * mx + dy * my) / denom
        s = min(max(s, 0.0), 1.0)
    else:
        s = 0.0
    return math.hypot(dx + s * mx, dy + s * my)


def min_separation(
    robot_index: int,
    start_states: Sequence[AgentState],
    end_states: Sequence[AgentState],
) -> float:
    """Minimum surface separation from every other agent over one interval.

    Negative means the discs overlapped at some point; +inf when there are no
    other agents.
    """
    if len(start_states) != len(end_states):
        raise ValueError("state snapshots must cover the same agents")
    me0 = start_states[robot_index]
    me1 = end_states[robot_index]
    best = math.inf
    for j, (o0, o1) in enumerate(zip(start_states, end_states)):
        if j == robot_index:
            continue
        d = _segment_min_distance(me0.position, me1.position, o0.position, o1.position)
        best = min(best, d - me0.radius - o0.radius)
    return best


def formation_error(p_i: Vec2, p_0: Vec2, f_i: Vec2) -> float:
    """Distance between follower i and its slot leader + offset."""
    return (p_i - p_0 - f_i).norm()


def leader_reward(d_min: float, at_goal: bool) -> float:
    """Collision dominates, then the discomfort band, then goal arrival."""
    if d_min < 0.0:
        return -0.25
    if d_min < 0.2:
        return 0.5 * d_min - 0.1
    if at_goal:
        return 100.0
    return 0.0


def follower_reward(d_min: float, e: float) -> float:
    """Collision and discomfort as for the leader, then formation keeping."""
    if d_min < 0.0:
        return -0.25
    if d_min < 0.2:
        return 0.5 * d_min - 0.1
    if e < 0.2:
        return 1.0
    if e < 1.0:
        return -math.tanh(7.5 * e - 3.0)
    if e < 2.0:
        return -1.0
    return -2.0


class FormationEnv:
    """A leader + followers crossing a pedestrian field toward the leader's goal.

    ``reset`` draws initial states; ``step`` advances robots by unicycle
    kinematics and pedestrians by the reciprocal-avoidance policy, then scores
    the interval.  Identical seeds and actions reproduce trajectories
    bit-exactly.
    """

    MAX_RESET_ATTEMPTS = 200

    def __init__(self, scenario: ScenarioConfig):
        self.scenario = scenario
        self.orca_params = OrcaParams(
            time_horizon=scenario.orca_time_horizon,
            neighbor_dist=scenario.orca_neighbor_dist,
            max_neighbors=scenario.orca_max_neighbors,
            v_max=scenario.ped_pref_speed,
            safety_margin=scenario.orca_safety_margin,
        )
        self.states: list[AgentState] = []
        self.steps = 0
        self.clamp_count = 0
        self.termination = Termination.RUNNING
        self._rng: np.random.Generator | None = None

    # --- lifecycle -----------------------------------------------------------

    def reset(self, rng: np.random.Generator) -> JointObservation:
        sc = self.scenario
        self._rng = rng
        for _ in range(self.MAX_RESET_ATTEMPTS):
            states = self._sample_states(rng)
            if self._valid_placement(states):
                self.states = states
                self.steps = 0
                self.clamp_count = 0
                self.termination = Termination.RUNNING
                return self._observe()
        raise RuntimeError(
            f"could not place {sc.num_robots + sc.num_pedestrians} agents without overlap"
        )

    def _sample_states(self, rng: np.random.Generator) -> list[AgentState]:
        sc = self.scenario
        states: list[AgentState] = []

        # Leader in a 1 m box around (0, -R); goal near (0, +R); heading
        # toward the goal with a little jitter.
        lp = Vec2(rng.uniform(-0.5, 0.5), -sc.circle_radius + rng.uniform(-0.5, 0.5))
        goal = Vec2(rng.uniform(-0.5, 0.5), sc.circle_radius + rng.uniform(-0.5, 0.5))
        heading = wrap_angle(math.atan2(goal.y - lp.y, goal.x - lp.x) + rng.normal(0.0, 0.1))
        states.append(
            AgentState(
                kind=AgentKind.LEADER,
                position=lp,
                velocity=Vec2(0.0, 0.0),
                radius=sc.robot_radius,
                preferred_speed=sc.robot_pref_speed,
                heading=heading,
                goal=goal,
            )
        )
        for offset in sc.formation_offsets:
            fp = Vec2(
                lp.x + offset.x + rng.normal(0.0, 0.1),
                lp.y + offset.y + rng.normal(0.0, 0.1),
            )
            states.append(
                AgentState(
                    kind=AgentKind.FOLLOWER,
                    position=fp,
                    velocity=Vec2(0.0, 0.0),
                    radius=sc.robot_radius,
                    preferred_speed=sc.robot_pref_speed,
                    heading=wrap_angle(heading + rng.normal(0.0, 0.1)),
                    formation_offset=offset,
                )
            )
        for _ in range(sc.num_pedestrians):
            angle = rng.uniform(-math.pi, math.pi)
            pos = Vec2(sc.circle_radius * math.cos(angle), sc.circle_radius * math.sin(angle))
            goal_angle = angle + math.pi + rng.normal(0.0, 0.1)
            pgoal = Vec2(
                sc.circle_radius * math.cos(goal_angle),
                sc.circle_radius * math.sin(goal_angle),
            )
            states.append(
                AgentState(
                    kind=AgentKind.PEDESTRIAN,
                    position=pos,
                    velocity=Vec2(0.0, 0.0),
                    radius=sc.pedestrian_radius,
                    preferred_speed=sc.ped_pref_speed,
                    heading=wrap_angle(math.atan2(pgoal.y - pos.y, pgoal.x - pos.x)),
                    goal=pgoal,
                )
            )
        return states

    def _valid_placement(self, states: Sequence[AgentState]) -> bool:
        # Robots must not overlap each other; pedestrians additionally keep
        # spawn_clearance from every robot so episodes never begin mid-crash.
        clearance = self.scenario.spawn_clearance
        n_robots = self.scenario.num_robots
        for i in range(len(states)):
            for j in range(i + 1, len(states)):
                gap = (states[i].position - states[j].position).norm()
                required = states[i].radius + states[j].radius
                if j >= n_robots > i:
                    required += clearance
                if gap <= required:
                    return False
        return True

    @property
    def done(self) -> bool:
        return self.termination is not Termination.RUNNING

    @property
    def time(self) -> float:
        return self.steps * self.scenario.dt

    def step(self, joint_action: np.ndarray) -> StepOutcome:
        """Advance one interval of dt. ``joint_action`` is (num_robots, 2)."""
        if self.done:
            raise RuntimeError("step() called after the episode ended")
        if self._rng is None:
            raise RuntimeError("reset() must be called before step()")
        sc = self.scenario
        rng = self._rng
        joint_action = np.asarray(joint_action, dtype=np.float64)
        if joint_action.shape != (sc.num_robots, 2):
            raise ValueError(f"joint_action must be ({sc.num_robots}, 2)")

        start = self.states
        new_states: list[AgentState] = []
        for i in range(sc.num_robots):
            # Actuation noise lands before the physical limits clamp it.
            a = add_gaussian_noise(joint_action[i], sc.noise_sigma, rng)
            if abs(a[0]) > sc.v_max or abs(a[1]) > sc.w_max:
                self.clamp_count += 1
            new_states.append(step_kinematics(start[i], a, sc.dt, sc.v_max, sc.w_max))
        for j in range(sc.num_robots, len(start)):
            cmd = pedestrian_policy(j, start, self.orca_params, sc.dt)
            ped = start[j]
            pos = Vec2(ped.position.x + sc.dt * cmd.x, ped.position.y + sc.dt * cmd.y)
            heading = ped.heading if cmd.norm() < 1e-12 else wrap_angle(math.atan2(cmd.y, cmd.x))
            ped = replace(ped, position=pos, velocity=cmd, heading=heading)
            assert ped.goal is not None
            if (ped.goal - pos).norm() < 0.2:
                # Re-target the antipode so the crowd never drains.
                ped = replace(ped, goal=-ped.goal)
            new_states.append(ped)

        min_seps = np.array(
            [min_separation(i, start, new_states) for i in range(sc.num_robots)]
        )
        leader = new_states[0]
        assert leader.goal is not None
        form_errs = np.array(
            [
                formation_error(new_states[1 + k].position, leader.position, offset)
                for k, offset in enumerate(sc.formation_offsets)
            ]
        )
        at_goal = (leader.position - leader.goal).norm() < sc.goal_tolerance

        rewards = np.empty(sc.num_robots)
        rewards[0] = leader_reward(min_seps[0], at_goal)
        for k in range(sc.num_followers):
            rewards[1 + k] = follower_reward(min_seps[1 + k], form_errs[k])

        self.states = new_states
        self.steps += 1
        if bool(np.any(min_seps < 0.0)):
            self.termination = Termination.COLLISION
        elif at_goal:
            self.termination = Termination.GOAL_REACHED
        elif self.steps >= sc.max_steps:
            self.termination = Termination.TIMEOUT
        else:
            self.termination = Termination.RUNNING

        return StepOutcome(
            next_obs=self._observe(),
            extrinsic_rewards=rewards,
            done=self.done,
            termination=self.termination,
            min_separations=min_seps,
            formation_errors=form_errs,
        )

    # --- observations ----------------------------------------------------------

    def _observe(self) -> JointObservation:
        """Noisy per-robot observations + the noiseless flat joint vector."""
        sc = self.scenario
        assert self._rng is not None
        per_robot = []
        for i in range(sc.num_robots):
            clean = build_observation(self.states, i)
            if sc.noise_sigma > 0.0:
                noisy_self = clean.self_full.copy()
                noisy_self[:5] = add_gaussian_noise(noisy_self[:5], sc.noise_sigma, self._rng)
                noisy_others = add_gaussian_noise(
                    clean.others_observable, sc.noise_sigma, self._rng
                )
                per_robot.append(
                    RobotObservation(self_full=noisy_self, others_observable=noisy_others)
                )
            else:
                per_robot.append(clean)
        flat = build_joint_flat(self.states)
        assert flat.size == sc.joint_obs_dim
        return JointObservation(per_robot=tuple(per_robot), flat=flat)


# --- trajectory export --------------------------------------------------------
#
# One JSON record per timestep.  Versioned schema consumed by the plotting
# package; keep field changes backward compatible or bump the version.


def trajectory_record(
    episode: int,
    step: int,
    time: float,
    states: Sequence[AgentState],
    actions: np.ndarray,
    extrinsic_rewards: np.ndarray,
    intrinsic_reward: float,
    intrinsic_terms: dict,
    termination: Termination,
) -> dict:
    leader_goal = states[0].goal
    assert leader_goal is not None
    return {
        "schema_version": TRAJECTORY_SCHEMA_VERSION,
        "episode": episode,
        "t": step,
        "time": time,
        "goal": [leader_goal.x, leader_goal.y],
        "agents": [
            {
                "kind": s.kind.value,
                "x": s.position.x,
                "y": s.position.y,
                "vx": s.velocity.x,
                "vy": s.velocity.y,
                "heading": s.heading,
                "radius": s.radius,
            }
            for s in states
        ],
        "actions": np.asarray(actions).tolist(),
        "extrinsic_rewards": np.asarray(extrinsic_rewards).tolist(),
        "intrinsic_reward": intrinsic_reward,
        "intrinsic_terms": intrinsic_terms,
        "termination": termination.value,
    }


def write_records(path: str, records: Sequence[dict]) -> None:
    with open(path, "w") as f:
        for rec in records:
            f.write(json.dumps(rec) + "\n")


def read_records(path: str) -> list[dict]:
    out = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out
