"""Domain types, planar geometry, configuration, and observation construction.

Everything downstream (environment, pedestrian controller, trainer) builds on
the types in this module.  All value types are immutable after construction
and safe to share between workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    a = math.fmod(a + math.pi, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    return a - math.pi


@dataclass(frozen=True, slots=True)
class Vec2:
    """A point or vector in the plane (meters, or m/s for velocities)."""

    x: float
    y: float

    def __post_init__(self):
        # Never store NaN/Inf; catching it at construction keeps the blame local.
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite Vec2 components ({self.x}, {self.y})")

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, s: float) -> "Vec2":
        return Vec2(self.x * s, self.y * s)

    __rmul__ = __mul__

    def __neg__(self) -> "Vec2":
        return Vec2(-self.x, -self.y)

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: "Vec2") -> float:
        """2-D cross product (signed area)."""
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def norm_sq(self) -> float:
        return self.x * self.x + self.y * self.y

    def normalized(self) -> "Vec2":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return Vec2(self.x / n, self.y / n)

    def perp(self) -> "Vec2":
        """Counter-clockwise perpendicular."""
        return Vec2(-self.y, self.x)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=np.float64)


class AgentKind(Enum):
    LEADER = "leader"
    FOLLOWER = "follower"
    PEDESTRIAN = "pedestrian"


@dataclass(frozen=True, slots=True)
class AgentState:
    """Full kinematic + hidden state of one robot or pedestrian.

    The observable component is [p_x, p_y, v_x, v_y, radius].  The hidden
    component is [goal_x, goal_y, preferred_speed, heading] for the leader and
    [preferred_speed, heading] for followers and pedestrians.
    """

    kind: AgentKind
    position: Vec2
    velocity: Vec2
    radius: float
    preferred_speed: float
    heading: float
    goal: Vec2 | None = None
    formation_offset: Vec2 | None = None

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("radius must be positive")
        if self.preferred_speed <= 0.0:
            raise ValueError("preferred_speed must be positive")
        if not -math.pi <= self.heading < math.pi:
            raise ValueError(f"heading {self.heading} outside [-pi, pi)")
        if self.kind is AgentKind.LEADER and self.goal is None:
            raise ValueError("leader requires a goal")
        if self.kind is AgentKind.FOLLOWER and self.formation_offset is None:
            raise ValueError("follower requires a formation offset")

    @property
    def is_robot(self) -> bool:
        return self.kind is not AgentKind.PEDESTRIAN

    def observable(self) -> np.ndarray:
        """The 5-vector [p_x, p_y, v_x, v_y, r] any other agent can sense."""
        return np.array(
            [self.position.x, self.position.y, self.velocity.x, self.velocity.y, self.radius],
            dtype=np.float64,
        )

    def hidden(self) -> np.ndarray:
        """Hidden component: leader carries its goal, everyone their speed/heading."""
        if self.kind is AgentKind.LEADER:
            assert self.goal is not None
            return np.array(
                [self.goal.x, self.goal.y, self.preferred_speed, self.heading], dtype=np.float64
            )
        return np.array([self.preferred_speed, self.heading], dtype=np.float64)

    def full(self) -> np.ndarray:
        """[observable, hidden]: 9 scalars for the leader, 7 otherwise."""
        return np.concatenate([self.observable(), self.hidden()])


@dataclass(frozen=True)
class RobotObservation:
    """One robot's local observation: own full state + every other agent's 5-vector.

    ``others_observable`` is a (k, 5) array whose rows follow the canonical
    agent order (robots by index, then pedestrians by index), skipping self.
    """

    self_full: np.ndarray
    others_observable: np.ndarray

    def vector(self) -> np.ndarray:
        """Flattened form fed to the robot's own policy network."""
        return np.concatenate([self.self_full, self.others_observable.ravel()])

    @property
    def dim(self) -> int:
        return self.self_full.size + self.others_observable.size


@dataclass(frozen=True)
class JointObservation:
    """Per-robot local observations plus the flat joint vector.

    ``per_robot`` carries what each robot actually senses (the environment adds
    observation noise to the observable entries before constructing these).
    ``flat`` is the compact joint vector consumed by the intrinsic-reward and
    critic networks; it is built from the noiseless world state, which is only
    available to the centralized trainer.

    Flat layout: [leader s_o (5), leader goal (2), follower s_o (5 each),
    pedestrian s_o (5 each)]; 42 scalars for the default scenario.
    """

    per_robot: tuple[RobotObservation, ...]
    flat: np.ndarray


def joint_flat_dim(num_followers: int, num_pedestrians: int) -> int:
    """Length of the flat joint-observation vector under the documented layout."""
    return 7 + 5 * num_followers + 5 * num_pedestrians


def build_observation(world_states: Sequence[AgentState], robot_index: int) -> RobotObservation:
    """Local observation of robot ``robot_index`` (pure function of world state)."""
    agent = world_states[robot_index]
    if not agent.is_robot:
        raise ValueError(f"agent {robot_index} is a pedestrian, not a robot")
    others = [s.observable() for j, s in enumerate(world_states) if j != robot_index]
    others_arr = (
        np.stack(others) if others else np.zeros((0, 5), dtype=np.float64)
    )
    return RobotObservation(self_full=agent.full(), others_observable=others_arr)


def build_joint_flat(world_states: Sequence[AgentState]) -> np.ndarray:
    """Flat joint vector: leader s_o + leader goal, then every other agent's s_o."""
    leader = world_states[0]
    if leader.kind is not AgentKind.LEADER:
        raise ValueError("world_states[0] must be the leader")
    assert leader.goal is not None
    parts = [leader.observable(), leader.goal.as_array()]
    parts.extend(s.observable() for s in world_states[1:])
    return np.concatenate(parts)


def build_joint_observation(
    world_states: Sequence[AgentState], scenario: "ScenarioConfig"
) -> JointObservation:
    """Noiseless joint observation for the configured scenario."""
    n_robots = scenario.num_robots
    expected = n_robots + scenario.num_pedestrians
    if len(world_states) != expected:
        raise ValueError(f"expected {expected} agents, got {len(world_states)}")
    per_robot = tuple(build_observation(world_states, i) for i in range(n_robots))
    flat = build_joint_flat(world_states)
    assert flat.size == scenario.joint_obs_dim
    return JointObservation(per_robot=per_robot, flat=flat)


def add_gaussian_noise(vector: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Return vector + N(0, sigma^2) i.i.d. per component; sigma=0 is the identity."""
    if sigma < 0.0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0.0:
        return vector
    return vector + rng.normal(0.0, sigma, size=vector.shape)


def _as_vec2_tuple(offsets) -> tuple[Vec2, ...]:
    out = []
    for o in offsets:
        out.append(o if isinstance(o, Vec2) else Vec2(float(o[0]), float(o[1])))
    return tuple(out)


@dataclass(frozen=True)
class ScenarioConfig:
    """World geometry, agent counts, kinematic limits, and noise level."""

    num_followers: int = 2
    num_pedestrians: int = 5
    circle_radius: float = 5.0
    formation_offsets: tuple[Vec2, ...] = (Vec2(-1.0, 0.8), Vec2(-1.0, -0.8))
    robot_radius: float = 0.3
    pedestrian_radius: float = 0.3
    v_max: float = 1.0
    w_max: float = 1.0
    dt: float = 0.25
    time_limit: float = 21.0
    goal_tolerance: float = 0.3
    noise_sigma: float = 0.05
    robot_pref_speed: float = 1.0
    ped_pref_speed: float = 1.0
    spawn_clearance: float = 1.0
    orca_time_horizon: float = 3.0
    orca_neighbor_dist: float = 10.0
    orca_max_neighbors: int = 10
    orca_safety_margin: float = 0.1

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.time_limit < self.dt:
            raise ValueError("time_limit must cover at least one step")
        if len(self.formation_offsets) != self.num_followers:
            raise ValueError("need one formation offset per follower")
        if self.noise_sigma < 0.0:
            raise ValueError("noise_sigma must be nonnegative")
        object.__setattr__(self, "formation_offsets", _as_vec2_tuple(self.formation_offsets))

    @property
    def num_robots(self) -> int:
        return self.num_followers + 1

    @property
    def max_steps(self) -> int:
        return math.ceil(self.time_limit / self.dt)

    @property
    def joint_obs_dim(self) -> int:
        return joint_flat_dim(self.num_followers, self.num_pedestrians)

    @property
    def joint_action_dim(self) -> int:
        return 2 * self.num_robots


@dataclass(frozen=True)
class HyperParams:
    """Training hyperparameters; defaults follow the published configuration."""

    gamma: float = 0.99
    alpha_scale: float = 0.5
    lambda_reg: float = 0.1
    beta_init: float = 0.01
    target_entropy: float = -6.0  # -2 nats per robot action for the default team
    batch_size: int = 256
    buffer_capacity: int = 200_000
    basic_lr: float = 5e-4
    max_episodes: int = 80_000
    fast_decay_exponent: float = 0.6
    slow_decay_exponent: float = 0.9
    fast_gain: float = 1e-3
    slow_gain: float = 1e-4
    target_update_interval: int = 1
    target_update_rate: float = 0.005
    history_length: int = 1
    actor_hidden: tuple[int, ...] = (256, 256)
    critic_hidden: tuple[int, ...] = (256, 256)
    actor_baseline: bool = True
    actor_lr_scale: float = 1.0
    actor_weight_norm: bool = True
    actor_head_reg: float = 1e-2
    intrinsic_scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.alpha_scale <= 0.0 or self.lambda_reg <= 0.0 or self.beta_init <= 0.0:
            raise ValueError("alpha_scale, lambda_reg, beta_init must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.history_length < 1:
            raise ValueError("history_length must be at least 1")
        object.__setattr__(self, "actor_hidden", tuple(self.actor_hidden))
        object.__setattr__(self, "critic_hidden", tuple(self.critic_hidden))


def _from_dict(cls, data: dict):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**data)


def scenario_from_dict(data: dict) -> ScenarioConfig:
    return _from_dict(ScenarioConfig, data)


def hyperparams_from_dict(data: dict) -> HyperParams:
    return _from_dict(HyperParams, data)


def scenario_to_dict(sc: ScenarioConfig) -> dict:
    d = {f.name: getattr(sc, f.name) for f in fields(sc)}
    d["formation_offsets"] = [[v.x, v.y] for v in sc.formation_offsets]
    return d


def hyperparams_to_dict(hp: HyperParams) -> dict:
    d = {f.name: getattr(hp, f.name) for f in fields(hp)}
    d["actor_hidden"] = list(hp.actor_hidden)
    d["critic_hidden"] = list(hp.critic_hidden)
    return d


def load_config(path: str) -> tuple[ScenarioConfig, HyperParams]:
    """Load a JSON config file with "scenario" and "hyperparams" sections.

    Keys mirror the ScenarioConfig / HyperParams field names; missing keys
    fall back to the defaults above.
    """
    with open(path) as f:
        data = json.load(f)
    unknown = set(data) - {"scenario", "hyperparams"}
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    scenario = scenario_from_dict(data.get("scenario", {}))
    hp = hyperparams_from_dict(data.get("hyperparams", {}))
    return scenario, hp


def dump_config(scenario: ScenarioConfig, hp: HyperParams, path: str) -> None:
    """Write the fully-resolved configuration (for run reproducibility)."""
    with open(path, "w") as f:
        json.dump(
            {"scenario": scenario_to_dict(scenario), "hyperparams": hyperparams_to_dict(hp)},
            f,
            indent=2,
        )
        f.write("\n")


def with_overrides(cfg, **overrides):
    """Dataclass copy with keyword overrides (None values are ignored)."""
    cleaned = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **cleaned) if cleaned else cfg
