"""Centralized training, decentralized execution.

The trainer drives episodes, scores every transition with the intrinsic
reward, and runs two interleaved learners: the intrinsic-reward parameters
update every timestep from transition mini-batches (fast time scale), the
per-robot critics and actors update once per episode from trajectory windows
(slow time scale).  Both views draw from one replay buffer.
"""

from __future__ import annotations

import json
import math
import os
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .core import HyperParams, JointObservation, ScenarioConfig, hyperparams_to_dict, scenario_to_dict
from .env import FormationEnv, Termination
from .intrinsic import IntrinsicConfig, IntrinsicReward
from .nn import DivergenceError, GaussianPolicy, Mlp, load_checkpoint, save_checkpoint, soft_update

METRICS_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Transition:
    o_t: JointObservation
    a_t: np.ndarray  # (num_robots, 2), the actions the policies selected
    r_intrinsic: float
    r_extrinsic: np.ndarray
    o_next: JointObservation
    done: bool
    t_index: int

    def __post_init__(self):
        if self.t_index < 0:
            raise ValueError("t_index must be nonnegative")
        if not (math.isfinite(self.r_intrinsic) and np.all(np.isfinite(self.r_extrinsic))):
            raise ValueError("non-finite reward in transition")


@dataclass(frozen=True)
class Trajectory:
    transitions: tuple[Transition, ...]

    def __post_init__(self):
        for i, tr in enumerate(self.transitions):
            if tr.t_index != i:
                raise ValueError("t_index must increase strictly from 0")

    def __len__(self) -> int:
        return len(self.transitions)


@dataclass(frozen=True)
class StepSizes:
    fast: float
    slow: float
    basic_lr: float

    @property
    def fast_lr(self) -> float:
        return self.basic_lr + self.fast

    @property
    def slow_lr(self) -> float:
        return self.basic_lr + self.slow


def step_size_schedule(episode: int, hp: HyperParams) -> StepSizes:
    """Polynomially decaying two-time-scale steps; the basic rate never decays."""
    if episode < 0:
        raise ValueError("episode must be nonnegative")
    fast = hp.fast_gain / (1.0 + episode) ** hp.fast_decay_exponent
    slow = hp.slow_gain / (1.0 + episode) ** hp.slow_decay_exponent
    return StepSizes(fast=fast, slow=slow, basic_lr=hp.basic_lr)


def critic_target(
    r_intrinsic, r_extrinsic_i, done, q_next, gamma: float, dt: float, pref_speed: float
):
    """TD target: r + gamma^(dt * preferred_speed) * Q', no bootstrap at terminals."""
    disc = gamma ** (dt * pref_speed)
    cont = np.where(done, 0.0, disc * np.asarray(q_next, dtype=np.float64))
    return np.asarray(r_intrinsic) + np.asarray(r_extrinsic_i) + cont


class _Episode:
    """Column storage for one stored trajectory."""

    def __init__(self, traj: Trajectory, num_robots: int, robot_dim: int):
        T = len(traj)
        j = traj.transitions[0].o_t.flat.size
        self.length = T
        self.flat_obs = np.empty((T, j))
        self.flat_next = np.empty((T, j))
        self.robot_obs = np.zeros((T, num_robots, robot_dim))
        self.robot_obs_next = np.zeros((T, num_robots, robot_dim))
        self.actions = np.empty((T, num_robots, 2))
        self.r_int = np.empty(T)
        self.r_ext = np.empty((T, num_robots))
        self.done = np.empty(T, dtype=bool)
        for t, tr in enumerate(traj.transitions):
            self.flat_obs[t] = tr.o_t.flat
            self.flat_next[t] = tr.o_next.flat
            for i, ro in enumerate(tr.o_t.per_robot):
                v = ro.vector()
                self.robot_obs[t, i, : v.size] = v
            for i, ro in enumerate(tr.o_next.per_robot):
                v = ro.vector()
                self.robot_obs_next[t, i, : v.size] = v
            self.actions[t] = tr.a_t
            self.r_int[t] = tr.r_intrinsic
            self.r_ext[t] = tr.r_extrinsic
            self.done[t] = tr.done


@dataclass
class TransitionBatch:
    flat_obs: np.ndarray
    flat_next: np.ndarray
    robot_obs: np.ndarray
    robot_obs_next: np.ndarray
    actions: np.ndarray
    r_int: np.ndarray
    r_ext: np.ndarray
    done: np.ndarray

    @property
    def actions_flat(self) -> np.ndarray:
        return self.actions.reshape(self.actions.shape[0], -1)


@dataclass
class TrajectoryBatch:
    """History windows of length H ending at the sampled step.

    Window arrays are zero-padded on the episode-start side; the trailing
    slot is the sampled step itself.
    """

    flat_window: np.ndarray  # (B, H, J)
    flat_next_window: np.ndarray  # (B, H, J), shifted one step forward
    robot_window: np.ndarray  # (B, n, H, D)
    robot_next_window: np.ndarray
    actions: np.ndarray  # (B, n, 2) at the sampled step
    r_int: np.ndarray
    r_ext: np.ndarray
    done: np.ndarray

    @property
    def actions_flat(self) -> np.ndarray:
        return self.actions.reshape(self.actions.shape[0], -1)

    def critic_obs(self) -> np.ndarray:
        return self.flat_window.reshape(self.flat_window.shape[0], -1)

    def critic_obs_next(self) -> np.ndarray:
        return self.flat_next_window.reshape(self.flat_next_window.shape[0], -1)

    def actor_obs(self, robot: int, dim: int) -> np.ndarray:
        w = self.robot_window[:, robot, :, :dim]
        return w.reshape(w.shape[0], -1)

    def actor_obs_next(self, robot: int, dim: int) -> np.ndarray:
        w = self.robot_next_window[:, robot, :, :dim]
        return w.reshape(w.shape[0], -1)


class ReplayBuffer:
    """Whole-episode ring: oldest episodes leave first; never above capacity.

    Two sampling views: uniform transitions (fast learners) and
    episode-uniform trajectory windows (actor-critic).  Every call is logged
    with its consumer tag so tests can prove the views never cross.
    """

    def __init__(self, capacity: int, num_robots: int, robot_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.num_robots = num_robots
        self.robot_dim = robot_dim
        self.episodes: deque[_Episode] = deque()
        self.total = 0
        self._prefix: np.ndarray | None = None
        self.access_log: list[tuple[str, str]] = []

    def add_trajectory(self, traj: Trajectory) -> None:
        if len(traj) == 0:
            raise ValueError("cannot store an empty trajectory")
        if len(traj) > self.capacity:
            raise ValueError("trajectory longer than buffer capacity")
        self.episodes.append(_Episode(traj, self.num_robots, self.robot_dim))
        self.total += len(traj)
        while self.total > self.capacity:
            dropped = self.episodes.popleft()
            self.total -= dropped.length
        self._prefix = None

    def _prefix_sums(self) -> np.ndarray:
        if self._prefix is None:
            self._prefix = np.cumsum([ep.length for ep in self.episodes])
        return self._prefix

    def sample_transitions(
        self, batch_size: int, rng: np.random.Generator, consumer: str = "intrinsic"
    ) -> TransitionBatch | None:
        """Uniform without replacement over stored transitions; None = too few."""
        self.access_log.append((consumer, "transitions"))
        if self.total < batch_size:
            return None
        flat_idx = rng.choice(self.total, size=batch_size, replace=False, shuffle=False)
        prefix = self._prefix_sums()
        ep_idx = np.searchsorted(prefix, flat_idx, side="right")
        offsets = flat_idx - np.concatenate([[0], prefix])[ep_idx]
        return self._gather(ep_idx, offsets)

    def sample_trajectories(
        self,
        batch_size: int,
        history: int,
        rng: np.random.Generator,
        consumer: str = "actor_critic",
    ) -> TrajectoryBatch | None:
        """Episodes uniform, then a step within each; windows never cross episodes."""
        self.access_log.append((consumer, "trajectories"))
        if len(self.episodes) == 0:
            return None
        ep_idx = rng.integers(0, len(self.episodes), size=batch_size)
        lengths = np.array([ep.length for ep in self.episodes])
        steps = (rng.random(batch_size) * lengths[ep_idx]).astype(np.int64)
        return self._gather_windows(ep_idx, steps, history)

    def _gather(self, ep_idx: np.ndarray, offsets: np.ndarray) -> TransitionBatch:
        eps = list(self.episodes)
        b = len(ep_idx)
        j = eps[0].flat_obs.shape[1]
        out = TransitionBatch(
            flat_obs=np.empty((b, j)),
            flat_next=np.empty((b, j)),
            robot_obs=np.empty((b, self.num_robots, self.robot_dim)),
            robot_obs_next=np.empty((b, self.num_robots, self.robot_dim)),
            actions=np.empty((b, self.num_robots, 2)),
            r_int=np.empty(b),
            r_ext=np.empty((b, self.num_robots)),
            done=np.empty(b, dtype=bool),
        )
        for k, (e, s) in enumerate(zip(ep_idx, offsets)):
            ep = eps[e]
            out.flat_obs[k] = ep.flat_obs[s]
            out.flat_next[k] = ep.flat_next[s]
            out.robot_obs[k] = ep.robot_obs[s]
            out.robot_obs_next[k] = ep.robot_obs_next[s]
            out.actions[k] = ep.actions[s]
            out.r_int[k] = ep.r_int[s]
            out.r_ext[k] = ep.r_ext[s]
            out.done[k] = ep.done[s]
        return out

    def _gather_windows(
        self, ep_idx: np.ndarray, steps: np.ndarray, history: int
    ) -> TrajectoryBatch:
        eps = list(self.episodes)
        b = len(ep_idx)
        j = eps[0].flat_obs.shape[1]
        out = TrajectoryBatch(
            flat_window=np.zeros((b, history, j)),
            flat_next_window=np.zeros((b, history, j)),
            robot_window=np.zeros((b, self.num_robots, history, self.robot_dim)),
            robot_next_window=np.zeros((b, self.num_robots, history, self.robot_dim)),
            actions=np.empty((b, self.num_robots, 2)),
            r_int=np.empty(b),
            r_ext=np.empty((b, self.num_robots)),
            done=np.empty(b, dtype=bool),
        )
        for k, (e, s) in enumerate(zip(ep_idx, steps)):
            ep = eps[e]
            for h in range(history):
                src = s - (history - 1) + h
                if src >= 0:
                    out.flat_window[k, h] = ep.flat_obs[src]
                    out.robot_window[k, :, h] = ep.robot_obs[src]
                nxt = src + 1
                if nxt >= 0:
                    if nxt <= s:
                        out.flat_next_window[k, h] = ep.flat_obs[nxt]
                        out.robot_next_window[k, :, h] = ep.robot_obs[nxt]
                    else:
                        out.flat_next_window[k, h] = ep.flat_next[s]
                        out.robot_next_window[k, :, h] = ep.robot_obs_next[s]
            out.actions[k] = ep.actions[s]
            out.r_int[k] = ep.r_int[s]
            out.r_ext[k] = ep.r_ext[s]
            out.done[k] = ep.done[s]
        return out


def robot_obs_dims(scenario: ScenarioConfig) -> list[int]:
    """Per-robot local-observation sizes (leader carries 2 extra goal scalars)."""
    others = scenario.num_robots - 1 + scenario.num_pedestrians
    leader = 9 + 5 * others
    follower = 7 + 5 * others
    return [leader] + [follower] * scenario.num_followers


def critic_update(
    critic: Mlp,
    obs: np.ndarray,
    actions_flat: np.ndarray,
    targets: np.ndarray,
    lr: float,
) -> float:
    """One Adam step on the mean squared TD error; returns the loss."""
    x = np.concatenate([obs, actions_flat], axis=1)
    q, cache = critic.forward(x, want_cache=True)
    err = q[:, 0] - targets
    loss = float(np.mean(err**2))
    grads, _ = critic.backward(cache, (2.0 * err / err.size)[:, None])
    critic.adam_step(grads, lr)
    return loss


def actor_update(
    actor: GaussianPolicy,
    obs: np.ndarray,
    actions: np.ndarray,
    weights: np.ndarray,
    lr: float,
    baseline: bool = True,
    head_reg: float = 0.0,
    weight_norm: bool = False,
) -> float:
    """Score-function ascent on E[log pi(a|tau) * Q] with an optional mean baseline.

    ``weight_norm`` additionally standardizes the weights per batch (a positive
    rescaling of the same ascent direction; keeps the step size insensitive to
    the critic's value scale).
    """
    w = weights - weights.mean() if (baseline or weight_norm) else weights
    if weight_norm:
        w = w / (w.std() + 1e-8)
    logp, cache = actor.log_prob_batch(obs, actions)
    loss = float(-np.mean(logp * w))
    grads = actor.backward_log_prob(cache, -w / w.size, head_reg=head_reg)
    actor.adam_step(grads, lr)
    return loss


class PolicyBundle:
    """Loaded networks + config, enough to act, evaluate, and export."""

    def __init__(
        self,
        scenario: ScenarioConfig,
        hp: HyperParams,
        actors: list[GaussianPolicy],
        intrinsic: IntrinsicReward,
        manifest: dict | None = None,
    ):
        self.scenario = scenario
        self.hp = hp
        self.actors = actors
        self.intrinsic = intrinsic
        self.manifest = manifest or {}

    def act(
        self,
        per_robot_vectors: list[np.ndarray],
        rng: np.random.Generator | None = None,
        deterministic: bool = True,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Decentralized action selection: robot i sees only its own vector."""
        actions = np.empty((len(self.actors), 2))
        log_probs = np.zeros(len(self.actors))
        for i, actor in enumerate(self.actors):
            if deterministic:
                actions[i] = actor.act_deterministic(per_robot_vectors[i])
            else:
                assert rng is not None
                actions[i], log_probs[i] = actor.sample(per_robot_vectors[i], rng)
        return actions, log_probs


class Trainer:
    """Runs the coordinated-exploration training loop for one configuration."""

    def __init__(
        self,
        scenario: ScenarioConfig,
        hp: HyperParams,
        seed: int,
        intrinsic_config: IntrinsicConfig = IntrinsicConfig(),
        out_dir: str | None = None,
    ):
        self.scenario = scenario
        self.hp = hp
        self.seed = seed
        self.out_dir = out_dir

        # One master seed, four documented streams: environment dynamics,
        # policy sampling, network initialization, batch sampling.
        ss = np.random.SeedSequence(seed)
        env_ss, policy_ss, init_ss, sample_ss = ss.spawn(4)
        self.env_rng = np.random.default_rng(env_ss)
        self.policy_rng = np.random.default_rng(policy_ss)
        self.sample_rng = np.random.default_rng(sample_ss)
        init_rng = np.random.default_rng(init_ss)

        self.env = FormationEnv(scenario)
        self.obs_dims = robot_obs_dims(scenario)
        bounds = np.array([scenario.v_max, scenario.w_max])
        h = hp.history_length
        self.actors = [
            GaussianPolicy(dim * h, bounds, hp.actor_hidden, init_rng) for dim in self.obs_dims
        ]
        critic_in = scenario.joint_obs_dim * h + scenario.joint_action_dim
        self.critics = [
            Mlp.from_dims((critic_in, *hp.critic_hidden, 1), init_rng)
            for _ in range(scenario.num_robots)
        ]
        self.target_critics = [c.copy() for c in self.critics]
        self.intrinsic = IntrinsicReward(
            scenario.joint_obs_dim,
            scenario.joint_action_dim,
            init_rng,
            alpha=hp.alpha_scale,
            lambda_reg=hp.lambda_reg,
            beta_init=hp.beta_init,
            target_entropy=hp.target_entropy,
            config=intrinsic_config,
        )
        self.buffer = ReplayBuffer(hp.buffer_capacity, scenario.num_robots, max(self.obs_dims))
        self.counters = {
            "env_steps": 0,
            "intrinsic_updates": 0,
            "intrinsic_skips": 0,
            "critic_updates": 0,
            "actor_updates": 0,
            "episodes": 0,
        }
        self.episodes_done = 0

    # --- acting ----------------------------------------------------------------

    def _window_vector(self, history: list[np.ndarray], dim: int) -> np.ndarray:
        h = self.hp.history_length
        out = np.zeros(h * dim)
        tail = history[-h:]
        start = h - len(tail)
        for k, vec in enumerate(tail):
            out[(start + k) * dim : (start + k + 1) * dim] = vec
        return out

    def select_actions(self, obs: JointObservation, histories: list[list[np.ndarray]]):
        """Stochastic decentralized action selection from each robot's own view."""
        actions = np.empty((len(self.actors), 2))
        log_probs = np.empty(len(self.actors))
        for i, actor in enumerate(self.actors):
            vec = obs.per_robot[i].vector()
            histories[i].append(vec)
            if self.hp.history_length == 1:
                x = vec
            else:
                x = self._window_vector(histories[i], self.obs_dims[i])
            actions[i], log_probs[i] = actor.sample(x, self.policy_rng)
        return actions, log_probs

    # --- updates ---------------------------------------------------------------

    def _fast_updates(self, lr: float) -> bool:
        """Per-timestep intrinsic learners on a transition mini-batch."""
        batch = self.buffer.sample_transitions(
            self.hp.batch_size, self.sample_rng, consumer="intrinsic"
        )
        if batch is None:
            self.counters["intrinsic_skips"] += 1
            return False
        self.intrinsic.update_inverse_dynamics(
            batch.flat_obs, batch.actions_flat, batch.flat_next, lr
        )
        self.intrinsic.update_predictor(batch.flat_obs, lr)
        # Temperature matches entropy of fresh policy samples at buffer states.
        joint_logp = np.zeros(batch.flat_obs.shape[0])
        for i, actor in enumerate(self.actors):
            if self.hp.history_length == 1:
                obs_i = batch.robot_obs[:, i, : self.obs_dims[i]]
            else:
                # Transition tuples carry no history; repeat the current
                # observation across the window for the entropy estimate.
                obs_i = np.tile(batch.robot_obs[:, i, : self.obs_dims[i]], self.hp.history_length)
            _, lp = actor.sample_batch(obs_i, self.policy_rng)
            joint_logp += lp
        self.intrinsic.update_temperature(joint_logp, lr)
        self.counters["intrinsic_updates"] += 1
        return True

    def _slow_updates(self, lr: float) -> bool:
        """Per-episode actor-critic updates on trajectory windows."""
        batch = self.buffer.sample_trajectories(
            self.hp.batch_size, self.hp.history_length, self.sample_rng, consumer="actor_critic"
        )
        if batch is None:
            return False
        sc = self.scenario
        obs = batch.critic_obs()
        obs_next = batch.critic_obs_next()
        a_flat = batch.actions_flat

        # Next joint action from the current actors, per robot's own view.
        a_next = np.empty_like(batch.actions)
        for i, actor in enumerate(self.actors):
            a_next[:, i], _ = actor.sample_batch(
                batch.actor_obs_next(i, self.obs_dims[i]), self.policy_rng
            )
        a_next_flat = a_next.reshape(a_next.shape[0], -1)

        for i in range(sc.num_robots):
            q_next = self.target_critics[i].forward(
                np.concatenate([obs_next, a_next_flat], axis=1)
            )[:, 0]
            y = critic_target(
                batch.r_int,
                batch.r_ext[:, i],
                batch.done,
                q_next,
                self.hp.gamma,
                sc.dt,
                sc.robot_pref_speed,
            )
            critic_update(self.critics[i], obs, a_flat, y, lr)
            self.counters["critic_updates"] += 1
        for i in range(sc.num_robots):
            q = self.critics[i].forward(np.concatenate([obs, a_flat], axis=1))[:, 0]
            actor_update(
                self.actors[i],
                batch.actor_obs(i, self.obs_dims[i]),
                batch.actions[:, i],
                q,
                lr * self.hp.actor_lr_scale,
                baseline=self.hp.actor_baseline,
                head_reg=self.hp.actor_head_reg,
                weight_norm=self.hp.actor_weight_norm,
            )
            self.counters["actor_updates"] += 1
        return True

    def _sync_targets(self) -> None:
        for critic, target in zip(self.critics, self.target_critics):
            soft_update(target, critic, self.hp.target_update_rate)

    # --- episodes ---------------------------------------------------------------

    def run_episode(self, episode_index: int) -> dict:
        sizes = step_size_schedule(episode_index, self.hp)
        obs = self.env.reset(self.env_rng)
        self.intrinsic.begin_episode()
        histories: list[list[np.ndarray]] = [[] for _ in self.actors]
        transitions: list[Transition] = []
        returns = np.zeros(self.scenario.num_robots)
        intrinsic_sum = 0.0
        afe_sum = 0.0
        logp_sum = 0.0
        min_sep = math.inf
        t = 0
        while not self.env.done:
            actions, log_probs = self.select_actions(obs, histories)
            outcome = self.env.step(actions)
            r_int, _terms = self.intrinsic.compute(
                obs.flat, outcome.next_obs.flat, float(np.sum(log_probs))
            )
            transitions.append(
                Transition(
                    o_t=obs,
                    a_t=actions,
                    r_intrinsic=r_int,
                    r_extrinsic=outcome.extrinsic_rewards,
                    o_next=outcome.next_obs,
                    done=outcome.done,
                    t_index=t,
                )
            )
            returns += outcome.extrinsic_rewards
            intrinsic_sum += r_int
            logp_sum += float(np.sum(log_probs))
            afe_sum += float(np.mean(outcome.formation_errors))
            min_sep = min(min_sep, float(np.min(outcome.min_separations)))
            self.counters["env_steps"] += 1
            self._fast_updates(sizes.fast_lr)
            obs = outcome.next_obs
            t += 1

        self.buffer.add_trajectory(Trajectory(tuple(transitions)))
        self._slow_updates(sizes.slow_lr)
        if (episode_index + 1) % self.hp.target_update_interval == 0:
            self._sync_targets()
        self.counters["episodes"] += 1
        self.episodes_done = episode_index + 1

        term = self.env.termination
        return {
            "schema_version": METRICS_SCHEMA_VERSION,
            "episode": episode_index,
            "steps": t,
            "nav_time": t * self.scenario.dt,
            "success": term is Termination.GOAL_REACHED,
            "collision": term is Termination.COLLISION,
            "returns": returns.tolist(),
            "intrinsic_mean": intrinsic_sum / max(t, 1),
            "joint_log_prob_mean": logp_sum / max(t, 1),
            "afe": afe_sum / max(t, 1),
            "min_separation": min_sep,
            "beta": self.intrinsic.beta,
            "kappa_fast": sizes.fast,
            "kappa_slow": sizes.slow,
        }

    def train(self, episodes: int, metrics_path: str | None = None) -> list[dict]:
        """Run the full loop; returns (and optionally streams) per-episode metrics."""
        metrics: list[dict] = []
        sink = open(metrics_path, "w") if metrics_path else None
        try:
            for m in range(episodes):
                try:
                    record = self.run_episode(m)
                except DivergenceError as exc:
                    self._dump_diagnostics(str(exc))
                    raise
                metrics.append(record)
                if sink:
                    sink.write(json.dumps(record) + "\n")
        finally:
            if sink:
                sink.close()
        return metrics

    def _dump_diagnostics(self, reason: str) -> None:
        info = {
            "reason": reason,
            "episode": self.episodes_done,
            "counters": self.counters,
            "beta": self.intrinsic.beta,
            "param_norms": {
                f"actor{i}": float(
                    sum(np.linalg.norm(v) for v in a.named_params().values())
                )
                for i, a in enumerate(self.actors)
            },
        }
        path = os.path.join(self.out_dir or ".", "divergence_dump.json")
        with open(path, "w") as f:
            json.dump(info, f, indent=2)

    # --- persistence --------------------------------------------------------------

    def named_params(self) -> dict[str, np.ndarray]:
        arrays: dict[str, np.ndarray] = {}
        for i, actor in enumerate(self.actors):
            arrays.update(actor.named_params(f"actor{i}/"))
        for i, critic in enumerate(self.critics):
            arrays.update(critic.named_params(f"critic{i}/"))
        for i, target in enumerate(self.target_critics):
            arrays.update(target.named_params(f"target_critic{i}/"))
        arrays.update(self.intrinsic.named_params())
        return arrays

    def save(self, path: str) -> None:
        manifest = {
            "format": "formnav-checkpoint",
            "version": 1,
            "scenario": scenario_to_dict(self.scenario),
            "hyperparams": hyperparams_to_dict(self.hp),
            "seed": self.seed,
            "episodes_done": self.episodes_done,
            "counters": self.counters,
        }
        save_checkpoint(path, self.named_params(), manifest)

    def bundle(self) -> PolicyBundle:
        return PolicyBundle(self.scenario, self.hp, self.actors, self.intrinsic)


def load_policy(path: str) -> PolicyBundle:
    """Rebuild actors + intrinsic nets from a checkpoint file."""
    from .core import hyperparams_from_dict, scenario_from_dict

    arrays, manifest = load_checkpoint(path)
    if manifest.get("format") != "formnav-checkpoint":
        raise ValueError(f"{path} is not a formnav checkpoint")
    scenario = scenario_from_dict(manifest["scenario"])
    hp = hyperparams_from_dict(manifest["hyperparams"])
    dims = robot_obs_dims(scenario)
    bounds = np.array([scenario.v_max, scenario.w_max])
    rng = np.random.default_rng(0)
    actors = []
    for i, dim in enumerate(dims):
        actor = GaussianPolicy(dim * hp.history_length, bounds, hp.actor_hidden, rng)
        actor.load_named_params(arrays, f"actor{i}/")
        actors.append(actor)
    intrinsic = IntrinsicReward(
        scenario.joint_obs_dim,
        scenario.joint_action_dim,
        rng,
        alpha=hp.alpha_scale,
        lambda_reg=hp.lambda_reg,
        beta_init=hp.beta_init,
        target_entropy=hp.target_entropy,
    )
    intrinsic.load_named_params(arrays)
    return PolicyBundle(scenario, hp, actors, intrinsic, manifest)
