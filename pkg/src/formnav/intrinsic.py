"""Self-learning intrinsic reward: distillation novelty, its positive
differential, an episodic visitation bonus from a regularized inverse Gram
matrix, and an adaptive joint-entropy term.

Three fast-time-scale learners live here: the novelty predictor, the inverse
dynamics pair that shapes the state embedding, and the entropy temperature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .nn import Mlp

EMBED_DIM = 16


@dataclass(frozen=True)
class IntrinsicConfig:
    """Knobs for ablation variants; the defaults leave the reward intact.

    override_novelty / override_bonus pin the novelty differential or the
    episodic bonus to a constant; zero_entropy drops the entropy term;
    zero_state_term drops the whole bonus-times-novelty product.
    """

    override_novelty: float | None = None
    override_bonus: float | None = None
    zero_entropy: bool = False
    zero_state_term: bool = False
    scale: float = 1.0


@dataclass
class RndPair:
    """Frozen random target embedding + trainable predictor (same architecture)."""

    target: Mlp
    predictor: Mlp

    @classmethod
    def create(cls, joint_obs_dim: int, rng: np.random.Generator) -> "RndPair":
        # Independent draws; the target never trains after this.
        target = Mlp.from_dims((joint_obs_dim, 128, EMBED_DIM), rng)
        predictor = Mlp.from_dims((joint_obs_dim, 128, EMBED_DIM), rng)
        return cls(target=target, predictor=predictor)


@dataclass
class EmbeddingNets:
    """State embedding h and the inverse-dynamics head g that trains it."""

    h: Mlp
    g: Mlp

    @classmethod
    def create(
        cls, joint_obs_dim: int, joint_action_dim: int, rng: np.random.Generator
    ) -> "EmbeddingNets":
        h = Mlp.from_dims((joint_obs_dim, 128, 128, 128, EMBED_DIM), rng)
        g = Mlp.from_dims((2 * EMBED_DIM, 128, 128, 128, joint_action_dim), rng)
        return cls(h=h, g=g)


class EpisodicMemory:
    """Regularized inverse Gram matrix of this episode's state embeddings.

    Kept directly in inverse form via rank-one updates; re-symmetrized every
    insert so the quadratic form stays positive definite.
    """

    def __init__(self, dim: int = EMBED_DIM, lambda_reg: float = 0.1):
        if lambda_reg <= 0.0:
            raise ValueError("lambda_reg must be positive")
        self.dim = dim
        self.lambda_reg = lambda_reg
        self.inv_gram = np.eye(dim) / lambda_reg
        self.count = 0

    def reset(self) -> None:
        self.inv_gram = np.eye(self.dim) / self.lambda_reg
        self.count = 0


def novelty(rnd: RndPair, o_flat: np.ndarray) -> float:
    """Distillation error: Euclidean distance between predictor and target."""
    return float(np.linalg.norm(rnd.predictor.forward(o_flat) - rnd.target.forward(o_flat)))


def novelty_differential(n_next: float, n_curr: float, alpha: float) -> float:
    """Positive part of the novelty change between consecutive joint states."""
    return max(n_next - alpha * n_curr, 0.0)


def episodic_bonus(mem: EpisodicMemory, h_vec: np.ndarray) -> float:
    """Quadratic form under the memory as it stands (before inserting h_vec)."""
    return float(h_vec @ mem.inv_gram @ h_vec)


def memory_insert(mem: EpisodicMemory, h_vec: np.ndarray) -> None:
    """Rank-one inverse update for the Gram matrix + h h^T."""
    ah = mem.inv_gram @ h_vec
    denom = 1.0 + float(h_vec @ ah)
    mem.inv_gram -= np.outer(ah, ah) / denom
    mem.inv_gram = 0.5 * (mem.inv_gram + mem.inv_gram.T)
    mem.count += 1


def entropy_term(joint_log_prob: float, beta: float) -> float:
    """-beta times the joint log density of the executed joint action."""
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    return -beta * joint_log_prob


def intrinsic_reward(b_s: float, n_d: float, c_s: float) -> float:
    """sqrt(2 b_s) * n_d + c_s."""
    return math.sqrt(2.0 * b_s) * n_d + c_s


LOG_BETA_MIN = math.log(1e-6)
LOG_BETA_MAX = 0.0  # beta capped at 1: keeps the entropy term commensurate


@dataclass
class Temperature:
    """Entropy temperature optimized in log space toward a target entropy."""

    log_beta: float
    target_entropy: float

    @property
    def beta(self) -> float:
        return math.exp(self.log_beta)

    def update(self, joint_log_probs: np.ndarray, lr: float) -> None:
        """Descend E[-beta log pi - beta H_target] w.r.t. log beta.

        Entropy above target shrinks beta; below target grows it.  log beta is
        clamped so a transient entropy collapse cannot blow up the intrinsic
        reward scale.
        """
        empirical_entropy = float(-np.mean(joint_log_probs))
        grad = self.beta * (empirical_entropy - self.target_entropy)
        self.log_beta = min(max(self.log_beta - lr * grad, LOG_BETA_MIN), LOG_BETA_MAX)


class IntrinsicReward:
    """Bundles the networks, memory, and temperature behind one interface.

    ``compute`` scores a transition (and records the term decomposition);
    ``update_*`` are the per-timestep fast learners.
    """

    def __init__(
        self,
        joint_obs_dim: int,
        joint_action_dim: int,
        rng: np.random.Generator,
        *,
        alpha: float = 0.5,
        lambda_reg: float = 0.1,
        beta_init: float = 0.01,
        target_entropy: float = -6.0,
        config: IntrinsicConfig = IntrinsicConfig(),
    ):
        self.rnd = RndPair.create(joint_obs_dim, rng)
        self.embed = EmbeddingNets.create(joint_obs_dim, joint_action_dim, rng)
        self.memory = EpisodicMemory(EMBED_DIM, lambda_reg)
        self.temperature = Temperature(
            log_beta=math.log(beta_init), target_entropy=target_entropy
        )
        self.alpha = alpha
        self.config = config
        self._target_hash = self.rnd.target.params_hash()

    @property
    def beta(self) -> float:
        return self.temperature.beta

    def begin_episode(self) -> None:
        # Only the episodic memory resets; novelty and embeddings are life-long.
        self.memory.reset()

    def compute(
        self, o_flat: np.ndarray, o_next_flat: np.ndarray, joint_log_prob: float
    ) -> tuple[float, dict]:
        cfg = self.config
        n_curr = novelty(self.rnd, o_flat)
        n_next = novelty(self.rnd, o_next_flat)
        n_d = novelty_differential(n_next, n_curr, self.alpha)
        h_vec = self.embed.h.forward(o_flat)
        b_s = episodic_bonus(self.memory, h_vec)
        memory_insert(self.memory, h_vec)
        c_s = entropy_term(joint_log_prob, self.beta)

        if cfg.override_novelty is not None:
            n_d = cfg.override_novelty
        if cfg.override_bonus is not None:
            b_s = cfg.override_bonus
        if cfg.zero_entropy:
            c_s = 0.0
        state_term = 0.0 if cfg.zero_state_term else math.sqrt(2.0 * b_s) * n_d
        total = cfg.scale * (state_term + c_s)
        terms = {
            "episodic_bonus": b_s,
            "novelty_diff": n_d,
            "entropy_term": c_s,
            "state_term": state_term,
            "total": total,
        }
        return total, terms

    # --- fast-time-scale learners ---------------------------------------------

    def update_predictor(self, obs_batch: np.ndarray, lr: float) -> float:
        """One Adam step minimizing mean distillation error; target untouched."""
        if obs_batch.shape[0] == 0:
            raise ValueError("empty batch")
        if lr == 0.0:
            pred = self.rnd.predictor.forward(obs_batch)
            targ = self.rnd.target.forward(obs_batch)
            return float(np.mean(np.linalg.norm(pred - targ, axis=1)))
        pred, cache = self.rnd.predictor.forward(obs_batch, want_cache=True)
        targ = self.rnd.target.forward(obs_batch)
        err = pred - targ
        norms = np.linalg.norm(err, axis=1, keepdims=True)
        loss = float(np.mean(norms))
        safe = np.maximum(norms, 1e-12)
        grad_out = err / safe / err.shape[0]
        grads, _ = self.rnd.predictor.backward(cache, grad_out)
        self.rnd.predictor.adam_step(grads, lr)
        return loss

    def update_inverse_dynamics(
        self,
        obs_batch: np.ndarray,
        action_batch: np.ndarray,
        obs_next_batch: np.ndarray,
        lr: float,
    ) -> float:
        """Joint Adam step on h and g for the inverse-dynamics squared error."""
        if obs_batch.shape[0] == 0:
            raise ValueError("empty batch")
        b = obs_batch.shape[0]
        z_t, cache_t = self.embed.h.forward(obs_batch, want_cache=True)
        z_n, cache_n = self.embed.h.forward(obs_next_batch, want_cache=True)
        pred, cache_g = self.embed.g.forward(
            np.concatenate([z_t, z_n], axis=1), want_cache=True
        )
        err = pred - action_batch
        loss = float(np.mean(np.sum(err**2, axis=1)))
        if lr == 0.0:
            return loss
        grads_g, grad_in = self.embed.g.backward(cache_g, 2.0 * err / b)
        grads_h, _ = self.embed.h.backward(cache_t, grad_in[:, :EMBED_DIM])
        grads_h2, _ = self.embed.h.backward(cache_n, grad_in[:, EMBED_DIM:])
        Mlp.add_grads(grads_h, grads_h2)
        self.embed.h.adam_step(grads_h, lr)
        self.embed.g.adam_step(grads_g, lr)
        return loss

    def update_temperature(self, joint_log_probs: np.ndarray, lr: float) -> None:
        if joint_log_probs.shape[0] == 0:
            raise ValueError("empty batch")
        self.temperature.update(joint_log_probs, lr)

    def check_target_frozen(self) -> bool:
        return self.rnd.target.params_hash() == self._target_hash

    # --- persistence ------------------------------------------------------------

    def named_params(self) -> dict[str, np.ndarray]:
        out = {}
        out.update(self.rnd.target.named_params("intrinsic/target/"))
        out.update(self.rnd.predictor.named_params("intrinsic/predictor/"))
        out.update(self.embed.h.named_params("intrinsic/embed_h/"))
        out.update(self.embed.g.named_params("intrinsic/embed_g/"))
        out["intrinsic/log_beta"] = np.array([self.temperature.log_beta])
        return out

    def load_named_params(self, arrays: dict[str, np.ndarray]) -> None:
        self.rnd.target.load_named_params(arrays, "intrinsic/target/")
        self.rnd.predictor.load_named_params(arrays, "intrinsic/predictor/")
        self.embed.h.load_named_params(arrays, "intrinsic/embed_h/")
        self.embed.g.load_named_params(arrays, "intrinsic/embed_g/")
        self.temperature.log_beta = float(arrays["intrinsic/log_beta"][0])
        self._target_hash = self.rnd.target.params_hash()

    def with_config(self, config: IntrinsicConfig) -> "IntrinsicReward":
        self.config = config
        return self
