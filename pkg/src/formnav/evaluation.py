"""Evaluation harness: rollout metrics, ablation wiring, and parameter sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .core import HyperParams, ScenarioConfig
from .env import FormationEnv, Termination, trajectory_record
from .intrinsic import IntrinsicConfig
from .marl import PolicyBundle, Trainer


@dataclass(frozen=True)
class Metrics:
    success_rate: float
    collision_rate: float
    nav_time: float  # mean seconds over successful episodes (NaN when none)
    afe: float  # average formation error

    def as_dict(self) -> dict:
        return {
            "success_rate": self.success_rate,
            "collision_rate": self.collision_rate,
            "nav_time": self.nav_time,
            "afe": self.afe,
        }


class AblationVariant(Enum):
    FULL = "full"
    EB_PE = "eb_pe"  # novelty differential pinned to 1
    NF_PE = "nf_pe"  # episodic bonus pinned to 1/2
    NF_EB = "nf_eb"  # entropy term dropped
    ENTROPY_ONLY = "entropy_only"  # whole bonus-novelty product dropped


def apply_ablation(variant: AblationVariant, config: IntrinsicConfig) -> IntrinsicConfig:
    """Neutralize exactly one term: multiplicative factors go to 1, additive to 0."""
    if variant is AblationVariant.FULL:
        return config
    if variant is AblationVariant.EB_PE:
        return replace(config, override_novelty=1.0)
    if variant is AblationVariant.NF_PE:
        return replace(config, override_bonus=0.5)
    if variant is AblationVariant.NF_EB:
        return replace(config, zero_entropy=True)
    if variant is AblationVariant.ENTROPY_ONLY:
        return replace(config, zero_state_term=True)
    raise ValueError(f"unknown variant {variant}")


@dataclass
class EpisodeSummary:
    termination: Termination
    steps: int
    nav_time: float
    afe: float
    records: list[dict]


def rollout_episode(
    bundle: PolicyBundle,
    env: FormationEnv,
    rng: np.random.Generator,
    episode_id: int = 0,
    deterministic: bool = True,
    collect_records: bool = False,
) -> EpisodeSummary:
    """One policy rollout; optionally collects export records with the
    per-step intrinsic-reward decomposition."""
    obs = env.reset(rng)
    bundle.intrinsic.begin_episode()
    afe_sum = 0.0
    records: list[dict] = []
    t = 0
    while not env.done:
        vectors = [ro.vector() for ro in obs.per_robot]
        actions, log_probs = bundle.act(vectors, rng, deterministic=deterministic)
        outcome = env.step(actions)
        r_int, terms = bundle.intrinsic.compute(
            obs.flat, outcome.next_obs.flat, float(np.sum(log_probs))
        )
        afe_sum += float(np.mean(outcome.formation_errors))
        if collect_records:
            records.append(
                trajectory_record(
                    episode=episode_id,
                    step=t,
                    time=env.time,
                    states=env.states,
                    actions=actions,
                    extrinsic_rewards=outcome.extrinsic_rewards,
                    intrinsic_reward=r_int,
                    intrinsic_terms=terms,
                    termination=outcome.termination,
                )
            )
        obs = outcome.next_obs
        t += 1
    return EpisodeSummary(
        termination=env.termination,
        steps=t,
        nav_time=t * env.scenario.dt,
        afe=afe_sum / max(t, 1),
        records=records,
    )


def evaluate(
    bundle: PolicyBundle,
    scenario: ScenarioConfig,
    episodes: int,
    rng: np.random.Generator,
    deterministic: bool = True,
) -> Metrics:
    """Metrics over fresh episodes; navigation time averages successes only.

    The accounting is exact: successes + collisions + timeouts == episodes.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    env = FormationEnv(scenario)
    successes = collisions = timeouts = 0
    nav_times: list[float] = []
    afes: list[float] = []
    for ep in range(episodes):
        summary = rollout_episode(bundle, env, rng, episode_id=ep, deterministic=deterministic)
        if summary.termination is Termination.GOAL_REACHED:
            successes += 1
            nav_times.append(summary.nav_time)
        elif summary.termination is Termination.COLLISION:
            collisions += 1
        else:
            timeouts += 1
        afes.append(summary.afe)
    assert successes + collisions + timeouts == episodes
    return Metrics(
        success_rate=successes / episodes,
        collision_rate=collisions / episodes,
        nav_time=float(np.mean(nav_times)) if nav_times else math.nan,
        afe=float(np.mean(afes)),
    )


def train_and_evaluate(
    scenario: ScenarioConfig,
    hp: HyperParams,
    seed: int,
    train_episodes: int,
    eval_episodes: int,
    intrinsic_config: IntrinsicConfig = IntrinsicConfig(),
    metrics_path: str | None = None,
) -> tuple[Metrics, Trainer]:
    trainer = Trainer(scenario, hp, seed, intrinsic_config=intrinsic_config)
    trainer.train(train_episodes, metrics_path=metrics_path)
    eval_rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(5)[4])
    metrics = evaluate(trainer.bundle(), scenario, eval_episodes, eval_rng)
    return metrics, trainer


def sensitivity_sweep(
    param: str,
    values: list[float],
    scenario: ScenarioConfig,
    hp: HyperParams,
    seed: int,
    train_budget: int,
    eval_episodes: int,
) -> list[dict]:
    """One training run per value (shared seed, all else fixed), then evaluation.

    Returns one row per value with the four headline metric columns.
    """
    if not values:
        raise ValueError("values must be nonempty")
    if param not in ("alpha", "lambda"):
        raise ValueError("param must be 'alpha' or 'lambda'")
    rows = []
    for value in values:
        if param == "alpha":
            hp_v = replace(hp, alpha_scale=value)
        else:
            hp_v = replace(hp, lambda_reg=value)
        metrics, _ = train_and_evaluate(
            scenario, hp_v, seed, train_budget, eval_episodes
        )
        rows.append({"param": param, "value": value, **metrics.as_dict()})
    return rows


def format_metrics_table(rows: list[dict]) -> str:
    """Fixed-width text table mirroring the headline metric columns."""
    header = f"{'config':<20}{'success':>10}{'collision':>11}{'nav_time':>10}{'afe':>8}"
    lines = [header]
    for row in rows:
        label = row.get("label") or f"{row.get('param', '')}={row.get('value', '')}"
        nav = row["nav_time"]
        nav_s = f"{nav:.2f}" if not math.isnan(nav) else "n/a"
        lines.append(
            f"{label:<20}{row['success_rate']:>10.3f}{row['collision_rate']:>11.3f}"
            f"{nav_s:>10}{row['afe']:>8.3f}"
        )
    return "\n".join(lines)
