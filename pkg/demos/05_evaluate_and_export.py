"""Evaluate a policy, export a trajectory, and (if installed) render figures.

Shows the full downstream pipeline: train briefly, score the policy over a
handful of evaluation episodes, write the line-delimited trajectory export,
and hand it to the plotting package.
"""

import os
import subprocess
import sys

import numpy as np

from formnav import FormationEnv, HyperParams, ScenarioConfig, Trainer, evaluate
from formnav.env import write_records
from formnav.evaluation import rollout_episode

scenario = ScenarioConfig(num_pedestrians=3)
hp = HyperParams(batch_size=32, actor_hidden=(64, 64), critic_hidden=(64, 64))
trainer = Trainer(scenario, hp, seed=1)
trainer.train(50)

metrics = evaluate(trainer.bundle(), scenario, episodes=20, rng=np.random.default_rng(0))
print(f"success {metrics.success_rate:.2f}  collision {metrics.collision_rate:.2f}  afe {metrics.afe:.2f}")

env = FormationEnv(scenario)
summary = rollout_episode(
    trainer.bundle(), env, np.random.default_rng(1), collect_records=True
)
write_records("demo_trajectory.jsonl", summary.records)
print(f"exported {len(summary.records)} records -> demo_trajectory.jsonl")

try:
    from formnav_figures import PlotJob, plot_trajectories

    [image] = plot_trajectories(PlotJob(("demo_trajectory.jsonl",), "demo_trajectory.png"))
    print(f"rendered {image}")
except ImportError:
    print("install the figures package (pip install -e figures/) to render plots")
