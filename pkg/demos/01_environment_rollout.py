"""Drive the formation environment by hand and watch one episode unfold.

The team (one leader, two followers) starts near the bottom of the pedestrian
circle; five pedestrians cross it under reciprocal collision avoidance.  Here
we steer every robot straight ahead and print what the episode engine reports.
"""

import numpy as np

from formnav import FormationEnv, ScenarioConfig

scenario = ScenarioConfig()
env = FormationEnv(scenario)
obs = env.reset(np.random.default_rng(7))

print(f"world: {scenario.num_robots} robots + {scenario.num_pedestrians} pedestrians")
print(f"joint observation vector: {obs.flat.size} scalars")
print(f"leader sees {obs.per_robot[0].dim} scalars, followers {obs.per_robot[1].dim}\n")

forward = np.tile([0.8, 0.0], (scenario.num_robots, 1))
while not env.done:
    outcome = env.step(forward)
    if env.steps % 10 == 0 or outcome.done:
        leader = env.states[0]
        print(
            f"t={env.time:5.2f}s leader=({leader.position.x:+.2f},{leader.position.y:+.2f}) "
            f"min_sep={outcome.min_separations.min():+.3f} "
            f"formation_err={outcome.formation_errors.mean():.3f} "
            f"rewards={np.round(outcome.extrinsic_rewards, 3)}"
        )

print(f"\nepisode ended after {env.steps} steps: {env.termination.value}")
