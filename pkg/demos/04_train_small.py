"""A miniature training run end to end (a few minutes of CPU).

Trains the coordinated-exploration learner for a few hundred episodes on a
reduced scenario and prints the moving picture: episode length, collisions,
the temperature, and the intrinsic reward scale.  For the full desk-scale
protocol use the CLI:  formnav train --episodes 2000 --out runs/full
"""

import numpy as np

from formnav import HyperParams, ScenarioConfig, Trainer

scenario = ScenarioConfig(num_pedestrians=3)
hp = HyperParams(batch_size=64, buffer_capacity=20_000)
trainer = Trainer(scenario, hp, seed=0)

window = 25
metrics = []
for episode in range(200):
    metrics.append(trainer.run_episode(episode))
    if (episode + 1) % window == 0:
        recent = metrics[-window:]
        print(
            f"ep {episode + 1:4d}: steps {np.mean([m['steps'] for m in recent]):5.1f}  "
            f"collisions {np.mean([m['collision'] for m in recent]):.2f}  "
            f"beta {recent[-1]['beta']:.4f}  "
            f"intrinsic {np.mean([m['intrinsic_mean'] for m in recent]):+.3f}"
        )

print("\ncounters:", trainer.counters)
trainer.save("demo_checkpoint.npz")
print("checkpoint written to demo_checkpoint.npz")
