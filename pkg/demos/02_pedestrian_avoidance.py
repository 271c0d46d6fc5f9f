"""Pure pedestrian crowd: an antipodal circle swap under reciprocal avoidance.

Eight pedestrians stand on a circle and walk to (roughly) the opposite side.
The velocity-obstacle half-planes plus the incremental linear program keep
them apart; the printout tracks the closest any two ever get.
"""

import math
from dataclasses import replace

import numpy as np

from formnav.core import AgentKind, AgentState, Vec2, wrap_angle
from formnav.orca import OrcaParams, pedestrian_policy

rng = np.random.default_rng(0)
n, radius, dt = 8, 4.0, 0.25
states = []
for k in range(n):
    ang = 2 * math.pi * k / n + rng.normal(0.0, 0.05)
    gang = ang + math.pi + rng.normal(0.0, 0.05)
    pos = Vec2(radius * math.cos(ang), radius * math.sin(ang))
    goal = Vec2(radius * math.cos(gang), radius * math.sin(gang))
    states.append(
        AgentState(
            kind=AgentKind.PEDESTRIAN,
            position=pos,
            velocity=Vec2(0.0, 0.0),
            radius=0.3,
            preferred_speed=1.0,
            heading=wrap_angle(math.atan2(goal.y - pos.y, goal.x - pos.x)),
            goal=goal,
        )
    )

params = OrcaParams()
closest = math.inf
for step in range(300):
    cmds = [pedestrian_policy(i, states, params, dt) for i in range(n)]
    states = [
        replace(s, position=Vec2(s.position.x + dt * c.x, s.position.y + dt * c.y), velocity=c)
        for s, c in zip(states, cmds)
    ]
    for i in range(n):
        for j in range(i + 1, n):
            closest = min(closest, (states[i].position - states[j].position).norm())
    if step % 30 == 0:
        remaining = sum(1 for s in states if (s.goal - s.position).norm() >= 0.2)
        print(f"t={step * dt:5.1f}s  still walking: {remaining}/{n}  closest pair so far: {closest:.3f} m")

arrived = sum(1 for s in states if (s.goal - s.position).norm() < 0.2)
print(f"\narrived: {arrived}/{n}; closest approach {closest:.3f} m (radii sum 0.6 m)")
