import math

import numpy as np

from formnav.core import AgentKind, AgentState, Vec2, wrap_angle


def make_agent(
    kind=AgentKind.PEDESTRIAN,
    position=(0.0, 0.0),
    velocity=(0.0, 0.0),
    radius=0.3,
    preferred_speed=1.0,
    heading=0.0,
    goal=None,
    formation_offset=None,
):
    if kind is AgentKind.LEADER and goal is None:
        goal = (0.0, 5.0)
    if kind is AgentKind.FOLLOWER and formation_offset is None:
        formation_offset = (-1.0, 0.8)
    return AgentState(
        kind=kind,
        position=Vec2(*position),
        velocity=Vec2(*velocity),
        radius=radius,
        preferred_speed=preferred_speed,
        heading=heading,
        goal=Vec2(*goal) if goal is not None else None,
        formation_offset=Vec2(*formation_offset) if formation_offset is not None else None,
    )


def make_world(num_followers=2, num_pedestrians=5, rng=None):
    """A plausible, collision-free world in canonical order with unique radii."""
    rng = rng or np.random.default_rng(0)
    states = [
        make_agent(
            AgentKind.LEADER,
            position=(0.0, -5.0),
            heading=wrap_angle(math.pi / 2),
            radius=0.30,
        )
    ]
    offsets = [(-1.0, 0.8), (-1.0, -0.8), (-2.0, 0.0), (-2.0, 1.6)][:num_followers]
    for k, off in enumerate(offsets):
        states.append(
            make_agent(
                AgentKind.FOLLOWER,
                position=(off[0], -5.0 + off[1]),
                heading=wrap_angle(math.pi / 2),
                radius=0.30 + 0.01 * (k + 1),
                formation_offset=off,
            )
        )
    for k in range(num_pedestrians):
        ang = 2 * math.pi * k / max(num_pedestrians, 1)
        states.append(
            make_agent(
                AgentKind.PEDESTRIAN,
                position=(5 * math.cos(ang), 5 * math.sin(ang)),
                radius=0.30 + 0.01 * (num_followers + k + 1),
                goal=(-5 * math.cos(ang), -5 * math.sin(ang)),
                heading=wrap_angle(ang + math.pi),
            )
        )
    return states


def fd_gradient_check(net, grads, loss_fn, rng, coords_per_tensor=20, h=1e-5):
    """Compare analytic grads against central differences on sampled coordinates.

    Returns the worst relative error across all sampled coordinates.
    """
    worst = 0.0
    for li, layer in enumerate(net.layers):
        for key, arr in layer.items():
            flat = arr.ravel()
            n = min(coords_per_tensor, flat.size)
            idxs = rng.choice(flat.size, size=n, replace=False)
            for idx in idxs:
                orig = flat[idx]
                flat[idx] = orig + h
                lp = loss_fn()
                flat[idx] = orig - h
                lm = loss_fn()
                flat[idx] = orig
                num = (lp - lm) / (2 * h)
                ana = grads[li][key].ravel()[idx]
                scale = max(abs(num), abs(ana), 1e-6)
                worst = max(worst, abs(num - ana) / scale)
    return worst
