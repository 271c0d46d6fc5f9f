"""Multi-robot social formation navigation: simulator, coordinated-exploration
trainer with a self-learning intrinsic reward, and an evaluation harness."""

from .core import (
    AgentKind,
    AgentState,
    HyperParams,
    JointObservation,
    RobotObservation,
    ScenarioConfig,
    Vec2,
    build_joint_observation,
    build_observation,
    load_config,
)
from .env import FormationEnv, StepOutcome, Termination
from .evaluation import AblationVariant, Metrics, apply_ablation, evaluate
from .intrinsic import IntrinsicConfig, IntrinsicReward
from .marl import PolicyBundle, ReplayBuffer, Trainer, load_policy

__all__ = [
    "AgentKind",
    "AgentState",
    "AblationVariant",
    "FormationEnv",
    "HyperParams",
    "IntrinsicConfig",
    "IntrinsicReward",
    "JointObservation",
    "Metrics",
    "PolicyBundle",
    "ReplayBuffer",
    "RobotObservation",
    "ScenarioConfig",
    "StepOutcome",
    "Termination",
    "Trainer",
    "Vec2",
    "apply_ablation",
    "build_joint_observation",
    "build_observation",
    "evaluate",
    "load_config",
    "load_policy",
]
