from .greedy import GreedyAgent, RandomAgent
from .observe import Observation, observe
from .policy import PolicyConfig, PolicyNet, policy_forward, select_action

__all__ = [
    "GreedyAgent",
    "Observation",
    "PolicyConfig",
    "PolicyNet",
    "RandomAgent",
    "observe",
    "policy_forward",
    "select_action",
]
