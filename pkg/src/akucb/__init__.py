"""Joint learning and link scheduling for multi-hop wireless networks.

Frame-based UCB scheduling over bounded-size augmentations, a variant that
replaces the global queue normalizer with per-node estimates, greedy and
max-weight baselines, and a seeded experiment harness.
"""

from .augment import Augmentation, delta_lower_bound, run_augmentation_round, run_augmentation_round_distributed
from .bandit import FrameContext, LinkBanditState
from .matching import enumerate_matchings, greedy_matching, max_weight_matching, optimal_augmentation_set
from .network import Matching, NetworkGraph, grid_topology, is_matching, random_topology, ring_topology
from .policies import PolicySpec, build_policy
from .simulate import simulate
from .traffic import TrafficModel

__all__ = [
    "Augmentation", "FrameContext", "LinkBanditState", "Matching", "NetworkGraph", "PolicySpec",
    "TrafficModel", "build_policy", "delta_lower_bound", "enumerate_matchings", "greedy_matching",
    "grid_topology", "is_matching", "max_weight_matching", "optimal_augmentation_set",
    "random_topology", "ring_topology", "run_augmentation_round", "run_augmentation_round_distributed",
    "simulate",
]
