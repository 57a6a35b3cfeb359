"""Multi-object tracking as min-cost flow with pairwise context between detections."""

from .features import FeatureLayout, WeightVector, assign_costs, feature_sum
from .graph import Detection, FlowSolution, GraphConfig, TrackingGraph, build_graph, make_graph, objective
from .learning import GTBox, LossVector, TrainConfig, train
from .metrics import EvalReport, evaluate
from .solvers import brute_force, enable_caching, solve, solve_dp1, solve_dp2, solve_ssp

__all__ = [
    "Detection", "EvalReport", "FeatureLayout", "FlowSolution", "GTBox", "GraphConfig", "LossVector",
    "TrackingGraph", "TrainConfig", "WeightVector", "assign_costs", "brute_force", "build_graph",
    "enable_caching", "evaluate", "feature_sum", "make_graph", "objective", "solve", "solve_dp1",
    "solve_dp2", "solve_ssp", "train",
]
__version__ = "0.1.0"
