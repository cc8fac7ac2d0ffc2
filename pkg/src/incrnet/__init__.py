"""Constructive neural networks for incremental feature learning.

Networks grow one hidden unit at a time; earlier weights are frozen so new
units add knowledge without overwriting it. Submodules:

* ``numerics``: activations, losses and single-layer forward/backward
* ``netgraph``: the growable network graph and its model file format
* ``traincore``: mini-batch training with freeze flags and patience
* ``growth``: grow-until-no-convergence, feature-group and transfer growth
* ``datapipe``: CSV loading, dedup, chunking, splits, scaling, SMOTE
* ``evalkit``: confusion-based metrics, run averaging and comparisons
* ``experiment``: the four-model chunk comparison
* ``synthetic``: deterministic fixtures
"""

from .datapipe import Dataset, GroupPlan, SplitSpec
from .evalkit import MetricsReport, compare_report, confusion, metrics
from .growth import GrowthConfig, GrowthTrace, grow_until_no_convergence, ifl_feature_groups, ifl_transfer, refit
from .netgraph import InitPolicy, InputRef, NetworkGraph, add_unit_block, forward, load_model, new_network, save_model
from .traincore import TrainConfig, evaluate, predict, train

__version__ = "0.1.0"

__all__ = [
    "Dataset", "GroupPlan", "SplitSpec",
    "MetricsReport", "compare_report", "confusion", "metrics",
    "GrowthConfig", "GrowthTrace", "grow_until_no_convergence", "ifl_feature_groups", "ifl_transfer", "refit",
    "InitPolicy", "InputRef", "NetworkGraph", "add_unit_block", "forward", "load_model", "new_network", "save_model",
    "TrainConfig", "evaluate", "predict", "train",
]
