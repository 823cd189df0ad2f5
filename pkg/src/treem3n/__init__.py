"""Tree-structured max-margin multi-label learning.

Learns a spanning tree over the labels jointly with the weights of a
pairwise max-margin Markov network, using a circuit-rank penalty and a
convex-concave procedure (CRANK), plus the comparison learners Empty, Full,
Greedy, Project and MST.
"""
from .baselines import (TRAINERS, train_crank, train_empty, train_full,
                        train_greedy, train_mst, train_project)
from .data_io import (Dataset, Instance, load_model, parse_dataset,
                      save_model, synth_generate, write_dataset)
from .evaluation import (MetricsReport, benchmark, cross_validate, evaluate,
                         metrics)
from .gadget import gadget_build, gadget_check_tree, gadget_separable
from .graph import (EdgeSet, EdgeWeightMap, circuit_rank, f1, f2,
                    f2_subgradient, is_forest, kruskal_max_tree, tree_penalty)
from .inference import (PairwiseModel, map_exhaustive, map_lp, map_tree,
                        score)
from .model import TrainedModel, WeightVector, predict, predict_batch
from .training import (ConvergenceWarning, TrainConfig, cccp_inner, crank,
                       hinge_example, objective, solve_restricted)

__version__ = "0.1.0"

__all__ = [
    "TRAINERS", "train_crank", "train_empty", "train_full", "train_greedy",
    "train_mst", "train_project", "Dataset", "Instance", "load_model",
    "parse_dataset", "save_model", "synth_generate", "write_dataset",
    "MetricsReport", "benchmark", "cross_validate", "evaluate", "metrics",
    "gadget_build", "gadget_check_tree", "gadget_separable", "EdgeSet",
    "EdgeWeightMap", "circuit_rank", "f1", "f2", "f2_subgradient",
    "is_forest", "kruskal_max_tree", "tree_penalty", "PairwiseModel",
    "map_exhaustive", "map_lp", "map_tree", "score", "TrainedModel",
    "WeightVector", "predict", "predict_batch", "ConvergenceWarning",
    "TrainConfig", "cccp_inner", "crank", "hinge_example", "objective",
    "solve_restricted",
]
