"""Stability regions of stochastic matching models on compatibility graphs.

Exact membership tests and decompositions, weighted random walks, simulators
of the general and bipartite matching models, and closed-form matching rates.
"""

from .closed_form import SolutionFamily, solve, solve_cycle, solve_tree, solve_tree_plus_edge
from .decompose import (
    Decomposition,
    FarkasCertificate,
    decompose_asym,
    find_weights,
    maxflow_decompose,
    skillbased_membership,
)
from .errors import InputError, MatchstabError, ResourceError, ReversibilityError
from .graph import Multigraph, bipartition, classify_topology, independent_sets, parse_graph
from .stability import (
    EdgeWeights,
    NodeMeasure,
    check_ncond,
    check_ncond_asym,
    check_ncond_bipartite,
    check_ncond_independent,
    weighted_measure,
)
from .walk import EdgeWalk, check_detailed_balance, walk_from_weights, weights_from_reversible

__all__ = [
    "Decomposition", "EdgeWalk", "EdgeWeights", "FarkasCertificate", "InputError",
    "MatchstabError", "Multigraph", "NodeMeasure", "ResourceError", "ReversibilityError",
    "SolutionFamily", "bipartition", "check_detailed_balance", "check_ncond", "check_ncond_asym",
    "check_ncond_bipartite", "check_ncond_independent", "classify_topology", "decompose_asym",
    "find_weights", "independent_sets", "maxflow_decompose", "parse_graph",
    "skillbased_membership", "solve", "solve_cycle", "solve_tree", "solve_tree_plus_edge",
    "walk_from_weights", "weighted_measure", "weights_from_reversible",
]
