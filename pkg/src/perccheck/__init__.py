"""Exact checks of percolation correlation inequalities on finite graphs."""
from .events import (
    And, ClusterAtLeast, Conn, EdgeOpen, Event, Not, NumExpr, Or, Pivotal, Reach,
    cluster_size, indicator, parse_event,
)
from .graph import (
    Edge, GraphError, TerminalSpec, WeightedGraph, degree3_reduce, delete_edge,
    directed_counterexample, glue, half_edge_gadget, pendant_inflate, validate,
)
from .engine import (
    EdgeLimitExceeded, ZeroConditioning, conditional_probability, edge_polynomial,
    event_probability, expectation, pattern_table, phi_table, pivotal_probability,
    probabilities,
)
from .checkers import (
    CheckReport, check_good_quadruple, check_mcp, check_postfkg, check_prefkg, check_prefkga,
    influence_bound_check, run_check, solve_coefficients,
)
from .io import load_graph, parse_graph, serialize_graph

__version__ = "0.1.0"
