"""Colouring squares of graphs: exact solvers, labellings, reductions and a Kahn-style list edge colourer."""

from .graph import MultiGraph, line_graph, square, subdivide
from .labelling import (
    chromatic_number,
    degeneracy_greedy_square,
    exact_list_colouring,
    greedy_many_passes,
    is_valid_lpq,
    lift_labelling,
    min_span_lpq,
)
from .matching import HardCoreModel, fit_activities, in_matching_polytope, sample_matching
from .reduction import ReductionParams, find_reduction, remove_and_patch, verify_certificate
from .kahn import KahnParams, colour_core_extension, kahn_colour

__all__ = [
    "MultiGraph",
    "line_graph",
    "square",
    "subdivide",
    "chromatic_number",
    "degeneracy_greedy_square",
    "exact_list_colouring",
    "greedy_many_passes",
    "is_valid_lpq",
    "lift_labelling",
    "min_span_lpq",
    "HardCoreModel",
    "fit_activities",
    "in_matching_polytope",
    "sample_matching",
    "ReductionParams",
    "find_reduction",
    "remove_and_patch",
    "verify_certificate",
    "KahnParams",
    "colour_core_extension",
    "kahn_colour",
]
