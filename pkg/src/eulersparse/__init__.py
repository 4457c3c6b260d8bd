"""Spectral sparsification of directed Eulerian graphs."""
from .graph import (
    DirectedMultigraph,
    binary_decompose,
    degree_difference,
    generate_random_eulerian,
    is_eulerian,
    partition_by_weight,
    read_graph,
    write_json,
    write_tsv,
)
from .linalg import effective_resistances, error_metric, laplacian_directed, laplacian_undirected
from .cycles import correct_orientation, naive_short_cycle_decomposition, validate_decomposition
from .toggle import ToggleConfig, sparsify, sparsify_once
from .colouring import ColourConfig, GaussianWalkOracle, RandomSignOracle, colour_target, cycle_weight, pcs
from .verify import certify, check_cycle_lemmas

__version__ = "0.1.0"
