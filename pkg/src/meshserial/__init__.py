"""Topology-preserving node reordering and error-bounded compression for unstructured mesh data."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .codec import CompressedStream, compress, decompress, relative_to_absolute_bound
from .errors import CorruptDataError, ExternalCodecError, MeshParseError
from .graph import Graph, build_traversal_graph, component_count, neighbors
from .mesh import (
    Element,
    FieldData,
    Mesh,
    generate_structured,
    parse_msh_ascii,
    sample_field,
    shuffle_node_labels,
)
from .metrics import EvalReport, EvalRow, compression_ratio, emit_report, improvement, relative_l2_error
from .ordering import OrderingStrategy, brute_force_minla, greedy_order, minla_cost, order_nodes
from .permute import (
    Permutation,
    apply_permutation,
    invert_permutation,
    read_permutation,
    write_permutation,
)

__all__ = [
    "BACKEND", "CompressedStream", "CorruptDataError", "Element", "EvalReport", "EvalRow",
    "ExternalCodecError", "FieldData", "Graph", "Mesh", "MeshParseError", "OrderingStrategy",
    "Permutation", "apply_permutation", "brute_force_minla", "build_traversal_graph",
    "component_count", "compress", "compression_ratio", "decompress", "emit_report",
    "generate_structured", "greedy_order", "improvement", "invert_permutation", "minla_cost",
    "neighbors", "order_nodes", "parse_msh_ascii", "read_permutation", "relative_l2_error",
    "relative_to_absolute_bound", "sample_field", "shuffle_node_labels", "write_permutation",
]
